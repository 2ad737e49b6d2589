#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "causalcast/graph.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

/// x_t = intercept + sum_k A_k x_{t-k} + e_t.
/// Entry (j, i) of A_k is the effect of variable i at lag k on variable j.
struct VarModel {
  int order = 0;
  std::vector<Eigen::MatrixXd> coefficients;
  Eigen::VectorXd intercept;
  Eigen::MatrixXd residual_cov;  // (1/(N-p)) E'E
  int sample_size = 0;           // N - p equations rows
};

/// Per-equation OLS on the stacked lag design, solved by QR.
VarModel fit_var(const Eigen::MatrixXd& data, int order);

enum class InformationCriterion { aic, bic };

/// argmin over p in [1, p_max] on the common sample rows p_max..N-1; ties go
/// to the smaller order.
int select_order(const Eigen::MatrixXd& data, int p_max, InformationCriterion criterion);

struct GcResult {
  int cause = 0;
  int effect = 0;
  double lr_statistic = 0.0;  // N_eff * ln(RSS_R / RSS_F)
  double f_statistic = 0.0;
  int df_num = 0;
  int df_den = 0;
  double p_value = 1.0;  // from the F statistic
  bool degenerate = false;
};

/// Conditional Granger causality of `cause` on `effect` given every other
/// variable's first `order` lags.
GcResult gc_test(const Eigen::MatrixXd& data, int cause, int effect, int order);

/// All ordered pairs, in (effect, cause) order, sharing one full regression
/// per effect.
std::vector<GcResult> gc_all_pairs(const Eigen::MatrixXd& data, int order);

/// Step-up adjusted p-values, capped at 1.
std::vector<double> benjamini_hochberg(std::span<const double> p_values);

CausalGraph mvgc_graph(const TimeSeriesFrame& frame, int order, double alpha,
                       Correction correction);

}  // namespace causalcast
