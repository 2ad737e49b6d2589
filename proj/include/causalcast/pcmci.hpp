#pragma once

#include <compare>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "causalcast/graph.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

struct PartialCorrelation {
  double r = 0.0;
  bool degenerate = false;  // a residual vector was numerically zero; r reported as 0
};

/// Pearson correlation of x and y after regressing both on [1, z].
PartialCorrelation parcorr(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& z);

/// Two-sided Fisher-z p-value for a partial correlation over n samples with
/// k conditioning variables.
double ci_pvalue(double r, int n, int k);

struct CiTestResult {
  double r = 0.0;
  int n = 0;
  int k = 0;
  double p_value = 1.0;
  bool degenerate = false;
};

CiTestResult ci_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& z);

struct LaggedVariable {
  int variable = 0;
  int lag = 0;

  auto operator<=>(const LaggedVariable&) const = default;
};

struct ParentCandidate {
  LaggedVariable node;
  double statistic = 0.0;  // weakest partial correlation seen while the candidate survived
  double p_value = 0.0;    // largest p-value seen
};

/// Per variable, surviving lagged parents sorted by |statistic| descending,
/// ties broken by (variable, lag) ascending.
struct ParentSet {
  int tau_max = 0;
  std::vector<std::vector<ParentCandidate>> parents;
};

struct PcmciOptions {
  int tau_max = 21;
  double alpha_pc = 0.2;
  double alpha_mci = 0.01;
  std::optional<int> max_conds;  // unlimited when empty
  bool contemporaneous = true;
};

/// Condition-selection phase over lags 1..tau_max.
ParentSet pc1_lagged_parents(const TimeSeriesFrame& frame, int tau_max, double alpha_pc,
                             std::optional<int> max_conds = std::nullopt);

/// Momentary conditional independence test of each surviving candidate,
/// conditioning on the effect's parents and the cause's parents shifted by
/// the candidate lag.
CausalGraph mci_prune(const TimeSeriesFrame& frame, const ParentSet& parents, int tau_max,
                      double alpha);

/// Adds lag-0 links, re-tests lagged links that may be mediated by a
/// contemporaneous neighbour, and orients lag-0 links only where a collider
/// test with a lagged parent forces the direction.
CausalGraph contemporaneous_phase(const TimeSeriesFrame& frame, const CausalGraph& graph,
                                  double alpha);

CausalGraph pcmciplus_run(const TimeSeriesFrame& frame, const PcmciOptions& options);

}  // namespace causalcast
