#include "causalcast/var.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "causalcast/error.hpp"
#include "causalcast/stats.hpp"
#include "linalg.hpp"

namespace causalcast {

namespace {

// Rows t = first..N-1 of [1, x_{t-1}, ..., x_{t-order}]; the column of
// variable i at lag k is 1 + (k-1)*V + i.
Eigen::MatrixXd lag_design(const Eigen::MatrixXd& data, int order, Eigen::Index first) {
  const auto n = data.rows(), v = data.cols();
  Eigen::MatrixXd x(n - first, 1 + v * order);
  x.col(0).setOnes();
  for (int k = 1; k <= order; ++k)
    x.middleCols(1 + (k - 1) * v, v) = data.middleRows(first - k, n - first);
  return x;
}

void check_data(const Eigen::MatrixXd& data, int order) {
  if (order < 1) fail(ErrorKind::invalid_argument, "VAR order must be >= 1");
  if (!data.allFinite()) fail(ErrorKind::data, "VAR data contains missing or non-finite values");
  const auto n = data.rows(), v = data.cols();
  if (n <= v * order + 1) {
    fail(ErrorKind::data, "insufficient samples for VAR(" + std::to_string(order) + "): N=" +
                              std::to_string(n) + ", need N > " + std::to_string(v * order + 1));
  }
}

std::vector<Eigen::Index> without(Eigen::Index total, const std::vector<Eigen::Index>& drop) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index c = 0; c < total; ++c)
    if (std::find(drop.begin(), drop.end(), c) == drop.end()) keep.push_back(c);
  return keep;
}

GcResult gc_from_rss(int cause, int effect, int order, double rss_full, double rss_restricted,
                     Eigen::Index n_eff, Eigen::Index k_full) {
  GcResult r;
  r.cause = cause;
  r.effect = effect;
  r.df_num = order;
  r.df_den = static_cast<int>(n_eff - k_full);
  // Round-off can leave the nested fit a hair below the full one.
  rss_restricted = std::max(rss_restricted, rss_full);
  const double scale = std::max(rss_restricted, std::numeric_limits<double>::min());
  if (rss_full <= 1e-300 || rss_full <= 1e-28 * scale) {
    r.degenerate = true;
    const bool identical = rss_restricted <= 1e-300;
    r.lr_statistic = identical ? 0.0 : std::numeric_limits<double>::infinity();
    r.f_statistic = r.lr_statistic;
    r.p_value = identical ? 1.0 : 0.0;
    return r;
  }
  r.lr_statistic = static_cast<double>(n_eff) * std::log(rss_restricted / rss_full);
  r.f_statistic = ((rss_restricted - rss_full) / order) / (rss_full / r.df_den);
  r.p_value = f_sf(r.f_statistic, r.df_num, r.df_den);
  return r;
}

}  // namespace

VarModel fit_var(const Eigen::MatrixXd& data, int order) {
  check_data(data, order);
  const auto v = data.cols();
  const auto x = lag_design(data, order, order);
  const Eigen::MatrixXd y = data.bottomRows(data.rows() - order);
  const auto ls = detail::least_squares(x, y);

  VarModel m;
  m.order = order;
  m.sample_size = static_cast<int>(y.rows());
  m.intercept = ls.coef.row(0).transpose();
  for (int k = 1; k <= order; ++k)
    m.coefficients.push_back(ls.coef.middleRows(1 + (k - 1) * v, v).transpose());
  m.residual_cov = (ls.residuals.transpose() * ls.residuals) / static_cast<double>(y.rows());
  m.residual_cov = 0.5 * (m.residual_cov + m.residual_cov.transpose());
  return m;
}

int select_order(const Eigen::MatrixXd& data, int p_max, InformationCriterion criterion) {
  check_data(data, p_max);
  const auto v = data.cols();
  const Eigen::MatrixXd y = data.bottomRows(data.rows() - p_max);
  const double t = static_cast<double>(y.rows());
  int best = 1;
  double best_value = std::numeric_limits<double>::infinity();
  for (int p = 1; p <= p_max; ++p) {
    const auto x = lag_design(data, p, p_max);
    const auto ls = detail::least_squares(x, y);
    const Eigen::MatrixXd sigma = ls.residuals.transpose() * ls.residuals / t;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sigma);
    const double log_det = ldlt.vectorD().array().log().sum();
    const double params = static_cast<double>(p * v * v);
    const double penalty = criterion == InformationCriterion::aic ? 2.0 * params / t
                                                                  : std::log(t) * params / t;
    const double value = log_det + penalty;
    if (value < best_value) {
      best_value = value;
      best = p;
    }
  }
  return best;
}

GcResult gc_test(const Eigen::MatrixXd& data, int cause, int effect, int order) {
  const auto v = static_cast<int>(data.cols());
  if (cause == effect) fail(ErrorKind::invalid_argument, "gc_test: cause and effect must differ");
  if (cause < 0 || cause >= v || effect < 0 || effect >= v) {
    fail(ErrorKind::invalid_argument, "gc_test: variable index out of range");
  }
  check_data(data, order);
  const auto x = lag_design(data, order, order);
  const Eigen::VectorXd y = data.col(effect).tail(data.rows() - order);
  const auto full = detail::least_squares(x, y);
  const double rss_full = full.residuals.squaredNorm();

  std::vector<Eigen::Index> drop;
  for (int k = 1; k <= order; ++k) drop.push_back(1 + (k - 1) * v + cause);
  const auto keep = without(x.cols(), drop);
  const Eigen::MatrixXd xr = x(Eigen::all, keep);
  const double rss_r = detail::least_squares(xr, y).residuals.squaredNorm();
  return gc_from_rss(cause, effect, order, rss_full, rss_r, x.rows(), x.cols());
}

std::vector<GcResult> gc_all_pairs(const Eigen::MatrixXd& data, int order) {
  const auto v = static_cast<int>(data.cols());
  std::vector<GcResult> out;
  if (v < 2) return out;
  check_data(data, order);
  const auto x = lag_design(data, order, order);
  for (int effect = 0; effect < v; ++effect) {
    const Eigen::VectorXd y = data.col(effect).tail(data.rows() - order);
    const double rss_full = detail::least_squares(x, y).residuals.squaredNorm();
    for (int cause = 0; cause < v; ++cause) {
      if (cause == effect) continue;
      std::vector<Eigen::Index> drop;
      for (int k = 1; k <= order; ++k) drop.push_back(1 + (k - 1) * v + cause);
      const Eigen::MatrixXd xr = x(Eigen::all, without(x.cols(), drop));
      const double rss_r = detail::least_squares(xr, y).residuals.squaredNorm();
      out.push_back(gc_from_rss(cause, effect, order, rss_full, rss_r, x.rows(), x.cols()));
    }
  }
  return out;
}

std::vector<double> benjamini_hochberg(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m);
  double running = 1.0;
  for (std::size_t rank = m; rank-- > 0;) {
    const std::size_t i = order[rank];
    if (!(p_values[i] >= 0.0 && p_values[i] <= 1.0)) {
      fail(ErrorKind::invalid_argument, "p-values must lie in [0, 1]");
    }
    // m/rank >= 1 exactly, so the rounded product never drops below p.
    running = std::min(running, p_values[i] * (static_cast<double>(m) / static_cast<double>(rank + 1)));
    adjusted[i] = running;
  }
  return adjusted;
}

CausalGraph mvgc_graph(const TimeSeriesFrame& frame, int order, double alpha,
                       Correction correction) {
  if (frame.has_missing()) fail(ErrorKind::data, "mvgc_graph requires an imputed frame");
  CausalGraph g;
  g.variables = frame.variable_names();
  g.alpha = alpha;
  g.correction = correction;
  g.method = "mvgc";
  const auto tests = gc_all_pairs(frame.values(), order);
  std::vector<double> raw;
  for (const auto& t : tests) raw.push_back(t.p_value);
  const auto corrected = correction == Correction::benjamini_hochberg ? benjamini_hochberg(raw) : raw;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    if (!(corrected[k] <= alpha)) continue;
    CausalEdge e;
    e.cause = g.variables[static_cast<std::size_t>(tests[k].cause)];
    e.effect = g.variables[static_cast<std::size_t>(tests[k].effect)];
    e.lag_min = 1;
    e.lag = order;
    e.statistic = tests[k].f_statistic;
    e.p_raw = raw[k];
    e.p_corrected = corrected[k];
    g.edges.push_back(std::move(e));
  }
  g.sort_edges();
  g.validate();
  return g;
}

}  // namespace causalcast
