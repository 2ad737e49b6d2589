#include "causalcast/pcmci.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "causalcast/error.hpp"
#include "causalcast/stats.hpp"
#include "linalg.hpp"

namespace causalcast {

namespace {

using Nodes = std::vector<LaggedVariable>;

// Column of X_var(t - lag) for t in [first, N).
Eigen::VectorXd lagged_series(const Eigen::MatrixXd& x, LaggedVariable node, Eigen::Index first) {
  return x.col(node.variable).segment(first - node.lag, x.rows() - first);
}

int max_lag(const Nodes& nodes, int floor) {
  int m = floor;
  for (const auto& n : nodes) m = std::max(m, n.lag);
  return m;
}

CiTestResult test_nodes(const Eigen::MatrixXd& x, LaggedVariable a, LaggedVariable b,
                        const Nodes& conds, int min_first) {
  const int first = max_lag(conds, std::max({min_first, a.lag, b.lag}));
  if (first >= x.rows()) fail(ErrorKind::data, "series too short for the requested lags");
  Eigen::MatrixXd z(x.rows() - first, static_cast<Eigen::Index>(conds.size()));
  for (std::size_t k = 0; k < conds.size(); ++k)
    z.col(static_cast<Eigen::Index>(k)) = lagged_series(x, conds[k], first);
  return ci_test(lagged_series(x, a, first), lagged_series(x, b, first), z);
}

void add_unique(Nodes& nodes, LaggedVariable n) {
  if (std::find(nodes.begin(), nodes.end(), n) == nodes.end()) nodes.push_back(n);
}

void sort_candidates(std::vector<ParentCandidate>& c) {
  std::sort(c.begin(), c.end(), [](const ParentCandidate& a, const ParentCandidate& b) {
    const double fa = std::abs(a.statistic), fb = std::abs(b.statistic);
    if (fa != fb) return fa > fb;
    return a.node < b.node;
  });
}

std::size_t var_index(const CausalGraph& g, const std::string& name) {
  return static_cast<std::size_t>(std::find(g.variables.begin(), g.variables.end(), name) -
                                  g.variables.begin());
}

}  // namespace

PartialCorrelation parcorr(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                           const Eigen::MatrixXd& z) {
  const auto n = x.size();
  if (y.size() != n || (z.cols() > 0 && z.rows() != n)) {
    fail(ErrorKind::invalid_argument, "parcorr: length mismatch");
  }
  if (n <= z.cols() + 3) {
    fail(ErrorKind::data, "parcorr: insufficient effective sample (n=" + std::to_string(n) +
                              ", conditions=" + std::to_string(z.cols()) + ")");
  }
  Eigen::MatrixXd design(n, 1 + z.cols());
  design.col(0).setOnes();
  design.rightCols(z.cols()) = z;
  Eigen::MatrixXd xy(n, 2);
  xy << x, y;
  const Eigen::MatrixXd res = detail::residualize(design, xy);

  const double sx = (x.array() - x.mean()).matrix().norm();
  const double sy = (y.array() - y.mean()).matrix().norm();
  const double rx = res.col(0).norm(), ry = res.col(1).norm();
  constexpr double tol = 1e-10;
  if (!(rx > tol * sx) || !(ry > tol * sy) || sx == 0.0 || sy == 0.0) {
    return {0.0, true};
  }
  const double r = res.col(0).dot(res.col(1)) / (rx * ry);
  return {std::clamp(r, -1.0, 1.0), false};
}

double ci_pvalue(double r, int n, int k) {
  const int dof = n - k - 3;
  if (dof <= 0) {
    fail(ErrorKind::data, "ci_pvalue: insufficient effective sample (n=" + std::to_string(n) +
                              ", k=" + std::to_string(k) + ")");
  }
  if (!(std::abs(r) <= 1.0)) fail(ErrorKind::invalid_argument, "ci_pvalue: |r| must be <= 1");
  if (std::abs(r) == 1.0) return 0.0;
  const double z = std::sqrt(static_cast<double>(dof)) * std::atanh(std::abs(r));
  return std::min(1.0, 2.0 * normal_sf(z));
}

CiTestResult ci_test(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::MatrixXd& z) {
  const auto pc = parcorr(x, y, z);
  CiTestResult out;
  out.r = pc.r;
  out.degenerate = pc.degenerate;
  out.n = static_cast<int>(x.size());
  out.k = static_cast<int>(z.cols());
  out.p_value = ci_pvalue(pc.r, out.n, out.k);
  return out;
}

ParentSet pc1_lagged_parents(const TimeSeriesFrame& frame, int tau_max, double alpha_pc,
                             std::optional<int> max_conds) {
  if (tau_max < 0) fail(ErrorKind::invalid_argument, "tau_max must be >= 0");
  if (frame.has_missing()) fail(ErrorKind::data, "PCMCI+ requires an imputed frame");
  const auto& x = frame.values();
  const int v = static_cast<int>(frame.cols());
  ParentSet out;
  out.tau_max = tau_max;
  out.parents.resize(static_cast<std::size_t>(v));
  if (tau_max == 0) return out;
  if (x.rows() <= tau_max + 3) fail(ErrorKind::data, "series too short for tau_max");

  for (int j = 0; j < v; ++j) {
    std::vector<ParentCandidate> cands;
    for (int i = 0; i < v; ++i)
      for (int tau = 1; tau <= tau_max; ++tau)
        cands.push_back({{i, tau}, std::numeric_limits<double>::infinity(), 0.0});

    const LaggedVariable effect{j, 0};
    for (int q = 0;; ++q) {
      if (max_conds && q > *max_conds) break;
      if (static_cast<std::size_t>(q) >= cands.size()) break;
      const auto snapshot = cands;
      std::vector<ParentCandidate> kept;
      for (const auto& cand : snapshot) {
        Nodes conds;
        for (const auto& other : snapshot) {
          if (static_cast<int>(conds.size()) == q) break;
          if (other.node != cand.node) conds.push_back(other.node);
        }
        const auto res = test_nodes(x, cand.node, effect, conds, tau_max);
        auto updated = cand;
        if (std::abs(res.r) < std::abs(updated.statistic)) updated.statistic = res.r;
        updated.p_value = std::max(updated.p_value, res.p_value);
        if (res.p_value <= alpha_pc) kept.push_back(updated);
      }
      cands = std::move(kept);
      sort_candidates(cands);
    }
    out.parents[static_cast<std::size_t>(j)] = std::move(cands);
  }
  return out;
}

CausalGraph mci_prune(const TimeSeriesFrame& frame, const ParentSet& parents, int tau_max,
                      double alpha) {
  const auto& x = frame.values();
  const int v = static_cast<int>(frame.cols());
  if (static_cast<int>(parents.parents.size()) != v) {
    fail(ErrorKind::invalid_argument, "parent set does not match the frame");
  }
  CausalGraph g;
  g.variables = frame.variable_names();
  g.alpha = alpha;
  g.correction = Correction::none;
  g.method = "pcmci+";

  auto nodes_of = [&](int var) {
    Nodes n;
    for (const auto& c : parents.parents[static_cast<std::size_t>(var)]) n.push_back(c.node);
    return n;
  };
  for (int j = 0; j < v; ++j) {
    const Nodes pj = nodes_of(j);
    for (const auto& cand : pj) {
      Nodes conds;
      for (const auto& n : pj)
        if (n != cand) conds.push_back(n);
      for (const auto& n : nodes_of(cand.variable))
        add_unique(conds, LaggedVariable{n.variable, n.lag + cand.lag});
      const auto res = test_nodes(x, cand, LaggedVariable{j, 0}, conds, tau_max);
      if (res.p_value > alpha) continue;
      CausalEdge e;
      e.cause = g.variables[static_cast<std::size_t>(cand.variable)];
      e.effect = g.variables[static_cast<std::size_t>(j)];
      e.lag = e.lag_min = cand.lag;
      e.statistic = res.r;
      e.p_raw = e.p_corrected = res.p_value;
      g.edges.push_back(std::move(e));
    }
  }
  g.sort_edges();
  g.validate();
  return g;
}

CausalGraph contemporaneous_phase(const TimeSeriesFrame& frame, const CausalGraph& graph,
                                  double alpha) {
  const auto& x = frame.values();
  const int v = static_cast<int>(frame.cols());
  if (graph.variables != frame.variable_names()) {
    fail(ErrorKind::invalid_argument, "graph variables do not match the frame");
  }
  CausalGraph out = graph;
  if (v < 2) return out;

  std::vector<Nodes> parents(static_cast<std::size_t>(v));
  for (const auto& e : graph.edges) {
    if (e.lag >= 1 && e.lag_min == e.lag) {
      add_unique(parents[var_index(graph, e.effect)],
                 LaggedVariable{static_cast<int>(var_index(graph, e.cause)), e.lag});
    }
  }
  for (auto& p : parents) std::sort(p.begin(), p.end());

  // Lag-0 adjacencies conditioned on both sides' lagged parents.
  struct Link {
    int a, b;
    CiTestResult test;
  };
  std::vector<Link> links;
  std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(v));
  for (int a = 0; a < v; ++a) {
    for (int b = a + 1; b < v; ++b) {
      Nodes conds = parents[static_cast<std::size_t>(a)];
      for (const auto& n : parents[static_cast<std::size_t>(b)]) add_unique(conds, n);
      const auto res = test_nodes(x, {a, 0}, {b, 0}, conds, 0);
      if (res.p_value <= alpha) {
        links.push_back({a, b, res});
        neighbours[static_cast<std::size_t>(a)].push_back(b);
        neighbours[static_cast<std::size_t>(b)].push_back(a);
      }
    }
  }

  // Drop lagged links explained away by a contemporaneous neighbour of the effect.
  std::vector<CausalEdge> kept;
  for (const auto& e : out.edges) {
    const int j = static_cast<int>(var_index(graph, e.effect));
    const int i = static_cast<int>(var_index(graph, e.cause));
    const auto& nb = neighbours[static_cast<std::size_t>(j)];
    if (e.lag == 0 || e.lag_min != e.lag || nb.empty()) {
      kept.push_back(e);
      continue;
    }
    const LaggedVariable cause{i, e.lag};
    Nodes conds;
    for (const auto& n : parents[static_cast<std::size_t>(j)])
      if (n != cause) conds.push_back(n);
    for (const auto& n : parents[static_cast<std::size_t>(i)])
      add_unique(conds, LaggedVariable{n.variable, n.lag + e.lag});
    for (int k : nb) add_unique(conds, LaggedVariable{k, 0});
    const auto res = test_nodes(x, cause, {j, 0}, conds, 0);
    if (res.p_value <= alpha) kept.push_back(e);
  }
  out.edges = std::move(kept);

  std::vector<Nodes> final_parents(static_cast<std::size_t>(v));
  for (const auto& e : out.edges) {
    if (e.lag >= 1 && e.lag_min == e.lag) {
      add_unique(final_parents[var_index(graph, e.effect)],
                 LaggedVariable{static_cast<int>(var_index(graph, e.cause)), e.lag});
    }
  }
  for (auto& p : final_parents) std::sort(p.begin(), p.end());

  // from -> to is forced when some lagged parent of `to` is independent of
  // `from` given from's parents, but dependent once `to` is conditioned on.
  auto forced = [&](int from, int to) {
    const auto& pf = final_parents[static_cast<std::size_t>(from)];
    for (const auto& k : final_parents[static_cast<std::size_t>(to)]) {
      if (std::find(pf.begin(), pf.end(), k) != pf.end()) continue;
      const auto without_to = test_nodes(x, k, {from, 0}, pf, 0);
      if (without_to.p_value <= alpha) continue;
      Nodes with_to = pf;
      with_to.push_back({to, 0});
      if (test_nodes(x, k, {from, 0}, with_to, 0).p_value <= alpha) return true;
    }
    return false;
  };

  for (const auto& l : links) {
    const bool ab = forced(l.a, l.b), ba = forced(l.b, l.a);
    CausalEdge e;
    e.lag = e.lag_min = 0;
    e.statistic = l.test.r;
    e.p_raw = e.p_corrected = l.test.p_value;
    e.oriented = ab != ba;
    const int cause = (ab && !ba) || ab == ba ? l.a : l.b;
    e.cause = graph.variables[static_cast<std::size_t>(cause)];
    e.effect = graph.variables[static_cast<std::size_t>(cause == l.a ? l.b : l.a)];
    out.edges.push_back(std::move(e));
  }
  out.sort_edges();
  out.validate();
  return out;
}

CausalGraph pcmciplus_run(const TimeSeriesFrame& frame, const PcmciOptions& options) {
  const auto parents =
      pc1_lagged_parents(frame, options.tau_max, options.alpha_pc, options.max_conds);
  auto graph = mci_prune(frame, parents, options.tau_max, options.alpha_mci);
  if (options.contemporaneous) graph = contemporaneous_phase(frame, graph, options.alpha_mci);
  return graph;
}

}  // namespace causalcast
