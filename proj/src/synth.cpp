#include "causalcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "causalcast/error.hpp"

namespace causalcast {

namespace {

// Topological order of the lag-0 subgraph; throws on cycles.
std::vector<int> contemporaneous_order(const ScmSpec& spec) {
  const int v = spec.num_vars;
  std::vector<std::vector<int>> children(static_cast<std::size_t>(v));
  std::vector<int> indegree(static_cast<std::size_t>(v), 0);
  for (const auto& m : spec.mechanisms) {
    for (const auto& t : m.terms) {
      if (t.lag == 0) {
        children[static_cast<std::size_t>(t.cause)].push_back(m.effect);
        ++indegree[static_cast<std::size_t>(m.effect)];
      }
    }
  }
  std::vector<int> order;
  std::vector<int> ready;
  for (int i = v - 1; i >= 0; --i)
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const int n = ready.back();
    ready.pop_back();
    order.push_back(n);
    for (int c : children[static_cast<std::size_t>(n)])
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != v) fail(ErrorKind::data, "contemporaneous (lag-0) links form a cycle");
  return order;
}

}  // namespace

std::vector<std::string> ScmSpec::variable_names() const {
  if (!names.empty()) return names;
  std::vector<std::string> out;
  for (int i = 0; i < num_vars; ++i) out.push_back("x" + std::to_string(i));
  return out;
}

int ScmSpec::max_lag() const {
  int m = 0;
  for (const auto& mech : mechanisms)
    for (const auto& t : mech.terms) m = std::max(m, t.lag);
  return m;
}

double ScmSpec::spectral_radius() const {
  const int v = num_vars;
  const int p = max_lag();
  if (p == 0) return 0.0;
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(v, v);
  std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(v, v));
  for (const auto& m : mechanisms) {
    for (const auto& t : m.terms) {
      if (t.lag == 0) {
        b0(m.effect, t.cause) += t.coefficient;
      } else {
        a[static_cast<std::size_t>(t.lag - 1)](m.effect, t.cause) += t.coefficient;
      }
    }
  }
  // Reduced form: x = (I - B0)^{-1} (sum A_k x_{t-k} + e).
  const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(v, v) - b0).inverse();
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(v * p, v * p);
  for (int k = 0; k < p; ++k) companion.block(0, k * v, v, v) = inv * a[static_cast<std::size_t>(k)];
  if (p > 1) companion.block(v, 0, v * (p - 1), v * (p - 1)).setIdentity();
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void ScmSpec::validate() const {
  if (num_vars < 1) fail(ErrorKind::data, "SCM needs at least one variable");
  if (!names.empty() && static_cast<int>(names.size()) != num_vars) {
    fail(ErrorKind::data, "SCM names do not match num_vars");
  }
  if (!initial.empty() && static_cast<int>(initial.size()) != num_vars) {
    fail(ErrorKind::data, "SCM initial values do not match num_vars");
  }
  if (burn_in < 0) fail(ErrorKind::data, "burn_in must be >= 0");
  std::set<int> effects;
  bool all_linear = true;
  for (const auto& m : mechanisms) {
    if (m.effect < 0 || m.effect >= num_vars) fail(ErrorKind::data, "mechanism effect out of range");
    if (!effects.insert(m.effect).second) {
      fail(ErrorKind::data, "variable " + std::to_string(m.effect) + " has two mechanisms");
    }
    if (!(m.noise_std >= 0.0)) fail(ErrorKind::data, "noise_std must be >= 0");
    all_linear = all_linear && m.nonlinearity == Nonlinearity::linear;
    std::set<std::pair<int, int>> seen;
    for (const auto& t : m.terms) {
      if (t.cause < 0 || t.cause >= num_vars) fail(ErrorKind::data, "term cause out of range");
      if (t.lag < 0) fail(ErrorKind::data, "term lag must be >= 0");
      if (t.lag == 0 && t.cause == m.effect) fail(ErrorKind::data, "lag-0 self dependence");
      if (!seen.emplace(t.cause, t.lag).second) fail(ErrorKind::data, "duplicate SCM term");
    }
  }
  contemporaneous_order(*this);
  if (all_linear) {
    const double rho = spectral_radius();
    if (!(rho < 1.0)) {
      fail(ErrorKind::data, "unstable SCM: companion spectral radius " + std::to_string(rho) + " >= 1");
    }
  }
}

std::pair<TimeSeriesFrame, CausalGraph> generate(const ScmSpec& spec, int n) {
  spec.validate();
  if (n < 1) fail(ErrorKind::invalid_argument, "generate: n must be >= 1");
  const int v = spec.num_vars;
  const auto order = contemporaneous_order(spec);
  std::vector<const Mechanism*> mech(static_cast<std::size_t>(v), nullptr);
  for (const auto& m : spec.mechanisms) mech[static_cast<std::size_t>(m.effect)] = &m;

  const int total = spec.burn_in + n;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(total, v);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (int t = 0; t < total; ++t) {
    // Draw noise in column order so the stream does not depend on the DAG.
    Eigen::VectorXd eps(v);
    for (int i = 0; i < v; ++i) eps(i) = normal(rng);
    if (t == 0 && !spec.initial.empty()) {
      for (int i = 0; i < v; ++i) x(0, i) = spec.initial[static_cast<std::size_t>(i)];
      continue;
    }
    for (int j : order) {
      const Mechanism* m = mech[static_cast<std::size_t>(j)];
      if (!m) {
        x(t, j) = eps(j);
        continue;
      }
      double s = 0.0;
      for (const auto& term : m->terms) {
        if (t - term.lag >= 0) s += term.coefficient * x(t - term.lag, term.cause);
      }
      if (m->nonlinearity == Nonlinearity::tanh) s = std::tanh(s);
      x(t, j) = s + m->noise_std * eps(j);
    }
  }

  const auto names = spec.variable_names();
  std::vector<VariableMeta> vars;
  for (const auto& name : names) vars.push_back({name, "", std::nullopt});
  std::vector<Date> dates;
  for (int t = 0; t < n; ++t) dates.push_back(advance(spec.start, spec.cadence, t));
  TimeSeriesFrame frame(std::move(dates), spec.cadence, std::move(vars),
                        x.bottomRows(n).eval());

  CausalGraph truth;
  truth.variables = names;
  truth.alpha = 1.0;
  truth.method = "truth";
  for (const auto& m : spec.mechanisms) {
    for (const auto& t : m.terms) {
      if (t.coefficient == 0.0) continue;
      CausalEdge e;
      e.cause = names[static_cast<std::size_t>(t.cause)];
      e.effect = names[static_cast<std::size_t>(m.effect)];
      e.lag = e.lag_min = t.lag;
      e.statistic = t.coefficient;
      e.p_raw = e.p_corrected = 0.0;
      truth.edges.push_back(std::move(e));
    }
  }
  truth.sort_edges();
  truth.validate();
  return {std::move(frame), std::move(truth)};
}

ScmSpec scm_from_json(const nlohmann::json& j) {
  try {
    ScmSpec s;
    s.num_vars = j.at("num_vars").get<int>();
    if (j.contains("names")) s.names = j["names"].get<std::vector<std::string>>();
    if (j.contains("initial")) s.initial = j["initial"].get<std::vector<double>>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.burn_in = j.value("burn_in", 100);
    if (j.contains("cadence")) s.cadence = parse_cadence(j["cadence"].get<std::string>());
    if (j.contains("start")) s.start = parse_date(j["start"].get<std::string>());
    const auto names = s.variable_names();
    auto resolve = [&](const nlohmann::json& ref) -> int {
      if (ref.is_number_integer()) return ref.get<int>();
      const auto name = ref.get<std::string>();
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) fail(ErrorKind::config, "SCM references unknown variable '" + name + "'");
      return static_cast<int>(it - names.begin());
    };
    for (const auto& mj : j.value("mechanisms", nlohmann::json::array())) {
      Mechanism m;
      m.effect = resolve(mj.at("effect"));
      m.noise_std = mj.value("noise_std", 1.0);
      const auto nl = mj.value("nonlinearity", std::string("linear"));
      if (nl == "linear") {
        m.nonlinearity = Nonlinearity::linear;
      } else if (nl == "tanh") {
        m.nonlinearity = Nonlinearity::tanh;
      } else {
        fail(ErrorKind::config, "unknown nonlinearity '" + nl + "'");
      }
      for (const auto& tj : mj.value("terms", nlohmann::json::array())) {
        m.terms.push_back({resolve(tj.at("cause")), tj.at("lag").get<int>(),
                           tj.at("coefficient").get<double>()});
      }
      s.mechanisms.push_back(std::move(m));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, std::string("invalid SCM specification: ") + e.what());
  }
}

GraphScore score_graph(const CausalGraph& found, const CausalGraph& truth, MatchMode mode) {
  if (found.variables != truth.variables) {
    fail(ErrorKind::invalid_argument, "score_graph: variable sets differ");
  }
  using Key = std::tuple<std::string, std::string, int, int>;
  auto keys = [&](const CausalGraph& g) {
    std::set<Key> out;
    for (const auto& e : g.edges) {
      if (mode == MatchMode::adjacency) {
        out.emplace(std::min(e.cause, e.effect), std::max(e.cause, e.effect), 0, 0);
      } else {
        out.emplace(e.cause, e.effect, e.lag_min, e.lag);
      }
    }
    return out;
  };
  const auto f = keys(found), t = keys(truth);
  std::size_t hits = 0;
  for (const auto& k : f) hits += t.count(k);
  GraphScore s;
  s.precision = f.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(f.size());
  s.recall = t.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(t.size());
  s.f1 = (s.precision + s.recall) > 0.0 && hits > 0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : (f.empty() && t.empty() ? 1.0 : 0.0);
  return s;
}

}  // namespace causalcast
