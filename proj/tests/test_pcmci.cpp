#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "causalcast/pcmci.hpp"
#include "causalcast/synth.hpp"
#include "support.hpp"

using namespace causalcast;

namespace {

bool has_edge(const CausalGraph& g, const std::string& cause, const std::string& effect, int lag) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const CausalEdge& e) {
    return e.cause == cause && e.effect == effect && e.lag == lag;
  });
}

bool has_lag0(const CausalGraph& g, const std::string& a, const std::string& b) {
  return std::any_of(g.edges.begin(), g.edges.end(), [&](const CausalEdge& e) {
    return e.lag == 0 && ((e.cause == a && e.effect == b) || (e.cause == b && e.effect == a));
  });
}

TimeSeriesFrame chain_frame(std::uint64_t seed, int n) {
  // x -> y -> z, one step each.
  ScmSpec s;
  s.num_vars = 3;
  s.names = {"x", "y", "z"};
  s.seed = seed;
  s.mechanisms = {{0, {{0, 1, 0.5}}, 1.0, Nonlinearity::linear},
                  {1, {{1, 1, 0.3}, {0, 1, 0.6}}, 1.0, Nonlinearity::linear},
                  {2, {{2, 1, 0.3}, {1, 1, 0.6}}, 1.0, Nonlinearity::linear}};
  return generate(s, n).first;
}

}  // namespace

TEST_CASE("parcorr closed-form examples") {
  Eigen::VectorXd x(4), y(4);
  x << 1, 2, 3, 4;
  y << 4, 3, 2, 1;
  const auto r = parcorr(x, y, Eigen::MatrixXd(4, 0));
  CHECK(r.r == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK_FALSE(r.degenerate);

  Eigen::VectorXd u(8);
  u << 1, 3, 2, 5, 4, 7, 6, 8;
  const auto d = parcorr(u, u, u);
  CHECK(d.degenerate);
  CHECK(d.r == 0.0);

  CHECK(support::error_kind([&] { parcorr(x, y, Eigen::MatrixXd::Ones(4, 1)); }) == ErrorKind::data);
}

TEST_CASE("parcorr matches the precision-matrix partial correlation") {
  Eigen::Matrix3d cov;
  cov << 1, .8, .5, .8, 1, .5, .5, .5, 1;
  // Oracle from the inverse covariance: -P_xy / sqrt(P_xx P_yy).
  const Eigen::Matrix3d prec = cov.inverse();
  const double rho = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
  CHECK(rho == doctest::Approx((0.8 - 0.25) / (1 - 0.25)).epsilon(1e-12));
  CHECK(rho == doctest::Approx(0.7333).epsilon(1e-4));

  const Eigen::Matrix3d l = cov.llt().matrixL();
  const auto w = support::white_noise(10000, 3, 2024);
  const Eigen::MatrixXd s = w * l.transpose();
  const auto r = parcorr(s.col(0), s.col(1), s.col(2));
  CHECK(std::abs(r.r - rho) <= 0.02);
}

TEST_CASE("parcorr is symmetric and affine invariant") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = support::white_noise(200, 4, 300 + static_cast<std::uint64_t>(trial));
    m.col(1) += 0.5 * m.col(0) + 0.3 * m.col(2);
    const Eigen::MatrixXd z = m.rightCols(2);
    const auto a = parcorr(m.col(0), m.col(1), z);
    const auto b = parcorr(m.col(1), m.col(0), z);
    CHECK(a.r == b.r);
    CHECK(std::abs(a.r) <= 1.0);

    Eigen::MatrixXd z2 = z;
    z2.col(0) = 5.0 * z.col(0).array() - 3.0;
    const Eigen::VectorXd x2 = -0.25 * m.col(0).array() + 11.0;
    const Eigen::VectorXd y2 = 40.0 * m.col(1).array() + 1.0;
    const auto c = parcorr(x2, y2, z2);
    CHECK(std::abs(c.r - (-a.r)) <= 1e-9);
  }
}

TEST_CASE("ci_pvalue reference values") {
  CHECK(ci_pvalue(0.0, 50, 2) == 1.0);
  CHECK(ci_pvalue(1.0, 50, 2) == 0.0);
  CHECK(ci_pvalue(-1.0, 50, 2) == 0.0);
  const double z = 10.0 * std::atanh(0.5);
  CHECK(z == doctest::Approx(5.4931).epsilon(1e-4));
  const double oracle = std::erfc(z / std::sqrt(2.0));  // 2 * Phi(-z)
  const double p = ci_pvalue(0.5, 103, 0);
  CHECK(p == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(p == doctest::Approx(3.95e-8).epsilon(0.01));
  CHECK(support::error_kind([] { ci_pvalue(0.1, 5, 2); }) == ErrorKind::data);
  CHECK(support::error_kind([] { ci_pvalue(1.5, 50, 0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("ci_pvalue decreases with |r|") {
  double prev = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    const double p = ci_pvalue(r, 120, 3);
    CHECK(p <= prev);
    CHECK(ci_pvalue(-r, 120, 3) == p);
    prev = p;
  }
}

TEST_CASE("pc1 keeps the true autoregressive lag and drops spurious ones") {
  int contains = 0, clean = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScmSpec s;
    s.num_vars = 1;
    s.seed = 400 + seed;
    s.mechanisms = {{0, {{0, 1, 0.8}}, 1.0, Nonlinearity::linear}};
    const auto f = generate(s, 1000).first;
    const auto ps = pc1_lagged_parents(f, 5, 0.01);
    const auto& p = ps.parents[0];
    const bool has1 = std::any_of(p.begin(), p.end(), [](const ParentCandidate& c) { return c.node.lag == 1; });
    contains += has1 ? 1 : 0;
    clean += (has1 && p.size() == 1) ? 1 : 0;
  }
  CHECK(contains == 50);
  CHECK(clean >= 45);
}

TEST_CASE("pc1 false-positive rate on white noise stays near alpha") {
  // 3 variables x 3 lags = 9 candidates per effect, 27 per run.
  int spurious = 0, empty = 0;
  const int runs = 30;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    const auto f = support::frame_of(support::white_noise(500, 3, 700 + seed));
    const auto ps = pc1_lagged_parents(f, 3, 0.01);
    bool all_empty = true;
    for (const auto& p : ps.parents) {
      spurious += static_cast<int>(p.size());
      all_empty = all_empty && p.empty();
    }
    empty += all_empty ? 1 : 0;
  }
  CHECK(spurious <= static_cast<int>(2 * 0.01 * 27 * runs));
  CHECK(empty >= runs / 2);
}

TEST_CASE("pc1 parent sets are well-formed") {
  const auto f = chain_frame(5, 800);
  const auto ps = pc1_lagged_parents(f, 4, 0.2);
  CHECK(ps.tau_max == 4);
  for (const auto& p : ps.parents) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(p[k].node.lag >= 1);
      CHECK(p[k].node.lag <= 4);
      CHECK(p[k].node.variable < 3);
      CHECK(p[k].p_value <= 0.2);
      if (k > 0) CHECK(std::abs(p[k - 1].statistic) >= std::abs(p[k].statistic));
    }
  }
  const auto none = pc1_lagged_parents(f, 0, 0.2);
  for (const auto& p : none.parents) CHECK(p.empty());

  const auto capped = pc1_lagged_parents(f, 4, 0.2, 1);
  CHECK(capped.parents.size() == 3);
}

TEST_CASE("removing an independent variable never adds parents") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto chain = chain_frame(900 + seed, 600);
    Eigen::MatrixXd x(chain.rows(), 4);
    x.leftCols(3) = chain.values();
    x.col(3) = support::white_noise(static_cast<int>(chain.rows()), 1, 50 + seed);
    const auto full = pc1_lagged_parents(support::frame_of(x), 3, 0.05);
    const auto reduced = pc1_lagged_parents(support::frame_of(x.leftCols(3).eval()), 3, 0.05);
    for (int j = 0; j < 3; ++j) {
      for (const auto& c : reduced.parents[static_cast<std::size_t>(j)]) {
        const auto& fp = full.parents[static_cast<std::size_t>(j)];
        CHECK(std::any_of(fp.begin(), fp.end(), [&](const ParentCandidate& d) { return d.node == c.node; }));
      }
    }
  }
}

TEST_CASE("MCI removes the indirect chain link and keeps direct links") {
  int indirect_removed = 0, direct_kept = 0, runs = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto f = normalize(chain_frame(1000 + seed, 2000)).first;
    const auto ps = pc1_lagged_parents(f, 3, 0.2);
    const auto g = mci_prune(f, ps, 3, 0.01);
    ++runs;
    indirect_removed += has_edge(g, "x", "z", 2) ? 0 : 1;
    direct_kept += has_edge(g, "x", "y", 1) ? 1 : 0;
    CHECK(g.method == "pcmci+");
  }
  CHECK(indirect_removed >= static_cast<int>(0.85 * runs));
  CHECK(direct_kept >= static_cast<int>(0.95 * runs));
}

TEST_CASE("mci_prune with empty parent sets is empty") {
  const auto f = support::frame_of(support::white_noise(200, 3, 1));
  ParentSet ps;
  ps.tau_max = 2;
  ps.parents.resize(3);
  CHECK(mci_prune(f, ps, 2, 0.01).edges.empty());
}

TEST_CASE("contemporaneous phase detects a lag-0 dependence") {
  int found = 0, spurious = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    ScmSpec s;
    s.num_vars = 2;
    s.names = {"w", "z"};
    s.seed = 50 + seed;
    s.mechanisms = {{0, {{0, 1, 0.5}}, 1.0, Nonlinearity::linear},
                    {1, {{0, 0, 0.5}, {1, 1, 0.3}}, 1.0, Nonlinearity::linear}};
    const auto f = normalize(generate(s, 1000).first).first;
    PcmciOptions o;
    o.tau_max = 2;
    found += has_lag0(pcmciplus_run(f, o), "w", "z") ? 1 : 0;

    const auto indep = support::frame_of(support::white_noise(1000, 3, 3000 + seed));
    const auto g = pcmciplus_run(indep, o);
    spurious += std::any_of(g.edges.begin(), g.edges.end(), [](const CausalEdge& e) { return e.lag == 0; }) ? 1 : 0;
  }
  CHECK(found >= 27);
  CHECK(spurious <= 3);
}

TEST_CASE("collider with a lagged parent orients the lag-0 link") {
  // u -> z at lag 1, w -> z at lag 0, w independent of u: z is a collider.
  int oriented = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScmSpec s;
    s.num_vars = 3;
    s.names = {"u", "w", "z"};
    s.seed = 600 + seed;
    s.mechanisms = {{2, {{0, 1, 0.6}, {1, 0, 0.6}}, 1.0, Nonlinearity::linear}};
    const auto f = generate(s, 2000).first;
    PcmciOptions o;
    o.tau_max = 2;
    const auto g = pcmciplus_run(f, o);
    for (const auto& e : g.edges)
      if (e.lag == 0 && e.oriented && e.cause == "w" && e.effect == "z") ++oriented;
  }
  CHECK(oriented >= 16);
}

TEST_CASE("contemporaneous phase on a single variable is a no-op") {
  ScmSpec s;
  s.num_vars = 1;
  s.seed = 2;
  s.mechanisms = {{0, {{0, 1, 0.7}}, 1.0, Nonlinearity::linear}};
  const auto f = generate(s, 500).first;
  const auto lagged = mci_prune(f, pc1_lagged_parents(f, 2, 0.2), 2, 0.01);
  const auto g = contemporaneous_phase(f, lagged, 0.01);
  CHECK(to_edge_list(g) == to_edge_list(lagged));
}

TEST_CASE("pcmciplus_run is deterministic") {
  const auto f = chain_frame(42, 1500);
  PcmciOptions o;
  o.tau_max = 3;
  const auto a = to_edge_list(pcmciplus_run(f, o));
  const auto b = to_edge_list(pcmciplus_run(f, o));
  CHECK(a == b);
}

TEST_CASE("pcmciplus with tau_max 0 and no contemporaneous phase is empty") {
  const auto f = chain_frame(1, 300);
  PcmciOptions o;
  o.tau_max = 0;
  o.contemporaneous = false;
  const auto g = pcmciplus_run(f, o);
  CHECK(g.edges.empty());
  CHECK(feature_select(g, "z") == std::vector<std::string>{"z"});
}

TEST_CASE("pcmciplus recovers a five-variable lagged SCM") {
  std::vector<double> f1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScmSpec s;
    s.num_vars = 5;
    s.seed = 77 + seed;
    s.mechanisms = {{1, {{0, 1, 0.6}}, 1.0, Nonlinearity::linear},
                    {2, {{1, 2, 0.5}, {3, 1, -0.5}}, 1.0, Nonlinearity::linear},
                    {3, {{3, 1, 0.5}}, 1.0, Nonlinearity::linear},
                    {4, {{2, 1, 0.5}, {0, 3, 0.4}}, 1.0, Nonlinearity::linear}};
    const auto [frame, truth] = generate(s, 2000);
    PcmciOptions o;
    o.tau_max = 3;
    const auto found = pcmciplus_run(normalize(frame).first, o);
    REQUIRE(truth.edges.size() == 6);
    f1.push_back(score_graph(found, truth, MatchMode::adjacency).f1);
  }
  CHECK(support::median(f1) >= 0.85);
}
