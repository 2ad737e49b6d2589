#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "causalcast/synth.hpp"
#include "support.hpp"

using namespace causalcast;

namespace {

// Six variables, lags up to 3, eight links (two autoregressive).
ScmSpec six_var_spec(std::uint64_t seed) {
  ScmSpec s;
  s.num_vars = 6;
  s.seed = seed;
  s.mechanisms = {{0, {{0, 1, 0.5}}, 1.0, Nonlinearity::linear},
                  {1, {{0, 2, 0.4}, {1, 1, 0.3}}, 1.0, Nonlinearity::linear},
                  {2, {{1, 3, -0.4}}, 1.0, Nonlinearity::linear},
                  {3, {{2, 1, 0.3}, {0, 3, 0.3}}, 1.0, Nonlinearity::linear},
                  {5, {{4, 1, 0.5}, {3, 2, 0.3}}, 1.0, Nonlinearity::linear}};
  return s;
}

CausalGraph graph_with(const std::vector<std::tuple<std::string, std::string, int>>& edges) {
  CausalGraph g;
  g.variables = {"a", "b", "c", "d", "e"};
  for (const auto& [c, e, l] : edges) g.edges.push_back({c, e, l, l, 0.0, 0.0, 0.0, true});
  return g;
}

}  // namespace

TEST_CASE("noiseless AR(1) follows the closed form") {
  ScmSpec s;
  s.num_vars = 1;
  s.burn_in = 0;
  s.initial = {1.0};
  s.mechanisms = {{0, {{0, 1, 0.5}}, 0.0, Nonlinearity::linear}};
  const auto [frame, truth] = generate(s, 6);
  REQUIRE(frame.rows() == 6);
  double expected = 1.0;
  for (int t = 0; t < 6; ++t) {
    CHECK(frame.values()(t, 0) == expected);
    expected *= 0.5;
  }
  REQUIRE(truth.edges.size() == 1);
  CHECK(truth.edges[0].lag == 1);
}

TEST_CASE("generation is seeded") {
  const auto a = generate(six_var_spec(3), 300).first;
  const auto b = generate(six_var_spec(3), 300).first;
  const auto c = generate(six_var_spec(4), 300).first;
  CHECK(to_csv(a) == to_csv(b));
  CHECK(to_csv(a) != to_csv(c));
}

TEST_CASE("ground truth reads off the mechanisms") {
  const auto [frame, truth] = generate(six_var_spec(1), 100);
  CHECK(frame.cols() == 6);
  REQUIRE(truth.edges.size() == 8);
  CHECK(truth.method == "truth");
  std::set<std::tuple<std::string, std::string, int>> got;
  for (const auto& e : truth.edges) got.emplace(e.cause, e.effect, e.lag);
  const std::set<std::tuple<std::string, std::string, int>> expected = {
      {"x0", "x0", 1}, {"x0", "x1", 2}, {"x1", "x1", 1}, {"x1", "x2", 3},
      {"x2", "x3", 1}, {"x0", "x3", 3}, {"x4", "x5", 1}, {"x3", "x5", 2}};
  CHECK(got == expected);
}

TEST_CASE("invalid specifications are rejected") {
  ScmSpec unstable;
  unstable.num_vars = 1;
  unstable.mechanisms = {{0, {{0, 1, 1.01}}, 1.0, Nonlinearity::linear}};
  CHECK(support::error_kind([&] { generate(unstable, 10); }) == ErrorKind::data);

  ScmSpec cyclic;
  cyclic.num_vars = 2;
  cyclic.mechanisms = {{0, {{1, 0, 0.3}}, 1.0, Nonlinearity::linear},
                       {1, {{0, 0, 0.3}}, 1.0, Nonlinearity::linear}};
  CHECK(support::error_kind([&] { generate(cyclic, 10); }) == ErrorKind::data);

  ScmSpec self;
  self.num_vars = 1;
  self.mechanisms = {{0, {{0, 0, 0.3}}, 1.0, Nonlinearity::linear}};
  CHECK(support::error_kind([&] { self.validate(); }) == ErrorKind::data);

  // The unstable check applies to linear specs only; tanh saturates.
  ScmSpec bounded = unstable;
  bounded.mechanisms[0].nonlinearity = Nonlinearity::tanh;
  CHECK_NOTHROW(generate(bounded, 50));
}

TEST_CASE("spectral radius of a VAR(1) equals the largest eigenvalue modulus") {
  ScmSpec s;
  s.num_vars = 2;
  s.mechanisms = {{0, {{0, 1, 0.9}}, 1.0, Nonlinearity::linear},
                  {1, {{0, 1, 0.4}, {1, 1, 0.7}}, 1.0, Nonlinearity::linear}};
  CHECK(s.spectral_radius() == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("linear series are stationary across segments") {
  const auto frame = generate(six_var_spec(9), 5000).first;
  const auto& x = frame.values();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt((x.col(c).array() - x.col(c).mean()).square().mean());
    std::vector<double> means, vars;
    for (int s = 0; s < 10; ++s) {
      const Eigen::VectorXd seg = x.col(c).segment(s * 500, 500);
      means.push_back(seg.mean());
      vars.push_back((seg.array() - seg.mean()).square().mean());
    }
    const auto [mlo, mhi] = std::minmax_element(means.begin(), means.end());
    CHECK(*mhi - *mlo <= 3.0 * sd);
    const auto [lo, hi] = std::minmax_element(vars.begin(), vars.end());
    CHECK(*hi / *lo < 2.0);
  }
}

TEST_CASE("score_graph examples") {
  const auto truth = graph_with({{"a", "b", 1}, {"b", "c", 1}, {"c", "d", 2}, {"d", "e", 1}});
  for (auto mode : {MatchMode::adjacency, MatchMode::lag_exact}) {
    const auto same = score_graph(truth, truth, mode);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);

    const auto none = score_graph(graph_with({}), truth, mode);
    CHECK(none.precision == 1.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);

    const auto three = score_graph(graph_with({{"a", "b", 1}, {"b", "c", 1}, {"c", "d", 2}, {"a", "e", 1}}), truth, mode);
    CHECK(three.precision == doctest::Approx(0.75));
    CHECK(three.recall == doctest::Approx(0.75));
    CHECK(three.f1 == doctest::Approx(0.75));
  }
  // Adjacency ignores lag and direction; lag-exact does not.
  const auto shifted = graph_with({{"b", "a", 3}});
  CHECK(score_graph(shifted, graph_with({{"a", "b", 1}}), MatchMode::adjacency).f1 == 1.0);
  CHECK(score_graph(shifted, graph_with({{"a", "b", 1}}), MatchMode::lag_exact).f1 == 0.0);

  auto other = truth;
  other.variables.pop_back();
  CHECK(support::error_kind([&] { score_graph(other, truth, MatchMode::adjacency); }) == ErrorKind::invalid_argument);
}

TEST_CASE("score_graph of a graph with itself is perfect") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto truth = generate(six_var_spec(seed), 10).second;
    const auto s = score_graph(truth, truth, MatchMode::lag_exact);
    CHECK(s.f1 == 1.0);
  }
}

TEST_CASE("SCM specifications parse from JSON") {
  const auto j = nlohmann::json::parse(R"({
    "num_vars": 2, "names": ["w", "z"], "seed": 5, "burn_in": 10, "cadence": "monthly",
    "start": "1990-01-01",
    "mechanisms": [{"effect": "z", "noise_std": 0.5, "terms": [{"cause": "w", "lag": 1, "coefficient": 0.4}]}]
  })");
  const auto s = scm_from_json(j);
  CHECK(s.num_vars == 2);
  CHECK(s.cadence == Cadence::monthly);
  REQUIRE(s.mechanisms.size() == 1);
  CHECK(s.mechanisms[0].effect == 1);
  CHECK(s.mechanisms[0].terms[0].cause == 0);
  const auto [frame, truth] = generate(s, 24);
  CHECK(format_date(frame.timestamps().front()) == "1990-01-01");
  CHECK(truth.edges.size() == 1);

  CHECK(support::error_kind([] { scm_from_json(nlohmann::json::parse(R"({"names":["a"]})")); }) == ErrorKind::config);
  CHECK(support::error_kind([] {
          scm_from_json(nlohmann::json::parse(R"({"num_vars":1,"mechanisms":[{"effect":"q"}]})"));
        }) == ErrorKind::config);
}
