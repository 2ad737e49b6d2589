#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "causalcast/metrics.hpp"
#include "support.hpp"

using namespace causalcast;

namespace {

std::vector<double> randoms(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = nd(rng);
  return v;
}

// Monthly frame, 2000-01 onwards; the target depends on lagged drivers.
TimeSeriesFrame experiment_frame(std::uint64_t seed) {
  ScmSpec s;
  s.num_vars = 4;
  s.names = {"Sea Ice Extent", "a", "b", "noise"};
  s.cadence = Cadence::monthly;
  s.seed = seed;
  s.mechanisms = {{0, {{0, 1, 0.5}, {1, 1, 0.4}, {2, 1, -0.3}}, 0.3, Nonlinearity::linear},
                  {1, {{1, 1, 0.6}}, 1.0, Nonlinearity::linear},
                  {2, {{2, 1, 0.4}}, 1.0, Nonlinearity::linear}};
  auto frame = generate(s, 240).first;
  // Shift the target to a positive physical scale.
  Eigen::MatrixXd v = frame.values();
  v.col(0).array() += 10.0;
  return TimeSeriesFrame(frame.timestamps(), frame.cadence(), frame.variables(), v);
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.arch.gru_units = 4;
  c.arch.lstm_units = 4;
  c.arch.dense_units = 4;
  c.arch.lookback = 6;
  c.train.max_epochs = 5;
  c.train.batch_size = 16;
  c.train.seed = 42;
  return c;
}

std::int64_t count_oracle(std::int64_t d, std::int64_t g, std::int64_t l, std::int64_t n) {
  return 3 * (g * d + g * g + 2 * g) + 4 * (l * g + l * l + l) + (n * l + n) + (n + 1);
}

}  // namespace

TEST_CASE("rmse, mae and r2 examples") {
  const std::vector<double> a{0, 0}, p{3, 4};
  CHECK(rmse(a, p) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse(a, p) == doctest::Approx(3.5355).epsilon(1e-4));
  CHECK(rmse(p, p) == 0.0);
  CHECK(mae(std::vector<double>{1, -1}, std::vector<double>{0, 0}) == 1.0);
  CHECK(mae(p, p) == 0.0);

  const std::vector<double> r{1, 2, 3};
  CHECK(r_squared(r, r) == 1.0);
  CHECK(r_squared(r, std::vector<double>{2, 2, 2}) == 0.0);
  CHECK(r_squared(r, std::vector<double>{1, 2, 4}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("metric error paths") {
  const std::vector<double> two{1, 2}, three{1, 2, 3}, empty;
  CHECK(support::error_kind([&] { rmse(two, three); }) == ErrorKind::invalid_argument);
  CHECK(support::error_kind([&] { mae(empty, empty); }) == ErrorKind::invalid_argument);
  CHECK(support::error_kind([&] { r_squared(std::vector<double>{1}, std::vector<double>{1}); }) ==
        ErrorKind::invalid_argument);
  CHECK(support::error_kind([&] { r_squared(std::vector<double>{4, 4, 4}, three); }) == ErrorKind::data);
}

TEST_CASE("rmse matches an independent oracle") {
  std::mt19937_64 rng(1);
  const auto a = randoms(rng, 1000), p = randoms(rng, 1000);
  // Compensated summation as a second implementation.
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<long double>(a[i] - p[i]) * (a[i] - p[i]);
  const double oracle = std::sqrt(static_cast<double>(acc / a.size()));
  CHECK(std::abs(rmse(a, p) - oracle) <= 1e-12);
}

TEST_CASE("metric properties on random vectors") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 50);
    const auto a = randoms(rng, n, 5.0), p = randoms(rng, n, 5.0);
    const double r = rmse(a, p), m = mae(a, p);
    CHECK(r >= 0.0);
    CHECK(m >= 0.0);
    CHECK(r >= m * (1 - 1e-15));
    CHECK(r_squared(a, p) <= 1.0);

    // Same affine map on both sides leaves R^2 unchanged.
    const double scale = trial % 2 ? -3.5 : 2.0, shift = 7.0;
    std::vector<double> a2(a), p2(p);
    for (auto& x : a2) x = scale * x + shift;
    for (auto& x : p2) x = scale * x + shift;
    CHECK(std::abs(r_squared(a2, p2) - r_squared(a, p)) <= 1e-12 * std::max(1.0, std::abs(r_squared(a, p))));
  }
}

TEST_CASE("report exports") {
  MetricsReport r;
  MetricsRow b;
  b.variant = "DL_GC";
  b.horizon = 2;
  b.rmse = 0.5;
  b.rmse_pct = 5.0;
  b.mae = 0.25;
  b.mae_pct = 2.5;
  b.r2 = 0.9;
  b.n_test = 10;
  b.n_train = 100;
  b.parameter_count = 1234;
  b.features = {"a", "Sea Ice Extent"};
  auto a = b;
  a.horizon = 1;
  a.r2 = 0.95;
  auto c = b;
  c.variant = "DL_vanilla";
  c.horizon = 1;
  r.rows = {b, c, a};
  r.sort();
  CHECK(r.rows[0].variant == "DL_GC");
  CHECK(r.rows[0].horizon == 1);
  CHECK(r.rows[2].variant == "DL_vanilla");

  const auto j = nlohmann::json::parse(to_json(r));
  CHECK(j["percent_basis"] == std::string(kPercentBasis));
  CHECK(j["variants"]["DL_GC"]["parameter_count"] == 1234);
  CHECK(j["variants"]["DL_GC"]["horizons"]["2"]["rmse"] == 0.5);
  CHECK(j["variants"]["DL_GC"]["horizons"]["1"]["r2"] == 0.95);
  CHECK(j["variants"]["DL_vanilla"]["horizons"].size() == 1);

  const auto csv = to_csv(r);
  CHECK(csv.rfind("variant,cadence,horizon,rmse,rmse_pct,mae,mae_pct,r2,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(csv.find("a;Sea Ice Extent") != std::string::npos);

  const auto svg = r2_plot_svg(r, "R2 by lead time");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
  CHECK(svg.find("DL_vanilla") != std::string::npos);
}

TEST_CASE("cell seeds are stable and distinct") {
  CHECK(cell_seed(42, "DL_GC", 1) == cell_seed(42, "DL_GC", 1));
  CHECK(cell_seed(42, "DL_GC", 1) != cell_seed(42, "DL_GC", 2));
  CHECK(cell_seed(42, "DL_GC", 1) != cell_seed(42, "DL_vanilla", 1));
  CHECK(cell_seed(42, "DL_GC", 1) != cell_seed(43, "DL_GC", 1));
}

TEST_CASE("prepare_splits fits normalization on the training rows only") {
  const auto frame = experiment_frame(1);
  const auto d = prepare_splits(frame, small_config().train_end, 0.1);
  // 2000-01 .. 2013-12 = 168 rows; 16 go to validation.
  CHECK(d.train.rows() == 152);
  REQUIRE(d.validation);
  CHECK(d.validation->rows() == 16);
  CHECK(d.test.rows() == 72);
  CHECK(std::abs(d.train.values().col(0).mean()) <= 1e-12);
  const double raw_mean = frame.values().col(0).head(152).mean();
  CHECK(d.normalization.mean(0) == doctest::Approx(raw_mean).epsilon(1e-12));
}

TEST_CASE("single variant, single horizon gives a one-row report") {
  const auto frame = experiment_frame(3);
  const std::vector<Variant> variants{{"DL_small", {"a", "Sea Ice Extent"}}};
  const std::vector<int> horizons{1};
  const auto report = run_experiment(frame, variants, horizons, small_config());
  REQUIRE(report.rows.size() == 1);
  const auto& row = report.rows[0];
  CHECK(row.variant == "DL_small");
  CHECK(row.horizon == 1);
  CHECK(row.n_test == 72 - 6);
  CHECK(row.n_train == 152 - 6);
  CHECK(row.rmse >= row.mae);
  CHECK(row.r2 <= 1.0);
  CHECK(row.cadence == Cadence::monthly);
  CHECK(row.seed == cell_seed(42, "DL_small", 1));
  CHECK(row.rmse_pct == doctest::Approx(100.0 * row.rmse / 10.0).epsilon(0.1));
}

TEST_CASE("parameter counts follow the feature count") {
  const auto frame = experiment_frame(4);
  const std::vector<Variant> variants{{"DL_vanilla", {"a", "b", "noise", "Sea Ice Extent"}},
                                      {"DL_PCMCI+", {"a", "Sea Ice Extent"}}};
  const std::vector<int> horizons{1, 2};
  const auto cfg = small_config();
  const auto report = run_experiment(frame, variants, horizons, cfg);
  REQUIRE(report.rows.size() == 4);
  for (const auto& row : report.rows) {
    const auto d = static_cast<std::int64_t>(row.features.size());
    CHECK(row.parameter_count == count_oracle(d, 4, 4, 4));
  }
  CHECK(report.rows[0].variant == "DL_PCMCI+");
  CHECK(report.rows[0].parameter_count < report.rows[2].parameter_count);
  CHECK(report.rows[1].n_test == report.rows[0].n_test - 1);
}

TEST_CASE("run_experiment is byte-reproducible") {
  const auto frame = experiment_frame(5);
  const std::vector<Variant> variants{{"DL_GC", {"a", "b", "Sea Ice Extent"}}};
  const std::vector<int> horizons{1, 3};
  const auto r1 = run_experiment(frame, variants, horizons, small_config());
  const auto r2 = run_experiment(frame, variants, horizons, small_config());
  CHECK(to_json(r1) == to_json(r2));
  CHECK(to_csv(r1) == to_csv(r2));
}

TEST_CASE("experiment configuration errors") {
  const auto frame = experiment_frame(6);
  const std::vector<int> horizons{1};
  auto cfg = small_config();
  const std::vector<Variant> bad{{"DL_bad", {"missing", "Sea Ice Extent"}}};
  CHECK(support::error_kind([&] { run_experiment(frame, bad, horizons, cfg); }) == ErrorKind::config);
  const std::vector<Variant> ok{{"DL_ok", {"a", "Sea Ice Extent"}}};
  cfg.target = "Snow";
  CHECK(support::error_kind([&] { run_experiment(frame, ok, horizons, cfg); }) == ErrorKind::config);
  cfg = small_config();
  const std::vector<int> zero{0};
  CHECK(support::error_kind([&] { run_experiment(frame, ok, zero, cfg); }) == ErrorKind::config);
}
