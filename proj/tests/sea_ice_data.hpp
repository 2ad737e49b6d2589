// Synthetic daily frames over the eleven-variable sea-ice schema.
#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <json.hpp>

#include "causalcast/pipeline.hpp"
#include "causalcast/synth.hpp"
#include "causalcast/timeseries.hpp"

namespace seaice {

// Schema order: 0 SP, 1 WV, 2 SH, 3 AT, 4 SW, 5 LW, 6 RF, 7 SF, 8 SST, 9 SSS, 10 SIE.
inline causalcast::ScmSpec daily_spec(std::uint64_t seed) {
  using causalcast::Nonlinearity;
  causalcast::ScmSpec s;
  s.num_vars = 11;
  for (const auto& m : causalcast::default_schema()) s.names.push_back(m.name);
  s.seed = seed;
  s.burn_in = 300;
  s.mechanisms = {
      {0, {{0, 1, 0.8}}, 1.0, Nonlinearity::linear},
      {1, {{1, 1, 0.3}}, 1.0, Nonlinearity::linear},
      {2, {{2, 1, 0.5}, {3, 1, 0.3}}, 1.0, Nonlinearity::linear},
      {3, {{3, 1, 0.8}}, 1.0, Nonlinearity::linear},
      {4, {{4, 1, 0.5}}, 1.0, Nonlinearity::linear},
      {5, {{5, 1, 0.5}, {3, 1, 0.4}}, 1.0, Nonlinearity::linear},
      {6, {{6, 1, 0.2}}, 1.0, Nonlinearity::linear},
      {7, {{7, 1, 0.4}, {0, 1, 0.3}}, 1.0, Nonlinearity::linear},
      {8, {{8, 1, 0.9}}, 0.5, Nonlinearity::linear},
      {9, {{9, 1, 0.7}}, 1.0, Nonlinearity::linear},
      {10, {{10, 1, 0.6}, {5, 1, -0.4}, {8, 1, -0.4}, {7, 1, 0.3}, {0, 2, 0.2}}, 0.5, Nonlinearity::linear},
  };
  return s;
}

/// Daily frame from `start` for `days` rows, mapped into the schema ranges,
/// with roughly `missing_rate` of the cells blanked.
inline causalcast::TimeSeriesFrame daily_frame(std::uint64_t seed, causalcast::Date start, int days,
                                               double missing_rate = 0.01) {
  auto spec = daily_spec(seed);
  spec.start = start;
  const auto raw = causalcast::generate(spec, days).first;
  const auto schema = causalcast::default_schema();
  Eigen::MatrixXd v = raw.values();
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const auto range = *schema[static_cast<std::size_t>(c)].valid_range;
    const double mid = 0.5 * (range.lo + range.hi), half = 0.5 * (range.hi - range.lo);
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      double x = mid + half * 0.12 * v(r, c);
      x = std::clamp(x, range.lo, range.hi);
      // Keep the first and last rows observed so monthly means always exist.
      if (r > 0 && r + 1 < v.rows() && u(rng) < missing_rate) x = std::nan("");
      v(r, c) = x;
    }
  }
  return causalcast::TimeSeriesFrame(raw.timestamps(), causalcast::Cadence::daily, schema, v);
}

/// Small-model configuration over a daily CSV with monthly aggregation.
inline nlohmann::json small_config(const std::string& daily_csv, int tau_max = 3) {
  return nlohmann::json{
      {"data", {{"daily", daily_csv}, {"aggregate_monthly", true}}},
      {"tau_max", tau_max},
      {"discovery", {{"methods", {"mvgc", "pcmci+"}}, {"alpha", 0.01}, {"max_conds", 3}}},
      {"model", {{"gru_units", 4}, {"lstm_units", 6}, {"dense_units", 4}, {"lookback", 6}}},
      {"train", {{"batch_size", 64}, {"max_epochs", 2}, {"patience", 2}}},
      {"split", {{"train_end", "2013-12-31"}, {"val_fraction", 0.1}}},
      {"horizons", {1, 2, 3, 4, 5, 6}},
      {"daily_steps_per_month", 30},
      {"seed", 7},
      {"output_dir", "out"},
      {"synth", {{"num_vars", 2}, {"n", 50}, {"mechanisms", {{{"effect", 1}, {"terms", {{{"cause", 0}, {"lag", 1}, {"coefficient", 0.5}}}}}}}}},
  };
}

}  // namespace seaice
