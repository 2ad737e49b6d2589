#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "causalcast/checkpoint.hpp"
#include "causalcast/nn.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

double rmse(std::span<const double> actual, std::span<const double> predicted);
double mae(std::span<const double> actual, std::span<const double> predicted);
/// 1 - SS_res / SS_tot, SS_tot about the mean of `actual`.
double r_squared(std::span<const double> actual, std::span<const double> predicted);

/// One (variant, horizon) cell. Errors are in physical units; the percent
/// forms divide by mean(|actual|) over the test targets.
struct MetricsRow {
  std::string variant;
  int horizon = 1;
  double rmse = 0.0;
  double rmse_pct = 0.0;
  double mae = 0.0;
  double mae_pct = 0.0;
  double r2 = 0.0;
  int n_test = 0;
  int n_train = 0;
  std::int64_t parameter_count = 0;
  std::vector<std::string> features;
  Cadence cadence = Cadence::monthly;
  std::uint64_t seed = 0;
  int best_epoch = 0;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  /// (variant, horizon) ascending.
  void sort();
};

inline constexpr std::string_view kPercentBasis = "100*metric/mean(|actual|)";

/// Nested variant -> horizon -> metrics.
std::string to_json(const MetricsReport& report);
/// One row per variant-horizon cell.
std::string to_csv(const MetricsReport& report);
/// R^2 against lead time, one polyline per variant.
std::string r2_plot_svg(const MetricsReport& report, std::string_view title);

struct Variant {
  std::string name;
  std::vector<std::string> features;
};

struct ExperimentConfig {
  std::string target = "Sea Ice Extent";
  Date train_end{std::chrono::year{2013}, std::chrono::December, std::chrono::day{31}};
  double val_fraction = 0.1;
  Architecture arch;  // input_size is set per variant
  TrainConfig train;
  int steps_per_horizon = 1;  // cadence steps per reported lead-time unit
};

/// Chronological split, with z-score statistics fit on the training rows and
/// applied to all three partitions.
struct PreparedData {
  TimeSeriesFrame train;
  std::optional<TimeSeriesFrame> validation;
  TimeSeriesFrame test;
  NormalizationParams normalization;
};

PreparedData prepare_splits(const TimeSeriesFrame& imputed, Date train_end, double val_fraction);

/// Stable per-cell seed derived from the run seed, variant name and horizon.
std::uint64_t cell_seed(std::uint64_t seed, std::string_view variant, int horizon);

struct TrainedCell {
  Checkpoint checkpoint;
  TrainHistory history;
  int n_train = 0;
};

TrainedCell train_cell(const PreparedData& data, const Variant& variant, int horizon,
                       const ExperimentConfig& config);

/// Predicts the test partition and scores it in physical units.
MetricsRow evaluate_cell(const Checkpoint& checkpoint, const PreparedData& data);

/// Every variant x horizon: split, window, train, evaluate.
MetricsReport run_experiment(const TimeSeriesFrame& imputed, std::span<const Variant> variants,
                             std::span<const int> horizons, const ExperimentConfig& config);

}  // namespace causalcast
