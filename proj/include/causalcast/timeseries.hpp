#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace causalcast {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
Date parse_date(std::string_view text);
std::string format_date(Date date);

enum class Cadence { daily, monthly };

const char* to_string(Cadence cadence) noexcept;
Cadence parse_cadence(std::string_view text);

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const noexcept { return v >= lo && v <= hi; }
};

struct VariableMeta {
  std::string name;
  std::string unit;
  std::optional<ValueRange> valid_range;
};

using MissingMask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Timestamped multivariate series. Rows are time points, columns variables.
///
/// Immutable once constructed. The constructor enforces strictly increasing
/// timestamps at a uniform cadence, unique variable names, finite observed
/// values inside any declared valid range, and stores NaN in missing cells.
class TimeSeriesFrame {
 public:
  TimeSeriesFrame(std::vector<Date> timestamps, Cadence cadence,
                  std::vector<VariableMeta> variables, Eigen::MatrixXd values,
                  MissingMask missing);

  /// Missing cells are taken from NaN entries of `values`.
  TimeSeriesFrame(std::vector<Date> timestamps, Cadence cadence,
                  std::vector<VariableMeta> variables, Eigen::MatrixXd values);

  std::size_t rows() const noexcept { return timestamps_.size(); }
  std::size_t cols() const noexcept { return variables_.size(); }

  const std::vector<Date>& timestamps() const noexcept { return timestamps_; }
  Cadence cadence() const noexcept { return cadence_; }
  const std::vector<VariableMeta>& variables() const noexcept { return variables_; }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  const MissingMask& missing() const noexcept { return missing_; }

  std::vector<std::string> variable_names() const;
  bool has_missing() const noexcept { return missing_.any(); }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  /// Throws Error(data) when the variable does not exist.
  std::size_t index_of(std::string_view name) const;

  /// Rows [begin, end).
  TimeSeriesFrame slice_rows(std::size_t begin, std::size_t end) const;
  /// Columns in the order given.
  TimeSeriesFrame select(std::span<const std::string> names) const;

 private:
  std::vector<Date> timestamps_;
  Cadence cadence_;
  std::vector<VariableMeta> variables_;
  Eigen::MatrixXd values_;
  MissingMask missing_;
};

/// Reads `date,<var>,...` CSV. An empty schema accepts any variable columns
/// without range checks; otherwise the header must name exactly the schema
/// variables. Calendar gaps are filled with all-missing rows.
TimeSeriesFrame load_csv(const std::filesystem::path& path,
                         std::span<const VariableMeta> schema,
                         std::optional<Cadence> cadence = std::nullopt);

TimeSeriesFrame parse_csv(std::string_view text, std::span<const VariableMeta> schema,
                          std::optional<Cadence> cadence = std::nullopt,
                          std::string_view source_name = "<memory>");

std::string to_csv(const TimeSeriesFrame& frame);
void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path);

/// Interior gaps: linear interpolation between observed neighbours.
/// Leading/trailing gaps: nearest observed value.
TimeSeriesFrame impute_linear(const TimeSeriesFrame& frame);

struct NormalizationParams {
  std::vector<std::string> names;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  std::size_t index_of(std::string_view name) const;
  double denormalize(std::string_view name, double z) const;
};

/// z-score with population standard deviation. When `params` is empty the
/// statistics are estimated from `frame`.
std::pair<TimeSeriesFrame, NormalizationParams> normalize(
    const TimeSeriesFrame& frame,
    const std::optional<NormalizationParams>& params = std::nullopt);

TimeSeriesFrame denormalize(const TimeSeriesFrame& frame, const NormalizationParams& params);

TimeSeriesFrame aggregate_to_monthly(const TimeSeriesFrame& frame);

struct FrameSplit {
  TimeSeriesFrame train;
  std::optional<TimeSeriesFrame> validation;
  TimeSeriesFrame test;
};

/// test = rows after `train_end`; validation = the last
/// floor(val_fraction * rows<=train_end) rows up to `train_end`.
FrameSplit split_by_date(const TimeSeriesFrame& frame, Date train_end, double val_fraction);

struct SupervisedWindows {
  std::vector<Eigen::MatrixXd> inputs;  // each lookback x features
  Eigen::VectorXd targets;
  std::vector<Date> target_dates;
  std::vector<std::string> features;
  std::string target;
  int lookback = 0;
  int horizon = 0;

  std::size_t size() const noexcept { return inputs.size(); }
  bool empty() const noexcept { return inputs.empty(); }
};

/// Sample s reads rows [s, s+lookback) of `features` and labels it with
/// `target` at row s+lookback+horizon-1.
SupervisedWindows make_windows(const TimeSeriesFrame& frame,
                               std::span<const std::string> features,
                               std::string_view target, int lookback, int horizon);

/// Date `steps` cadence units after `date` (months keep the day, clamped).
Date advance(Date date, Cadence cadence, int steps);

}  // namespace causalcast
