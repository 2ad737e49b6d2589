#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "causalcast/graph.hpp"
#include "causalcast/metrics.hpp"
#include "causalcast/nn.hpp"
#include "causalcast/pcmci.hpp"
#include "causalcast/synth.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

/// The eleven sea-ice variables with their units and plausible ranges.
std::vector<VariableMeta> default_schema();

/// Expands "SIE", "SST" and "SSS" to the full default-schema names.
std::string expand_alias(std::string_view name);

enum class DiscoveryMethod { mvgc, pcmciplus };
const char* to_string(DiscoveryMethod m) noexcept;  // "mvgc" / "pcmci+"
const char* file_tag(DiscoveryMethod m) noexcept;   // "mvgc" / "pcmciplus"
DiscoveryMethod parse_method(std::string_view text);

struct DiscoveryConfig {
  std::vector<DiscoveryMethod> methods{DiscoveryMethod::mvgc, DiscoveryMethod::pcmciplus};
  double alpha = 0.05;
  Correction correction = Correction::benjamini_hochberg;
  double alpha_pc = 0.2;
  double alpha_mci = 0.01;
  std::optional<int> max_conds;
  bool contemporaneous = true;
  std::optional<int> gc_order;  // defaults to tau_max
};

/// Where a variant takes its inputs from.
struct FeatureSource {
  enum class Kind { all, discovered, list } kind = Kind::all;
  DiscoveryMethod method = DiscoveryMethod::mvgc;  // when discovered
  std::vector<std::string> names;                  // when list
};

struct VariantConfig {
  std::string name;
  std::string dataset;        // "daily" or "monthly"
  FeatureSource features;
  std::string features_from;  // dataset whose discovery output is used
};

struct PipelineConfig {
  std::optional<std::filesystem::path> daily_path;
  std::optional<std::filesystem::path> monthly_path;
  bool aggregate_monthly = false;  // derive the monthly frame from the daily one
  std::vector<VariableMeta> schema = default_schema();
  std::string target = "Sea Ice Extent";
  int tau_max = 21;
  DiscoveryConfig discovery;
  Architecture arch;
  TrainConfig train;
  Date train_end{std::chrono::year{2013}, std::chrono::December, std::chrono::day{31}};
  double val_fraction = 0.1;
  std::vector<int> horizons{1, 2, 3, 4, 5, 6};
  bool allow_any_horizon = false;
  int daily_steps_per_month = 30;
  std::vector<VariantConfig> variants;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir = "out";
  std::optional<nlohmann::json> synth;
  int synth_length = 1000;

  /// Names of configured datasets, daily first.
  std::vector<std::string> datasets() const;

  /// Checks every cross-reference; throws Error(config).
  void validate() const;

  /// Relative paths resolve against `base_dir`. Missing keys keep defaults;
  /// unknown keys are rejected.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);
};

/// Default variants for the configured datasets: vanilla, GC and PCMCI+ per
/// dataset, plus daily-discovered PCMCI+ features on the monthly frame when
/// both cadences are present.
std::vector<VariantConfig> default_variants(const PipelineConfig& config);

using LogSink = std::function<void(std::string_view)>;

/// Subcommands of the end-to-end pipeline. Each reads its inputs from the
/// configured files or from earlier stages' outputs under output_dir.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, LogSink log = {});

  const PipelineConfig& config() const noexcept { return config_; }
  void set_seed(std::uint64_t seed);
  void set_output_dir(std::filesystem::path dir);

  void preprocess();
  void discover();
  /// All variants when `variant` is empty; otherwise those with that name.
  void train(const std::optional<std::string>& variant = std::nullopt);
  void evaluate();
  void forecast(const std::optional<std::string>& variant = std::nullopt);
  void synth();
  /// preprocess, discover, train, evaluate.
  void run_all();

  /// Dispatch by subcommand name.
  void run(std::string_view command, const std::optional<std::string>& variant = std::nullopt);

  /// Imputed physical-unit frame for a dataset.
  TimeSeriesFrame load_dataset(const std::string& dataset) const;
  std::vector<std::string> resolve_features(const VariantConfig& variant) const;

  std::filesystem::path checkpoint_path(const VariantConfig& variant, int horizon) const;

 private:
  TimeSeriesFrame read_raw(const std::string& dataset) const;
  ExperimentConfig experiment_config(const std::string& dataset) const;
  std::vector<const VariantConfig*> select_variants(const std::optional<std::string>& name) const;
  void log(const std::string& line) const;

  PipelineConfig config_;
  LogSink log_;
};

}  // namespace causalcast
