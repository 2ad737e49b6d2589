#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "causalcast/nn.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to reload a forecaster and predict bit-identically.
struct Checkpoint {
  std::string variant;
  ForecastModel model;
  std::vector<std::string> features;
  std::string target;
  Cadence cadence = Cadence::monthly;
  int horizon = 1;        // lead time in months (reporting unit)
  int horizon_steps = 1;  // lead time in cadence steps
  NormalizationParams normalization;
};

/// JSON container; parameter arrays are row-major and doubles are written in
/// shortest round-trip form.
std::string to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string normalization_to_json(const NormalizationParams& params);
NormalizationParams normalization_from_json(std::string_view text);

}  // namespace causalcast
