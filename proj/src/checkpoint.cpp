#include "causalcast/checkpoint.hpp"

#include <json.hpp>

#include "causalcast/error.hpp"
#include "text_util.hpp"

namespace causalcast {

namespace {

using json = nlohmann::ordered_json;

json norm_json(const NormalizationParams& p) {
  json j;
  j["names"] = p.names;
  j["mean"] = std::vector<double>(p.mean.data(), p.mean.data() + p.mean.size());
  j["stddev"] = std::vector<double>(p.stddev.data(), p.stddev.data() + p.stddev.size());
  return j;
}

NormalizationParams norm_from(const json& j) {
  NormalizationParams p;
  p.names = j.at("names").get<std::vector<std::string>>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto sd = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != p.names.size() || sd.size() != p.names.size()) {
    fail(ErrorKind::data, "normalization parameter arrays have inconsistent lengths");
  }
  p.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  p.stddev = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  return p;
}

}  // namespace

std::string to_json(const Checkpoint& ck) {
  json j;
  j["format"] = "causalcast-checkpoint";
  j["version"] = kCheckpointVersion;
  j["variant"] = ck.variant;
  j["target"] = ck.target;
  j["features"] = ck.features;
  j["cadence"] = to_string(ck.cadence);
  j["horizon"] = ck.horizon;
  j["horizon_steps"] = ck.horizon_steps;
  const auto& a = ck.model.arch;
  j["architecture"] = {{"input_size", a.input_size}, {"gru_units", a.gru_units},
                       {"lstm_units", a.lstm_units}, {"dense_units", a.dense_units},
                       {"dropout", a.dropout},       {"lookback", a.lookback}};
  j["normalization"] = norm_json(ck.normalization);
  json params = json::object();
  auto copy = ck.model.params;
  for (const auto& t : copy.tensors()) {
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c)
        row_major.push_back(t.data()[c * t.rows() + r]);
    params[std::string(t.name)] = {{"shape", {t.rows(), t.cols()}}, {"data", row_major}};
  }
  j["parameters"] = std::move(params);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    if (j.at("format") != "causalcast-checkpoint") fail(ErrorKind::data, "not a causalcast checkpoint");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      fail(ErrorKind::data, "unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.variant = j.value("variant", std::string());
    ck.target = j.at("target").get<std::string>();
    ck.features = j.at("features").get<std::vector<std::string>>();
    ck.cadence = parse_cadence(j.at("cadence").get<std::string>());
    ck.horizon = j.at("horizon").get<int>();
    ck.horizon_steps = j.at("horizon_steps").get<int>();
    const auto& aj = j.at("architecture");
    Architecture a;
    a.input_size = aj.at("input_size").get<int>();
    a.gru_units = aj.at("gru_units").get<int>();
    a.lstm_units = aj.at("lstm_units").get<int>();
    a.dense_units = aj.at("dense_units").get<int>();
    a.dropout = aj.at("dropout").get<double>();
    a.lookback = aj.at("lookback").get<int>();
    if (static_cast<int>(ck.features.size()) != a.input_size) {
      fail(ErrorKind::data, "checkpoint feature list does not match input_size");
    }
    ck.model = ForecastModel::zeros(a);
    ck.normalization = norm_from(j.at("normalization"));
    const auto& pj = j.at("parameters");
    for (const auto& t : ck.model.params.tensors()) {
      const auto& entry = pj.at(std::string(t.name));
      const auto shape = entry.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = entry.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols() ||
          static_cast<Eigen::Index>(data.size()) != t.size()) {
        fail(ErrorKind::data, "checkpoint tensor " + std::string(t.name) + " has the wrong shape");
      }
      for (Eigen::Index r = 0; r < t.rows(); ++r)
        for (Eigen::Index c = 0; c < t.cols(); ++c)
          t.data()[c * t.rows() + r] = data[static_cast<std::size_t>(r * t.cols() + c)];
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  detail::write_file(path, to_json(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::data, "checkpoint not found: " + path.string());
  try {
    return checkpoint_from_json(detail::read_file(path));
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

std::string normalization_to_json(const NormalizationParams& params) {
  return norm_json(params).dump(2) + "\n";
}

NormalizationParams normalization_from_json(std::string_view text) {
  try {
    return norm_from(json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("malformed normalization parameters: ") + e.what());
  }
}

}  // namespace causalcast
