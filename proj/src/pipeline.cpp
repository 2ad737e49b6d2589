#include "causalcast/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "causalcast/checkpoint.hpp"
#include "causalcast/error.hpp"
#include "causalcast/var.hpp"
#include "text_util.hpp"

namespace causalcast {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<VariableMeta> default_schema() {
  return {
      {"Surface Pressure", "hPa", ValueRange{400, 1100}},
      {"Wind Velocity", "m/s", ValueRange{0, 40}},
      {"Specific Humidity", "kg/kg", ValueRange{0, 0.1}},
      {"Air Temperature", "K", ValueRange{200, 350}},
      {"Shortwave Radiation", "W/m2", ValueRange{0, 1500}},
      {"Longwave Radiation", "W/m2", ValueRange{0, 700}},
      {"Rainfall", "mm/day", ValueRange{0, 800}},
      {"Snowfall", "mm/day", ValueRange{0, 200}},
      {"Sea Surface Temperature", "K", ValueRange{200, 350}},
      {"Sea Surface Salinity", "psu", ValueRange{0, 50}},
      {"Sea Ice Extent", "million km2", ValueRange{3.34, 16.63}},
  };
}

std::string expand_alias(std::string_view name) {
  if (name == "SIE") return "Sea Ice Extent";
  if (name == "SST") return "Sea Surface Temperature";
  if (name == "SSS") return "Sea Surface Salinity";
  return std::string(name);
}

const char* to_string(DiscoveryMethod m) noexcept {
  return m == DiscoveryMethod::mvgc ? "mvgc" : "pcmci+";
}

const char* file_tag(DiscoveryMethod m) noexcept {
  return m == DiscoveryMethod::mvgc ? "mvgc" : "pcmciplus";
}

DiscoveryMethod parse_method(std::string_view text) {
  if (text == "mvgc" || text == "gc") return DiscoveryMethod::mvgc;
  if (text == "pcmci+" || text == "pcmciplus") return DiscoveryMethod::pcmciplus;
  fail(ErrorKind::config, "unknown discovery method '" + std::string(text) + "'");
}

namespace {

void check_keys(const json& j, std::string_view section,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(ErrorKind::config, "'" + std::string(section) + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorKind::config, "unknown key '" + key + "' in " + std::string(section));
    }
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

VariableMeta schema_entry(const json& j) {
  check_keys(j, "schema entry", {"name", "unit", "range"});
  VariableMeta m;
  m.name = j.at("name").get<std::string>();
  m.unit = j.value("unit", std::string());
  if (j.contains("range") && !j["range"].is_null()) {
    const auto r = j["range"].get<std::vector<double>>();
    if (r.size() != 2 || !(r[0] <= r[1])) {
      fail(ErrorKind::config, "range of '" + m.name + "' must be [lo, hi] with lo <= hi");
    }
    m.valid_range = ValueRange{r[0], r[1]};
  }
  return m;
}

FeatureSource feature_source(const json& j) {
  FeatureSource s;
  if (j.is_array()) {
    s.kind = FeatureSource::Kind::list;
    for (const auto& n : j) s.names.push_back(expand_alias(n.get<std::string>()));
    return s;
  }
  const auto text = j.get<std::string>();
  if (text == "all") {
    s.kind = FeatureSource::Kind::all;
  } else {
    s.kind = FeatureSource::Kind::discovered;
    s.method = parse_method(text);
  }
  return s;
}

json history_json(const TrainHistory& h, int n_train) {
  json j;
  j["best_epoch"] = h.best_epoch;
  j["early_stopped"] = h.early_stopped;
  j["n_train"] = n_train;
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    r["val_loss"] = std::isfinite(e.val_loss) ? json(e.val_loss) : json(nullptr);
    epochs.push_back(std::move(r));
  }
  j["epochs"] = std::move(epochs);
  return j;
}

std::string join(const std::vector<std::string>& names, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += sep;
    out += names[i];
  }
  return out;
}

std::string variant_label(const VariantConfig& v) { return v.name + "@" + v.dataset; }

}  // namespace

std::vector<std::string> PipelineConfig::datasets() const {
  std::vector<std::string> out;
  if (daily_path) out.emplace_back("daily");
  if (monthly_path || (aggregate_monthly && daily_path)) out.emplace_back("monthly");
  return out;
}

std::vector<VariantConfig> default_variants(const PipelineConfig& config) {
  std::vector<VariantConfig> out;
  const auto ds = config.datasets();
  auto has = [&](DiscoveryMethod m) {
    return std::find(config.discovery.methods.begin(), config.discovery.methods.end(), m) !=
           config.discovery.methods.end();
  };
  for (const auto& d : ds) {
    out.push_back({"DL_vanilla", d, FeatureSource{}, d});
    if (has(DiscoveryMethod::mvgc)) {
      out.push_back({"DL_GC", d, FeatureSource{FeatureSource::Kind::discovered, DiscoveryMethod::mvgc, {}}, d});
    }
    if (has(DiscoveryMethod::pcmciplus)) {
      out.push_back({"DL_PCMCI+", d,
                     FeatureSource{FeatureSource::Kind::discovered, DiscoveryMethod::pcmciplus, {}}, d});
    }
  }
  if (ds.size() == 2 && has(DiscoveryMethod::pcmciplus)) {
    out.push_back({"DL_DPCMCI+", "monthly",
                   FeatureSource{FeatureSource::Kind::discovered, DiscoveryMethod::pcmciplus, {}},
                   "daily"});
  }
  return out;
}

void PipelineConfig::validate() const {
  if (tau_max < 0) fail(ErrorKind::config, "tau_max must be >= 0");
  if (discovery.gc_order && *discovery.gc_order < 1) fail(ErrorKind::config, "gc_order must be >= 1");
  if (discovery.methods.empty()) fail(ErrorKind::config, "discovery.methods is empty");
  for (double a : {discovery.alpha, discovery.alpha_pc, discovery.alpha_mci}) {
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorKind::config, "significance levels must lie in (0, 1]");
  }
  if (discovery.max_conds && *discovery.max_conds < 0) fail(ErrorKind::config, "max_conds must be >= 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) fail(ErrorKind::config, "val_fraction must lie in [0, 1)");
  if (daily_steps_per_month < 1) fail(ErrorKind::config, "daily_steps_per_month must be >= 1");
  if (horizons.empty()) fail(ErrorKind::config, "horizons is empty");
  std::set<int> seen_h;
  for (int h : horizons) {
    if (h < 1) fail(ErrorKind::config, "horizons must be >= 1");
    if (!allow_any_horizon && h > 6) {
      fail(ErrorKind::config, "horizon " + std::to_string(h) + " outside 1..6 (set allow_any_horizon to override)");
    }
    if (!seen_h.insert(h).second) fail(ErrorKind::config, "duplicate horizon " + std::to_string(h));
  }
  Architecture a = arch;
  a.input_size = 1;
  a.validate();
  train.validate();
  if (synth_length < 1) fail(ErrorKind::config, "synth.n must be >= 1");
  if (!schema.empty()) {
    if (std::none_of(schema.begin(), schema.end(), [&](const VariableMeta& m) { return m.name == target; })) {
      fail(ErrorKind::config, "target '" + target + "' is not in the schema");
    }
  }

  const auto ds = datasets();
  auto configured = [&](const std::string& d) { return std::find(ds.begin(), ds.end(), d) != ds.end(); };
  std::set<std::pair<std::string, std::string>> ids;
  for (const auto& v : variants) {
    if (v.name.empty() || v.name.find('/') != std::string::npos || v.name.find('@') != std::string::npos) {
      fail(ErrorKind::config, "invalid variant name '" + v.name + "'");
    }
    if (!configured(v.dataset)) {
      fail(ErrorKind::config, "variant '" + v.name + "' uses dataset '" + v.dataset + "' which is not configured");
    }
    if (!ids.emplace(v.name, v.dataset).second) {
      fail(ErrorKind::config, "variant '" + variant_label(v) + "' is defined twice");
    }
    switch (v.features.kind) {
      case FeatureSource::Kind::all:
        break;
      case FeatureSource::Kind::discovered:
        if (!configured(v.features_from)) {
          fail(ErrorKind::config, "variant '" + v.name + "' takes features from unconfigured dataset '" +
                                      v.features_from + "'");
        }
        if (std::find(discovery.methods.begin(), discovery.methods.end(), v.features.method) ==
            discovery.methods.end()) {
          fail(ErrorKind::config, "variant '" + v.name + "' needs discovery method '" +
                                      to_string(v.features.method) + "' which is not enabled");
        }
        break;
      case FeatureSource::Kind::list: {
        if (v.features.names.empty()) fail(ErrorKind::config, "variant '" + v.name + "' has an empty feature list");
        if (!schema.empty()) {
          for (const auto& n : v.features.names) {
            if (std::none_of(schema.begin(), schema.end(), [&](const VariableMeta& m) { return m.name == n; })) {
              fail(ErrorKind::config, "variant '" + v.name + "' uses unknown feature '" + n + "'");
            }
          }
        }
        break;
      }
    }
  }
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  try {
    check_keys(j, "config",
               {"data", "schema", "target", "tau_max", "discovery", "model", "train", "split", "horizons",
                "allow_any_horizon", "daily_steps_per_month", "variants", "seed", "output_dir", "synth"});
    if (j.contains("data")) {
      const auto& d = j["data"];
      check_keys(d, "data", {"daily", "monthly", "aggregate_monthly"});
      if (d.contains("daily")) c.daily_path = resolve(base_dir, d["daily"].get<std::string>());
      if (d.contains("monthly")) c.monthly_path = resolve(base_dir, d["monthly"].get<std::string>());
      c.aggregate_monthly = d.value("aggregate_monthly", false);
    }
    if (j.contains("schema")) {
      if (j["schema"].is_string()) {
        if (j["schema"].get<std::string>() != "infer") {
          fail(ErrorKind::config, "schema must be a list of variables or \"infer\"");
        }
        c.schema.clear();
      } else {
        c.schema.clear();
        for (const auto& e : j["schema"]) c.schema.push_back(schema_entry(e));
      }
    }
    if (j.contains("target")) c.target = expand_alias(j["target"].get<std::string>());
    c.tau_max = j.value("tau_max", c.tau_max);
    if (j.contains("discovery")) {
      const auto& d = j["discovery"];
      check_keys(d, "discovery",
                 {"methods", "alpha", "correction", "alpha_pc", "alpha_mci", "max_conds", "contemporaneous",
                  "gc_order"});
      if (d.contains("methods")) {
        c.discovery.methods.clear();
        for (const auto& m : d["methods"]) {
          const auto method = parse_method(m.get<std::string>());
          if (std::find(c.discovery.methods.begin(), c.discovery.methods.end(), method) ==
              c.discovery.methods.end()) {
            c.discovery.methods.push_back(method);
          }
        }
      }
      c.discovery.alpha = d.value("alpha", c.discovery.alpha);
      if (d.contains("correction")) c.discovery.correction = parse_correction(d["correction"].get<std::string>());
      c.discovery.alpha_pc = d.value("alpha_pc", c.discovery.alpha_pc);
      c.discovery.alpha_mci = d.value("alpha_mci", c.discovery.alpha_mci);
      if (d.contains("max_conds") && !d["max_conds"].is_null()) c.discovery.max_conds = d["max_conds"].get<int>();
      c.discovery.contemporaneous = d.value("contemporaneous", c.discovery.contemporaneous);
      if (d.contains("gc_order") && !d["gc_order"].is_null()) c.discovery.gc_order = d["gc_order"].get<int>();
    }
    if (j.contains("model")) {
      const auto& m = j["model"];
      check_keys(m, "model", {"gru_units", "lstm_units", "dense_units", "dropout", "lookback"});
      c.arch.gru_units = m.value("gru_units", c.arch.gru_units);
      c.arch.lstm_units = m.value("lstm_units", c.arch.lstm_units);
      c.arch.dense_units = m.value("dense_units", c.arch.dense_units);
      c.arch.dropout = m.value("dropout", c.arch.dropout);
      c.arch.lookback = m.value("lookback", c.arch.lookback);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      check_keys(t, "train", {"batch_size", "max_epochs", "patience", "min_delta", "learning_rate"});
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
      c.train.patience = t.value("patience", c.train.patience);
      c.train.min_delta = t.value("min_delta", c.train.min_delta);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      check_keys(s, "split", {"train_end", "val_fraction"});
      if (s.contains("train_end")) c.train_end = parse_date(s["train_end"].get<std::string>());
      c.val_fraction = s.value("val_fraction", c.val_fraction);
    }
    if (j.contains("horizons")) c.horizons = j["horizons"].get<std::vector<int>>();
    c.allow_any_horizon = j.value("allow_any_horizon", false);
    c.daily_steps_per_month = j.value("daily_steps_per_month", c.daily_steps_per_month);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    else c.output_dir = base_dir / "out";
    if (j.contains("synth")) {
      c.synth = j["synth"];
      c.synth_length = j["synth"].value("n", c.synth_length);
      scm_from_json(*c.synth).validate();
    }
    if (j.contains("variants")) {
      for (const auto& v : j["variants"]) {
        check_keys(v, "variant", {"name", "dataset", "features", "features_from"});
        VariantConfig vc;
        vc.name = v.at("name").get<std::string>();
        vc.dataset = v.at("dataset").get<std::string>();
        vc.features = feature_source(v.at("features"));
        vc.features_from = v.value("features_from", vc.dataset);
        c.variants.push_back(std::move(vc));
      }
    } else {
      c.variants = default_variants(c);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("invalid configuration: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config) throw;
    fail(ErrorKind::config, e.what());
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::config, "config file not found: " + path.string());
  const auto text = detail::read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

Pipeline::Pipeline(PipelineConfig config, LogSink log) : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
}

void Pipeline::set_seed(std::uint64_t seed) {
  config_.seed = seed;
  if (config_.synth) (*config_.synth)["seed"] = seed;
}

void Pipeline::set_output_dir(fs::path dir) { config_.output_dir = std::move(dir); }

void Pipeline::log(const std::string& line) const {
  if (log_) log_(line);
}

TimeSeriesFrame Pipeline::read_raw(const std::string& dataset) const {
  if (dataset == "daily") {
    if (!config_.daily_path) fail(ErrorKind::config, "no daily data configured");
    if (!fs::exists(*config_.daily_path)) {
      fail(ErrorKind::data, "input file not found: " + config_.daily_path->string());
    }
    return load_csv(*config_.daily_path, config_.schema, Cadence::daily);
  }
  if (dataset == "monthly") {
    if (config_.monthly_path) {
      if (!fs::exists(*config_.monthly_path)) {
        fail(ErrorKind::data, "input file not found: " + config_.monthly_path->string());
      }
      return load_csv(*config_.monthly_path, config_.schema, Cadence::monthly);
    }
    if (config_.aggregate_monthly) return aggregate_to_monthly(read_raw("daily"));
    fail(ErrorKind::config, "no monthly data configured");
  }
  fail(ErrorKind::config, "unknown dataset '" + dataset + "'");
}

TimeSeriesFrame Pipeline::load_dataset(const std::string& dataset) const {
  const auto pre = config_.output_dir / "preprocessed" / (dataset + ".csv");
  if (fs::exists(pre)) {
    return load_csv(pre, config_.schema, dataset == "daily" ? Cadence::daily : Cadence::monthly);
  }
  return impute_linear(read_raw(dataset));
}

ExperimentConfig Pipeline::experiment_config(const std::string& dataset) const {
  ExperimentConfig e;
  e.target = config_.target;
  e.train_end = config_.train_end;
  e.val_fraction = config_.val_fraction;
  e.arch = config_.arch;
  e.train = config_.train;
  e.train.seed = config_.seed;
  e.steps_per_horizon = dataset == "daily" ? config_.daily_steps_per_month : 1;
  return e;
}

std::vector<std::string> Pipeline::resolve_features(const VariantConfig& v) const {
  const auto frame_names = [&] {
    const auto pre = config_.output_dir / "preprocessed" / (v.dataset + ".csv");
    if (!config_.schema.empty() && !fs::exists(pre)) {
      std::vector<std::string> names;
      for (const auto& m : config_.schema) names.push_back(m.name);
      return names;
    }
    return load_dataset(v.dataset).variable_names();
  }();
  std::vector<std::string> wanted;
  switch (v.features.kind) {
    case FeatureSource::Kind::all:
      for (const auto& n : frame_names)
        if (n != config_.target) wanted.push_back(n);
      break;
    case FeatureSource::Kind::list:
      wanted = v.features.names;
      break;
    case FeatureSource::Kind::discovered: {
      const auto path =
          config_.output_dir / "features" / (v.features_from + "_" + file_tag(v.features.method) + ".txt");
      if (!fs::exists(path)) {
        fail(ErrorKind::config, "feature list " + path.string() + " for variant '" + variant_label(v) +
                                    "' not found; run discover first");
      }
      std::istringstream in(detail::read_file(path));
      std::string line;
      while (std::getline(in, line)) {
        const auto t = detail::trim(line);
        if (!t.empty()) wanted.emplace_back(t);
      }
      break;
    }
  }
  for (const auto& w : wanted) {
    if (std::find(frame_names.begin(), frame_names.end(), w) == frame_names.end()) {
      fail(ErrorKind::config, "variant '" + variant_label(v) + "' uses feature '" + w +
                                  "' which is absent from the " + v.dataset + " frame");
    }
  }
  std::vector<std::string> ordered;
  for (const auto& n : frame_names)
    if (std::find(wanted.begin(), wanted.end(), n) != wanted.end()) ordered.push_back(n);
  if (ordered.empty()) fail(ErrorKind::config, "variant '" + variant_label(v) + "' has no features");
  return ordered;
}

fs::path Pipeline::checkpoint_path(const VariantConfig& v, int horizon) const {
  return config_.output_dir / "models" / v.dataset / v.name / ("h" + std::to_string(horizon) + ".json");
}

std::vector<const VariantConfig*> Pipeline::select_variants(const std::optional<std::string>& name) const {
  std::vector<const VariantConfig*> out;
  for (const auto& v : config_.variants) {
    if (!name || *name == v.name || *name == variant_label(v)) out.push_back(&v);
  }
  if (name && out.empty()) fail(ErrorKind::config, "unknown variant '" + *name + "'");
  if (out.empty()) fail(ErrorKind::config, "no variants configured");
  return out;
}

void Pipeline::preprocess() {
  const auto ds = config_.datasets();
  if (ds.empty()) fail(ErrorKind::config, "no datasets configured");
  for (const auto& d : ds) {
    const auto raw = read_raw(d);
    const auto missing = raw.missing().count();
    const auto imputed = impute_linear(raw);
    const auto data = prepare_splits(imputed, config_.train_end, config_.val_fraction);
    const auto dir = config_.output_dir / "preprocessed";
    write_csv(imputed, dir / (d + ".csv"));
    write_csv(normalize(imputed, data.normalization).first, dir / (d + "_normalized.csv"));
    detail::write_file(dir / (d + "_norm.json"), normalization_to_json(data.normalization));
    std::ostringstream msg;
    msg << d << ": " << imputed.rows() << " rows x " << imputed.cols() << " variables, " << missing
        << " missing cells imputed, " << format_date(imputed.timestamps().front()) << " .. "
        << format_date(imputed.timestamps().back()) << "; train " << data.train.rows() << ", validation "
        << (data.validation ? data.validation->rows() : 0) << ", test " << data.test.rows();
    log(msg.str());
  }
}

void Pipeline::discover() {
  const auto ds = config_.datasets();
  if (ds.empty()) fail(ErrorKind::config, "no datasets configured");
  for (const auto& d : ds) {
    const auto imputed = load_dataset(d);
    if (!imputed.find(config_.target)) {
      fail(ErrorKind::config, "target '" + config_.target + "' not in the " + d + " frame");
    }
    const auto data = prepare_splits(imputed, config_.train_end, config_.val_fraction);
    const auto history = split_by_date(imputed, config_.train_end, 0.0).train;
    const auto frame = normalize(history, data.normalization).first;
    for (auto method : config_.discovery.methods) {
      CausalGraph g;
      if (method == DiscoveryMethod::mvgc) {
        const int order = config_.discovery.gc_order.value_or(std::max(1, config_.tau_max));
        g = mvgc_graph(frame, order, config_.discovery.alpha, config_.discovery.correction);
      } else {
        PcmciOptions o;
        o.tau_max = config_.tau_max;
        o.alpha_pc = config_.discovery.alpha_pc;
        o.alpha_mci = config_.discovery.alpha_mci;
        o.max_conds = config_.discovery.max_conds;
        o.contemporaneous = config_.discovery.contemporaneous;
        g = pcmciplus_run(frame, o);
      }
      const std::string stem = d + "_" + file_tag(method);
      write_edge_list(g, config_.output_dir / "graphs" / (stem + ".csv"));
      detail::write_file(config_.output_dir / "graphs" / (stem + ".json"), to_adjacency_json(g));
      const auto features = feature_select(g, config_.target);
      std::string listing;
      for (const auto& f : features) listing += f + "\n";
      detail::write_file(config_.output_dir / "features" / (stem + ".txt"), listing);
      log(d + " " + to_string(method) + ": " + std::to_string(g.edges.size()) + " edges; features: " +
          join(features, ", "));
    }
  }
}

void Pipeline::train(const std::optional<std::string>& variant) {
  const auto selected = select_variants(variant);
  // Resolve every feature set before spending time on training.
  std::vector<std::vector<std::string>> features;
  for (const auto* v : selected) features.push_back(resolve_features(*v));

  std::map<std::string, PreparedData> prepared;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto& v = *selected[k];
    if (!prepared.count(v.dataset)) {
      prepared.emplace(v.dataset, prepare_splits(load_dataset(v.dataset), config_.train_end, config_.val_fraction));
    }
    const auto& data = prepared.at(v.dataset);
    const auto exp = experiment_config(v.dataset);
    json hist;
    hist["variant"] = v.name;
    hist["dataset"] = v.dataset;
    hist["features"] = features[k];
    hist["horizons"] = json::object();
    for (int h : config_.horizons) {
      const auto cell = train_cell(data, Variant{v.name, features[k]}, h, exp);
      save_checkpoint(cell.checkpoint, checkpoint_path(v, h));
      hist["horizons"][std::to_string(h)] = history_json(cell.history, cell.n_train);
      std::ostringstream msg;
      msg << "trained " << variant_label(v) << " h=" << h << ": " << cell.history.epochs.size()
          << " epochs, best epoch " << cell.history.best_epoch << ", " << features[k].size() << " features, "
          << parameter_count(cell.checkpoint.model.arch) << " parameters";
      log(msg.str());
    }
    detail::write_file(checkpoint_path(v, config_.horizons.front()).parent_path() / "history.json",
                       hist.dump(2) + "\n");
  }
}

void Pipeline::evaluate() {
  const auto selected = select_variants(std::nullopt);
  std::vector<std::string> absent;
  for (const auto* v : selected) {
    for (int h : config_.horizons) {
      if (!fs::exists(checkpoint_path(*v, h))) absent.push_back("(" + variant_label(*v) + ", h=" + std::to_string(h) + ")");
    }
  }
  if (!absent.empty()) fail(ErrorKind::data, "missing checkpoints: " + join(absent, " "));

  std::map<std::string, MetricsReport> reports;
  std::map<std::string, PreparedData> prepared;
  for (const auto* v : selected) {
    if (!prepared.count(v->dataset)) {
      prepared.emplace(v->dataset,
                       prepare_splits(load_dataset(v->dataset), config_.train_end, config_.val_fraction));
    }
    const auto& data = prepared.at(v->dataset);
    json hist;
    const auto hist_path = checkpoint_path(*v, config_.horizons.front()).parent_path() / "history.json";
    if (fs::exists(hist_path)) hist = json::parse(detail::read_file(hist_path), nullptr, false);
    for (int h : config_.horizons) {
      const auto ck = load_checkpoint(checkpoint_path(*v, h));
      if (ck.target != config_.target) {
        fail(ErrorKind::data, "checkpoint " + checkpoint_path(*v, h).string() + " predicts '" + ck.target +
                                  "', not '" + config_.target + "'");
      }
      auto row = evaluate_cell(ck, data);
      const int lookback = ck.model.arch.lookback;
      row.n_train = std::max(0, static_cast<int>(data.train.rows()) - lookback - ck.horizon_steps + 1);
      row.seed = cell_seed(config_.seed, v->name, h);
      const auto key = std::to_string(h);
      if (hist.is_object() && hist.contains("horizons") && hist["horizons"].contains(key)) {
        row.best_epoch = hist["horizons"][key].value("best_epoch", 0);
      }
      reports[v->dataset].rows.push_back(std::move(row));
    }
  }
  for (auto& [d, report] : reports) {
    report.sort();
    const auto dir = config_.output_dir / "reports";
    detail::write_file(dir / ("report_" + d + ".json"), to_json(report));
    detail::write_file(dir / ("report_" + d + ".csv"), to_csv(report));
    detail::write_file(dir / ("r2_" + d + ".svg"), r2_plot_svg(report, "R2 vs lead time (" + d + ")"));
    for (const auto& r : report.rows) {
      std::ostringstream msg;
      msg << d << " " << r.variant << " h=" << r.horizon << ": rmse " << detail::format_double(r.rmse) << " ("
          << detail::format_double(r.rmse_pct) << "%), mae " << detail::format_double(r.mae) << " ("
          << detail::format_double(r.mae_pct) << "%), r2 " << detail::format_double(r.r2);
      log(msg.str());
    }
  }
}

void Pipeline::forecast(const std::optional<std::string>& variant) {
  const auto selected = select_variants(variant);
  for (const auto* v : selected) {
    const auto imputed = load_dataset(v->dataset);
    std::ostringstream out;
    out << "horizon,steps,origin_date,target_date," << detail::csv_field(config_.target) << "\n";
    for (int h : config_.horizons) {
      const auto path = checkpoint_path(*v, h);
      if (!fs::exists(path)) {
        fail(ErrorKind::data, "missing checkpoint (" + variant_label(*v) + ", h=" + std::to_string(h) + ")");
      }
      const auto ck = load_checkpoint(path);
      const int lookback = ck.model.arch.lookback;
      if (static_cast<int>(imputed.rows()) < lookback) {
        fail(ErrorKind::data, "frame shorter than the lookback window");
      }
      Eigen::MatrixXd window(lookback, static_cast<Eigen::Index>(ck.features.size()));
      for (std::size_t k = 0; k < ck.features.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(imputed.index_of(ck.features[k]));
        const auto i = static_cast<Eigen::Index>(ck.normalization.index_of(ck.features[k]));
        window.col(static_cast<Eigen::Index>(k)) =
            (imputed.values().col(col).tail(lookback).array() - ck.normalization.mean(i)) /
            ck.normalization.stddev(i);
      }
      const double pred = ck.normalization.denormalize(ck.target, forward_one(ck.model, window));
      const auto origin = imputed.timestamps().back();
      out << h << ',' << ck.horizon_steps << ',' << format_date(origin) << ','
          << format_date(advance(origin, imputed.cadence(), ck.horizon_steps)) << ','
          << detail::format_double(pred) << '\n';
    }
    const auto file = config_.output_dir / "forecasts" / (v->dataset + "_" + v->name + ".csv");
    detail::write_file(file, out.str());
    log("wrote " + file.string());
  }
}

void Pipeline::synth() {
  if (!config_.synth) fail(ErrorKind::config, "no synth section in the configuration");
  json spec_json = *config_.synth;
  if (!spec_json.contains("seed")) spec_json["seed"] = config_.seed;
  const auto spec = scm_from_json(spec_json);
  const auto [frame, truth] = generate(spec, config_.synth_length);
  write_csv(frame, config_.output_dir / "synth" / "frame.csv");
  write_edge_list(truth, config_.output_dir / "synth" / "truth.csv");
  log("synth: " + std::to_string(frame.rows()) + " rows x " + std::to_string(frame.cols()) + " variables, " +
      std::to_string(truth.edges.size()) + " true edges");
}

void Pipeline::run_all() {
  preprocess();
  discover();
  train();
  evaluate();
}

void Pipeline::run(std::string_view command, const std::optional<std::string>& variant) {
  if (command == "preprocess") return preprocess();
  if (command == "discover") return discover();
  if (command == "train") return train(variant);
  if (command == "evaluate") return evaluate();
  if (command == "forecast") return forecast(variant);
  if (command == "synth") return synth();
  if (command == "run") return run_all();
  fail(ErrorKind::config, "unknown command '" + std::string(command) + "'");
}

}  // namespace causalcast
