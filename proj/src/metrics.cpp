#include "causalcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "causalcast/error.hpp"
#include "text_util.hpp"

namespace causalcast {

namespace {

void check_pair(std::span<const double> a, std::span<const double> p) {
  if (a.size() != p.size()) fail(ErrorKind::invalid_argument, "metric inputs differ in length");
  if (a.empty()) fail(ErrorKind::invalid_argument, "metric inputs are empty");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

double rmse(std::span<const double> a, std::span<const double> p) {
  check_pair(a, p);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - p[i]) * (a[i] - p[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

double mae(std::span<const double> a, std::span<const double> p) {
  check_pair(a, p);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - p[i]);
  return s / static_cast<double>(a.size());
}

double r_squared(std::span<const double> a, std::span<const double> p) {
  check_pair(a, p);
  if (a.size() < 2) fail(ErrorKind::invalid_argument, "r_squared needs at least two samples");
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ss_tot += (a[i] - mean) * (a[i] - mean);
    ss_res += (a[i] - p[i]) * (a[i] - p[i]);
  }
  if (ss_tot == 0.0) fail(ErrorKind::data, "r_squared undefined for constant actual values");
  return 1.0 - ss_res / ss_tot;
}

void MetricsReport::sort() {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.variant, a.horizon) < std::tie(b.variant, b.horizon);
  });
}

std::string to_json(const MetricsReport& report) {
  nlohmann::ordered_json root;
  root["percent_basis"] = kPercentBasis;
  nlohmann::ordered_json variants = nlohmann::ordered_json::object();
  for (const auto& r : report.rows) {
    auto& v = variants[r.variant];
    if (!v.contains("features")) {
      v["features"] = r.features;
      v["cadence"] = to_string(r.cadence);
      v["parameter_count"] = r.parameter_count;
      v["horizons"] = nlohmann::ordered_json::object();
    }
    v["horizons"][std::to_string(r.horizon)] = {
        {"rmse", r.rmse},         {"rmse_pct", r.rmse_pct}, {"mae", r.mae},
        {"mae_pct", r.mae_pct},   {"r2", r.r2},             {"n_test", r.n_test},
        {"n_train", r.n_train},   {"best_epoch", r.best_epoch}, {"seed", r.seed}};
  }
  root["variants"] = std::move(variants);
  return root.dump(2) + "\n";
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "variant,cadence,horizon,rmse,rmse_pct,mae,mae_pct,r2,n_test,n_train,parameter_count,"
         "best_epoch,seed,features\n";
  for (const auto& r : report.rows) {
    std::string feats;
    for (std::size_t i = 0; i < r.features.size(); ++i) feats += (i ? ";" : "") + r.features[i];
    out << detail::csv_field(r.variant) << ',' << to_string(r.cadence) << ',' << r.horizon << ','
        << detail::format_double(r.rmse) << ',' << detail::format_double(r.rmse_pct) << ','
        << detail::format_double(r.mae) << ',' << detail::format_double(r.mae_pct) << ','
        << detail::format_double(r.r2) << ',' << r.n_test << ',' << r.n_train << ','
        << r.parameter_count << ',' << r.best_epoch << ',' << r.seed << ','
        << detail::csv_field(feats) << '\n';
  }
  return out.str();
}

std::string r2_plot_svg(const MetricsReport& report, std::string_view title) {
  constexpr double width = 640, height = 400, left = 60, right = 160, top = 40, bottom = 50;
  std::map<std::string, std::vector<std::pair<int, double>>> series;
  int max_h = 1;
  double lo = 0.0;
  for (const auto& r : report.rows) {
    series[r.variant].emplace_back(r.horizon, r.r2);
    max_h = std::max(max_h, r.horizon);
    lo = std::min(lo, std::floor(r.r2 * 10.0) / 10.0);
  }
  const double hi = 1.0;
  const double pw = width - left - right, ph = height - top - bottom;
  auto sx = [&](double h) { return left + (max_h == 1 ? pw / 2 : (h - 1) / (max_h - 1) * pw); };
  auto sy = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
    << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\""
    << top + ph << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int h = 1; h <= max_h; ++h) {
    s << "<text x=\"" << fixed(sx(h), 2) << "\" y=\"" << top + ph + 18
      << "\" text-anchor=\"middle\">" << h << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    s << "<text x=\"" << left - 8 << "\" y=\"" << fixed(sy(v) + 4, 2) << "\" text-anchor=\"end\">"
      << fixed(v, 2) << "</text>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << fixed(sy(v), 2) << "\" x2=\"" << left + pw
      << "\" y2=\"" << fixed(sy(v), 2) << "\" stroke=\"#ddd\"/>\n";
  }
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
    << "\" text-anchor=\"middle\">Lead time</text>\n";
  s << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">R&#178;</text>\n";
  std::size_t idx = 0;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end());
    const char* color = palette[idx % (sizeof(palette) / sizeof(*palette))];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      s << (i ? " " : "") << fixed(sx(pts[i].first), 2) << ',' << fixed(sy(pts[i].second), 2);
    s << "\"/>\n";
    for (const auto& [h, v] : pts) {
      s << "<circle cx=\"" << fixed(sx(h), 2) << "\" cy=\"" << fixed(sy(v), 2)
        << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 14.0 + 18.0 * static_cast<double>(idx);
    s << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\">" << name << "</text>\n";
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

PreparedData prepare_splits(const TimeSeriesFrame& imputed, Date train_end, double val_fraction) {
  if (imputed.has_missing()) fail(ErrorKind::data, "prepare_splits requires an imputed frame");
  auto split = split_by_date(imputed, train_end, val_fraction);
  auto [train, params] = normalize(split.train);
  std::optional<TimeSeriesFrame> val;
  if (split.validation) val = normalize(*split.validation, params).first;
  auto test = normalize(split.test, params).first;
  return PreparedData{std::move(train), std::move(val), std::move(test), std::move(params)};
}

std::uint64_t cell_seed(std::uint64_t seed, std::string_view variant, int horizon) {
  auto h = detail::fnv1a(variant, detail::fnv1a(std::to_string(seed)));
  return detail::fnv1a("h" + std::to_string(horizon), h);
}

TrainedCell train_cell(const PreparedData& data, const Variant& variant, int horizon,
                       const ExperimentConfig& config) {
  if (horizon < 1) fail(ErrorKind::config, "horizon must be >= 1");
  if (variant.features.empty()) fail(ErrorKind::config, "variant '" + variant.name + "' has no features");
  for (const auto& f : variant.features) {
    if (!data.train.find(f)) {
      fail(ErrorKind::config, "variant '" + variant.name + "' uses unknown feature '" + f + "'");
    }
  }
  const int steps = horizon * config.steps_per_horizon;
  Architecture arch = config.arch;
  arch.input_size = static_cast<int>(variant.features.size());
  const auto train = make_windows(data.train, variant.features, config.target, arch.lookback, steps);
  SupervisedWindows val;
  if (data.validation &&
      static_cast<int>(data.validation->rows()) >= arch.lookback + steps) {
    val = make_windows(*data.validation, variant.features, config.target, arch.lookback, steps);
  }
  TrainConfig tc = config.train;
  tc.seed = cell_seed(config.train.seed, variant.name, horizon);
  auto model = ForecastModel::initialize(arch, tc.seed);
  auto history = fit(model, train, val, tc);

  TrainedCell cell;
  cell.checkpoint.variant = variant.name;
  cell.checkpoint.model = std::move(model);
  cell.checkpoint.features = variant.features;
  cell.checkpoint.target = config.target;
  cell.checkpoint.cadence = data.train.cadence();
  cell.checkpoint.horizon = horizon;
  cell.checkpoint.horizon_steps = steps;
  cell.checkpoint.normalization = data.normalization;
  cell.history = std::move(history);
  cell.n_train = static_cast<int>(train.size());
  return cell;
}

MetricsRow evaluate_cell(const Checkpoint& ck, const PreparedData& data) {
  const auto test = make_windows(data.test, ck.features, ck.target, ck.model.arch.lookback,
                                 ck.horizon_steps);
  const Eigen::VectorXd z = predict(ck.model, test);
  std::vector<double> actual(test.size()), predicted(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    actual[i] = ck.normalization.denormalize(ck.target, test.targets(k));
    predicted[i] = ck.normalization.denormalize(ck.target, z(k));
  }
  double scale = 0.0;
  for (double a : actual) scale += std::abs(a);
  scale /= static_cast<double>(actual.size());

  MetricsRow row;
  row.variant = ck.variant;
  row.horizon = ck.horizon;
  row.rmse = rmse(actual, predicted);
  row.mae = mae(actual, predicted);
  row.rmse_pct = scale > 0.0 ? 100.0 * row.rmse / scale : std::numeric_limits<double>::quiet_NaN();
  row.mae_pct = scale > 0.0 ? 100.0 * row.mae / scale : std::numeric_limits<double>::quiet_NaN();
  row.r2 = r_squared(actual, predicted);
  row.n_test = static_cast<int>(test.size());
  row.parameter_count = parameter_count(ck.model.arch);
  row.features = ck.features;
  row.cadence = ck.cadence;
  return row;
}

MetricsReport run_experiment(const TimeSeriesFrame& imputed, std::span<const Variant> variants,
                             std::span<const int> horizons, const ExperimentConfig& config) {
  if (!imputed.find(config.target)) {
    fail(ErrorKind::config, "target '" + config.target + "' not in frame");
  }
  for (const auto& v : variants) {
    if (std::find(v.features.begin(), v.features.end(), config.target) == v.features.end() &&
        v.features.empty()) {
      fail(ErrorKind::config, "variant '" + v.name + "' has no features");
    }
  }
  const auto data = prepare_splits(imputed, config.train_end, config.val_fraction);
  MetricsReport report;
  for (const auto& v : variants) {
    for (int h : horizons) {
      const auto cell = train_cell(data, v, h, config);
      auto row = evaluate_cell(cell.checkpoint, data);
      row.n_train = cell.n_train;
      row.best_epoch = cell.history.best_epoch;
      row.seed = cell_seed(config.train.seed, v.name, h);
      report.rows.push_back(std::move(row));
    }
  }
  report.sort();
  return report;
}

}  // namespace causalcast
