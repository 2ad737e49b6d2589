#include "causalcast/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "causalcast/error.hpp"
#include "text_util.hpp"

namespace causalcast {

namespace {

using std::chrono::sys_days;

int month_index(Date d) {
  return static_cast<int>(d.year()) * 12 + static_cast<int>(static_cast<unsigned>(d.month())) - 1;
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "N/A" ||
         s == "NULL";
}

void check_cadence(const std::vector<Date>& ts, Cadence cadence) {
  for (std::size_t r = 1; r < ts.size(); ++r) {
    if (!(ts[r - 1] < ts[r])) {
      fail(ErrorKind::data, "timestamps not strictly increasing at row " + std::to_string(r) +
                                ": " + format_date(ts[r - 1]) + " then " + format_date(ts[r]));
    }
    const bool uniform = cadence == Cadence::daily
                             ? (sys_days(ts[r]) - sys_days(ts[r - 1])).count() == 1
                             : month_index(ts[r]) - month_index(ts[r - 1]) == 1;
    if (!uniform) {
      fail(ErrorKind::data, std::string("non-uniform ") + to_string(cadence) + " cadence between " +
                                format_date(ts[r - 1]) + " and " + format_date(ts[r]));
    }
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  text = detail::trim(text);
  auto bad = [&]() -> Date { fail(ErrorKind::data, "malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return bad();
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [&](std::string_view part, auto& out) {
    for (char c : part)
      if (c < '0' || c > '9') return false;
    return std::from_chars(part.data(), part.data() + part.size(), out).ec == std::errc{};
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d)) {
    return bad();
  }
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) return bad();
  return date;
}

std::string format_date(Date date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

const char* to_string(Cadence cadence) noexcept {
  return cadence == Cadence::daily ? "daily" : "monthly";
}

Cadence parse_cadence(std::string_view text) {
  if (text == "daily") return Cadence::daily;
  if (text == "monthly") return Cadence::monthly;
  fail(ErrorKind::config, "unknown cadence '" + std::string(text) + "'");
}

Date advance(Date date, Cadence cadence, int steps) {
  if (cadence == Cadence::daily) return Date{sys_days(date) + std::chrono::days{steps}};
  std::chrono::year_month ym{date.year(), date.month()};
  ym += std::chrono::months{steps};
  const auto last = std::chrono::year_month_day_last{ym.year(), std::chrono::month_day_last{ym.month()}};
  return Date{ym.year(), ym.month(), std::min(date.day(), last.day())};
}

// --- TimeSeriesFrame -------------------------------------------------------

TimeSeriesFrame::TimeSeriesFrame(std::vector<Date> timestamps, Cadence cadence,
                                 std::vector<VariableMeta> variables, Eigen::MatrixXd values,
                                 MissingMask missing)
    : timestamps_(std::move(timestamps)),
      cadence_(cadence),
      variables_(std::move(variables)),
      values_(std::move(values)),
      missing_(std::move(missing)) {
  if (timestamps_.empty()) fail(ErrorKind::data, "frame has no rows");
  if (variables_.empty()) fail(ErrorKind::data, "frame has no variables");
  const auto n = static_cast<Eigen::Index>(timestamps_.size());
  const auto v = static_cast<Eigen::Index>(variables_.size());
  if (values_.rows() != n || values_.cols() != v) {
    fail(ErrorKind::data, "values matrix is " + std::to_string(values_.rows()) + "x" +
                              std::to_string(values_.cols()) + ", expected " + std::to_string(n) +
                              "x" + std::to_string(v));
  }
  if (missing_.rows() != n || missing_.cols() != v) fail(ErrorKind::data, "missing mask shape mismatch");

  std::set<std::string_view> seen;
  for (const auto& meta : variables_) {
    if (meta.name.empty()) fail(ErrorKind::data, "empty variable name");
    if (!seen.insert(meta.name).second) fail(ErrorKind::data, "duplicate variable '" + meta.name + "'");
  }
  check_cadence(timestamps_, cadence_);

  for (Eigen::Index c = 0; c < v; ++c) {
    const auto& meta = variables_[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < n; ++r) {
      if (missing_(r, c)) {
        values_(r, c) = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double x = values_(r, c);
      if (!std::isfinite(x)) {
        fail(ErrorKind::data, "non-finite value for '" + meta.name + "' at " +
                                  format_date(timestamps_[static_cast<std::size_t>(r)]));
      }
      if (meta.valid_range && !meta.valid_range->contains(x)) {
        fail(ErrorKind::data, "value " + detail::format_double(x) + " of '" + meta.name + "' at " +
                                  format_date(timestamps_[static_cast<std::size_t>(r)]) +
                                  " outside valid range [" +
                                  detail::format_double(meta.valid_range->lo) + ", " +
                                  detail::format_double(meta.valid_range->hi) + "]");
      }
    }
  }
}

TimeSeriesFrame::TimeSeriesFrame(std::vector<Date> timestamps, Cadence cadence,
                                 std::vector<VariableMeta> variables, Eigen::MatrixXd values)
    : TimeSeriesFrame(std::move(timestamps), cadence, std::move(variables), values,
                      values.array().isNaN().matrix()) {}

std::vector<std::string> TimeSeriesFrame::variable_names() const {
  std::vector<std::string> names;
  names.reserve(variables_.size());
  for (const auto& v : variables_) names.push_back(v.name);
  return names;
}

std::optional<std::size_t> TimeSeriesFrame::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return i;
  return std::nullopt;
}

std::size_t TimeSeriesFrame::index_of(std::string_view name) const {
  if (auto idx = find(name)) return *idx;
  fail(ErrorKind::data, "unknown variable '" + std::string(name) + "'");
}

TimeSeriesFrame TimeSeriesFrame::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > rows()) {
    fail(ErrorKind::invalid_argument, "row slice [" + std::to_string(begin) + ", " +
                                          std::to_string(end) + ") invalid for " +
                                          std::to_string(rows()) + " rows");
  }
  const auto b = static_cast<Eigen::Index>(begin);
  const auto len = static_cast<Eigen::Index>(end - begin);
  return TimeSeriesFrame(std::vector<Date>(timestamps_.begin() + b, timestamps_.begin() + b + len),
                         cadence_, variables_, values_.middleRows(b, len),
                         missing_.middleRows(b, len));
}

TimeSeriesFrame TimeSeriesFrame::select(std::span<const std::string> names) const {
  std::vector<VariableMeta> vars;
  Eigen::MatrixXd vals(values_.rows(), static_cast<Eigen::Index>(names.size()));
  MissingMask mask(values_.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto c = static_cast<Eigen::Index>(index_of(names[k]));
    vars.push_back(variables_[static_cast<std::size_t>(c)]);
    vals.col(static_cast<Eigen::Index>(k)) = values_.col(c);
    mask.col(static_cast<Eigen::Index>(k)) = missing_.col(c);
  }
  return TimeSeriesFrame(timestamps_, cadence_, std::move(vars), std::move(vals), std::move(mask));
}

// --- CSV -------------------------------------------------------------------

TimeSeriesFrame parse_csv(std::string_view text, std::span<const VariableMeta> schema,
                          std::optional<Cadence> cadence, std::string_view source_name) {
  const std::string src(source_name);
  std::vector<std::string_view> lines;
  {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      lines.push_back(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }
  // Tolerate a UTF-8 BOM and trailing blank lines.
  if (!lines.empty() && lines[0].starts_with("\xEF\xBB\xBF")) lines[0].remove_prefix(3);
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) fail(ErrorKind::data, src + ": empty file");

  auto header = detail::split_csv_line(lines[0]);
  for (auto& h : header) h = std::string(detail::trim(h));
  if (header.empty() || header[0] != "date") {
    fail(ErrorKind::data, src + ":1: first column must be 'date'");
  }
  const std::size_t v = header.size() - 1;
  if (v == 0) fail(ErrorKind::data, src + ":1: no variable columns");

  std::vector<VariableMeta> vars(v);
  for (std::size_t c = 0; c < v; ++c) vars[c].name = header[c + 1];
  if (!schema.empty()) {
    std::set<std::string> header_names(header.begin() + 1, header.end());
    if (header_names.size() != v) fail(ErrorKind::data, src + ":1: duplicate column name");
    for (const auto& meta : schema) {
      if (!header_names.count(meta.name)) {
        fail(ErrorKind::data, src + ":1: schema variable '" + meta.name + "' missing from header");
      }
    }
    if (schema.size() != v) {
      for (const auto& name : header_names) {
        const bool known = std::any_of(schema.begin(), schema.end(),
                                       [&](const VariableMeta& m) { return m.name == name; });
        if (!known) fail(ErrorKind::data, src + ":1: column '" + name + "' not in schema");
      }
    }
    for (auto& var : vars) {
      var = *std::find_if(schema.begin(), schema.end(),
                          [&](const VariableMeta& m) { return m.name == var.name; });
    }
  }

  std::vector<Date> dates;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_of_row;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (detail::trim(lines[li]).empty()) continue;
    const auto fields = detail::split_csv_line(lines[li]);
    const std::string where = src + ":" + std::to_string(li + 1);
    if (fields.size() != header.size()) {
      fail(ErrorKind::data, where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size()));
    }
    Date d;
    try {
      d = parse_date(fields[0]);
    } catch (const Error& e) {
      fail(ErrorKind::data, where + ": " + e.what());
    }
    if (!dates.empty()) {
      if (d == dates.back()) fail(ErrorKind::data, where + ": duplicate timestamp " + format_date(d));
      if (d < dates.back()) {
        fail(ErrorKind::data, where + ": timestamp " + format_date(d) + " precedes " +
                                  format_date(dates.back()) + " (rows must be in date order)");
      }
    }
    std::vector<double> row(v);
    for (std::size_t c = 0; c < v; ++c) {
      const auto cell = detail::trim(fields[c + 1]);
      if (is_missing_token(cell)) {
        row[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double x = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(x)) {
        fail(ErrorKind::data, where + ": non-numeric value '" + std::string(cell) + "' for '" +
                                  vars[c].name + "'");
      }
      if (vars[c].valid_range && !vars[c].valid_range->contains(x)) {
        fail(ErrorKind::data, where + ": value " + std::string(cell) + " of '" + vars[c].name +
                                  "' (row " + std::to_string(dates.size() + 1) +
                                  ") outside valid range [" +
                                  detail::format_double(vars[c].valid_range->lo) + ", " +
                                  detail::format_double(vars[c].valid_range->hi) + "]");
      }
      row[c] = x;
    }
    dates.push_back(d);
    rows.push_back(std::move(row));
    line_of_row.push_back(li + 1);
  }
  if (dates.empty()) fail(ErrorKind::data, src + ": no data rows");

  Cadence cad = Cadence::daily;
  if (cadence) {
    cad = *cadence;
  } else if (dates.size() > 1) {
    long min_gap = std::numeric_limits<long>::max();
    for (std::size_t r = 1; r < dates.size(); ++r)
      min_gap = std::min<long>(min_gap, (sys_days(dates[r]) - sys_days(dates[r - 1])).count());
    cad = min_gap >= 28 ? Cadence::monthly : Cadence::daily;
  }

  // Regularize: one row per cadence step, gaps become all-missing rows.
  std::vector<Date> grid;
  std::vector<long> source_row;
  grid.push_back(dates[0]);
  source_row.push_back(0);
  for (std::size_t r = 1; r < dates.size(); ++r) {
    long steps = 0;
    if (cad == Cadence::daily) {
      steps = (sys_days(dates[r]) - sys_days(dates[r - 1])).count();
    } else {
      steps = month_index(dates[r]) - month_index(dates[r - 1]);
      if (steps < 1) {
        fail(ErrorKind::data, src + ":" + std::to_string(line_of_row[r]) +
                                  ": two rows in the same month for monthly cadence");
      }
    }
    for (long s = 1; s < steps; ++s) {
      grid.push_back(advance(dates[r - 1], cad, static_cast<int>(s)));
      source_row.push_back(-1);
    }
    grid.push_back(dates[r]);
    source_row.push_back(static_cast<long>(r));
  }

  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(v));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t c = 0; c < v; ++c) {
      values(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(c)) =
          source_row[g] < 0 ? std::numeric_limits<double>::quiet_NaN()
                            : rows[static_cast<std::size_t>(source_row[g])][c];
    }
  }
  try {
    return TimeSeriesFrame(std::move(grid), cad, std::move(vars), std::move(values));
  } catch (const Error& e) {
    fail(e.kind(), src + ": " + e.what());
  }
}

TimeSeriesFrame load_csv(const std::filesystem::path& path, std::span<const VariableMeta> schema,
                         std::optional<Cadence> cadence) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::data, "input file not found: " + path.string());
  return parse_csv(detail::read_file(path), schema, cadence, path.string());
}

std::string to_csv(const TimeSeriesFrame& frame) {
  std::ostringstream out;
  out << "date";
  for (const auto& v : frame.variables()) out << ',' << detail::csv_field(v.name);
  out << '\n';
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    out << format_date(frame.timestamps()[r]);
    for (std::size_t c = 0; c < frame.cols(); ++c) {
      out << ',';
      const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
      if (!frame.missing()(ri, ci)) out << detail::format_double(frame.values()(ri, ci));
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const TimeSeriesFrame& frame, const std::filesystem::path& path) {
  detail::write_file(path, to_csv(frame));
}

// --- preprocessing ---------------------------------------------------------

TimeSeriesFrame impute_linear(const TimeSeriesFrame& frame) {
  Eigen::MatrixXd out = frame.values();
  const auto n = out.rows();
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    std::vector<Eigen::Index> observed;
    for (Eigen::Index r = 0; r < n; ++r)
      if (!frame.missing()(r, c)) observed.push_back(r);
    if (observed.empty()) {
      fail(ErrorKind::data, "variable '" + frame.variables()[static_cast<std::size_t>(c)].name +
                                "' is entirely missing");
    }
    for (Eigen::Index r = 0; r < observed.front(); ++r) out(r, c) = out(observed.front(), c);
    for (Eigen::Index r = observed.back() + 1; r < n; ++r) out(r, c) = out(observed.back(), c);
    for (std::size_t k = 1; k < observed.size(); ++k) {
      const auto a = observed[k - 1], b = observed[k];
      const double ya = out(a, c), yb = out(b, c);
      for (Eigen::Index r = a + 1; r < b; ++r) {
        const double w = static_cast<double>(r - a) / static_cast<double>(b - a);
        out(r, c) = ya + w * (yb - ya);
      }
    }
  }
  return TimeSeriesFrame(frame.timestamps(), frame.cadence(), frame.variables(), std::move(out),
                         MissingMask::Constant(n, out.cols(), false));
}

std::size_t NormalizationParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  fail(ErrorKind::data, "no normalization statistics for '" + std::string(name) + "'");
}

double NormalizationParams::denormalize(std::string_view name, double z) const {
  const auto i = static_cast<Eigen::Index>(index_of(name));
  return z * stddev(i) + mean(i);
}

std::pair<TimeSeriesFrame, NormalizationParams> normalize(
    const TimeSeriesFrame& frame, const std::optional<NormalizationParams>& params) {
  if (frame.has_missing()) fail(ErrorKind::data, "normalize requires an imputed frame");
  const auto names = frame.variable_names();
  NormalizationParams p;
  if (params) {
    if (params->names != names) {
      fail(ErrorKind::data, "normalization parameters do not match the frame's variables");
    }
    p = *params;
  } else {
    p.names = names;
    p.mean = frame.values().colwise().mean().transpose();
    p.stddev.resize(p.mean.size());
    for (Eigen::Index c = 0; c < p.mean.size(); ++c) {
      const auto centered = frame.values().col(c).array() - p.mean(c);
      p.stddev(c) = std::sqrt(centered.square().mean());
    }
  }
  for (Eigen::Index c = 0; c < p.stddev.size(); ++c) {
    if (!(p.stddev(c) > 0.0) || !std::isfinite(p.stddev(c))) {
      fail(ErrorKind::data, "variable '" + p.names[static_cast<std::size_t>(c)] +
                                "' has zero standard deviation");
    }
  }
  Eigen::MatrixXd z = (frame.values().rowwise() - p.mean.transpose()).array().rowwise() /
                      p.stddev.transpose().array();
  // Valid ranges are physical; they do not apply to z-scores.
  auto vars = frame.variables();
  for (auto& v : vars) v.valid_range.reset();
  return {TimeSeriesFrame(frame.timestamps(), frame.cadence(), std::move(vars), std::move(z)),
          std::move(p)};
}

TimeSeriesFrame denormalize(const TimeSeriesFrame& frame, const NormalizationParams& params) {
  if (params.names != frame.variable_names()) {
    fail(ErrorKind::data, "normalization parameters do not match the frame's variables");
  }
  Eigen::MatrixXd x = (frame.values().array().rowwise() * params.stddev.transpose().array())
                          .matrix()
                          .rowwise() +
                      params.mean.transpose();
  return TimeSeriesFrame(frame.timestamps(), frame.cadence(), frame.variables(), std::move(x),
                         frame.missing());
}

TimeSeriesFrame aggregate_to_monthly(const TimeSeriesFrame& frame) {
  if (frame.cadence() != Cadence::daily) {
    fail(ErrorKind::data, "aggregate_to_monthly requires a daily frame");
  }
  std::vector<Date> months;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;  // [begin, end)
  for (std::size_t r = 0; r < frame.rows(); ++r) {
    const Date d = frame.timestamps()[r];
    const Date first{d.year(), d.month(), std::chrono::day{1}};
    if (months.empty() || months.back() != first) {
      months.push_back(first);
      spans.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(r));
    }
    spans.back().second = static_cast<Eigen::Index>(r) + 1;
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(months.size()), frame.values().cols());
  for (std::size_t m = 0; m < months.size(); ++m) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index r = spans[m].first; r < spans[m].second; ++r) {
        if (!frame.missing()(r, c)) {
          sum += frame.values()(r, c);
          ++count;
        }
      }
      if (count == 0) {
        fail(ErrorKind::data, "month " + format_date(months[m]).substr(0, 7) +
                                  " has no observed values for '" +
                                  frame.variables()[static_cast<std::size_t>(c)].name + "'");
      }
      out(static_cast<Eigen::Index>(m), c) = sum / count;
    }
  }
  return TimeSeriesFrame(std::move(months), Cadence::monthly, frame.variables(), std::move(out));
}

FrameSplit split_by_date(const TimeSeriesFrame& frame, Date train_end, double val_fraction) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    fail(ErrorKind::invalid_argument, "val_fraction must lie in [0, 1)");
  }
  const auto& ts = frame.timestamps();
  const auto upto = static_cast<std::size_t>(
      std::upper_bound(ts.begin(), ts.end(), train_end) - ts.begin());
  if (upto == 0) {
    fail(ErrorKind::data, "train_end " + format_date(train_end) + " precedes the first timestamp " +
                              format_date(ts.front()) + ": empty training partition");
  }
  if (upto == ts.size()) {
    fail(ErrorKind::data, "train_end " + format_date(train_end) +
                              " is at or after the last timestamp: empty test partition");
  }
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(upto)));
  const std::size_t n_train = upto - n_val;
  if (n_train == 0) fail(ErrorKind::data, "validation fraction leaves an empty training partition");
  std::optional<TimeSeriesFrame> val;
  if (n_val > 0) val = frame.slice_rows(n_train, upto);
  return FrameSplit{frame.slice_rows(0, n_train), std::move(val), frame.slice_rows(upto, ts.size())};
}

SupervisedWindows make_windows(const TimeSeriesFrame& frame, std::span<const std::string> features,
                               std::string_view target, int lookback, int horizon) {
  if (lookback < 1) fail(ErrorKind::invalid_argument, "lookback must be >= 1");
  if (horizon < 1) fail(ErrorKind::invalid_argument, "horizon must be >= 1");
  if (features.empty()) fail(ErrorKind::invalid_argument, "no input features");
  if (frame.has_missing()) fail(ErrorKind::data, "make_windows requires an imputed frame");
  std::vector<Eigen::Index> cols;
  for (const auto& f : features) cols.push_back(static_cast<Eigen::Index>(frame.index_of(f)));
  const auto tcol = static_cast<Eigen::Index>(frame.index_of(target));

  const long n = static_cast<long>(frame.rows());
  const long samples = n - lookback - horizon + 1;
  if (samples < 1) {
    fail(ErrorKind::data, "insufficient rows for windows: " + std::to_string(n) + " rows, lookback " +
                              std::to_string(lookback) + ", horizon " + std::to_string(horizon));
  }
  SupervisedWindows w;
  w.features.assign(features.begin(), features.end());
  w.target = std::string(target);
  w.lookback = lookback;
  w.horizon = horizon;
  w.targets.resize(samples);
  w.inputs.reserve(static_cast<std::size_t>(samples));
  const auto& vals = frame.values();
  for (long s = 0; s < samples; ++s) {
    Eigen::MatrixXd window(lookback, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
      window.col(static_cast<Eigen::Index>(k)) = vals.col(cols[k]).segment(s, lookback);
    w.inputs.push_back(std::move(window));
    const long label_row = s + lookback + horizon - 1;
    w.targets(s) = vals(label_row, tcol);
    w.target_dates.push_back(frame.timestamps()[static_cast<std::size_t>(label_row)]);
  }
  return w;
}

}  // namespace causalcast
