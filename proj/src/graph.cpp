#include "causalcast/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "causalcast/error.hpp"
#include "text_util.hpp"

namespace causalcast {

const char* to_string(Correction c) noexcept {
  return c == Correction::none ? "none" : "benjamini-hochberg";
}

Correction parse_correction(std::string_view text) {
  if (text == "none") return Correction::none;
  if (text == "benjamini-hochberg" || text == "bh" || text == "fdr_bh") {
    return Correction::benjamini_hochberg;
  }
  fail(ErrorKind::config, "unknown correction '" + std::string(text) + "'");
}

bool CausalGraph::has_variable(std::string_view name) const noexcept {
  return std::find(variables.begin(), variables.end(), name) != variables.end();
}

namespace {

std::size_t position(const std::vector<std::string>& vars, const std::string& name) {
  auto it = std::find(vars.begin(), vars.end(), name);
  if (it == vars.end()) fail(ErrorKind::data, "edge references unknown variable '" + name + "'");
  return static_cast<std::size_t>(it - vars.begin());
}

std::string lag_text(const CausalEdge& e) {
  if (e.lag_min == e.lag) return std::to_string(e.lag);
  return std::to_string(e.lag_min) + "-" + std::to_string(e.lag);
}

}  // namespace

void CausalGraph::validate() const {
  std::set<std::tuple<std::string, std::string, int, int>> seen;
  for (const auto& e : edges) {
    position(variables, e.cause);
    position(variables, e.effect);
    if (e.lag < 0 || e.lag_min < 0 || e.lag_min > e.lag) {
      fail(ErrorKind::data, "invalid lag on edge " + e.cause + "->" + e.effect);
    }
    if (e.lag == 0 && e.cause == e.effect) {
      fail(ErrorKind::data, "self-edge at lag 0 on '" + e.cause + "'");
    }
    if (!(e.p_corrected <= alpha)) {
      fail(ErrorKind::data, "edge " + e.cause + "->" + e.effect + " retained with corrected p " +
                                detail::format_double(e.p_corrected) + " > alpha " +
                                detail::format_double(alpha));
    }
    if (!seen.emplace(e.cause, e.effect, e.lag_min, e.lag).second ||
        (e.lag == 0 && !e.oriented && seen.count({e.effect, e.cause, 0, 0}))) {
      fail(ErrorKind::data, "duplicate edge " + e.cause + "->" + e.effect + " at lag " + lag_text(e));
    }
  }
}

void CausalGraph::sort_edges() {
  std::sort(edges.begin(), edges.end(), [&](const CausalEdge& a, const CausalEdge& b) {
    return std::make_tuple(position(variables, a.cause), position(variables, a.effect), a.lag_min,
                           a.lag) < std::make_tuple(position(variables, b.cause),
                                                    position(variables, b.effect), b.lag_min, b.lag);
  });
}

std::string to_edge_list(const CausalGraph& graph) {
  std::ostringstream out;
  out << "# method=" << graph.method << " alpha=" << detail::format_double(graph.alpha)
      << " correction=" << to_string(graph.correction) << '\n';
  out << "cause,effect,lag,statistic,p_raw,p_corrected,oriented\n";
  for (const auto& e : graph.edges) {
    out << detail::csv_field(e.cause) << ',' << detail::csv_field(e.effect) << ',' << lag_text(e)
        << ',' << detail::format_double(e.statistic) << ',' << detail::format_double(e.p_raw) << ','
        << detail::format_double(e.p_corrected) << ',' << (e.oriented ? "true" : "false") << '\n';
  }
  return out.str();
}

void write_edge_list(const CausalGraph& graph, const std::filesystem::path& path) {
  detail::write_file(path, to_edge_list(graph));
}

CausalGraph parse_edge_list(std::string_view text, std::vector<std::string> variables) {
  CausalGraph g;
  g.variables = std::move(variables);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto number = [&](const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{}) fail(ErrorKind::data, "edge list line " + std::to_string(lineno) + ": bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      std::istringstream hs(line.substr(1));
      std::string kv;
      while (hs >> kv) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq), val = kv.substr(eq + 1);
        if (key == "method") g.method = val;
        if (key == "alpha") g.alpha = number(val);
        if (key == "correction") g.correction = parse_correction(val);
      }
      continue;
    }
    if (line.starts_with("cause,")) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 7) fail(ErrorKind::data, "edge list line " + std::to_string(lineno) + ": expected 7 fields");
    CausalEdge e;
    e.cause = f[0];
    e.effect = f[1];
    const auto dash = f[2].find('-');
    if (dash == std::string::npos) {
      e.lag = e.lag_min = static_cast<int>(number(f[2]));
    } else {
      e.lag_min = static_cast<int>(number(f[2].substr(0, dash)));
      e.lag = static_cast<int>(number(f[2].substr(dash + 1)));
    }
    e.statistic = number(f[3]);
    e.p_raw = number(f[4]);
    e.p_corrected = number(f[5]);
    e.oriented = f[6] == "true";
    g.edges.push_back(std::move(e));
  }
  g.validate();
  return g;
}

std::string to_adjacency_json(const CausalGraph& graph) {
  nlohmann::ordered_json root;
  root["method"] = graph.method;
  root["alpha"] = graph.alpha;
  root["correction"] = to_string(graph.correction);
  nlohmann::ordered_json effects = nlohmann::ordered_json::object();
  for (const auto& v : graph.variables) effects[v] = nlohmann::ordered_json::array();
  auto entry = [](const CausalEdge& e, const std::string& cause) {
    nlohmann::ordered_json j;
    j["cause"] = cause;
    j["lag"] = e.lag;
    if (e.lag_min != e.lag) j["lag_min"] = e.lag_min;
    j["statistic"] = std::isfinite(e.statistic) ? nlohmann::ordered_json(e.statistic) : nullptr;
    j["p_raw"] = e.p_raw;
    j["p_corrected"] = e.p_corrected;
    j["oriented"] = e.oriented;
    return j;
  };
  for (const auto& e : graph.edges) {
    effects[e.effect].push_back(entry(e, e.cause));
    if (e.lag == 0 && !e.oriented) effects[e.cause].push_back(entry(e, e.effect));
  }
  root["effects"] = std::move(effects);
  return root.dump(2) + "\n";
}

std::vector<std::string> feature_select(const CausalGraph& graph, std::string_view target) {
  if (!graph.has_variable(target)) {
    fail(ErrorKind::data, "target '" + std::string(target) + "' not among the graph's variables");
  }
  std::set<std::string, std::less<>> chosen{std::string(target)};
  for (const auto& e : graph.edges) {
    if (e.effect == target) chosen.insert(e.cause);
    if (e.lag == 0 && !e.oriented && e.cause == target) chosen.insert(e.effect);
  }
  std::vector<std::string> out;
  for (const auto& v : graph.variables)
    if (chosen.count(v)) out.push_back(v);
  return out;
}

}  // namespace causalcast
