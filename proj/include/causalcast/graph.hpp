#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace causalcast {

enum class Correction { none, benjamini_hochberg };

const char* to_string(Correction c) noexcept;
Correction parse_correction(std::string_view text);

/// A directed lagged link. Granger-causality edges summarise a block of lags
/// and carry lag_min < lag; all other edges have lag_min == lag.
struct CausalEdge {
  std::string cause;
  std::string effect;
  int lag = 1;
  int lag_min = 1;
  double statistic = 0.0;
  double p_raw = 1.0;
  double p_corrected = 1.0;
  // Contemporaneous links that could not be oriented stay false.
  bool oriented = true;
};

struct CausalGraph {
  std::vector<std::string> variables;
  std::vector<CausalEdge> edges;
  double alpha = 0.05;
  Correction correction = Correction::none;
  std::string method;  // "mvgc", "pcmci+", "truth", ...

  /// Checks every documented invariant; throws Error(data).
  void validate() const;

  /// Canonical order: (cause index, effect index, lag_min, lag) by column order.
  void sort_edges();

  bool has_variable(std::string_view name) const noexcept;
};

/// `# method=... alpha=... correction=...` header, then
/// `cause,effect,lag,statistic,p_raw,p_corrected,oriented`.
/// `lag` prints as `lo-hi` for block edges.
std::string to_edge_list(const CausalGraph& graph);
void write_edge_list(const CausalGraph& graph, const std::filesystem::path& path);
CausalGraph parse_edge_list(std::string_view text, std::vector<std::string> variables);

/// JSON object keyed by effect variable; unoriented lag-0 links are listed
/// under both endpoints.
std::string to_adjacency_json(const CausalGraph& graph);

/// Variables with an edge into `target` (or an unoriented lag-0 link touching
/// it), plus `target`, in the graph's variable order.
std::vector<std::string> feature_select(const CausalGraph& graph, std::string_view target);

}  // namespace causalcast
