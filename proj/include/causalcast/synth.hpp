#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causalcast/graph.hpp"
#include "causalcast/timeseries.hpp"

namespace causalcast {

enum class Nonlinearity { linear, tanh };

struct ScmTerm {
  int cause = 0;
  int lag = 1;  // 0 = contemporaneous
  double coefficient = 0.0;
};

/// x_effect(t) = f(sum of terms) + noise_std * N(0, 1).
struct Mechanism {
  int effect = 0;
  std::vector<ScmTerm> terms;
  double noise_std = 1.0;
  Nonlinearity nonlinearity = Nonlinearity::linear;
};

/// Variables without a mechanism are i.i.d. standard normal noise.
struct ScmSpec {
  int num_vars = 0;
  std::vector<std::string> names;  // defaults to x0, x1, ...
  std::vector<Mechanism> mechanisms;
  std::vector<double> initial;     // row 0 before burn-in; zeros when empty
  std::uint64_t seed = 0;
  int burn_in = 100;
  Cadence cadence = Cadence::daily;
  Date start{std::chrono::year{2000}, std::chrono::January, std::chrono::day{1}};

  /// Throws Error(data) on cyclic lag-0 structure, out-of-range indices,
  /// lag-0 self terms, duplicate terms, or (for linear specs) a companion
  /// spectral radius >= 1.
  void validate() const;

  std::vector<std::string> variable_names() const;
  /// Largest companion-matrix eigenvalue modulus of the implied VAR.
  double spectral_radius() const;
  int max_lag() const;
};

/// Simulates `n` retained rows (after discarding burn_in rows) and returns the
/// ground-truth graph implied by the mechanisms.
std::pair<TimeSeriesFrame, CausalGraph> generate(const ScmSpec& spec, int n);

ScmSpec scm_from_json(const nlohmann::json& j);

enum class MatchMode { adjacency, lag_exact };

struct GraphScore {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// Adjacency mode compares unordered variable pairs; lag-exact mode compares
/// (cause, effect, lag) triples. An empty found set has precision 1.
GraphScore score_graph(const CausalGraph& found, const CausalGraph& truth, MatchMode mode);

}  // namespace causalcast
