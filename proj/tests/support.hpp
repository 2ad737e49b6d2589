// Shared helpers for the test executables.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "causalcast/error.hpp"
#include "causalcast/synth.hpp"
#include "causalcast/timeseries.hpp"

namespace support {

/// Linear VAR spec: a[k](j, i) is the effect of i at lag k+1 on j.
inline causalcast::ScmSpec var_spec(const std::vector<Eigen::MatrixXd>& a, double noise_std, std::uint64_t seed,
                                    int burn_in = 200) {
  causalcast::ScmSpec s;
  s.num_vars = static_cast<int>(a.front().rows());
  s.seed = seed;
  s.burn_in = burn_in;
  for (int j = 0; j < s.num_vars; ++j) {
    causalcast::Mechanism m;
    m.effect = j;
    m.noise_std = noise_std;
    for (std::size_t k = 0; k < a.size(); ++k)
      for (int i = 0; i < s.num_vars; ++i)
        if (a[k](j, i) != 0.0) m.terms.push_back({i, static_cast<int>(k) + 1, a[k](j, i)});
    s.mechanisms.push_back(std::move(m));
  }
  return s;
}

inline Eigen::MatrixXd white_noise(int n, int v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(n, v);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < v; ++c) x(r, c) = nd(rng);
  return x;
}

inline causalcast::TimeSeriesFrame frame_of(const Eigen::MatrixXd& x, std::vector<std::string> names = {}) {
  using namespace std::chrono;
  std::vector<causalcast::VariableMeta> vars;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto name = names.empty() ? "x" + std::to_string(c) : names[static_cast<std::size_t>(c)];
    vars.push_back({name, "", std::nullopt});
  }
  std::vector<causalcast::Date> dates;
  const causalcast::Date start{year{2000}, January, day{1}};
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    dates.push_back(causalcast::advance(start, causalcast::Cadence::daily, static_cast<int>(r)));
  return causalcast::TimeSeriesFrame(std::move(dates), causalcast::Cadence::daily, std::move(vars), x);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <class F>
causalcast::ErrorKind error_kind(F&& fn) {
  try {
    fn();
  } catch (const causalcast::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a causalcast::Error");
}

}  // namespace support
