// Central finite-difference checks of analytic gradients.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "attmaddpg/nn/mlp.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::nn {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_name;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
  std::size_t skipped_kinks = 0;
};

/// A scalar that can be nudged, and the analytic derivative of the objective
/// with respect to it.
struct FdProbe {
  std::string name;
  std::size_t index = 0;
  double* value = nullptr;
  double analytic = 0.0;
};

/// |a − n| / max(|a|, |n|, floor). The floor keeps derivatives that are
/// numerically zero from dividing rounding noise by nothing.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Walks `candidates` in order and compares each analytic value with
/// (f(x+ε) − f(x−ε)) / 2ε until `probes` comparisons have been made.
/// `pattern`, when given, returns the relu activation pattern of the last
/// objective evaluation; a candidate whose ±ε nudge changes the pattern sits
/// on a kink and is skipped.
inline GradCheckReport central_difference_check(
    const std::vector<FdProbe>& candidates, std::size_t probes,
    const std::function<double()>& objective,
    const std::function<std::vector<std::uint8_t>()>& pattern, double eps) {
  GradCheckReport report;
  std::vector<std::uint8_t> base;
  if (pattern) {
    objective();
    base = pattern();
  }
  for (const auto& c : candidates) {
    if (report.probes >= probes) break;
    const double saved = *c.value;
    *c.value = saved + eps;
    const double plus = objective();
    const bool plus_ok = !pattern || pattern() == base;
    *c.value = saved - eps;
    const double minus = objective();
    const bool minus_ok = !pattern || pattern() == base;
    *c.value = saved;
    if (!plus_ok || !minus_ok) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * eps);
    const double err = relative_error(c.analytic, numeric);
    if (err >= report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_name = c.name;
      report.worst_index = c.index;
    }
    ++report.probes;
  }
  return report;
}

/// Probe candidates covering every scalar of `store`, shuffled by `rng`.
/// Analytic values are read from the store's grads.
inline std::vector<FdProbe> store_probes(ParameterStore& store, std::mt19937_64& rng) {
  std::vector<FdProbe> out;
  for (auto& e : store.entries()) {
    auto values = e.values();
    auto grads = e.grads();
    for (std::size_t j = 0; j < values.size(); ++j) {
      out.push_back({e.name(), j, &values[j], grads[j]});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

/// Gradient check of a standalone network: objective g·f(x) for a random
/// input x and random output weights g drawn from `seed`.
inline GradCheckReport grad_check(const MlpSpec& spec, ParameterStore& params, std::size_t probes,
                                  double eps, std::uint64_t seed = 0) {
  if (probes == 0) throw ConfigurationError("grad_check: probes must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Mlp net(spec);
  Matrix x(static_cast<Eigen::Index>(spec.input_dim), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = normal(rng);
  Matrix g(static_cast<Eigen::Index>(spec.output_dim), 1);
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, 0) = normal(rng);

  params.zero_grads();
  MlpTape tape;
  net.forward(params, x, &tape);
  net.backward(params, tape, g);

  MlpTape probe_tape;
  auto objective = [&] { return (g.transpose() * net.forward(params, x, &probe_tape))(0, 0); };
  auto pattern = [&] {
    std::vector<std::uint8_t> bits;
    net.append_relu_pattern(probe_tape, bits);
    return bits;
  };
  auto candidates = store_probes(params, rng);
  // Small networks get their scalars probed more than once; the surplus
  // leaves room for kink skips.
  const auto pool = candidates;
  while (candidates.size() < 2 * probes) candidates.insert(candidates.end(), pool.begin(), pool.end());
  return central_difference_check(candidates, probes, objective, pattern, eps);
}

}  // namespace attmaddpg::nn
