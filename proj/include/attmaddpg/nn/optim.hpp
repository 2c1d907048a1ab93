// Adam and target-network soft updates.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::nn {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, laid out like the store they track.
struct AdamMoments {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  explicit AdamMoments(const ParameterStore& store) {
    for (const auto& e : store.entries()) {
      m.emplace_back(e.size(), 0.0);
      v.emplace_back(e.size(), 0.0);
    }
  }
};

/// One bias-corrected Adam step; `step_count` is 1 for the first step.
/// Grads are read, never cleared.
inline void adam_step(ParameterStore& params, AdamMoments& moments, double lr, double beta1,
                      double beta2, double eps, std::size_t step_count) {
  if (!(lr > 0.0)) throw ConfigurationError("adam: learning rate must be > 0");
  if (step_count == 0) throw UsageError("adam: step_count starts at 1");
  if (moments.m.size() != params.entry_count()) throw ShapeError("adam: moment layout mismatch");
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  auto entries = params.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto values = entries[i].values();
    auto grads = entries[i].grads();
    auto& m = moments.m[i];
    auto& v = moments.v[i];
    if (m.size() != values.size()) throw ShapeError("adam: moment layout mismatch");
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grads[j];
      m[j] = beta1 * m[j] + (1.0 - beta1) * g;
      v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      values[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

class Adam {
 public:
  Adam(const ParameterStore& store, AdamOptions options) : options_(options), moments_(store) {
    if (!(options_.lr > 0.0)) throw ConfigurationError("adam: learning rate must be > 0");
  }

  void step(ParameterStore& params) {
    adam_step(params, moments_, options_.lr, options_.beta1, options_.beta2, options_.eps, ++steps_);
  }

  std::size_t step_count() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  AdamMoments moments_;
  std::size_t steps_ = 0;
};

/// target ← τ·online + (1−τ)·target, elementwise.
inline void soft_update(ParameterStore& target, const ParameterStore& online, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigurationError("soft_update: tau must lie in [0, 1]");
  if (!target.same_layout(online)) throw ShapeError("soft_update: stores have different layouts");
  auto dst = target.entries();
  auto src = online.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    auto t = dst[i].values();
    auto o = src[i].values();
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = tau * o[j] + (1.0 - tau) * t[j];
  }
}

/// Copies values (not grads) from `source` into a store of identical layout.
inline void copy_values(ParameterStore& target, const ParameterStore& source) {
  if (!target.same_layout(source)) throw ShapeError("copy_values: stores have different layouts");
  auto dst = target.entries();
  auto src = source.entries();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    std::copy(src[i].values().begin(), src[i].values().end(), dst[i].values().begin());
  }
}

}  // namespace attmaddpg::nn
