// Deterministic per-agent policy networks and their exploration noise.

#pragma once

#include <algorithm>
#include <random>
#include <span>
#include <vector>

#include "attmaddpg/env/environment.hpp"
#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/mlp.hpp"

namespace attmaddpg::train {

using nn::Matrix;
using nn::ParameterStore;

/// obs → hidden → hidden → action. Simplex actions use a softmax output;
/// box actions use tanh scaled by the box bound.
class Actor {
 public:
  Actor(std::size_t obs_dim, env::ActionSpace space, std::size_t hidden_width)
      : space_(space),
        net_({obs_dim,
              {hidden_width, hidden_width},
              space.dim,
              nn::Activation::relu,
              space.kind == env::ActionSpaceKind::simplex ? nn::Activation::softmax : nn::Activation::tanh},
             "pi.") {}

  const nn::Mlp& network() const { return net_; }
  const env::ActionSpace& action_space() const { return space_; }
  std::size_t obs_dim() const { return net_.spec().input_dim; }
  std::size_t action_dim() const { return space_.dim; }
  double output_scale() const { return space_.kind == env::ActionSpaceKind::box ? space_.bound : 1.0; }

  void declare(ParameterStore& store) const { net_.declare(store); }

  ParameterStore make_params(std::mt19937_64& rng) const {
    ParameterStore store;
    net_.declare(store);
    net_.initialize(store, rng);
    return store;
  }

  /// [obs_dim, B] → [action_dim, B].
  Matrix forward(const ParameterStore& params, const Matrix& obs, nn::MlpTape* tape = nullptr) const {
    Matrix out = net_.forward(params, obs, tape);
    if (output_scale() != 1.0) out *= output_scale();
    return out;
  }

  /// Accumulates parameter grads for ∂(action_grad · action) and returns the
  /// observation gradient.
  Matrix backward(ParameterStore& params, const nn::MlpTape& tape, const Matrix& action_grad) const {
    return net_.backward(params, tape, output_scale() * action_grad);
  }

  std::vector<double> act(const ParameterStore& params, std::span<const double> obs) const {
    if (obs.size() != obs_dim()) {
      throw ShapeError("actor: observation has " + std::to_string(obs.size()) + " entries, expected " +
                       std::to_string(obs_dim()));
    }
    return nn::to_std(forward(params, nn::column(obs)));
  }

 private:
  env::ActionSpace space_;
  nn::Mlp net_;
};

/// Scale of the Gaussian exploration noise for `episode` (0-based): linear
/// from `initial` to `final` over the first `fraction` of all episodes, then
/// constant.
inline double noise_scale(std::size_t episode, std::size_t episodes, double initial, double final_scale,
                          double fraction) {
  const double span = fraction * static_cast<double>(episodes);
  if (span <= 0.0) return final_scale;
  const double progress = std::min(1.0, static_cast<double>(episode) / span);
  return initial + (final_scale - initial) * progress;
}

/// Adds N(0, scale²) noise and projects back into the action space: boxes are
/// clipped, simplex actions are clipped at zero and renormalised (uniform if
/// nothing is left). A zero scale returns the action untouched and draws
/// nothing.
inline std::vector<double> explore(std::span<const double> action, const env::ActionSpace& space,
                                   double scale, std::mt19937_64& rng) {
  std::vector<double> out(action.begin(), action.end());
  if (scale <= 0.0) return out;
  std::normal_distribution<double> noise(0.0, scale);
  for (double& v : out) v += noise(rng);
  if (space.kind == env::ActionSpaceKind::box) {
    for (double& v : out) v = std::clamp(v, -space.bound, space.bound);
    return out;
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::max(0.0, v);
    total += v;
  }
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
  } else {
    for (double& v : out) v /= total;
  }
  return out;
}

}  // namespace attmaddpg::train
