// Rule-based comparison policies. Both act from each agent's own observation.
//
// WCMP splits demand over candidate paths in inverse proportion to path cost,
// where cost is the summed most recent utilization of the path's links.
// Greedy particle agents head straight for a target at full speed.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "attmaddpg/env/particle.hpp"
#include "attmaddpg/env/policy.hpp"
#include "attmaddpg/env/routing.hpp"
#include "attmaddpg/errors.hpp"

namespace attmaddpg::baselines {

constexpr double kWcmpEpsilon = 1e-3;
constexpr double kGreedyStopDistance = 1e-6;

/// ratio_p ∝ 1 / (cost_p + ε).
inline std::vector<double> wcmp_split(std::span<const double> path_costs, double eps = kWcmpEpsilon) {
  if (path_costs.empty()) throw ShapeError("wcmp: no candidate paths");
  std::vector<double> inv;
  double total = 0.0;
  for (double c : path_costs) {
    if (!std::isfinite(c) || c < 0.0) throw ContractViolation("wcmp: path costs must be finite and >= 0");
    inv.push_back(1.0 / (c + eps));
    total += inv.back();
  }
  for (double& v : inv) v /= total;
  return inv;
}

/// Path costs read from a routing observation: the newest history slot of
/// each link on the path, summed.
inline std::vector<double> path_costs_from_observation(const env::AgentLinkLayout& layout,
                                                       std::size_t history_length,
                                                       std::span<const double> obs) {
  const std::size_t expected = 1 + history_length * layout.observable_links.size() + layout.path_slots.size();
  if (obs.size() != expected) throw ShapeError("wcmp: observation length does not match the agent layout");
  std::vector<double> costs;
  for (const auto& slots : layout.path_slots) {
    double c = 0.0;
    for (std::size_t s : slots) c += obs[1 + s * history_length + (history_length - 1)];
    costs.push_back(c);
  }
  return costs;
}

class WcmpPolicy final : public env::Policy {
 public:
  explicit WcmpPolicy(const env::RoutingEnv& e) : history_(e.options().history_length) {
    for (std::size_t a = 0; a < e.agent_count(); ++a) layouts_.push_back(e.layout(a));
  }

  std::size_t agent_count() const override { return layouts_.size(); }

  env::AgentVector act(std::size_t agent, std::span<const double> obs) const override {
    return wcmp_split(path_costs_from_observation(layouts_.at(agent), history_, obs));
  }

 private:
  std::vector<env::AgentLinkLayout> layouts_;
  std::size_t history_;
};

/// Full-speed velocity towards `offset` (target minus self); zero once within
/// kGreedyStopDistance.
inline env::Vec2 head_towards(env::Vec2 offset, double v_max) {
  const double n = offset.norm();
  if (n <= kGreedyStopDistance) return {};
  const env::Vec2 v = (v_max / n) * offset;
  return {std::clamp(v.x, -v_max, v_max), std::clamp(v.y, -v_max, v_max)};
}

/// Navigation: head for the nearest landmark (ties → lowest index).
inline env::Vec2 greedy_navigate(std::span<const env::Vec2> landmark_offsets, double v_max) {
  if (landmark_offsets.empty()) throw ShapeError("greedy_navigate: no landmarks");
  std::size_t best = 0;
  for (std::size_t l = 1; l < landmark_offsets.size(); ++l) {
    if (landmark_offsets[l].norm() < landmark_offsets[best].norm()) best = l;
  }
  return head_towards(landmark_offsets[best], v_max);
}

/// Pursuit: head for the prey.
inline env::Vec2 greedy_pursue(env::Vec2 prey_offset, double v_max) { return head_towards(prey_offset, v_max); }

class GreedyPolicy final : public env::Policy {
 public:
  explicit GreedyPolicy(const env::ParticleEnv& e)
      : options_(e.options()), obs_dim_(e.observation_dims().front()) {}

  std::size_t agent_count() const override { return options_.agents; }

  env::AgentVector act(std::size_t agent, std::span<const double> obs) const override {
    if (agent >= options_.agents) throw UsageError("greedy: agent index out of range");
    if (obs.size() != obs_dim_) throw ShapeError("greedy: observation length mismatch");
    const std::size_t base = 2 + 4 * (options_.agents - 1);
    env::Vec2 v;
    if (options_.task == env::ParticleTask::navigation) {
      std::vector<env::Vec2> offsets;
      for (std::size_t l = 0; l < options_.landmarks; ++l) offsets.push_back({obs[base + 2 * l], obs[base + 2 * l + 1]});
      v = greedy_navigate(offsets, options_.v_max);
    } else {
      v = greedy_pursue({obs[base], obs[base + 1]}, options_.v_max);
    }
    return {v.x, v.y};
  }

 private:
  env::ParticleOptions options_;
  std::size_t obs_dim_;
};

}  // namespace attmaddpg::baselines
