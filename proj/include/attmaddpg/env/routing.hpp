// Packet-routing traffic engineering as a fluid model.
//
// Each demand pair is one agent (an edge router). Every step the agent
// splits its buffered demand over its candidate paths; link utilization is
// carried flow over capacity and the shared reward is 1 − MLU.
//
// Agent observation, in order:
//   [ own buffered demand,
//     utilization history of each observable link (link id order,
//       10 slots per link, oldest first),
//     previous split ratios ]
// Observable links are the links on the agent's own candidate paths.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/env/environment.hpp"
#include "attmaddpg/env/topology.hpp"

namespace attmaddpg::env {

/// Per-path flows for every agent: flows[agent][path].
using PathFlows = std::vector<std::vector<double>>;

/// demand × ratio per path; the last path carries the residual. Flows are
/// rounded to multiples of ulp(demand) (a relative change below 1e-16), which
/// makes every partial sum exact, so the flows add back up to the demand
/// exactly in path order.
inline std::vector<double> apply_split(double demand, std::span<const double> ratios) {
  const ActionSpace simplex{ActionSpaceKind::simplex, ratios.size(), 1.0};
  if (ratios.empty() || !simplex.contains(ratios)) {
    throw ContractViolation("split ratios are not on the probability simplex");
  }
  if (!std::isfinite(demand) || demand < 0.0) throw ContractViolation("demand must be finite and >= 0");
  std::vector<double> flows(ratios.size(), 0.0);
  if (demand == 0.0) return flows;
  const double grid = std::nextafter(demand, HUGE_VAL) - demand;
  double assigned = 0.0;
  for (std::size_t p = 0; p + 1 < ratios.size(); ++p) {
    flows[p] = std::round(demand * ratios[p] / grid) * grid;
    assigned += flows[p];
  }
  flows.back() = demand - assigned;
  return flows;
}

/// Per-link utilization: sum of all path flows crossing the link, divided by
/// its capacity. Values above 1 are overloads, not errors.
inline std::vector<double> compute_utilizations(const Topology& topo, const PathFlows& flows) {
  std::vector<double> load(topo.links.size(), 0.0);
  for (std::size_t a = 0; a < flows.size(); ++a) {
    for (std::size_t p = 0; p < flows[a].size(); ++p) {
      for (std::size_t l : topo.paths.at(a).at(p)) load[l] += flows[a][p];
    }
  }
  for (std::size_t l = 0; l < load.size(); ++l) load[l] /= topo.links[l].capacity;
  return load;
}

/// 1 − max utilization; an empty network scores 1.
inline double reward_from_mlu(std::span<const double> utilizations) {
  double mlu = 0.0;
  for (double u : utilizations) mlu = std::max(mlu, u);
  return 1.0 - mlu;
}

struct RoutingOptions {
  std::size_t horizon = 50;
  std::size_t history_length = 10;
  double demand_noise = 0.2;       // per-step multiplicative noise, uniform ±
  double exploration_bonus = 0.0;  // β; 0 disables the local bonus
};

struct TrafficState {
  std::vector<double> demands;                           // per agent
  std::vector<double> link_flows;                        // per link
  std::vector<std::vector<double>> utilization_history;  // per link, oldest first
  std::vector<std::vector<double>> last_actions;         // per agent
};

/// Which parts of the network an agent sees and how its paths map onto them.
struct AgentLinkLayout {
  std::vector<std::size_t> observable_links;
  /// For each candidate path, positions into observable_links.
  std::vector<std::vector<std::size_t>> path_slots;
};

inline AgentLinkLayout agent_link_layout(const Topology& topo, std::size_t agent) {
  AgentLinkLayout layout;
  layout.observable_links = topo.links_of_demand(agent);
  for (const auto& path : topo.paths.at(agent)) {
    std::vector<std::size_t> slots;
    for (std::size_t l : path) {
      auto it = std::lower_bound(layout.observable_links.begin(), layout.observable_links.end(), l);
      slots.push_back(static_cast<std::size_t>(it - layout.observable_links.begin()));
    }
    layout.path_slots.push_back(std::move(slots));
  }
  return layout;
}

inline std::vector<double> build_routing_observation(const Topology& topo, const TrafficState& state,
                                                     std::size_t agent) {
  std::vector<double> obs;
  obs.push_back(state.demands.at(agent));
  for (std::size_t l : topo.links_of_demand(agent)) {
    const auto& hist = state.utilization_history.at(l);
    obs.insert(obs.end(), hist.begin(), hist.end());
  }
  const auto& last = state.last_actions.at(agent);
  obs.insert(obs.end(), last.begin(), last.end());
  return obs;
}

class RoutingEnv final : public Environment {
 public:
  RoutingEnv(Topology topology, RoutingOptions options)
      : topo_(std::move(topology)), options_(options) {
    topo_.validate();
    if (options_.horizon == 0) throw ConfigurationError("routing horizon must be >= 1");
    if (options_.history_length == 0) throw ConfigurationError("history length must be >= 1");
    if (options_.demand_noise < 0.0 || options_.demand_noise >= 1.0) {
      throw ConfigurationError("demand_noise must lie in [0, 1)");
    }
    for (std::size_t a = 0; a < agent_count(); ++a) {
      layouts_.push_back(agent_link_layout(topo_, a));
    }
    clear_state();
  }

  const Topology& topology() const { return topo_; }
  const RoutingOptions& options() const { return options_; }
  const TrafficState& state() const { return state_; }
  const AgentLinkLayout& layout(std::size_t agent) const { return layouts_.at(agent); }
  double last_mlu() const { return last_mlu_; }
  const std::vector<double>& last_utilizations() const { return last_utils_; }

  std::size_t agent_count() const override { return topo_.demands.size(); }
  std::size_t horizon() const override { return options_.horizon; }

  std::vector<std::size_t> observation_dims() const override {
    std::vector<std::size_t> dims;
    for (std::size_t a = 0; a < agent_count(); ++a) {
      dims.push_back(1 + options_.history_length * layouts_[a].observable_links.size() +
                     topo_.paths[a].size());
    }
    return dims;
  }

  std::vector<ActionSpace> action_spaces() const override {
    std::vector<ActionSpace> out;
    for (std::size_t a = 0; a < agent_count(); ++a) {
      out.push_back({ActionSpaceKind::simplex, topo_.paths[a].size(), 1.0});
    }
    return out;
  }

  JointObservation reset(std::uint64_t seed) override {
    rng_.seed(seed);
    clear_state();
    base_demand_.assign(agent_count(), 0.0);
    for (std::size_t a = 0; a < agent_count(); ++a) {
      const auto& d = topo_.demands[a];
      base_demand_[a] = std::uniform_real_distribution<double>(d.min_demand, d.max_demand)(rng_);
    }
    sample_demands();
    step_count_ = 0;
    mark_reset();
    return observe();
  }

  StepResult step(const JointAction& action) override {
    begin_step(action);
    PathFlows flows;
    for (std::size_t a = 0; a < agent_count(); ++a) {
      flows.push_back(apply_split(state_.demands[a], action.per_agent[a]));
    }
    last_utils_ = compute_utilizations(topo_, flows);
    last_mlu_ = *std::max_element(last_utils_.begin(), last_utils_.end());
    const double shared = reward_from_mlu(last_utils_);

    StepResult result;
    result.rewards.assign(agent_count(), shared);
    if (options_.exploration_bonus != 0.0) {
      for (std::size_t a = 0; a < agent_count(); ++a) {
        double local = 0.0;
        for (std::size_t l : layouts_[a].observable_links) local = std::max(local, last_utils_[l]);
        result.rewards[a] += options_.exploration_bonus * (1.0 - local);
      }
    }

    for (std::size_t l = 0; l < topo_.links.size(); ++l) {
      state_.link_flows[l] = last_utils_[l] * topo_.links[l].capacity;
      auto& hist = state_.utilization_history[l];
      std::rotate(hist.begin(), hist.begin() + 1, hist.end());
      hist.back() = last_utils_[l];
    }
    for (std::size_t a = 0; a < agent_count(); ++a) state_.last_actions[a] = action.per_agent[a];
    last_demands_ = state_.demands;

    ++step_count_;
    result.done = step_count_ >= options_.horizon;
    mark_done(result.done);
    sample_demands();
    result.observation = observe();
    result.info["mlu"] = last_mlu_;
    return result;
  }

  /// Overrides the demands routed by the next step (tests and analysis).
  void set_demands(std::span<const double> demands) {
    if (demands.size() != agent_count()) throw ShapeError("set_demands: one demand per agent");
    state_.demands.assign(demands.begin(), demands.end());
  }

  JointObservation observe() const {
    JointObservation obs;
    for (std::size_t a = 0; a < agent_count(); ++a) {
      obs.per_agent.push_back(build_routing_observation(topo_, state_, a));
    }
    return obs;
  }

  std::vector<std::string> trace_columns() const override {
    std::vector<std::string> cols;
    for (std::size_t a = 0; a < agent_count(); ++a) cols.push_back("demand_" + std::to_string(a));
    for (std::size_t l = 0; l < topo_.links.size(); ++l) cols.push_back("util_" + topo_.link_label(l));
    cols.push_back("mlu");
    return cols;
  }

  std::vector<double> trace_values() const override {
    std::vector<double> vals = last_demands_;
    vals.insert(vals.end(), last_utils_.begin(), last_utils_.end());
    vals.push_back(last_mlu_);
    return vals;
  }

 private:
  void clear_state() {
    state_.demands.assign(agent_count(), 0.0);
    state_.link_flows.assign(topo_.links.size(), 0.0);
    state_.utilization_history.assign(topo_.links.size(),
                                      std::vector<double>(options_.history_length, 0.0));
    state_.last_actions.clear();
    for (std::size_t a = 0; a < agent_count(); ++a) {
      const double n = static_cast<double>(topo_.paths[a].size());
      state_.last_actions.emplace_back(topo_.paths[a].size(), 1.0 / n);
    }
    last_utils_.assign(topo_.links.size(), 0.0);
    last_demands_.assign(agent_count(), 0.0);
    last_mlu_ = 0.0;
  }

  void sample_demands() {
    std::uniform_real_distribution<double> noise(1.0 - options_.demand_noise, 1.0 + options_.demand_noise);
    for (std::size_t a = 0; a < agent_count(); ++a) state_.demands[a] = base_demand_[a] * noise(rng_);
  }

  Topology topo_;
  RoutingOptions options_;
  std::vector<AgentLinkLayout> layouts_;
  TrafficState state_;
  std::vector<double> base_demand_;
  std::vector<double> last_utils_;
  std::vector<double> last_demands_;
  double last_mlu_ = 0.0;
  std::size_t step_count_ = 0;
  std::mt19937_64 rng_;
};

}  // namespace attmaddpg::env
