// Decentralized execution: a joint policy is a set of per-agent maps from
// the agent's own observation to its action.

#pragma once

#include <span>
#include <vector>

#include "attmaddpg/env/environment.hpp"

namespace attmaddpg::env {

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t agent_count() const = 0;
  /// Action of `agent` given only that agent's observation.
  virtual AgentVector act(std::size_t agent, std::span<const double> observation) const = 0;

  JointAction act_joint(const JointObservation& obs) const {
    JointAction a;
    for (std::size_t i = 0; i < obs.per_agent.size(); ++i) a.per_agent.push_back(act(i, obs.per_agent[i]));
    return a;
  }
};

}  // namespace attmaddpg::env
