// Environment contract shared by the routing and particle worlds.
//
// Observations and actions are per-agent vectors; each agent has its own
// observation length and action space. Episodes are a pure function of the
// reset seed and the action sequence.

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/errors.hpp"

namespace attmaddpg::env {

using AgentVector = std::vector<double>;

struct JointObservation {
  std::vector<AgentVector> per_agent;
};

struct JointAction {
  std::vector<AgentVector> per_agent;
};

struct StepResult {
  JointObservation observation;
  std::vector<double> rewards;
  bool done = false;
  std::map<std::string, double> info;
};

enum class ActionSpaceKind { simplex, box };

struct ActionSpace {
  ActionSpaceKind kind = ActionSpaceKind::box;
  std::size_t dim = 1;
  double bound = 1.0;  // box half-width; unused for the simplex

  static constexpr double kSimplexTolerance = 1e-9;

  bool contains(std::span<const double> a) const {
    if (a.size() != dim) return false;
    for (double v : a) {
      if (!std::isfinite(v)) return false;
    }
    if (kind == ActionSpaceKind::box) {
      for (double v : a) {
        if (v < -bound || v > bound) return false;
      }
      return true;
    }
    double total = 0.0;
    for (double v : a) {
      if (v < 0.0 || v > 1.0) return false;
      total += v;
    }
    return std::abs(total - 1.0) <= kSimplexTolerance;
  }
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t agent_count() const = 0;
  virtual std::vector<std::size_t> observation_dims() const = 0;
  virtual std::vector<ActionSpace> action_spaces() const = 0;
  virtual std::size_t horizon() const = 0;

  virtual JointObservation reset(std::uint64_t seed) = 0;
  virtual StepResult step(const JointAction& action) = 0;

  /// Column names and values describing the state after the latest step;
  /// used by rollout traces.
  virtual std::vector<std::string> trace_columns() const = 0;
  virtual std::vector<double> trace_values() const = 0;

 protected:
  /// Lifecycle bookkeeping and action validation for step().
  void begin_step(const JointAction& action) const {
    if (!started_) throw UsageError("step() called before reset()");
    if (finished_) throw UsageError("step() called after the episode finished; call reset()");
    const auto spaces = action_spaces();
    if (action.per_agent.size() != spaces.size()) {
      throw ContractViolation("joint action has " + std::to_string(action.per_agent.size()) +
                              " agents, expected " + std::to_string(spaces.size()));
    }
    for (std::size_t i = 0; i < spaces.size(); ++i) {
      if (!spaces[i].contains(action.per_agent[i])) {
        throw ContractViolation("action of agent " + std::to_string(i) +
                                " lies outside its action space");
      }
    }
  }
  void mark_reset() {
    started_ = true;
    finished_ = false;
  }
  void mark_done(bool done) { finished_ = done; }

 private:
  bool started_ = false;
  bool finished_ = false;
};

/// Concatenation of all agents' vectors in agent order.
inline std::vector<double> concat(const std::vector<AgentVector>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace attmaddpg::env
