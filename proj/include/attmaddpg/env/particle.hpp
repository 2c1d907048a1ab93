// Cooperative navigation and predator-prey on a walled 10×10 plane.
//
// Kinematics are first order: an agent's action is its velocity and moves it
// by v·dt, clamped to the walls. Observations are relative, ordered by entity
// index:
//   navigation: own velocity, other agents' relative positions, other
//               agents' relative velocities, landmark relative positions
//   pursuit:    own velocity, other predators' relative positions, their
//               relative velocities, prey relative position, prey relative
//               velocity

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/env/environment.hpp"

namespace attmaddpg::env {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

enum class ParticleTask { navigation, pursuit };

struct ParticleOptions {
  ParticleTask task = ParticleTask::navigation;
  std::size_t horizon = 25;
  std::size_t agents = 3;
  std::size_t landmarks = 3;
  double world_size = 10.0;
  double dt = 0.25;
  double v_max = 1.0;
  double catch_radius = 0.5;
  double catch_bonus = 10.0;
  double prey_flee_prob = 0.7;
};

struct WorldState {
  std::vector<Vec2> agent_positions;
  std::vector<Vec2> agent_velocities;
  std::vector<Vec2> landmark_positions;  // navigation only
  Vec2 prey_position;                    // pursuit only
  Vec2 prey_velocity;
  std::size_t step_count = 0;
};

/// −Σ_landmarks min_agents ‖agent − landmark‖.
inline double spread_reward(std::span<const Vec2> agents, std::span<const Vec2> landmarks) {
  double total = 0.0;
  for (const auto& l : landmarks) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& a : agents) nearest = std::min(nearest, distance(a, l));
    total += nearest;
  }
  return -total;
}

/// −min_predators ‖predator − prey‖, plus the catch bonus when caught.
inline double pursuit_reward(std::span<const Vec2> predators, Vec2 prey, bool caught,
                             double catch_bonus = 10.0) {
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& p : predators) nearest = std::min(nearest, distance(p, prey));
  return -nearest + (caught ? catch_bonus : 0.0);
}

inline std::vector<double> build_particle_observation(const WorldState& s, ParticleTask task,
                                                      std::size_t agent) {
  const Vec2 pos = s.agent_positions.at(agent);
  const Vec2 vel = s.agent_velocities.at(agent);
  std::vector<double> obs{vel.x, vel.y};
  auto push = [&](Vec2 v) {
    obs.push_back(v.x);
    obs.push_back(v.y);
  };
  for (std::size_t j = 0; j < s.agent_positions.size(); ++j) {
    if (j != agent) push(s.agent_positions[j] - pos);
  }
  for (std::size_t j = 0; j < s.agent_velocities.size(); ++j) {
    if (j != agent) push(s.agent_velocities[j] - vel);
  }
  if (task == ParticleTask::navigation) {
    for (const auto& l : s.landmark_positions) push(l - pos);
  } else {
    push(s.prey_position - pos);
    push(s.prey_velocity - vel);
  }
  return obs;
}

class ParticleEnv final : public Environment {
 public:
  explicit ParticleEnv(ParticleOptions options) : options_(options) {
    if (options_.agents == 0) throw ConfigurationError("particle env needs at least one agent");
    if (options_.task == ParticleTask::navigation && options_.landmarks == 0) {
      throw ConfigurationError("navigation needs at least one landmark");
    }
    if (options_.horizon == 0) throw ConfigurationError("particle horizon must be >= 1");
    if (!(options_.dt > 0.0) || !(options_.v_max > 0.0) || !(options_.world_size > 0.0)) {
      throw ConfigurationError("dt, v_max and world_size must be > 0");
    }
    if (options_.prey_flee_prob < 0.0 || options_.prey_flee_prob > 1.0) {
      throw ConfigurationError("prey_flee_prob must lie in [0, 1]");
    }
  }

  const ParticleOptions& options() const { return options_; }
  const WorldState& state() const { return state_; }
  bool caught() const { return caught_; }

  std::size_t agent_count() const override { return options_.agents; }
  std::size_t horizon() const override { return options_.horizon; }

  std::vector<std::size_t> observation_dims() const override {
    const std::size_t others = 4 * (options_.agents - 1);
    const std::size_t targets =
        options_.task == ParticleTask::navigation ? 2 * options_.landmarks : 4;
    return std::vector<std::size_t>(options_.agents, 2 + others + targets);
  }

  std::vector<ActionSpace> action_spaces() const override {
    return std::vector<ActionSpace>(options_.agents, ActionSpace{ActionSpaceKind::box, 2, options_.v_max});
  }

  JointObservation reset(std::uint64_t seed) override {
    rng_.seed(seed);
    std::uniform_real_distribution<double> coord(0.0, options_.world_size);
    auto point = [&] {
      const double x = coord(rng_);
      return Vec2{x, coord(rng_)};
    };
    state_ = WorldState{};
    for (std::size_t i = 0; i < options_.agents; ++i) {
      state_.agent_positions.push_back(point());
      state_.agent_velocities.push_back({});
    }
    if (options_.task == ParticleTask::navigation) {
      for (std::size_t i = 0; i < options_.landmarks; ++i) state_.landmark_positions.push_back(point());
    } else {
      state_.prey_position = point();
    }
    caught_ = false;
    mark_reset();
    return observe();
  }

  /// Replaces the world state mid-episode (tests, scripted scenarios).
  void set_state(WorldState state) {
    if (state.agent_positions.size() != options_.agents ||
        state.agent_velocities.size() != options_.agents) {
      throw ShapeError("set_state: agent count mismatch");
    }
    if (options_.task == ParticleTask::navigation &&
        state.landmark_positions.size() != options_.landmarks) {
      throw ShapeError("set_state: landmark count mismatch");
    }
    state_ = std::move(state);
  }

  StepResult step(const JointAction& action) override {
    begin_step(action);
    const std::vector<Vec2> before = state_.agent_positions;
    for (std::size_t i = 0; i < options_.agents; ++i) {
      const Vec2 v{action.per_agent[i][0], action.per_agent[i][1]};
      state_.agent_velocities[i] = v;
      state_.agent_positions[i] = clamp(state_.agent_positions[i] + options_.dt * v);
    }
    if (options_.task == ParticleTask::pursuit) move_prey(before);
    ++state_.step_count;

    double reward = 0.0;
    if (options_.task == ParticleTask::navigation) {
      reward = spread_reward(state_.agent_positions, state_.landmark_positions);
    } else {
      caught_ = std::any_of(state_.agent_positions.begin(), state_.agent_positions.end(),
                            [&](Vec2 p) { return distance(p, state_.prey_position) <= options_.catch_radius; });
      reward = pursuit_reward(state_.agent_positions, state_.prey_position, caught_, options_.catch_bonus);
    }

    StepResult result;
    result.rewards.assign(options_.agents, reward);
    result.done = state_.step_count >= options_.horizon || caught_;
    mark_done(result.done);
    result.observation = observe();
    if (options_.task == ParticleTask::pursuit) result.info["caught"] = caught_ ? 1.0 : 0.0;
    return result;
  }

  JointObservation observe() const {
    JointObservation obs;
    for (std::size_t i = 0; i < options_.agents; ++i) {
      obs.per_agent.push_back(build_particle_observation(state_, options_.task, i));
    }
    return obs;
  }

  std::vector<std::string> trace_columns() const override {
    std::vector<std::string> cols;
    for (std::size_t i = 0; i < options_.agents; ++i) {
      cols.push_back("x_" + std::to_string(i));
      cols.push_back("y_" + std::to_string(i));
    }
    if (options_.task == ParticleTask::navigation) {
      for (std::size_t l = 0; l < options_.landmarks; ++l) {
        cols.push_back("landmark_x_" + std::to_string(l));
        cols.push_back("landmark_y_" + std::to_string(l));
      }
    } else {
      cols.insert(cols.end(), {"prey_x", "prey_y", "caught"});
    }
    return cols;
  }

  std::vector<double> trace_values() const override {
    std::vector<double> vals;
    for (const auto& p : state_.agent_positions) vals.insert(vals.end(), {p.x, p.y});
    if (options_.task == ParticleTask::navigation) {
      for (const auto& l : state_.landmark_positions) vals.insert(vals.end(), {l.x, l.y});
    } else {
      vals.insert(vals.end(), {state_.prey_position.x, state_.prey_position.y, caught_ ? 1.0 : 0.0});
    }
    return vals;
  }

 private:
  Vec2 clamp(Vec2 p) const {
    return {std::clamp(p.x, 0.0, options_.world_size), std::clamp(p.y, 0.0, options_.world_size)};
  }

  // The prey reacts to where the predators were at the start of the step.
  // Both random draws happen every step so the stream stays aligned.
  void move_prey(const std::vector<Vec2>& predators) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const double angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng_);
    Vec2 dir{std::cos(angle), std::sin(angle)};
    if (u < options_.prey_flee_prob) {
      std::size_t nearest = 0;
      for (std::size_t i = 1; i < predators.size(); ++i) {
        if (distance(predators[i], state_.prey_position) <
            distance(predators[nearest], state_.prey_position)) {
          nearest = i;
        }
      }
      const Vec2 away = state_.prey_position - predators[nearest];
      const double n = away.norm();
      if (n > 1e-12) dir = (1.0 / n) * away;
    }
    state_.prey_velocity = options_.v_max * dir;
    state_.prey_position = clamp(state_.prey_position + options_.dt * state_.prey_velocity);
  }

  ParticleOptions options_;
  WorldState state_;
  bool caught_ = false;
  std::mt19937_64 rng_;
};

}  // namespace attmaddpg::env
