// Episode loop: decentralized acting with exploration noise, replay
// collection, and one critic + actor update per agent per environment step.
// Rule-based algorithms run through the same loop without learning.

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/baselines/baselines.hpp"
#include "attmaddpg/critic/attention_critic.hpp"
#include "attmaddpg/critic/critic_model.hpp"
#include "attmaddpg/env/policy.hpp"
#include "attmaddpg/harness/config.hpp"
#include "attmaddpg/train/learner.hpp"

namespace attmaddpg::train {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent seed for (`seed`, `stream`, `index`).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

namespace stream {
constexpr std::uint64_t init = 1;
constexpr std::uint64_t noise = 2;
constexpr std::uint64_t sampling = 3;
constexpr std::uint64_t episodes = 4;
}  // namespace stream

inline std::unique_ptr<critic::CriticModel> make_critic(const harness::ExperimentConfig& c,
                                                        critic::JointLayout layout) {
  using harness::Algorithm;
  const std::size_t w = c.hidden_width;
  switch (c.algorithm) {
    case Algorithm::att_maddpg:
    case Algorithm::khead: {
      critic::AttentionCriticConfig ac;
      ac.heads = c.heads;
      ac.vec_dim = c.vec_dim;
      ac.encoder_hidden = w;
      ac.head_hidden = w;
      ac.embed_hidden = w;
      ac.merge = c.algorithm == Algorithm::att_maddpg ? critic::HeadMerge::attention : critic::HeadMerge::uniform;
      return std::make_unique<critic::AttentionCritic>(std::move(layout), ac);
    }
    case Algorithm::maddpg:
      return std::make_unique<critic::FullyConnectedCritic>(std::move(layout), std::vector<std::size_t>{w, w}, true);
    case Algorithm::ddpg:
      return std::make_unique<critic::FullyConnectedCritic>(std::move(layout), std::vector<std::size_t>{w, w}, false);
    default:
      throw ConfigurationError(std::string("algorithm '") + to_string(c.algorithm) + "' has no critic");
  }
}

/// Decentralized execution from actor parameters alone.
class ActorPolicy final : public env::Policy {
 public:
  ActorPolicy(std::vector<Actor> actors, std::vector<ParameterStore> params)
      : actors_(std::move(actors)), params_(std::move(params)) {
    if (actors_.size() != params_.size()) throw ShapeError("actor policy: one parameter store per actor");
  }

  std::size_t agent_count() const override { return actors_.size(); }
  env::AgentVector act(std::size_t agent, std::span<const double> obs) const override {
    return actors_.at(agent).act(params_.at(agent), obs);
  }

 private:
  std::vector<Actor> actors_;
  std::vector<ParameterStore> params_;
};

inline std::unique_ptr<env::Policy> make_rule_policy(const harness::ExperimentConfig& c, const env::Environment& e) {
  if (c.algorithm == harness::Algorithm::wcmp) {
    return std::make_unique<baselines::WcmpPolicy>(dynamic_cast<const env::RoutingEnv&>(e));
  }
  if (c.algorithm == harness::Algorithm::greedy) {
    return std::make_unique<baselines::GreedyPolicy>(dynamic_cast<const env::ParticleEnv&>(e));
  }
  throw ConfigurationError(std::string("algorithm '") + to_string(c.algorithm) + "' is not rule based");
}

struct EpisodeLog {
  std::size_t episode = 0;
  double reward = 0.0;              // mean per-step reward, averaged over agents
  std::vector<double> critic_loss;  // per agent, mean over the episode's updates
  double noise_scale = 0.0;
  std::size_t updates = 0;
};

class Trainer {
 public:
  Trainer(const harness::ExperimentConfig& config, std::uint64_t seed)
      : Trainer(config, harness::make_environment(config), seed) {}

  Trainer(const harness::ExperimentConfig& config, std::unique_ptr<env::Environment> environment, std::uint64_t seed)
      : config_(config),
        env_(std::move(environment)),
        seed_(seed),
        noise_rng_(derive_seed(seed, stream::noise)),
        sample_rng_(derive_seed(seed, stream::sampling)),
        replay_(config.buffer_capacity, env_->observation_dims(), action_dims(*env_)) {
    config_.validate();
    if (harness::is_rule_based(config_.algorithm)) {
      rule_policy_ = make_rule_policy(config_, *env_);
      return;
    }
    std::mt19937_64 init_rng(derive_seed(seed, stream::init));
    const auto obs_dims = env_->observation_dims();
    const auto spaces = env_->action_spaces();
    const LearnerOptions lo{config_.actor_lr, config_.critic_lr, config_.tau, config_.gamma};
    for (std::size_t i = 0; i < env_->agent_count(); ++i) {
      critic::JointLayout layout{obs_dims, action_dims(*env_), i};
      agents_.push_back(make_agent(Actor(obs_dims[i], spaces[i], config_.hidden_width),
                                   make_critic(config_, std::move(layout)), lo, init_rng));
    }
  }

  const harness::ExperimentConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  env::Environment& environment() { return *env_; }
  const ReplayBuffer& replay() const { return replay_; }
  std::vector<AgentRuntime>& agents() { return agents_; }
  const std::vector<AgentRuntime>& agents() const { return agents_; }
  bool learns() const { return !agents_.empty(); }
  std::size_t total_steps() const { return total_steps_; }

  std::uint64_t episode_seed(std::size_t episode) const { return derive_seed(seed_, stream::episodes, episode); }

  /// The current joint policy without exploration.
  std::unique_ptr<env::Policy> policy() const {
    if (!learns()) return make_rule_policy(config_, *env_);
    std::vector<Actor> actors;
    std::vector<ParameterStore> params;
    for (const auto& ag : agents_) {
      actors.push_back(ag.actor);
      params.push_back(ag.actor_params);
    }
    return std::make_unique<ActorPolicy>(std::move(actors), std::move(params));
  }

  EpisodeLog run_episode(std::size_t episode) {
    EpisodeLog log;
    log.episode = episode;
    log.noise_scale = learns() ? noise_scale(episode, config_.episodes, config_.noise_initial, config_.noise_final,
                                             config_.noise_anneal_fraction)
                               : 0.0;
    log.critic_loss.assign(env_->agent_count(), 0.0);
    const auto spaces = env_->action_spaces();
    const std::uint64_t ep_seed = episode_seed(episode);
    env::JointObservation obs = env_->reset(ep_seed);
    double reward_sum = 0.0;
    std::size_t steps = 0;
    for (bool done = false; !done;) {
      env::JointAction action;
      if (learns()) {
        for (std::size_t i = 0; i < agents_.size(); ++i) {
          const auto a = agents_[i].actor.act(agents_[i].actor_params, obs.per_agent[i]);
          action.per_agent.push_back(explore(a, spaces[i], log.noise_scale, noise_rng_));
        }
      } else {
        action = rule_policy_->act_joint(obs);
      }
      env::StepResult result = env_->step(action);
      done = result.done;
      double mean_r = 0.0;
      for (double r : result.rewards) mean_r += r;
      reward_sum += mean_r / static_cast<double>(result.rewards.size());

      if (learns()) {
        replay_.push(Transition{obs.per_agent, action.per_agent, result.rewards, result.observation.per_agent, done,
                                ep_seed, static_cast<std::uint32_t>(steps)});
        if (replay_.size() >= std::max(config_.warmup, config_.batch_size)) {
          for (std::size_t i = 0; i < agents_.size(); ++i) {
            const Batch batch = replay_.sample(config_.batch_size, sample_rng_);
            log.critic_loss[i] += critic_update(agents_, i, batch, config_.gamma).loss;
            actor_update(agents_, i, batch);
          }
          for (auto& ag : agents_) soft_update_targets(ag, config_.tau);
          ++log.updates;
        }
      }
      obs = std::move(result.observation);
      ++steps;
      ++total_steps_;
    }
    log.reward = reward_sum / static_cast<double>(steps);
    if (log.updates > 0) {
      for (double& l : log.critic_loss) l /= static_cast<double>(log.updates);
    }
    return log;
  }

  std::vector<EpisodeLog> train() {
    std::vector<EpisodeLog> logs;
    for (std::size_t ep = 0; ep < config_.episodes; ++ep) logs.push_back(run_episode(ep));
    return logs;
  }

 private:
  static std::vector<std::size_t> action_dims(const env::Environment& e) {
    std::vector<std::size_t> dims;
    for (const auto& s : e.action_spaces()) dims.push_back(s.dim);
    return dims;
  }

  harness::ExperimentConfig config_;
  std::unique_ptr<env::Environment> env_;
  std::uint64_t seed_;
  std::mt19937_64 noise_rng_;
  std::mt19937_64 sample_rng_;
  ReplayBuffer replay_;
  std::vector<AgentRuntime> agents_;
  std::unique_ptr<env::Policy> rule_policy_;
  std::size_t total_steps_ = 0;
};

}  // namespace attmaddpg::train
