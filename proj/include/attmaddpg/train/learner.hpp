// Per-agent learning state and the actor-critic update steps shared by
// ATT-MADDPG, MADDPG, K-head and independent DDPG. The learners differ only
// in the critic architecture they plug in.

#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "attmaddpg/critic/critic_model.hpp"
#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/optim.hpp"
#include "attmaddpg/train/actor.hpp"
#include "attmaddpg/train/replay_buffer.hpp"

namespace attmaddpg::train {

struct LearnerOptions {
  double actor_lr = 0.001;
  double critic_lr = 0.01;
  double tau = 0.001;
  double gamma = 0.95;
};

struct AgentRuntime {
  Actor actor;
  ParameterStore actor_params;
  ParameterStore actor_target;
  nn::Adam actor_opt;
  std::unique_ptr<critic::CriticModel> critic;
  ParameterStore critic_params;
  ParameterStore critic_target;
  nn::Adam critic_opt;
};

/// Random online parameters; targets start as exact copies.
inline AgentRuntime make_agent(Actor actor, std::unique_ptr<critic::CriticModel> critic,
                               const LearnerOptions& options, std::mt19937_64& rng) {
  ParameterStore ap = actor.make_params(rng);
  ParameterStore cp = critic->make_params(rng);
  nn::Adam aopt(ap, {options.actor_lr});
  nn::Adam copt(cp, {options.critic_lr});
  ParameterStore at = ap;
  ParameterStore ct = cp;
  return AgentRuntime{std::move(actor), std::move(ap), std::move(at), std::move(aopt),
                      std::move(critic), std::move(cp), std::move(ct), std::move(copt)};
}

/// Each agent's actor applied to its slice of the joint observation, using
/// the target or online parameters.
inline Matrix joint_policy_actions(std::span<const AgentRuntime> agents, const Matrix& joint_obs, bool target) {
  const auto& layout = agents.front().critic->layout();
  Matrix out(static_cast<Eigen::Index>(layout.act_total()), joint_obs.cols());
  for (std::size_t j = 0; j < agents.size(); ++j) {
    const auto& ag = agents[j];
    const Matrix o = joint_obs.middleRows(static_cast<Eigen::Index>(layout.obs_offset(j)),
                                          static_cast<Eigen::Index>(layout.obs_dims[j]));
    out.middleRows(static_cast<Eigen::Index>(layout.act_offset(j)), static_cast<Eigen::Index>(layout.act_dims[j])) =
        ag.actor.forward(target ? ag.actor_target : ag.actor_params, o);
  }
  return out;
}

/// y = r_i + γ (1 − done) Q'_i(s', μ'(o')), [1, B].
inline Matrix td_targets(std::span<const AgentRuntime> agents, std::size_t i, const Batch& batch, double gamma) {
  const Matrix next_act = joint_policy_actions(agents, batch.next_obs, true);
  const Matrix q_next = agents[i].critic->forward(agents[i].critic_target, batch.next_obs, next_act, nullptr);
  const Eigen::Index r = static_cast<Eigen::Index>(i);
  return (batch.rewards.row(r).array() + gamma * (1.0 - batch.done.array()) * q_next.array()).matrix();
}

struct CriticStepStats {
  double loss = 0.0;
  double mean_td_error = 0.0;
};

/// One Adam step on the mean squared TD error of agent i's critic.
inline CriticStepStats critic_update(std::span<AgentRuntime> agents, std::size_t i, const Batch& batch,
                                     double gamma) {
  auto& ag = agents[i];
  const Matrix y = td_targets(agents, i, batch, gamma);
  auto tape = ag.critic->make_tape();
  const Matrix q = ag.critic->forward(ag.critic_params, batch.obs, batch.actions, tape.get());
  const Matrix delta = q - y;
  const double B = static_cast<double>(batch.size());
  CriticStepStats stats;
  stats.loss = delta.squaredNorm() / B;
  stats.mean_td_error = delta.sum() / B;
  if (!std::isfinite(stats.loss)) throw NumericalError("critic loss became non-finite");
  ag.critic_params.zero_grads();
  ag.critic->backward(ag.critic_params, *tape, (2.0 / B) * delta);
  ag.critic_opt.step(ag.critic_params);
  return stats;
}

struct ActorStepStats {
  double mean_q = 0.0;
  double grad_norm = 0.0;
};

/// One Adam step on −mean Q_i(s, μ(o)) with respect to agent i's actor only.
/// Teammate actions come from their current online actors.
inline ActorStepStats actor_update(std::span<AgentRuntime> agents, std::size_t i, const Batch& batch) {
  auto& ag = agents[i];
  const auto& layout = ag.critic->layout();
  const auto off = static_cast<Eigen::Index>(layout.obs_offset(i));
  const auto dim = static_cast<Eigen::Index>(layout.obs_dims[i]);

  nn::MlpTape actor_tape;
  const Matrix own_obs = batch.obs.middleRows(off, dim);
  const Matrix own_act = ag.actor.forward(ag.actor_params, own_obs, &actor_tape);
  Matrix joint_act = joint_policy_actions(agents, batch.obs, false);
  const auto aoff = static_cast<Eigen::Index>(layout.act_offset(i));
  const auto adim = static_cast<Eigen::Index>(layout.act_dims[i]);
  joint_act.middleRows(aoff, adim) = own_act;

  auto tape = ag.critic->make_tape();
  const Matrix q = ag.critic->forward(ag.critic_params, batch.obs, joint_act, tape.get());
  const double B = static_cast<double>(batch.size());
  const Matrix q_grad = Matrix::Constant(1, q.cols(), -1.0 / B);
  const auto grads = ag.critic->backward(ag.critic_params, *tape, q_grad);
  ag.critic_params.zero_grads();

  ag.actor_params.zero_grads();
  ag.actor.backward(ag.actor_params, actor_tape, grads.joint_act.middleRows(aoff, adim));
  ActorStepStats stats;
  stats.mean_q = q.sum() / B;
  double sq = 0.0;
  for (const auto& e : ag.actor_params.entries()) {
    for (double g : e.grads()) sq += g * g;
  }
  stats.grad_norm = std::sqrt(sq);
  ag.actor_opt.step(ag.actor_params);
  return stats;
}

inline void soft_update_targets(AgentRuntime& ag, double tau) {
  nn::soft_update(ag.actor_target, ag.actor_params, tau);
  nn::soft_update(ag.critic_target, ag.critic_params, tau);
}

}  // namespace attmaddpg::train
