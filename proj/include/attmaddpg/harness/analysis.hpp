// Post-training analysis: attention dumps over replayed transitions and
// step-by-step rollout traces.

#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attmaddpg/critic/attention_critic.hpp"
#include "attmaddpg/env/policy.hpp"
#include "attmaddpg/harness/checkpoint.hpp"
#include "attmaddpg/harness/experiment.hpp"
#include "attmaddpg/train/replay_buffer.hpp"

namespace attmaddpg::harness {

/// 64-bit FNV-1a over the raw bytes of `values`.
inline std::uint64_t fnv1a(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct AttentionSample {
  std::size_t replay_index = 0;
  std::uint64_t digest = 0;        // of joint obs followed by joint action
  std::vector<double> head_q;      // scalar head applied to each head vector
  std::vector<double> weights;     // attention weights, sum to 1
  double scalar_q = 0.0;
};

struct AttentionDump {
  std::size_t agent = 0;
  std::size_t heads = 0;
  std::vector<AttentionSample> samples;

  std::vector<double> mean_weights() const {
    std::vector<double> m(heads, 0.0);
    for (const auto& s : samples) {
      for (std::size_t k = 0; k < heads; ++k) m[k] += s.weights[k];
    }
    for (double& v : m) v /= static_cast<double>(std::max<std::size_t>(samples.size(), 1));
    return m;
  }

  std::string to_csv() const {
    std::ostringstream out;
    out << "sample,digest";
    for (std::size_t k = 1; k <= heads; ++k) out << ",q_" << k;
    for (std::size_t k = 1; k <= heads; ++k) out << ",w_" << k;
    out << ",scalar_q\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      char digest[17];
      std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(s.digest));
      out << i << ',' << digest;
      for (double v : s.head_q) out << ',' << format_double(v);
      for (double v : s.weights) out << ',' << format_double(v);
      out << ',' << format_double(s.scalar_q) << '\n';
    }
    return out.str();
  }
};

/// Runs agent `agent`'s attention critic over `n` transitions drawn uniformly
/// (with replacement) from `replay` using `seed`.
inline AttentionDump dump_attention(const Checkpoint& ck, const train::ReplayBuffer& replay, std::size_t n,
                                    std::size_t agent = 0, std::uint64_t seed = 0) {
  if (ck.config.algorithm != Algorithm::att_maddpg) {
    throw UsageError(std::string("dump-attention is unsupported for algorithm '") + to_string(ck.config.algorithm) +
                     "'; it needs an att_maddpg checkpoint");
  }
  if (replay.empty()) throw UsageError("dump-attention: replay snapshot is empty");
  const auto env = make_environment(ck.config);
  if (agent >= env->agent_count()) throw UsageError("dump-attention: agent index out of range");
  std::vector<std::size_t> act_dims;
  for (const auto& s : env->action_spaces()) act_dims.push_back(s.dim);
  if (replay.obs_dims() != env->observation_dims() || replay.act_dims() != act_dims) {
    throw CheckpointIncompatible("replay snapshot dimensions do not match the checkpoint's environment");
  }
  const auto model = train::make_critic(ck.config, critic::JointLayout{env->observation_dims(), act_dims, agent});
  const auto& att = dynamic_cast<const critic::AttentionCritic&>(*model);
  nn::ParameterStore layout;
  att.declare(layout);
  const auto& params = compatible_store(ck, "critic_" + std::to_string(agent), layout);

  AttentionDump dump;
  dump.agent = agent;
  dump.heads = att.heads();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, replay.size() - 1);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t idx = pick(rng);
    const auto t = replay.at(idx);
    const auto obs = env::concat(t.obs);
    const auto act = env::concat(t.actions);
    std::vector<double> teammates;
    for (std::size_t j = 0; j < t.actions.size(); ++j) {
      if (j != agent) teammates.insert(teammates.end(), t.actions[j].begin(), t.actions[j].end());
    }
    const auto out = att.critic_forward(params, obs, t.actions[agent], teammates);
    AttentionSample row;
    row.replay_index = idx;
    std::vector<double> key = obs;
    key.insert(key.end(), act.begin(), act.end());
    row.digest = fnv1a(key);
    row.head_q = att.scalarize_heads(params, out.head_qs);
    row.weights = out.weights;
    row.scalar_q = out.scalar_q;
    dump.samples.push_back(std::move(row));
  }
  return dump;
}

/// Rolls `policy` out for up to `steps` steps (stopping at episode end) and
/// writes one CSV row per step: actions, environment state, reward.
inline std::size_t trace_rollout(const env::Policy& policy, env::Environment& e, std::uint64_t seed,
                                 std::size_t steps, std::ostream& out) {
  if (policy.agent_count() != e.agent_count()) {
    throw CheckpointIncompatible("policy agent count does not match the environment");
  }
  const auto spaces = e.action_spaces();
  out << "step";
  for (std::size_t i = 0; i < spaces.size(); ++i) {
    for (std::size_t d = 0; d < spaces[i].dim; ++d) out << ",action_" << i << '_' << d;
  }
  for (const auto& c : e.trace_columns()) out << ',' << c;
  out << ",reward\n";
  auto obs = e.reset(seed);
  std::size_t t = 0;
  for (; t < steps; ++t) {
    const auto action = policy.act_joint(obs);
    const auto result = e.step(action);
    out << t;
    for (const auto& a : action.per_agent) {
      for (double v : a) out << ',' << format_double(v);
    }
    for (double v : e.trace_values()) out << ',' << format_double(v);
    out << ',' << format_double(result.rewards.front()) << '\n';
    obs = result.observation;
    if (result.done) {
      ++t;
      break;
    }
  }
  return t;
}

}  // namespace attmaddpg::harness
