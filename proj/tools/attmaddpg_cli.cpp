// attmaddpg: run experiments, validate configs, dump attention weights and
// trace rollouts.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "attmaddpg/harness/analysis.hpp"
#include "attmaddpg/harness/checkpoint.hpp"
#include "attmaddpg/harness/config.hpp"
#include "attmaddpg/harness/experiment.hpp"

namespace {

using namespace attmaddpg;

int cmd_run(const std::string& path, std::size_t jobs) {
  auto c = harness::load_config_file(path);
  if (jobs > 0) c.jobs = jobs;
  const auto result = harness::run_experiment(c);
  const auto& last = result.aggregate.back();
  std::printf("%zu seed(s), %zu episode(s) -> %s\n", result.seeds.size(), result.aggregate.size(),
              result.output_dir.string().c_str());
  std::printf("final smoothed mean reward %.6f\n", last.smoothed_mean_reward);
  return 0;
}

int cmd_validate(const std::string& path) {
  const auto c = harness::load_config_file(path);
  const auto e = harness::make_environment(c);
  std::printf("ok: %s on %s, %zu agent(s), horizon %zu\n", to_string(c.algorithm), to_string(c.env),
              e->agent_count(), e->horizon());
  std::fputs(harness::to_text(c).c_str(), stdout);
  return 0;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  harness::write_text(out_path, text);
}

int cmd_dump(const std::string& ckpt_path, const std::string& replay_path, std::size_t n, std::size_t agent,
             std::uint64_t seed, const std::string& out_path) {
  const auto ck = harness::load_checkpoint(ckpt_path);
  if (ck.config.algorithm != harness::Algorithm::att_maddpg) {
    throw UsageError(std::string("dump-attention is unsupported for algorithm '") + to_string(ck.config.algorithm) +
                     "'; it needs an att_maddpg checkpoint");
  }
  std::ifstream in(replay_path, std::ios::binary);
  if (!in) throw UsageError("cannot open replay snapshot '" + replay_path + "'");
  const auto replay = train::ReplayBuffer::load(in);
  emit(out_path, harness::dump_attention(ck, replay, n, agent, seed).to_csv());
  return 0;
}

int cmd_trace(const std::string& source, const std::string& env_name, std::uint64_t seed, std::size_t steps,
              const std::string& out_path) {
  std::unique_ptr<env::Environment> e;
  std::unique_ptr<env::Policy> policy;
  if (source == "wcmp" || source == "greedy") {
    harness::ExperimentConfig c;
    c.algorithm = harness::parse_algorithm(source);
    if (!env_name.empty()) c.env = harness::parse_env(env_name);
    else c.env = source == "wcmp" ? harness::EnvKind::routing_small : harness::EnvKind::coop_nav;
    c.validate();
    e = harness::make_environment(c);
    policy = train::make_rule_policy(c, *e);
  } else {
    const auto ck = harness::load_checkpoint(source);
    auto c = ck.config;
    if (!env_name.empty()) c.env = harness::parse_env(env_name);
    e = harness::make_environment(c);
    policy = harness::policy_from_checkpoint(ck, *e);
  }
  std::ostringstream out;
  harness::trace_rollout(*policy, *e, seed, steps, out);
  emit(out_path, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-critic multi-agent DDPG: training runs and analysis"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t jobs = 0;
  auto* run = app.add_subcommand("run", "Train every seed of a config and write logs");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--jobs", jobs, "Seeds trained in parallel (overrides the config)");

  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  validate->add_option("config", config_path, "Config file")->required();

  std::string ckpt_path, replay_path, out_path;
  std::size_t n = 3000, agent = 0;
  std::uint64_t seed = 0;
  auto* dump = app.add_subcommand("dump-attention", "Attention weights and per-head Q over replayed transitions");
  dump->add_option("checkpoint", ckpt_path, "att_maddpg checkpoint")->required();
  dump->add_option("replay", replay_path, "Replay snapshot")->required();
  dump->add_option("--n", n, "Number of sampled transitions")->capture_default_str();
  dump->add_option("--agent", agent, "Agent whose critic is analysed")->capture_default_str();
  dump->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  dump->add_option("--out", out_path, "Output CSV (stdout when omitted)");

  std::string source, env_name;
  std::size_t steps = 50;
  auto* trace = app.add_subcommand("trace", "Deterministic rollout trace as CSV");
  trace->add_option("source", source, "Checkpoint file, or 'wcmp' / 'greedy'")->required();
  trace->add_option("--env", env_name, "Environment (defaults to the checkpoint's)");
  trace->add_option("--seed", seed, "Episode seed")->capture_default_str();
  trace->add_option("--steps", steps, "Maximum number of steps")->capture_default_str();
  trace->add_option("--out", out_path, "Output CSV (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, jobs);
    if (*validate) return cmd_validate(config_path);
    if (*dump) return cmd_dump(ckpt_path, replay_path, n, agent, seed, out_path);
    if (*trace) return cmd_trace(source, env_name, seed, steps, out_path);
  } catch (const attmaddpg::CheckpointIncompatible& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const attmaddpg::ConfigurationError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const attmaddpg::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const attmaddpg::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
