#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "attmaddpg/harness/analysis.hpp"
#include "attmaddpg/harness/checkpoint.hpp"
#include "attmaddpg/harness/config.hpp"
#include "attmaddpg/harness/experiment.hpp"

using namespace attmaddpg;
using namespace attmaddpg::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("attmaddpg_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ExperimentConfig tiny(Algorithm algo, EnvKind env, const fs::path& out) {
  ExperimentConfig c;
  c.algorithm = algo;
  c.env = env;
  c.seeds = {1, 2, 3};
  c.episodes = 5;
  c.horizon = 8;
  c.warmup = 16;
  c.batch_size = 8;
  c.hidden_width = 8;
  c.vec_dim = 6;
  c.output_dir = out.string();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ATTMADDPG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsMatchTheExperimentTable) {
  const ExperimentConfig c;
  EXPECT_EQ(c.actor_lr, 0.001);
  EXPECT_EQ(c.critic_lr, 0.01);
  EXPECT_EQ(c.tau, 0.001);
  EXPECT_EQ(c.buffer_capacity, 100000u);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_EQ(c.gamma, 0.95);
  EXPECT_EQ(c.heads, 4u);
  EXPECT_EQ(c.hidden_width, 32u);
}

TEST(Config, ParsesKeysCommentsAndSeedRanges) {
  const auto c = parse_config(
      "# comment\n"
      "env = coop_nav\n"
      "algorithm = khead   # trailing comment\n"
      "K = 8\n"
      "seeds = 1..5\n"
      "critic_lr = 0.005\n"
      "save_replay = true\n");
  EXPECT_EQ(c.env, EnvKind::coop_nav);
  EXPECT_EQ(c.algorithm, Algorithm::khead);
  EXPECT_EQ(c.heads, 8u);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.critic_lr, 0.005);
  EXPECT_TRUE(c.save_replay);
  EXPECT_EQ(c.effective_horizon(), kParticleDefaultHorizon);
  EXPECT_EQ(parse_config("seeds = 4, 9,2\n").seeds, (std::vector<std::uint64_t>{4, 9, 2}));
}

TEST(Config, ErrorsNameTheField) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigurationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("algorithm = maddpgg\n").find("algorithm"), std::string::npos);
  EXPECT_NE(message("batchsize = 3\n").find("batchsize"), std::string::npos);
  EXPECT_NE(message("tau = 2\n").find("tau"), std::string::npos);
  EXPECT_NE(message("K = 1\n").find("K"), std::string::npos);
  EXPECT_NE(message("episodes = -3\n").find("episodes"), std::string::npos);
  EXPECT_NE(message("env = coop_nav\nalgorithm = wcmp\n").find("algorithm"), std::string::npos);
  EXPECT_NE(message("just words\n").find("line 1"), std::string::npos);
}

TEST(Config, TextRoundTrip) {
  auto c = parse_config("env = predator_prey\nalgorithm = ddpg\nseeds = 3,7\ngamma = 0.9\nv_max = 1.5\n");
  EXPECT_EQ(to_text(parse_config(to_text(c))), to_text(c));
  EXPECT_EQ(parse_config(to_text(c)).v_max, 1.5);
}

TEST(Experiment, AggregateMatchesBruteForceOverSeedCsvs) {
  const auto dir = scratch_dir("aggregate");
  const auto c = tiny(Algorithm::maddpg, EnvKind::coop_nav, dir);
  run_experiment(c);
  std::vector<std::vector<std::vector<std::string>>> seeds;
  for (auto s : c.seeds) seeds.push_back(read_csv(dir / ("seed_" + std::to_string(s) + ".csv")));
  const auto agg = read_csv(dir / "aggregate.csv");
  ASSERT_EQ(agg.size(), 6u);
  EXPECT_EQ(agg[0], (std::vector<std::string>{"episode", "mean_reward", "std_reward", "smoothed_mean_reward", "n_seeds"}));
  EXPECT_EQ(seeds[0][0], (std::vector<std::string>{"episode", "reward", "critic_loss_0", "critic_loss_1",
                                                   "critic_loss_2", "noise_scale"}));
  double running = 0.0;
  for (std::size_t ep = 1; ep <= 5; ++ep) {
    std::vector<double> r;
    for (const auto& s : seeds) r.push_back(std::stod(s[ep][1]));
    const double mean = (r[0] + r[1] + r[2]) / 3.0;
    double sq = 0.0;
    for (double v : r) sq += (v - mean) * (v - mean);
    running += mean;
    EXPECT_NEAR(std::stod(agg[ep][1]), mean, 1e-12);
    EXPECT_NEAR(std::stod(agg[ep][2]), std::sqrt(sq / 2.0), 1e-12);
    EXPECT_NEAR(std::stod(agg[ep][3]), running / static_cast<double>(ep), 1e-12);
    EXPECT_EQ(agg[ep][4], "3");
  }
}

TEST(Experiment, SmoothingUsesATrailingWindow) {
  std::vector<SeedResult> seeds(1);
  for (std::size_t ep = 0; ep < 30; ++ep) seeds[0].logs.push_back({ep, static_cast<double>(ep), {}, 0.0, 0});
  const auto rows = aggregate(seeds, 20);
  EXPECT_DOUBLE_EQ(rows[29].smoothed_mean_reward, (10.0 + 29.0) / 2.0);
  EXPECT_DOUBLE_EQ(rows[4].smoothed_mean_reward, 2.0);
  EXPECT_EQ(rows[29].std_reward, 0.0);
}

TEST(Experiment, RerunsAreBitwiseIdenticalAndJobCountDoesNotMatter) {
  const auto a = scratch_dir("rerun_a");
  const auto b = scratch_dir("rerun_b");
  auto ca = tiny(Algorithm::att_maddpg, EnvKind::routing_small, a);
  auto cb = tiny(Algorithm::att_maddpg, EnvKind::routing_small, b);
  cb.jobs = 3;
  run_experiment(ca);
  run_experiment(cb);
  EXPECT_EQ(read_file(a / "aggregate.csv"), read_file(b / "aggregate.csv"));
  EXPECT_EQ(read_file(a / "seed_2.csv"), read_file(b / "seed_2.csv"));
  // The manifests differ in output_dir and jobs; the parameters must not.
  const auto ka = load_checkpoint(a / "checkpoint_seed_2.ckpt");
  const auto kb = load_checkpoint(b / "checkpoint_seed_2.ckpt");
  ASSERT_EQ(ka.stores.size(), kb.stores.size());
  for (std::size_t i = 0; i < ka.stores.size(); ++i) {
    EXPECT_EQ(ka.stores[i].first, kb.stores[i].first);
    EXPECT_TRUE(ka.stores[i].second.values_equal(kb.stores[i].second)) << ka.stores[i].first;
  }
}

TEST(Experiment, OutputRootEnvironmentVariable) {
  const auto root = scratch_dir("root");
  ExperimentConfig c;
  c.output_dir = "relative/run";
  ::setenv("ATTMADDPG_OUTPUT_ROOT", root.c_str(), 1);
  EXPECT_EQ(resolve_output_dir(c), root / "relative/run");
  c.output_dir = "/abs/run";
  EXPECT_EQ(resolve_output_dir(c), fs::path("/abs/run"));
  ::unsetenv("ATTMADDPG_OUTPUT_ROOT");
}

TEST(Checkpoint, RoundTripPreservesEveryParameter) {
  auto c = tiny(Algorithm::att_maddpg, EnvKind::routing_small, "");
  train::Trainer t(c, 4);
  t.train();
  const auto ck = make_checkpoint(t);
  std::stringstream ss;
  write_checkpoint(ck, ss);
  const auto back = read_checkpoint(ss);
  EXPECT_EQ(back.seed, 4u);
  EXPECT_EQ(to_text(back.config), to_text(c));
  ASSERT_EQ(back.stores.size(), ck.stores.size());
  for (std::size_t i = 0; i < ck.stores.size(); ++i) {
    EXPECT_EQ(back.stores[i].first, ck.stores[i].first);
    EXPECT_TRUE(back.stores[i].second.values_equal(ck.stores[i].second));
  }
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream junk("ATTMADDPG-CHECKPOINT 1\nentry a b 2x2 0 4\nend 4\nshort");
  EXPECT_THROW(read_checkpoint(junk), ValidationError);
  std::stringstream wrong("something else\n");
  EXPECT_THROW(read_checkpoint(wrong), ValidationError);
}

namespace {

struct TrainedRun {
  Checkpoint ck;
  train::ReplayBuffer replay;
};

TrainedRun trained(Algorithm algo) {
  auto c = tiny(algo, EnvKind::routing_small, "");
  train::Trainer t(c, 9);
  t.train();
  return {make_checkpoint(t), t.replay()};
}

}  // namespace

TEST(DumpAttention, RowsAreSimplexAndMatchDirectRecomputation) {
  const auto run = trained(Algorithm::att_maddpg);
  const auto dump = dump_attention(run.ck, run.replay, 30, 0, 5);
  ASSERT_EQ(dump.samples.size(), 30u);
  const auto e = make_environment(run.ck.config);
  critic::AttentionCritic model({e->observation_dims(), {2, 2}, 0},
                                {run.ck.config.heads, run.ck.config.vec_dim, 8, 8, 8, critic::HeadMerge::attention});
  const auto& params = run.ck.store("critic_0");
  for (const auto& s : dump.samples) {
    double total = 0.0;
    for (double w : s.weights) total += w;
    EXPECT_NEAR(total, 1.0, 1e-6);
    const auto t = run.replay.at(s.replay_index);
    const auto out = model.critic_forward(params, env::concat(t.obs), t.actions[0], t.actions[1]);
    const auto q = model.scalarize_heads(params, out.head_qs);
    for (std::size_t k = 0; k < dump.heads; ++k) EXPECT_EQ(s.head_q[k], q[k]);
    EXPECT_EQ(s.scalar_q, out.scalar_q);
  }
  const auto csv = dump.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sample,digest,q_1,q_2,q_3,q_4,w_1,w_2,w_3,w_4,scalar_q");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);
}

TEST(DumpAttention, NonAttentionCheckpointIsUnsupported) {
  const auto run = trained(Algorithm::maddpg);
  EXPECT_THROW(dump_attention(run.ck, run.replay, 10), UsageError);
}

TEST(Trace, RoutingRewardIsOneMinusMluAndRerunsAreIdentical) {
  const auto run = trained(Algorithm::att_maddpg);
  auto e = make_environment(run.ck.config);
  const auto policy = policy_from_checkpoint(run.ck, *e);
  std::ostringstream a, b;
  EXPECT_EQ(trace_rollout(*policy, *e, 3, 100, a), 8u);
  trace_rollout(*policy, *e, 3, 100, b);
  EXPECT_EQ(a.str(), b.str());
  std::stringstream in(a.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 28), "step,action_0_0,action_0_1,a");
  for (std::string line; std::getline(in, line);) {
    std::vector<double> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(std::stod(cell));
    const double mlu = cells[cells.size() - 2];
    EXPECT_EQ(cells.back(), 1.0 - mlu);
  }
}

TEST(Trace, DimensionMismatchIsCheckpointIncompatible) {
  const auto run = trained(Algorithm::att_maddpg);
  auto c = run.ck.config;
  c.env = EnvKind::routing_large;
  const auto e = make_environment(c);
  EXPECT_THROW(policy_from_checkpoint(run.ck, *e), CheckpointIncompatible);
}

TEST(Cli, ExitCodes) {
  const auto dir = scratch_dir("cli");
  {
    std::ofstream(dir / "good.cfg") << "env = routing_small\nalgorithm = att_maddpg\nseeds = 1\nepisodes = 3\n"
                                       "horizon = 5\nwarmup = 8\nbatch_size = 4\nsave_replay = true\noutput_dir = "
                                    << (dir / "out").string() << "\n";
    std::ofstream(dir / "bad.cfg") << "algorithm = nope\n";
    std::ofstream(dir / "maddpg.cfg") << "env = coop_nav\nalgorithm = maddpg\nseeds = 1\nepisodes = 2\n"
                                         "horizon = 5\nwarmup = 8\nbatch_size = 4\noutput_dir = "
                                      << (dir / "m").string() << "\n";
  }
  EXPECT_EQ(run_cli("validate " + (dir / "good.cfg").string()), 0);
  EXPECT_EQ(run_cli("validate " + (dir / "bad.cfg").string()), 2);
  EXPECT_EQ(run_cli("run " + (dir / "good.cfg").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "seed_1.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "aggregate.csv"));
  const auto ck = (dir / "out" / "checkpoint_seed_1.ckpt").string();
  const auto rp = (dir / "out" / "replay_seed_1.bin").string();
  EXPECT_EQ(run_cli("dump-attention " + ck + " " + rp + " --n 20 --out " + (dir / "dump.csv").string()), 0);
  EXPECT_EQ(read_csv(dir / "dump.csv").size(), 21u);
  EXPECT_EQ(run_cli("trace " + ck + " --seed 2 --steps 5"), 0);
  EXPECT_EQ(run_cli("trace " + ck + " --env routing_large"), 3);
  EXPECT_EQ(run_cli("trace greedy --env coop_nav --steps 10"), 0);
  EXPECT_EQ(run_cli("run " + (dir / "maddpg.cfg").string()), 0);
  EXPECT_EQ(run_cli("dump-attention " + (dir / "m" / "checkpoint_seed_1.ckpt").string() + " " + rp), 2);
}
