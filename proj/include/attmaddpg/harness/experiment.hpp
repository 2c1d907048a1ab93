// Multi-seed experiment runs, per-seed and aggregate learning curves, and
// their CSV output.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "attmaddpg/harness/checkpoint.hpp"
#include "attmaddpg/harness/config.hpp"
#include "attmaddpg/train/trainer.hpp"

namespace attmaddpg::harness {

inline constexpr std::size_t kSmoothingWindow = 20;

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<train::EpisodeLog> logs;
};

struct AggregateRow {
  std::size_t episode = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;  // sample standard deviation across seeds
  double smoothed_mean_reward = 0.0;
  std::size_t seeds = 0;
};

struct ExperimentResult {
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
  std::filesystem::path output_dir;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Mean and spread over seeds per episode, plus a trailing moving average of
/// the mean over `window` episodes.
inline std::vector<AggregateRow> aggregate(const std::vector<SeedResult>& seeds,
                                           std::size_t window = kSmoothingWindow) {
  if (seeds.empty()) return {};
  std::size_t episodes = seeds.front().logs.size();
  for (const auto& s : seeds) episodes = std::min(episodes, s.logs.size());
  std::vector<AggregateRow> rows(episodes);
  const double n = static_cast<double>(seeds.size());
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    double sum = 0.0;
    for (const auto& s : seeds) sum += s.logs[ep].reward;
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& s : seeds) sq += (s.logs[ep].reward - mean) * (s.logs[ep].reward - mean);
    rows[ep] = {ep, mean, seeds.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0, 0.0, seeds.size()};
  }
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const std::size_t lo = ep + 1 >= window ? ep + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t k = lo; k <= ep; ++k) sum += rows[k].mean_reward;
    rows[ep].smoothed_mean_reward = sum / static_cast<double>(ep + 1 - lo);
  }
  return rows;
}

inline std::string seed_csv(const std::vector<train::EpisodeLog>& logs, std::size_t agents) {
  std::ostringstream out;
  out << "episode,reward";
  for (std::size_t i = 0; i < agents; ++i) out << ",critic_loss_" << i;
  out << ",noise_scale\n";
  for (const auto& l : logs) {
    out << l.episode << ',' << format_double(l.reward);
    for (std::size_t i = 0; i < agents; ++i) out << ',' << format_double(i < l.critic_loss.size() ? l.critic_loss[i] : 0.0);
    out << ',' << format_double(l.noise_scale) << '\n';
  }
  return out.str();
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "episode,mean_reward,std_reward,smoothed_mean_reward,n_seeds\n";
  for (const auto& r : rows) {
    out << r.episode << ',' << format_double(r.mean_reward) << ',' << format_double(r.std_reward) << ','
        << format_double(r.smoothed_mean_reward) << ',' << r.seeds << '\n';
  }
  return out.str();
}

/// output_dir, placed under $ATTMADDPG_OUTPUT_ROOT when that is set and the
/// configured directory is relative.
inline std::filesystem::path resolve_output_dir(const ExperimentConfig& c) {
  std::filesystem::path dir(c.output_dir);
  if (const char* root = std::getenv("ATTMADDPG_OUTPUT_ROOT"); root && *root && dir.is_relative()) {
    dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

/// Trains one seed and writes its artifacts into `dir` (when non-empty).
inline SeedResult run_seed(const ExperimentConfig& c, std::uint64_t seed, const std::filesystem::path& dir) {
  train::Trainer trainer(c, seed);
  SeedResult r{seed, trainer.train()};
  if (dir.empty()) return r;
  const auto stem = "seed_" + std::to_string(seed);
  write_text(dir / (stem + ".csv"), seed_csv(r.logs, trainer.environment().agent_count()));
  if (trainer.learns() && c.save_checkpoint) {
    save_checkpoint(make_checkpoint(trainer), (dir / ("checkpoint_" + stem + ".ckpt")).string());
  }
  if (trainer.learns() && c.save_replay) {
    std::ofstream out(dir / ("replay_" + stem + ".bin"), std::ios::binary);
    if (!out) throw Error("cannot write replay snapshot in '" + dir.string() + "'");
    trainer.replay().save(out);
  }
  return r;
}

/// All seeds of `c`, up to c.jobs at a time. Seeds are independent, so the
/// results do not depend on the job count. With `write_files` the per-seed
/// CSVs, aggregate.csv and the resolved config go to the output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& c, bool write_files = true) {
  c.validate();
  ExperimentResult result;
  if (write_files) {
    result.output_dir = resolve_output_dir(c);
    std::filesystem::create_directories(result.output_dir);
    write_text(result.output_dir / "config.txt", to_text(c));
  }
  result.seeds.resize(c.seeds.size());
  std::size_t next = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next >= c.seeds.size() || failure) return;
        k = next++;
      }
      try {
        result.seeds[k] = run_seed(c, c.seeds[k], result.output_dir);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::min(c.jobs, c.seeds.size());
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.aggregate = aggregate(result.seeds);
  if (write_files) write_text(result.output_dir / "aggregate.csv", aggregate_csv(result.aggregate));
  return result;
}

/// Mean reward over the last `n` episodes of one seed.
inline double final_mean_reward(const SeedResult& s, std::size_t n) {
  if (s.logs.empty()) throw UsageError("final_mean_reward: no episodes");
  const std::size_t k = std::min(n, s.logs.size());
  double sum = 0.0;
  for (std::size_t i = s.logs.size() - k; i < s.logs.size(); ++i) sum += s.logs[i].reward;
  return sum / static_cast<double>(k);
}

}  // namespace attmaddpg::harness
