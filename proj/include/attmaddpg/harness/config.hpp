// Experiment configuration: the single table of defaults, a flat
// `key = value` text format, validation, and environment construction.

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "attmaddpg/env/particle.hpp"
#include "attmaddpg/env/routing.hpp"
#include "attmaddpg/errors.hpp"

#ifndef ATTMADDPG_DATA_DIR
#define ATTMADDPG_DATA_DIR "data"
#endif

namespace attmaddpg::harness {

enum class EnvKind { routing_small, routing_large, coop_nav, predator_prey };
enum class Algorithm { att_maddpg, maddpg, khead, ddpg, wcmp, greedy };

inline const char* to_string(EnvKind e) {
  switch (e) {
    case EnvKind::routing_small: return "routing_small";
    case EnvKind::routing_large: return "routing_large";
    case EnvKind::coop_nav: return "coop_nav";
    case EnvKind::predator_prey: return "predator_prey";
  }
  return "?";
}

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::att_maddpg: return "att_maddpg";
    case Algorithm::maddpg: return "maddpg";
    case Algorithm::khead: return "khead";
    case Algorithm::ddpg: return "ddpg";
    case Algorithm::wcmp: return "wcmp";
    case Algorithm::greedy: return "greedy";
  }
  return "?";
}

inline EnvKind parse_env(const std::string& s) {
  for (auto e : {EnvKind::routing_small, EnvKind::routing_large, EnvKind::coop_nav, EnvKind::predator_prey}) {
    if (s == to_string(e)) return e;
  }
  throw ConfigurationError("field 'env': unknown environment '" + s + "'");
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::att_maddpg, Algorithm::maddpg, Algorithm::khead, Algorithm::ddpg,
                 Algorithm::wcmp, Algorithm::greedy}) {
    if (s == to_string(a)) return a;
  }
  throw ConfigurationError("field 'algorithm': unknown algorithm '" + s + "'");
}

inline bool is_routing(EnvKind e) { return e == EnvKind::routing_small || e == EnvKind::routing_large; }
inline bool is_rule_based(Algorithm a) { return a == Algorithm::wcmp || a == Algorithm::greedy; }

constexpr std::size_t kRoutingDefaultHorizon = 50;
constexpr std::size_t kParticleDefaultHorizon = 25;

struct ExperimentConfig {
  EnvKind env = EnvKind::routing_small;
  Algorithm algorithm = Algorithm::att_maddpg;
  std::size_t heads = 4;  // K
  std::vector<std::uint64_t> seeds{1};
  std::size_t episodes = 300;
  std::size_t horizon = 0;  // 0 selects kRoutingDefaultHorizon / kParticleDefaultHorizon

  double actor_lr = 0.001;
  double critic_lr = 0.01;
  double tau = 0.001;
  std::size_t buffer_capacity = 100000;
  std::size_t batch_size = 128;
  double gamma = 0.95;
  std::size_t hidden_width = 32;
  std::size_t vec_dim = 32;
  std::size_t warmup = 1024;

  double noise_initial = 0.3;
  double noise_final = 0.05;
  double noise_anneal_fraction = 0.5;  // of all episodes

  std::string topology_file;  // empty selects the shipped file for `env`
  double demand_noise = 0.2;
  double exploration_bonus = 0.0;

  double dt = 0.25;
  double v_max = 1.0;
  double catch_radius = 0.5;
  double prey_flee_prob = 0.7;

  std::string output_dir = "runs";
  bool save_checkpoint = true;
  bool save_replay = false;
  std::size_t jobs = 1;

  std::size_t effective_horizon() const {
    if (horizon != 0) return horizon;
    return is_routing(env) ? kRoutingDefaultHorizon : kParticleDefaultHorizon;
  }

  std::string effective_topology_file() const {
    if (!topology_file.empty()) return topology_file;
    return std::string(ATTMADDPG_DATA_DIR) + (env == EnvKind::routing_large ? "/large.topo" : "/small.topo");
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
      throw ConfigurationError("field '" + field + "': " + msg);
    };
    if ((algorithm == Algorithm::att_maddpg || algorithm == Algorithm::khead) && heads < 2) {
      fail("K", "must be >= 2 for " + std::string(to_string(algorithm)));
    }
    if (seeds.empty()) fail("seeds", "at least one seed is required");
    if (episodes == 0) fail("episodes", "must be >= 1");
    if (!(actor_lr > 0.0)) fail("actor_lr", "must be > 0");
    if (!(critic_lr > 0.0)) fail("critic_lr", "must be > 0");
    if (!(tau >= 0.0 && tau <= 1.0)) fail("tau", "must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma", "must lie in [0, 1]");
    if (batch_size == 0) fail("batch_size", "must be >= 1");
    if (buffer_capacity == 0) fail("buffer_capacity", "must be >= 1");
    if (hidden_width == 0) fail("hidden_width", "must be >= 1");
    if (vec_dim == 0) fail("vec_dim", "must be >= 1");
    if (noise_initial < 0.0) fail("noise_initial", "must be >= 0");
    if (noise_final < 0.0) fail("noise_final", "must be >= 0");
    if (!(noise_anneal_fraction >= 0.0 && noise_anneal_fraction <= 1.0)) {
      fail("noise_anneal_fraction", "must lie in [0, 1]");
    }
    if (demand_noise < 0.0 || demand_noise >= 1.0) fail("demand_noise", "must lie in [0, 1)");
    if (!(dt > 0.0)) fail("dt", "must be > 0");
    if (!(v_max > 0.0)) fail("v_max", "must be > 0");
    if (catch_radius < 0.0) fail("catch_radius", "must be >= 0");
    if (prey_flee_prob < 0.0 || prey_flee_prob > 1.0) fail("prey_flee_prob", "must lie in [0, 1]");
    if (jobs == 0) fail("jobs", "must be >= 1");
    if (algorithm == Algorithm::wcmp && !is_routing(env)) fail("algorithm", "wcmp needs a routing env");
    if (algorithm == Algorithm::greedy && is_routing(env)) fail("algorithm", "greedy needs a particle env");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_unsigned(const std::string& field, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigurationError("field '" + field + "': '" + v + "' is not a non-negative integer");
  }
  return out;
}

inline double parse_real(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigurationError("field '" + field + "': '" + v + "' is not a number");
  }
}

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigurationError("field '" + field + "': '" + v + "' is not true/false");
}

/// "1,2,3" or "1..5" (inclusive).
inline std::vector<std::uint64_t> parse_seeds(const std::string& v) {
  std::vector<std::uint64_t> out;
  if (auto dots = v.find(".."); dots != std::string::npos) {
    const auto lo = parse_unsigned<std::uint64_t>("seeds", trim(v.substr(0, dots)));
    const auto hi = parse_unsigned<std::uint64_t>("seeds", trim(v.substr(dots + 2)));
    if (hi < lo) throw ConfigurationError("field 'seeds': empty range '" + v + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::stringstream in(v);
  for (std::string part; std::getline(in, part, ',');) {
    out.push_back(parse_unsigned<std::uint64_t>("seeds", trim(part)));
  }
  return out;
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Applies one `key = value` assignment.
inline void set_field(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string& k = key;
  const std::string& v = value;
  if (k == "env") c.env = parse_env(v);
  else if (k == "algorithm") c.algorithm = parse_algorithm(v);
  else if (k == "K") c.heads = parse_unsigned<std::size_t>(k, v);
  else if (k == "seeds") c.seeds = parse_seeds(v);
  else if (k == "episodes") c.episodes = parse_unsigned<std::size_t>(k, v);
  else if (k == "horizon") c.horizon = parse_unsigned<std::size_t>(k, v);
  else if (k == "actor_lr") c.actor_lr = parse_real(k, v);
  else if (k == "critic_lr") c.critic_lr = parse_real(k, v);
  else if (k == "tau") c.tau = parse_real(k, v);
  else if (k == "buffer_capacity") c.buffer_capacity = parse_unsigned<std::size_t>(k, v);
  else if (k == "batch_size") c.batch_size = parse_unsigned<std::size_t>(k, v);
  else if (k == "gamma") c.gamma = parse_real(k, v);
  else if (k == "hidden_width") c.hidden_width = parse_unsigned<std::size_t>(k, v);
  else if (k == "vec_dim") c.vec_dim = parse_unsigned<std::size_t>(k, v);
  else if (k == "warmup") c.warmup = parse_unsigned<std::size_t>(k, v);
  else if (k == "noise_initial") c.noise_initial = parse_real(k, v);
  else if (k == "noise_final") c.noise_final = parse_real(k, v);
  else if (k == "noise_anneal_fraction") c.noise_anneal_fraction = parse_real(k, v);
  else if (k == "topology_file") c.topology_file = v;
  else if (k == "demand_noise") c.demand_noise = parse_real(k, v);
  else if (k == "exploration_bonus") c.exploration_bonus = parse_real(k, v);
  else if (k == "dt") c.dt = parse_real(k, v);
  else if (k == "v_max") c.v_max = parse_real(k, v);
  else if (k == "catch_radius") c.catch_radius = parse_real(k, v);
  else if (k == "prey_flee_prob") c.prey_flee_prob = parse_real(k, v);
  else if (k == "output_dir") c.output_dir = v;
  else if (k == "save_checkpoint") c.save_checkpoint = parse_bool(k, v);
  else if (k == "save_replay") c.save_replay = parse_bool(k, v);
  else if (k == "jobs") c.jobs = parse_unsigned<std::size_t>(k, v);
  else throw ConfigurationError("unknown field '" + k + "'");
}

/// Parses `key = value` lines; '#' starts a comment. Unset keys keep their
/// defaults. The result is validated.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    line = detail::trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigurationError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_field(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// Every field in canonical order; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const ExperimentConfig& c) {
  using detail::format_real;
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  std::ostringstream out;
  out << "env = " << to_string(c.env) << "\n"
      << "algorithm = " << to_string(c.algorithm) << "\n"
      << "K = " << c.heads << "\n"
      << "seeds = " << seeds << "\n"
      << "episodes = " << c.episodes << "\n"
      << "horizon = " << c.horizon << "\n"
      << "actor_lr = " << format_real(c.actor_lr) << "\n"
      << "critic_lr = " << format_real(c.critic_lr) << "\n"
      << "tau = " << format_real(c.tau) << "\n"
      << "buffer_capacity = " << c.buffer_capacity << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "gamma = " << format_real(c.gamma) << "\n"
      << "hidden_width = " << c.hidden_width << "\n"
      << "vec_dim = " << c.vec_dim << "\n"
      << "warmup = " << c.warmup << "\n"
      << "noise_initial = " << format_real(c.noise_initial) << "\n"
      << "noise_final = " << format_real(c.noise_final) << "\n"
      << "noise_anneal_fraction = " << format_real(c.noise_anneal_fraction) << "\n"
      << "topology_file = " << c.topology_file << "\n"
      << "demand_noise = " << format_real(c.demand_noise) << "\n"
      << "exploration_bonus = " << format_real(c.exploration_bonus) << "\n"
      << "dt = " << format_real(c.dt) << "\n"
      << "v_max = " << format_real(c.v_max) << "\n"
      << "catch_radius = " << format_real(c.catch_radius) << "\n"
      << "prey_flee_prob = " << format_real(c.prey_flee_prob) << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "save_checkpoint = " << (c.save_checkpoint ? "true" : "false") << "\n"
      << "save_replay = " << (c.save_replay ? "true" : "false") << "\n"
      << "jobs = " << c.jobs << "\n";
  return out.str();
}

inline std::unique_ptr<env::Environment> make_environment(const ExperimentConfig& c) {
  if (is_routing(c.env)) {
    env::RoutingOptions opts;
    opts.horizon = c.effective_horizon();
    opts.demand_noise = c.demand_noise;
    opts.exploration_bonus = c.exploration_bonus;
    return std::make_unique<env::RoutingEnv>(env::load_topology_file(c.effective_topology_file()), opts);
  }
  env::ParticleOptions opts;
  opts.task = c.env == EnvKind::coop_nav ? env::ParticleTask::navigation : env::ParticleTask::pursuit;
  opts.horizon = c.effective_horizon();
  opts.dt = c.dt;
  opts.v_max = c.v_max;
  opts.catch_radius = c.catch_radius;
  opts.prey_flee_prob = c.prey_flee_prob;
  return std::make_unique<env::ParticleEnv>(opts);
}

}  // namespace attmaddpg::harness
