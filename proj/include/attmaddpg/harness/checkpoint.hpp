// Checkpoints: a text manifest followed by a raw little-endian float64
// payload. See docs/formats.md.

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "attmaddpg/errors.hpp"
#include "attmaddpg/harness/config.hpp"
#include "attmaddpg/nn/parameter_store.hpp"
#include "attmaddpg/train/trainer.hpp"

namespace attmaddpg::harness {

inline constexpr const char* kCheckpointMagic = "ATTMADDPG-CHECKPOINT 1";

struct Checkpoint {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, nn::ParameterStore>> stores;

  bool has(const std::string& name) const {
    for (const auto& [n, s] : stores) {
      if (n == name) return true;
    }
    return false;
  }

  const nn::ParameterStore& store(const std::string& name) const {
    for (const auto& [n, s] : stores) {
      if (n == name) return s;
    }
    throw CheckpointIncompatible("checkpoint has no parameter store '" + name + "'");
  }
};

/// Online and target parameters of every agent in a trained run.
inline Checkpoint make_checkpoint(const train::Trainer& trainer) {
  Checkpoint ck;
  ck.config = trainer.config();
  ck.seed = trainer.seed();
  const auto& agents = trainer.agents();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto id = std::to_string(i);
    ck.stores.emplace_back("actor_" + id, agents[i].actor_params);
    ck.stores.emplace_back("actor_target_" + id, agents[i].actor_target);
    ck.stores.emplace_back("critic_" + id, agents[i].critic_params);
    ck.stores.emplace_back("critic_target_" + id, agents[i].critic_target);
  }
  return ck;
}

namespace detail {

inline std::string shape_token(const std::vector<std::size_t>& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

inline std::vector<std::size_t> parse_shape_token(const std::string& tok) {
  std::vector<std::size_t> shape;
  std::stringstream in(tok);
  for (std::string part; std::getline(in, part, 'x');) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw ValidationError("checkpoint: bad shape '" + tok + "'");
    }
    shape.push_back(std::stoull(part));
  }
  return shape;
}

}  // namespace detail

inline void write_checkpoint(const Checkpoint& ck, std::ostream& out) {
  out << kCheckpointMagic << "\n";
  out << "seed " << ck.seed << "\n";
  std::istringstream cfg(to_text(ck.config));
  for (std::string line; std::getline(cfg, line);) out << "config " << line << "\n";
  std::size_t offset = 0;
  for (const auto& [name, store] : ck.stores) {
    for (const auto& e : store.entries()) {
      out << "entry " << name << ' ' << e.name() << ' ' << detail::shape_token(e.shape()) << ' ' << offset << ' '
          << e.size() << "\n";
      offset += e.size();
    }
  }
  out << "end " << offset << "\n";
  for (const auto& [name, store] : ck.stores) {
    for (const auto& e : store.entries()) {
      out.write(reinterpret_cast<const char*>(e.values().data()),
                static_cast<std::streamsize>(e.size() * sizeof(double)));
    }
  }
  if (!out) throw Error("checkpoint: write failed");
}

inline Checkpoint read_checkpoint(std::istream& in) {
  auto bad = [](const std::string& what) { return ValidationError("checkpoint: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) throw bad("missing header");
  Checkpoint ck;
  std::string config_text;
  struct Pending {
    std::string store, entry;
    std::vector<std::size_t> shape;
    std::size_t offset, count;
  };
  std::vector<Pending> entries;
  std::size_t total = 0;
  bool ended = false;
  while (!ended && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "seed") {
      ls >> ck.seed;
    } else if (tag == "config") {
      config_text += line.substr(7) + "\n";
    } else if (tag == "entry") {
      Pending p;
      std::string shape;
      if (!(ls >> p.store >> p.entry >> shape >> p.offset >> p.count)) throw bad("malformed entry line");
      p.shape = detail::parse_shape_token(shape);
      entries.push_back(std::move(p));
    } else if (tag == "end") {
      if (!(ls >> total)) throw bad("malformed end line");
      ended = true;
    } else {
      throw bad("unexpected line '" + line + "'");
    }
  }
  if (!ended) throw bad("manifest has no end line");
  ck.config = parse_config(config_text);

  std::vector<double> payload(total);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw bad("truncated payload");

  for (const auto& p : entries) {
    if (p.offset + p.count > total) throw bad("entry '" + p.entry + "' lies outside the payload");
    if (!ck.has(p.store)) ck.stores.emplace_back(p.store, nn::ParameterStore{});
    nn::ParameterStore* target = nullptr;
    for (auto& [n, s] : ck.stores) {
      if (n == p.store) target = &s;
    }
    auto& e = target->add(p.entry, p.shape);
    if (e.size() != p.count) throw bad("entry '" + p.entry + "' count does not match its shape");
    std::copy(payload.begin() + static_cast<std::ptrdiff_t>(p.offset),
              payload.begin() + static_cast<std::ptrdiff_t>(p.offset + p.count), e.values().begin());
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  write_checkpoint(ck, out);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

/// Parameters of `name` after checking that they fit `expected_layout`.
inline const nn::ParameterStore& compatible_store(const Checkpoint& ck, const std::string& name,
                                                  const nn::ParameterStore& expected_layout) {
  const auto& s = ck.store(name);
  if (!s.same_layout(expected_layout)) {
    throw CheckpointIncompatible("checkpoint store '" + name +
                                 "' does not match the network dimensions of this environment");
  }
  return s;
}

/// Greedy actors restored from a checkpoint for `e`.
inline std::unique_ptr<env::Policy> policy_from_checkpoint(const Checkpoint& ck, const env::Environment& e) {
  const auto obs_dims = e.observation_dims();
  const auto spaces = e.action_spaces();
  std::vector<train::Actor> actors;
  std::vector<nn::ParameterStore> params;
  for (std::size_t i = 0; i < e.agent_count(); ++i) {
    train::Actor actor(obs_dims[i], spaces[i], ck.config.hidden_width);
    nn::ParameterStore layout;
    actor.declare(layout);
    params.push_back(compatible_store(ck, "actor_" + std::to_string(i), layout));
    actors.push_back(std::move(actor));
  }
  if (ck.has("actor_" + std::to_string(e.agent_count()))) {
    throw CheckpointIncompatible("checkpoint holds more agents than the environment has");
  }
  return std::make_unique<train::ActorPolicy>(std::move(actors), std::move(params));
}

}  // namespace attmaddpg::harness
