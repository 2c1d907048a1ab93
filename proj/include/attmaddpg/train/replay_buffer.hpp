// Fixed-capacity FIFO experience replay with uniform sampling.
//
// Each transition is stored as one flat row:
//   [joint obs | joint action | rewards | joint next obs | done]
// plus the seed of the episode it came from and its step index.

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "attmaddpg/env/environment.hpp"
#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::train {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

struct Transition {
  std::vector<env::AgentVector> obs;
  std::vector<env::AgentVector> actions;
  std::vector<double> rewards;
  std::vector<env::AgentVector> next_obs;
  bool done = false;
  std::uint64_t episode_seed = 0;
  std::uint32_t step = 0;
};

/// Column-per-sample batch matrices.
struct Batch {
  nn::Matrix obs;       // [Σ obs_dims, B]
  nn::Matrix actions;   // [Σ act_dims, B]
  nn::Matrix rewards;   // [agents, B]
  nn::Matrix next_obs;  // [Σ obs_dims, B]
  nn::Matrix done;      // [1, B], 1 for terminal transitions
  std::size_t size() const { return static_cast<std::size_t>(obs.cols()); }
};

class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::vector<std::size_t> obs_dims, std::vector<std::size_t> act_dims)
      : capacity_(capacity), obs_dims_(std::move(obs_dims)), act_dims_(std::move(act_dims)) {
    if (capacity_ == 0) throw ConfigurationError("replay buffer capacity must be >= 1");
    if (obs_dims_.empty() || obs_dims_.size() != act_dims_.size()) {
      throw ConfigurationError("replay buffer: need one obs and one action dim per agent");
    }
    obs_total_ = std::accumulate(obs_dims_.begin(), obs_dims_.end(), std::size_t{0});
    act_total_ = std::accumulate(act_dims_.begin(), act_dims_.end(), std::size_t{0});
    width_ = 2 * obs_total_ + act_total_ + agents() + 1;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t agents() const { return obs_dims_.size(); }
  const std::vector<std::size_t>& obs_dims() const { return obs_dims_; }
  const std::vector<std::size_t>& act_dims() const { return act_dims_; }

  /// Appends a transition, evicting the oldest one when full.
  void push(const Transition& t) {
    check(t);
    const std::size_t slot = (head_ + size_) % capacity_;
    if (rows_.size() < capacity_ * width_ && slot * width_ == rows_.size()) {
      rows_.resize(rows_.size() + width_);
      seeds_.push_back(0);
      steps_.push_back(0);
    }
    double* row = rows_.data() + slot * width_;
    auto put = [&row](const std::vector<env::AgentVector>& parts) {
      for (const auto& p : parts) row = std::copy(p.begin(), p.end(), row);
    };
    put(t.obs);
    put(t.actions);
    row = std::copy(t.rewards.begin(), t.rewards.end(), row);
    put(t.next_obs);
    *row = t.done ? 1.0 : 0.0;
    seeds_[slot] = t.episode_seed;
    steps_[slot] = t.step;
    if (size_ < capacity_) {
      ++size_;
    } else {
      head_ = (head_ + 1) % capacity_;
    }
  }

  /// i = 0 is the oldest stored transition.
  Transition at(std::size_t i) const {
    if (i >= size_) throw UsageError("replay buffer: index out of range");
    const std::size_t slot = (head_ + i) % capacity_;
    const double* row = rows_.data() + slot * width_;
    Transition t;
    auto take = [&row](const std::vector<std::size_t>& dims, std::vector<env::AgentVector>& out) {
      for (std::size_t d : dims) {
        out.emplace_back(row, row + d);
        row += d;
      }
    };
    take(obs_dims_, t.obs);
    take(act_dims_, t.actions);
    t.rewards.assign(row, row + agents());
    row += agents();
    take(obs_dims_, t.next_obs);
    t.done = *row != 0.0;
    t.episode_seed = seeds_[slot];
    t.step = steps_[slot];
    return t;
  }

  /// `n` indices drawn uniformly with replacement.
  Batch sample(std::size_t n, std::mt19937_64& rng) const {
    if (size_ == 0) throw UsageError("replay buffer: cannot sample from an empty buffer");
    if (n == 0) throw UsageError("replay buffer: batch size must be >= 1");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng);
    return gather(idx);
  }

  Batch gather(std::span<const std::size_t> indices) const {
    const auto B = static_cast<Eigen::Index>(indices.size());
    Batch b;
    b.obs.resize(static_cast<Eigen::Index>(obs_total_), B);
    b.actions.resize(static_cast<Eigen::Index>(act_total_), B);
    b.rewards.resize(static_cast<Eigen::Index>(agents()), B);
    b.next_obs.resize(static_cast<Eigen::Index>(obs_total_), B);
    b.done.resize(1, B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const std::size_t i = indices[static_cast<std::size_t>(c)];
      if (i >= size_) throw UsageError("replay buffer: index out of range");
      const double* row = rows_.data() + ((head_ + i) % capacity_) * width_;
      auto fill = [&row, c](nn::Matrix& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = *row++;
      };
      fill(b.obs);
      fill(b.actions);
      fill(b.rewards);
      fill(b.next_obs);
      fill(b.done);
    }
    return b;
  }

  /// Binary snapshot, oldest transition first. See docs/formats.md.
  void save(std::ostream& out) const {
    out << "ATTMADDPG-REPLAY 1\n";
    out << "agents " << agents() << "\nobs";
    for (auto d : obs_dims_) out << ' ' << d;
    out << "\nact";
    for (auto d : act_dims_) out << ' ' << d;
    out << "\ncount " << size_ << "\n";
    for (std::size_t i = 0; i < size_; ++i) {
      const std::size_t slot = (head_ + i) % capacity_;
      out.write(reinterpret_cast<const char*>(rows_.data() + slot * width_),
                static_cast<std::streamsize>(width_ * sizeof(double)));
      out.write(reinterpret_cast<const char*>(&seeds_[slot]), sizeof(std::uint64_t));
      out.write(reinterpret_cast<const char*>(&steps_[slot]), sizeof(std::uint32_t));
    }
    if (!out) throw Error("replay buffer: write failed");
  }

  /// Loads a snapshot into a buffer sized to hold it (capacity ≥ 1).
  static ReplayBuffer load(std::istream& in, std::size_t capacity = 0) {
    auto bad = [](const std::string& what) { return ValidationError("replay snapshot: " + what); };
    std::string line;
    if (!std::getline(in, line) || line != "ATTMADDPG-REPLAY 1") throw bad("missing header");
    std::size_t agents = 0;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "agents %zu", &agents) != 1 || agents == 0) {
      throw bad("missing agent count");
    }
    auto dims = [&](const char* tag) {
      if (!std::getline(in, line)) throw bad(std::string("missing ") + tag + " dims");
      std::istringstream ls(line);
      std::string word;
      ls >> word;
      if (word != tag) throw bad(std::string("missing ") + tag + " dims");
      std::vector<std::size_t> d;
      for (std::size_t v; ls >> v;) d.push_back(v);
      if (d.size() != agents) throw bad(std::string(tag) + " dims do not match the agent count");
      return d;
    };
    auto obs = dims("obs");
    auto act = dims("act");
    std::size_t count = 0;
    if (!std::getline(in, line) || std::sscanf(line.c_str(), "count %zu", &count) != 1) {
      throw bad("missing count");
    }
    ReplayBuffer buf(std::max<std::size_t>({capacity, count, 1}), obs, act);
    buf.rows_.resize(count * buf.width_);
    buf.seeds_.resize(count);
    buf.steps_.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      in.read(reinterpret_cast<char*>(buf.rows_.data() + i * buf.width_),
              static_cast<std::streamsize>(buf.width_ * sizeof(double)));
      in.read(reinterpret_cast<char*>(&buf.seeds_[i]), sizeof(std::uint64_t));
      in.read(reinterpret_cast<char*>(&buf.steps_[i]), sizeof(std::uint32_t));
      if (!in) throw bad("truncated payload");
    }
    buf.size_ = count;
    return buf;
  }

 private:
  void check(const Transition& t) const {
    auto fits = [](const std::vector<env::AgentVector>& parts, const std::vector<std::size_t>& dims) {
      if (parts.size() != dims.size()) return false;
      for (std::size_t i = 0; i < dims.size(); ++i) {
        if (parts[i].size() != dims[i]) return false;
      }
      return true;
    };
    if (!fits(t.obs, obs_dims_) || !fits(t.next_obs, obs_dims_) || !fits(t.actions, act_dims_) ||
        t.rewards.size() != agents()) {
      throw ShapeError("replay buffer: transition does not match the buffer layout");
    }
  }

  std::size_t capacity_;
  std::vector<std::size_t> obs_dims_;
  std::vector<std::size_t> act_dims_;
  std::size_t obs_total_ = 0;
  std::size_t act_total_ = 0;
  std::size_t width_ = 0;
  std::vector<double> rows_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::uint32_t> steps_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

}  // namespace attmaddpg::train
