// Common interface for every critic architecture, and the plain
// fully-connected critics used by the MADDPG and independent DDPG learners.
//
// Critics consume batched joint inputs: joint_obs is [Σ obs_dims, batch] and
// joint_act is [Σ act_dims, batch], both in agent order. Each critic belongs
// to one agent and picks what it needs from the joint inputs.

#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/mlp.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::critic {

using nn::Matrix;
using nn::ParameterStore;

/// Per-agent dimensions and the agent whose critic this is.
struct JointLayout {
  std::vector<std::size_t> obs_dims;
  std::vector<std::size_t> act_dims;
  std::size_t agent = 0;

  std::size_t agents() const { return obs_dims.size(); }
  std::size_t obs_total() const { return std::accumulate(obs_dims.begin(), obs_dims.end(), std::size_t{0}); }
  std::size_t act_total() const { return std::accumulate(act_dims.begin(), act_dims.end(), std::size_t{0}); }
  std::size_t obs_offset(std::size_t j) const {
    return std::accumulate(obs_dims.begin(), obs_dims.begin() + static_cast<std::ptrdiff_t>(j), std::size_t{0});
  }
  std::size_t act_offset(std::size_t j) const {
    return std::accumulate(act_dims.begin(), act_dims.begin() + static_cast<std::ptrdiff_t>(j), std::size_t{0});
  }
  std::size_t own_obs_dim() const { return obs_dims.at(agent); }
  std::size_t own_act_dim() const { return act_dims.at(agent); }
  std::size_t teammate_act_dim() const { return act_total() - own_act_dim(); }

  void validate() const {
    if (obs_dims.empty() || obs_dims.size() != act_dims.size()) {
      throw ConfigurationError("joint layout: need one obs and one action dim per agent");
    }
    if (agent >= agents()) throw ConfigurationError("joint layout: agent index out of range");
    for (std::size_t j = 0; j < agents(); ++j) {
      if (obs_dims[j] == 0 || act_dims[j] == 0) throw ConfigurationError("joint layout: dims must be >= 1");
    }
  }

  void check(const Matrix& joint_obs, const Matrix& joint_act) const {
    if (static_cast<std::size_t>(joint_obs.rows()) != obs_total() ||
        static_cast<std::size_t>(joint_act.rows()) != act_total() ||
        joint_obs.cols() != joint_act.cols()) {
      throw ShapeError("critic input: got obs " + std::to_string(joint_obs.rows()) + "x" +
                       std::to_string(joint_obs.cols()) + ", actions " +
                       std::to_string(joint_act.rows()) + "x" + std::to_string(joint_act.cols()) +
                       ", expected " + std::to_string(obs_total()) + " and " +
                       std::to_string(act_total()) + " rows");
    }
  }

  Matrix own_obs(const Matrix& joint_obs) const {
    return joint_obs.middleRows(static_cast<Eigen::Index>(obs_offset(agent)), static_cast<Eigen::Index>(own_obs_dim()));
  }
  Matrix own_action(const Matrix& joint_act) const {
    return joint_act.middleRows(static_cast<Eigen::Index>(act_offset(agent)), static_cast<Eigen::Index>(own_act_dim()));
  }
  /// Teammates' actions concatenated in agent order, skipping `agent`.
  Matrix teammate_actions(const Matrix& joint_act) const {
    Matrix out(static_cast<Eigen::Index>(teammate_act_dim()), joint_act.cols());
    Eigen::Index row = 0;
    for (std::size_t j = 0; j < agents(); ++j) {
      if (j == agent) continue;
      const auto n = static_cast<Eigen::Index>(act_dims[j]);
      out.middleRows(row, n) = joint_act.middleRows(static_cast<Eigen::Index>(act_offset(j)), n);
      row += n;
    }
    return out;
  }
  /// Inverse of own_action/teammate_actions for gradients.
  Matrix assemble_actions(const Matrix& own, const Matrix& teammates) const {
    Matrix out(static_cast<Eigen::Index>(act_total()), own.cols());
    Eigen::Index row = 0;
    for (std::size_t j = 0; j < agents(); ++j) {
      const auto n = static_cast<Eigen::Index>(act_dims[j]);
      const auto off = static_cast<Eigen::Index>(act_offset(j));
      if (j == agent) {
        out.middleRows(off, n) = own;
      } else {
        out.middleRows(off, n) = teammates.middleRows(row, n);
        row += n;
      }
    }
    return out;
  }
};

/// Opaque per-forward record; each architecture derives its own.
struct CriticTape {
  virtual ~CriticTape() = default;
  bool recorded = false;
};

struct CriticInputGrads {
  Matrix joint_obs;
  Matrix joint_act;
};

class CriticModel {
 public:
  virtual ~CriticModel() = default;

  virtual std::string kind() const = 0;
  virtual const JointLayout& layout() const = 0;

  virtual void declare(ParameterStore& store) const = 0;
  virtual void initialize(ParameterStore& store, std::mt19937_64& rng) const = 0;
  virtual std::unique_ptr<CriticTape> make_tape() const = 0;

  /// Scalar Q per sample, [1, batch].
  virtual Matrix forward(const ParameterStore& params, const Matrix& joint_obs,
                         const Matrix& joint_act, CriticTape* tape) const = 0;

  /// Accumulates ∂(q_grad · Q)/∂params into grads and returns the input
  /// gradients. Throws UsageError if `tape` holds no forward pass.
  virtual CriticInputGrads backward(ParameterStore& params, const CriticTape& tape,
                                    const Matrix& q_grad) const = 0;

  /// Relu activation pattern of the recorded pass (finite-difference guard).
  virtual std::vector<std::uint8_t> relu_pattern(const CriticTape& tape) const = 0;

  ParameterStore make_params(std::mt19937_64& rng) const {
    ParameterStore store;
    declare(store);
    initialize(store, rng);
    return store;
  }
};

template <typename TapeT>
const TapeT& recorded_tape(const CriticTape& tape, const char* who) {
  const auto* t = dynamic_cast<const TapeT*>(&tape);
  if (!t) throw UsageError(std::string(who) + ": tape belongs to a different critic");
  if (!t->recorded) throw UsageError(std::string(who) + ": backward without a recorded forward");
  return *t;
}

/// Plain MLP over concatenated inputs. With `centralized` it sees the joint
/// observation and joint action (MADDPG); otherwise only its own agent's
/// observation and action (independent DDPG).
class FullyConnectedCritic final : public CriticModel {
 public:
  FullyConnectedCritic(JointLayout layout, std::vector<std::size_t> hidden, bool centralized)
      : layout_(std::move(layout)), centralized_(centralized) {
    layout_.validate();
    const std::size_t in = centralized_ ? layout_.obs_total() + layout_.act_total()
                                        : layout_.own_obs_dim() + layout_.own_act_dim();
    net_ = nn::Mlp({in, std::move(hidden), 1, nn::Activation::relu, nn::Activation::linear}, "q.");
  }

  std::string kind() const override { return centralized_ ? "maddpg" : "ddpg"; }
  const JointLayout& layout() const override { return layout_; }
  const nn::Mlp& network() const { return net_; }

  void declare(ParameterStore& store) const override { net_.declare(store); }
  void initialize(ParameterStore& store, std::mt19937_64& rng) const override { net_.initialize(store, rng); }
  std::unique_ptr<CriticTape> make_tape() const override { return std::make_unique<Tape>(); }

  Matrix forward(const ParameterStore& params, const Matrix& joint_obs, const Matrix& joint_act,
                 CriticTape* tape) const override {
    layout_.check(joint_obs, joint_act);
    Matrix input;
    if (centralized_) {
      input.resize(joint_obs.rows() + joint_act.rows(), joint_obs.cols());
      input << joint_obs, joint_act;
    } else {
      const Matrix o = layout_.own_obs(joint_obs);
      const Matrix a = layout_.own_action(joint_act);
      input.resize(o.rows() + a.rows(), o.cols());
      input << o, a;
    }
    auto* t = tape ? dynamic_cast<Tape*>(tape) : nullptr;
    if (tape && !t) throw UsageError("fully-connected critic: foreign tape");
    if (t) t->recorded = false;
    Matrix q = net_.forward(params, input, t ? &t->net : nullptr);
    if (t) t->recorded = true;
    return q;
  }

  CriticInputGrads backward(ParameterStore& params, const CriticTape& tape,
                            const Matrix& q_grad) const override {
    const auto& t = recorded_tape<Tape>(tape, "fully-connected critic");
    const Matrix d_in = net_.backward(params, t.net, q_grad);
    CriticInputGrads g;
    const Eigen::Index batch = q_grad.cols();
    g.joint_obs = Matrix::Zero(static_cast<Eigen::Index>(layout_.obs_total()), batch);
    g.joint_act = Matrix::Zero(static_cast<Eigen::Index>(layout_.act_total()), batch);
    if (centralized_) {
      g.joint_obs = d_in.topRows(g.joint_obs.rows());
      g.joint_act = d_in.bottomRows(g.joint_act.rows());
    } else {
      const auto no = static_cast<Eigen::Index>(layout_.own_obs_dim());
      const auto na = static_cast<Eigen::Index>(layout_.own_act_dim());
      g.joint_obs.middleRows(static_cast<Eigen::Index>(layout_.obs_offset(layout_.agent)), no) = d_in.topRows(no);
      g.joint_act.middleRows(static_cast<Eigen::Index>(layout_.act_offset(layout_.agent)), na) = d_in.bottomRows(na);
    }
    return g;
  }

  std::vector<std::uint8_t> relu_pattern(const CriticTape& tape) const override {
    const auto& t = recorded_tape<Tape>(tape, "fully-connected critic");
    std::vector<std::uint8_t> bits;
    net_.append_relu_pattern(t.net, bits);
    return bits;
  }

 private:
  struct Tape : CriticTape {
    nn::MlpTape net;
  };
  JointLayout layout_;
  bool centralized_;
  nn::Mlp net_;
};

}  // namespace attmaddpg::critic
