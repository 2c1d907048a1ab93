// Centralized critic with a K-head module and a teammate attention module.
//
// For agent i with joint observation s, own action a_i and teammate actions
// a_-i:
//
//   e       = relu(W_e s + b_e)                      shared state encoder
//   Q^k     = head_k([e; a_i])          k = 1..K     action-conditional Q-vectors
//   h       = embed(a_-i)                            teammate embedding
//   W^k     = softmax_k(⟨h, Q^k⟩)                    attention weights
//   Q^c     = Σ_k W^k Q^k                            contextual Q-vector
//   Q       = w_s · Q^c + b_s                        scalar Q-value
//
// Teammate actions reach the output only through the attention weights; the
// heads never see them. With HeadMerge::uniform the embedding is dropped and
// W^k = 1/K, which is the K-head ablation without attention.

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/critic/critic_model.hpp"
#include "attmaddpg/nn/mlp.hpp"
#include "attmaddpg/nn/ops.hpp"

namespace attmaddpg::critic {

using nn::Vector;

enum class HeadMerge { attention, uniform };

struct AttentionCriticConfig {
  std::size_t heads = 4;     // K
  std::size_t vec_dim = 32;  // width of Q^k, h and Q^c
  std::size_t encoder_hidden = 32;
  std::size_t head_hidden = 32;
  std::size_t embed_hidden = 32;
  HeadMerge merge = HeadMerge::attention;

  void validate() const {
    if (heads < 2) throw ConfigurationError("attention critic: K must be >= 2");
    if (vec_dim < 1) throw ConfigurationError("attention critic: vec_dim must be >= 1");
    if (encoder_hidden < 1 || head_hidden < 1 || embed_hidden < 1) {
      throw ConfigurationError("attention critic: hidden widths must be >= 1");
    }
  }
};

struct AttentionCriticOutput {
  std::vector<Vector> head_qs;
  Vector teammate_embedding;
  std::vector<double> weights;
  Vector contextual_q;
  double scalar_q = 0.0;
};

/// softmax over k of ⟨h, Q^k⟩.
inline std::vector<double> attention_weights(const Vector& h, const std::vector<Vector>& head_qs) {
  std::vector<double> scores;
  for (const auto& q : head_qs) {
    scores.push_back(nn::dot_score(std::span<const double>(h.data(), static_cast<std::size_t>(h.size())),
                                   std::span<const double>(q.data(), static_cast<std::size_t>(q.size()))));
  }
  return nn::softmax(scores);
}

/// Σ_k weights[k] · head_qs[k].
inline Vector contextual_q(std::span<const double> weights, const std::vector<Vector>& head_qs) {
  if (weights.size() != head_qs.size() || head_qs.empty()) {
    throw ShapeError("contextual_q: need one weight per head");
  }
  Vector out = Vector::Zero(head_qs.front().size());
  for (std::size_t k = 0; k < head_qs.size(); ++k) {
    if (head_qs[k].size() != out.size()) throw ShapeError("contextual_q: heads differ in width");
    out += weights[k] * head_qs[k];
  }
  return out;
}

class AttentionCritic final : public CriticModel {
 public:
  AttentionCritic(JointLayout layout, AttentionCriticConfig config)
      : layout_(std::move(layout)), config_(config) {
    layout_.validate();
    config_.validate();
    if (config_.merge == HeadMerge::attention && layout_.teammate_act_dim() == 0) {
      throw ConfigurationError("attention critic needs at least one teammate");
    }
    using nn::Activation;
    encoder_ = nn::Mlp({layout_.obs_total(), {}, config_.encoder_hidden, Activation::relu, Activation::relu},
                       "encoder.");
    for (std::size_t k = 0; k < config_.heads; ++k) {
      heads_.emplace_back(nn::MlpSpec{config_.encoder_hidden + layout_.own_act_dim(), {config_.head_hidden},
                                      config_.vec_dim, Activation::relu, Activation::linear},
                          "head" + std::to_string(k) + ".");
    }
    if (uses_attention()) {
      embed_ = nn::Mlp({layout_.teammate_act_dim(), {config_.embed_hidden}, config_.vec_dim,
                        Activation::relu, Activation::linear},
                       "embed.");
    }
    scalar_ = nn::Mlp({config_.vec_dim, {}, 1, Activation::relu, Activation::linear}, "scalar.");
  }

  std::string kind() const override { return uses_attention() ? "att_maddpg" : "khead"; }
  const JointLayout& layout() const override { return layout_; }
  const AttentionCriticConfig& config() const { return config_; }
  bool uses_attention() const { return config_.merge == HeadMerge::attention; }
  std::size_t heads() const { return config_.heads; }

  void declare(ParameterStore& store) const override {
    encoder_.declare(store);
    for (const auto& h : heads_) h.declare(store);
    if (uses_attention()) embed_.declare(store);
    scalar_.declare(store);
  }

  void initialize(ParameterStore& store, std::mt19937_64& rng) const override {
    encoder_.initialize(store, rng);
    for (const auto& h : heads_) h.initialize(store, rng);
    if (uses_attention()) embed_.initialize(store, rng);
    scalar_.initialize(store, rng);
  }

  std::unique_ptr<CriticTape> make_tape() const override { return std::make_unique<Tape>(); }

  Matrix forward(const ParameterStore& params, const Matrix& joint_obs, const Matrix& joint_act,
                 CriticTape* tape) const override {
    Tape* t = nullptr;
    if (tape) {
      t = dynamic_cast<Tape*>(tape);
      if (!t) throw UsageError("attention critic: foreign tape");
    }
    Tape local;
    Tape& work = t ? *t : local;
    run(params, joint_obs, joint_act, work);
    return work.q;
  }

  CriticInputGrads backward(ParameterStore& params, const CriticTape& tape,
                            const Matrix& q_grad) const override {
    const auto& t = recorded_tape<Tape>(tape, "attention critic");
    if (q_grad.rows() != 1 || q_grad.cols() != t.q.cols()) throw ShapeError("attention critic: q_grad shape");
    const std::size_t K = config_.heads;

    const Matrix d_qc = scalar_.backward(params, t.scalar, q_grad);  // [V, B]
    std::vector<Matrix> d_heads(K);
    Matrix d_weights(static_cast<Eigen::Index>(K), q_grad.cols());
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      d_weights.row(kk) = (d_qc.array() * t.head_q[k].array()).colwise().sum();
      d_heads[k] = (d_qc.array().rowwise() * t.weights.row(kk).array()).matrix();
    }

    Matrix d_team;
    if (uses_attention()) {
      // softmax Jacobian: ds_k = w_k (dw_k − Σ_j w_j dw_j)
      const Eigen::RowVectorXd mix = (t.weights.array() * d_weights.array()).colwise().sum();
      const Matrix d_scores = (t.weights.array() * (d_weights.rowwise() - mix).array()).matrix();
      Matrix d_h = Matrix::Zero(t.h.rows(), t.h.cols());
      for (std::size_t k = 0; k < K; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        d_heads[k].array() += t.h.array().rowwise() * d_scores.row(kk).array();
        d_h.array() += t.head_q[k].array().rowwise() * d_scores.row(kk).array();
      }
      d_team = embed_.backward(params, t.embed, d_h);
    } else {
      d_team = Matrix::Zero(static_cast<Eigen::Index>(layout_.teammate_act_dim()), q_grad.cols());
    }

    Matrix d_head_in = Matrix::Zero(static_cast<Eigen::Index>(config_.encoder_hidden + layout_.own_act_dim()),
                                     q_grad.cols());
    for (std::size_t k = 0; k < K; ++k) d_head_in += heads_[k].backward(params, t.heads[k], d_heads[k]);
    const auto enc = static_cast<Eigen::Index>(config_.encoder_hidden);
    const Matrix d_own = d_head_in.bottomRows(d_head_in.rows() - enc);

    CriticInputGrads g;
    g.joint_obs = encoder_.backward(params, t.encoder, d_head_in.topRows(enc));
    g.joint_act = layout_.assemble_actions(d_own, d_team);
    return g;
  }

  std::vector<std::uint8_t> relu_pattern(const CriticTape& tape) const override {
    const auto& t = recorded_tape<Tape>(tape, "attention critic");
    std::vector<std::uint8_t> bits;
    encoder_.append_relu_pattern(t.encoder, bits);
    for (std::size_t k = 0; k < heads_.size(); ++k) heads_[k].append_relu_pattern(t.heads[k], bits);
    if (uses_attention()) embed_.append_relu_pattern(t.embed, bits);
    return bits;
  }

  // Single-sample views of the individual stages.

  /// K head vectors from (s, a_i); teammate actions play no part.
  std::vector<Vector> khead_forward(const ParameterStore& params, std::span<const double> joint_obs,
                                    std::span<const double> own_action) const {
    if (joint_obs.size() != layout_.obs_total() || own_action.size() != layout_.own_act_dim()) {
      throw ShapeError("khead_forward: input lengths do not match the layout");
    }
    const Matrix e = encoder_.forward(params, nn::column(joint_obs));
    Matrix in(e.rows() + static_cast<Eigen::Index>(own_action.size()), 1);
    in << e, nn::column(own_action);
    std::vector<Vector> out;
    for (const auto& h : heads_) out.push_back(h.forward(params, in).col(0));
    return out;
  }

  Vector teammate_embed(const ParameterStore& params, std::span<const double> teammate_actions) const {
    if (!uses_attention()) throw UsageError("teammate_embed: critic has no attention module");
    if (teammate_actions.size() != layout_.teammate_act_dim()) {
      throw ShapeError("teammate_embed: teammate action length does not match the layout");
    }
    return embed_.forward(params, nn::column(teammate_actions)).col(0);
  }

  double scalar_head(const ParameterStore& params, const Vector& contextual) const {
    if (static_cast<std::size_t>(contextual.size()) != config_.vec_dim) {
      throw ShapeError("scalar_head: width mismatch");
    }
    return scalar_.forward(params, Matrix(contextual))(0, 0);
  }

  /// The scalar head applied to each head vector on its own.
  std::vector<double> scalarize_heads(const ParameterStore& params, const std::vector<Vector>& head_qs) const {
    std::vector<double> out;
    for (const auto& q : head_qs) out.push_back(scalar_head(params, q));
    return out;
  }

  AttentionCriticOutput critic_forward(const ParameterStore& params, std::span<const double> joint_obs,
                                       std::span<const double> own_action,
                                       std::span<const double> teammate_actions) const {
    AttentionCriticOutput out;
    out.head_qs = khead_forward(params, joint_obs, own_action);
    if (uses_attention()) {
      out.teammate_embedding = teammate_embed(params, teammate_actions);
      out.weights = attention_weights(out.teammate_embedding, out.head_qs);
    } else {
      if (teammate_actions.size() != layout_.teammate_act_dim()) {
        throw ShapeError("critic_forward: teammate action length does not match the layout");
      }
      out.teammate_embedding = Vector::Zero(static_cast<Eigen::Index>(config_.vec_dim));
      out.weights.assign(config_.heads, 1.0 / static_cast<double>(config_.heads));
    }
    out.contextual_q = contextual_q(out.weights, out.head_qs);
    out.scalar_q = scalar_head(params, out.contextual_q);
    return out;
  }

  /// Batched intermediate values of the last forward pass on `tape`.
  struct Tape : CriticTape {
    nn::MlpTape encoder;
    std::vector<nn::MlpTape> heads;
    nn::MlpTape embed;
    nn::MlpTape scalar;
    std::vector<Matrix> head_q;  // K × [V, B]
    Matrix h;                    // [V, B]
    Matrix weights;              // [K, B]
    Matrix qc;                   // [V, B]
    Matrix q;                    // [1, B]
  };

 private:
  void run(const ParameterStore& params, const Matrix& joint_obs, const Matrix& joint_act, Tape& t) const {
    layout_.check(joint_obs, joint_act);
    t.recorded = false;
    const std::size_t K = config_.heads;
    const Eigen::Index batch = joint_obs.cols();

    const Matrix e = encoder_.forward(params, joint_obs, &t.encoder);
    Matrix head_in(e.rows() + static_cast<Eigen::Index>(layout_.own_act_dim()), batch);
    head_in << e, layout_.own_action(joint_act);

    t.heads.resize(K);
    t.head_q.resize(K);
    for (std::size_t k = 0; k < K; ++k) t.head_q[k] = heads_[k].forward(params, head_in, &t.heads[k]);

    if (uses_attention()) {
      t.h = embed_.forward(params, layout_.teammate_actions(joint_act), &t.embed);
      Matrix scores(static_cast<Eigen::Index>(K), batch);
      for (std::size_t k = 0; k < K; ++k) {
        scores.row(static_cast<Eigen::Index>(k)) = (t.h.array() * t.head_q[k].array()).colwise().sum();
      }
      t.weights = nn::softmax_columns(scores);
    } else {
      t.h = Matrix::Zero(static_cast<Eigen::Index>(config_.vec_dim), batch);
      t.weights = Matrix::Constant(static_cast<Eigen::Index>(K), batch, 1.0 / static_cast<double>(K));
    }

    t.qc = Matrix::Zero(static_cast<Eigen::Index>(config_.vec_dim), batch);
    for (std::size_t k = 0; k < K; ++k) {
      t.qc.array() += t.head_q[k].array().rowwise() * t.weights.row(static_cast<Eigen::Index>(k)).array();
    }
    t.q = scalar_.forward(params, t.qc, &t.scalar);
    t.recorded = true;
  }

  JointLayout layout_;
  AttentionCriticConfig config_;
  nn::Mlp encoder_;
  std::vector<nn::Mlp> heads_;
  nn::Mlp embed_;
  nn::Mlp scalar_;
};

}  // namespace attmaddpg::critic
