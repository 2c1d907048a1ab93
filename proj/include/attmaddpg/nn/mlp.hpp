// Fully-connected feed-forward networks with a recorded tape for
// reverse-mode gradients.
//
// Parameters for layer l live in the store as
//   "<prefix>l<l>.weight"  shape [out, in]  (row-major)
//   "<prefix>l<l>.bias"    shape [out]
// Inputs and activations are batched column-wise: an input matrix is
// [input_dim, batch].

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::nn {

enum class Activation { relu, tanh, linear, softmax };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

struct MlpSpec {
  std::size_t input_dim = 1;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 1;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::linear;

  std::size_t layer_count() const { return hidden_dims.size() + 1; }
  std::size_t layer_input(std::size_t l) const { return l == 0 ? input_dim : hidden_dims[l - 1]; }
  std::size_t layer_output(std::size_t l) const {
    return l == hidden_dims.size() ? output_dim : hidden_dims[l];
  }
  Activation layer_activation(std::size_t l) const {
    return l == hidden_dims.size() ? output_activation : hidden_activation;
  }

  void validate() const {
    if (input_dim == 0 || output_dim == 0) throw ConfigurationError("MlpSpec: dims must be >= 1");
    for (auto d : hidden_dims) {
      if (d == 0) throw ConfigurationError("MlpSpec: hidden dims must be >= 1");
    }
    if (hidden_activation == Activation::softmax) {
      throw ConfigurationError("MlpSpec: softmax is only valid as an output activation");
    }
  }
};

/// Everything backward() needs from one forward pass.
struct MlpTape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
  bool recorded = false;
};

namespace detail {

inline void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::linear: break;
    case Activation::softmax: {
      z = (z.rowwise() - z.colwise().maxCoeff()).array().exp().matrix();
      z.array().rowwise() /= z.colwise().sum().array();
      break;
    }
  }
}

/// dL/dz given dL/dy, the pre-activation z and the activation y.
inline Matrix activation_backward(Activation a, const Matrix& z, const Matrix& y, const Matrix& dy) {
  switch (a) {
    case Activation::relu: return (z.array() > 0.0).select(dy, 0.0);
    case Activation::tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
    case Activation::linear: return dy;
    case Activation::softmax: {
      const Eigen::RowVectorXd inner = (y.array() * dy.array()).colwise().sum();
      return (y.array() * (dy.rowwise() - inner).array()).matrix();
    }
  }
  return dy;
}

}  // namespace detail

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::string prefix = {}) : spec_(std::move(spec)), prefix_(std::move(prefix)) {
    spec_.validate();
  }

  const MlpSpec& spec() const { return spec_; }
  const std::string& prefix() const { return prefix_; }

  std::string weight_name(std::size_t l) const { return prefix_ + "l" + std::to_string(l) + ".weight"; }
  std::string bias_name(std::size_t l) const { return prefix_ + "l" + std::to_string(l) + ".bias"; }

  void declare(ParameterStore& store) const {
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      store.add(weight_name(l), {spec_.layer_output(l), spec_.layer_input(l)});
      store.add(bias_name(l), {spec_.layer_output(l)});
    }
  }

  /// Uniform in ±1/√fan_in for weights and biases alike.
  void initialize(ParameterStore& store, std::mt19937_64& rng) const {
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec_.layer_input(l)));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : store.at(weight_name(l)).values()) v = dist(rng);
      for (double& v : store.at(bias_name(l)).values()) v = dist(rng);
    }
  }

  Matrix forward(const ParameterStore& store, const Matrix& input, MlpTape* tape = nullptr) const {
    if (static_cast<std::size_t>(input.rows()) != spec_.input_dim) {
      throw ShapeError("mlp '" + prefix_ + "': input has " + std::to_string(input.rows()) +
                       " rows, expected " + std::to_string(spec_.input_dim));
    }
    if (tape) {
      tape->inputs.assign(spec_.layer_count(), Matrix());
      tape->pre.assign(spec_.layer_count(), Matrix());
      tape->recorded = false;
    }
    Matrix x = input;
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      const auto& w = store.expect(weight_name(l), {spec_.layer_output(l), spec_.layer_input(l)});
      const auto& b = store.expect(bias_name(l), {spec_.layer_output(l)});
      Matrix z = w.matrix() * x;
      z.colwise() += b.vector();
      if (tape) {
        tape->inputs[l] = std::move(x);
        tape->pre[l] = z;
      }
      detail::apply_activation(spec_.layer_activation(l), z);
      x = std::move(z);
    }
    if (tape) {
      tape->output = x;
      tape->recorded = true;
    }
    return x;
  }

  /// Accumulates ∂(output_grad · output)/∂params into the store's grads and
  /// returns the gradient with respect to the input.
  Matrix backward(ParameterStore& store, const MlpTape& tape, const Matrix& output_grad) const {
    if (!tape.recorded) throw UsageError("mlp '" + prefix_ + "': backward without a recorded forward");
    if (output_grad.rows() != tape.output.rows() || output_grad.cols() != tape.output.cols()) {
      throw ShapeError("mlp '" + prefix_ + "': output gradient shape mismatch");
    }
    Matrix grad = output_grad;
    for (std::size_t l = spec_.layer_count(); l-- > 0;) {
      const Matrix& y = (l + 1 == spec_.layer_count()) ? tape.output : tape.inputs[l + 1];
      Matrix dz = detail::activation_backward(spec_.layer_activation(l), tape.pre[l], y, grad);
      auto& w = store.expect(weight_name(l), {spec_.layer_output(l), spec_.layer_input(l)});
      auto& b = store.expect(bias_name(l), {spec_.layer_output(l)});
      w.grad_matrix().noalias() += dz * tape.inputs[l].transpose();
      b.grad_vector().noalias() += dz.rowwise().sum();
      grad = w.matrix().transpose() * dz;
    }
    return grad;
  }

  /// One byte per relu unit per sample: 1 if active. Used to keep finite
  /// difference probes off activation kinks.
  void append_relu_pattern(const MlpTape& tape, std::vector<std::uint8_t>& out) const {
    for (std::size_t l = 0; l < spec_.layer_count(); ++l) {
      if (spec_.layer_activation(l) != Activation::relu) continue;
      const Matrix& z = tape.pre[l];
      for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0 ? 1 : 0);
    }
  }

 private:
  MlpSpec spec_;
  std::string prefix_;
};

inline Matrix column(std::span<const double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

inline std::vector<double> to_std(const Matrix& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

/// Single-sample forward through an un-prefixed network.
inline Vector mlp_forward(const MlpSpec& spec, const ParameterStore& params,
                          std::span<const double> input) {
  if (input.size() != spec.input_dim) {
    throw ShapeError("mlp_forward: input length " + std::to_string(input.size()) + ", expected " +
                     std::to_string(spec.input_dim));
  }
  return Mlp(spec).forward(params, column(input)).col(0);
}

}  // namespace attmaddpg::nn
