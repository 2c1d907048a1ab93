// Soft-attention primitives: stable softmax and the dot score.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "attmaddpg/errors.hpp"
#include "attmaddpg/nn/parameter_store.hpp"

namespace attmaddpg::nn {

/// exp(x_k - max) / Σ exp(x_j - max). Throws NumericalError on any
/// non-finite score.
inline std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("softmax of an empty vector");
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericalError("softmax: non-finite score");
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - peak);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

/// Column-wise softmax of a [K, batch] score matrix.
inline Matrix softmax_columns(const Matrix& scores) {
  if (!scores.allFinite()) throw NumericalError("softmax: non-finite score");
  Matrix out = (scores.rowwise() - scores.colwise().maxCoeff()).array().exp().matrix();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

/// Inner product ⟨h, q⟩.
inline double dot_score(std::span<const double> h, std::span<const double> q) {
  if (h.size() != q.size()) {
    throw ShapeError("dot_score: length " + std::to_string(h.size()) + " vs " +
                     std::to_string(q.size()));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * q[j];
  return acc;
}

}  // namespace attmaddpg::nn
