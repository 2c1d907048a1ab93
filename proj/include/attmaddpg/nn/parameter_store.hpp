// Named, flat parameter arrays with matching gradient slots.
//
// Every network in the project (actors, critics, their target copies) keeps
// its weights in a ParameterStore. Entries are ordered by insertion, which
// fixes the layout used by checkpoints and by soft updates between an online
// store and its target.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attmaddpg/errors.hpp"

namespace attmaddpg::nn {

using Vector = Eigen::VectorXd;
/// Batched activations: one column per sample.
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<RowMajorMatrix>;
using ConstMatrixView = Eigen::Map<const RowMajorMatrix>;
using VectorView = Eigen::Map<Vector>;
using ConstVectorView = Eigen::Map<const Vector>;

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

class ParameterStore;

/// One named array. values and grads always have the same length; the store
/// is the only thing that creates entries.
class ParameterEntry {
 public:
  const std::string& name() const { return name_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> grads() { return grads_; }
  std::span<const double> grads() const { return grads_; }

  /// Row-major [rows, cols] view of a rank-2 entry.
  MatrixView matrix() { return {values_.data(), rows(), cols()}; }
  ConstMatrixView matrix() const { return {values_.data(), rows(), cols()}; }
  MatrixView grad_matrix() { return {grads_.data(), rows(), cols()}; }

  VectorView vector() { return {values_.data(), static_cast<Eigen::Index>(size())}; }
  ConstVectorView vector() const { return {values_.data(), static_cast<Eigen::Index>(size())}; }
  VectorView grad_vector() { return {grads_.data(), static_cast<Eigen::Index>(size())}; }

 private:
  friend class ParameterStore;
  ParameterEntry(std::string name, std::vector<std::size_t> shape)
      : name_(std::move(name)), shape_(std::move(shape)) {
    const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                                          std::multiplies<>());
    values_.assign(n, 0.0);
    grads_.assign(n, 0.0);
  }
  Eigen::Index rows() const { return static_cast<Eigen::Index>(shape_.empty() ? 1 : shape_[0]); }
  Eigen::Index cols() const {
    return static_cast<Eigen::Index>(shape_.size() < 2 ? 1 : size() / shape_[0]);
  }

  std::string name_;
  std::vector<std::size_t> shape_;
  // Aligned so vectorized kernels peel the same way on every run.
  std::vector<double, Eigen::aligned_allocator<double>> values_;
  std::vector<double, Eigen::aligned_allocator<double>> grads_;
};

class ParameterStore {
 public:
  /// Adds a zero-filled entry. Names must be unique and every dim ≥ 1.
  ParameterEntry& add(std::string name, std::vector<std::size_t> shape) {
    if (index_.contains(name)) {
      throw ConfigurationError("duplicate parameter entry '" + name + "'");
    }
    if (shape.empty() || std::any_of(shape.begin(), shape.end(), [](auto d) { return d == 0; })) {
      throw ConfigurationError("parameter entry '" + name + "' has empty shape " +
                               shape_string(shape));
    }
    index_.emplace(name, entries_.size());
    entries_.push_back(ParameterEntry(std::move(name), std::move(shape)));
    return entries_.back();
  }

  bool contains(std::string_view name) const { return index_.find(name) != index_.end(); }

  ParameterEntry& at(std::string_view name) { return entries_[index_of(name)]; }
  const ParameterEntry& at(std::string_view name) const { return entries_[index_of(name)]; }

  /// Looks up `name` and checks it has exactly `shape`.
  const ParameterEntry& expect(std::string_view name, const std::vector<std::size_t>& shape) const {
    const auto& e = at(name);
    if (e.shape() != shape) {
      throw ConfigurationError("parameter entry '" + std::string(name) + "' has shape " +
                               shape_string(e.shape()) + ", expected " + shape_string(shape));
    }
    return e;
  }
  ParameterEntry& expect(std::string_view name, const std::vector<std::size_t>& shape) {
    return const_cast<ParameterEntry&>(std::as_const(*this).expect(name, shape));
  }

  std::span<ParameterEntry> entries() { return entries_; }
  std::span<const ParameterEntry> entries() const { return entries_; }
  std::size_t entry_count() const { return entries_.size(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.size();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_) std::fill(e.grads_.begin(), e.grads_.end(), 0.0);
  }

  /// Same entry names, order and shapes.
  bool same_layout(const ParameterStore& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i].name() != other.entries_[i].name() ||
          entries_[i].shape() != other.entries_[i].shape()) {
        return false;
      }
    }
    return true;
  }

  /// Values only; grads compare unequal freely.
  bool values_equal(const ParameterStore& other) const {
    if (!same_layout(other)) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!std::equal(entries_[i].values_.begin(), entries_[i].values_.end(),
                      other.entries_[i].values_.begin())) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ConfigurationError("missing parameter entry '" + std::string(name) + "'");
    }
    return it->second;
  }

  std::vector<ParameterEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace attmaddpg::nn
