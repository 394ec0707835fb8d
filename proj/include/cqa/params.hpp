#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cqa/numerics.hpp"

namespace cqa {

/// Handle into a ParamSet. Two layers holding the same handle share storage,
/// so gradients from both accumulate into one buffer.
struct ParamId {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const { return index != static_cast<std::size_t>(-1); }
  bool operator==(const ParamId&) const = default;
};

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Named collection of trainable tensors with matching gradient buffers.
class ParamSet {
 public:
  ParamId add(std::string name, Matrix value);

  Matrix& value(ParamId id) { return params_[id.index].value; }
  const Matrix& value(ParamId id) const { return params_[id.index].value; }
  Matrix& grad(ParamId id) { return params_[id.index].grad; }
  const Matrix& grad(ParamId id) const { return params_[id.index].grad; }
  const std::string& name(ParamId id) const { return params_[id.index].name; }

  std::optional<ParamId> find(std::string_view name) const;
  std::size_t size() const { return params_.size(); }
  ParamId id(std::size_t i) const { return ParamId{i}; }

  std::vector<Param>& entries() { return params_; }
  const std::vector<Param>& entries() const { return params_; }

  void zero_grads();
  /// Total number of scalar entries across all tensors.
  std::size_t scalar_count() const;

 private:
  std::vector<Param> params_;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> tensors;
  double max_rel_error = 0.0;
};

/// Compares analytic gradients against central differences for every entry of
/// every tensor in `params`. `loss` evaluates the objective at the current
/// values; `backward` must zero and then fill the gradient buffers. Per entry
/// the error is |a - n| / max(1e-8, |a| + |n|).
GradCheckReport grad_check(ParamSet& params, const std::function<double()>& loss,
                           const std::function<void()>& backward, double epsilon = 1e-5);

}  // namespace cqa
