#include "cqa/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqa {

ParamId ParamSet::add(std::string name, Matrix value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  Matrix grad(value.rows, value.cols);
  params_.push_back(Param{std::move(name), std::move(value), std::move(grad)});
  return ParamId{params_.size() - 1};
}

std::optional<ParamId> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return ParamId{i};
  }
  return std::nullopt;
}

void ParamSet::zero_grads() {
  for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0.0);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

GradCheckReport grad_check(ParamSet& params, const std::function<double()>& loss,
                           const std::function<void()>& backward, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-2)) {
    throw std::invalid_argument("grad_check: epsilon must lie in (0, 1e-2]");
  }
  backward();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params.entries()) analytic.push_back(p.grad);

  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Param& p = params.entries()[t];
    GradCheckEntry entry{p.name, 0.0};
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double saved = p.value.data[k];
      p.value.data[k] = saved + epsilon;
      const double up = loss();
      p.value.data[k] = saved - epsilon;
      const double down = loss();
      p.value.data[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("grad_check: non-finite loss when probing " + p.name + "[" +
                                 std::to_string(k / p.value.cols) + "," +
                                 std::to_string(k % p.value.cols) + "]");
      }
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[t].data[k];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      entry.max_rel_error = std::max(entry.max_rel_error, err);
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.tensors.push_back(std::move(entry));
  }
  return report;
}

}  // namespace cqa
