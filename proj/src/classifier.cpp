#include "cqa/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cqa {
namespace {

Matrix make_tensor(std::size_t r, std::size_t c, Rng* rng, double scale) {
  return rng ? init_uniform(r, c, scale, *rng) : Matrix(r, c);
}

void expect_shape(const ParamSet& ps, ParamId id, std::size_t r, std::size_t c) {
  const Matrix& m = ps.value(id);
  if (m.rows != r || m.cols != c) {
    throw std::invalid_argument(ps.name(id) + " has shape " + m.shape() + ", expected " +
                                std::to_string(r) + "x" + std::to_string(c));
  }
}

Vector classifier_input(const PairEncoding& enc, const AugmentedFeatures& aug) {
  Vector in = enc.flatten();
  in.insert(in.end(), aug.values.begin(), aug.values.end());
  return in;
}

}  // namespace

FnnParams FnnParams::create(ParamSet& ps, std::size_t input_dim, std::size_t hidden_size,
                            std::size_t head_count, Rng* rng, double scale) {
  if (input_dim == 0 || hidden_size == 0 || head_count == 0) {
    throw std::invalid_argument("classifier dimensions must be positive");
  }
  FnnParams f;
  f.input_dim = input_dim;
  f.hidden_size = hidden_size;
  f.W_hidden = ps.add("mlp.W", make_tensor(hidden_size, input_dim, rng, scale));
  f.b_hidden = ps.add("mlp.b", make_tensor(hidden_size, 1, rng, scale));
  for (std::size_t k = 0; k < head_count; ++k) {
    const std::string prefix =
        head_count == 1 ? std::string("softmax") : "softmax." + std::to_string(k);
    SoftmaxHead h;
    h.W = ps.add(prefix + ".W", make_tensor(kClassCount, hidden_size, rng, scale));
    h.b = ps.add(prefix + ".b", make_tensor(kClassCount, 1, rng, scale));
    f.heads.push_back(h);
  }
  return f;
}

void FnnParams::validate(const ParamSet& ps) const {
  expect_shape(ps, W_hidden, hidden_size, input_dim);
  expect_shape(ps, b_hidden, hidden_size, 1);
  for (const auto& h : heads) {
    expect_shape(ps, h.W, kClassCount, hidden_size);
    expect_shape(ps, h.b, kClassCount, 1);
  }
}

Vector ir_rank_onehot(std::optional<int> rank, std::size_t slots) {
  Vector v(slots, 0.0);
  if (rank && *rank >= 1 && static_cast<std::size_t>(*rank) <= slots) {
    v[static_cast<std::size_t>(*rank - 1)] = 1.0;
  }
  return v;
}

void fnn_forward(const ParamSet& ps, const FnnParams& fnn, std::span<const double> input,
                 const DropoutPlan* dropout, FnnTrace& trace) {
  if (input.size() != fnn.input_dim) {
    throw std::invalid_argument("classifier input has length " + std::to_string(input.size()) +
                                ", expected " + std::to_string(fnn.input_dim));
  }
  const bool training = dropout && dropout->rng && dropout->rate > 0.0;
  trace.input.assign(input.begin(), input.end());
  if (training) {
    trace.input_mask = dropout_mask(input.size(), dropout->rate, *dropout->rng);
    for (std::size_t k = 0; k < input.size(); ++k) trace.input[k] *= trace.input_mask[k];
  } else {
    trace.input_mask.clear();
  }

  const auto& b = ps.value(fnn.b_hidden).data;
  trace.hidden.assign(b.begin(), b.end());
  matvec_acc(ps.value(fnn.W_hidden), trace.input, trace.hidden);
  for (double& x : trace.hidden) x = tanh_act(x);
  trace.hidden_out = trace.hidden;
  if (training) {
    trace.hidden_mask = dropout_mask(fnn.hidden_size, dropout->rate, *dropout->rng);
    for (std::size_t k = 0; k < fnn.hidden_size; ++k) trace.hidden_out[k] *= trace.hidden_mask[k];
  } else {
    trace.hidden_mask.clear();
  }

  trace.probs.resize(fnn.heads.size());
  for (std::size_t h = 0; h < fnn.heads.size(); ++h) {
    const auto& bias = ps.value(fnn.heads[h].b).data;
    Vector logits(bias.begin(), bias.end());
    matvec_acc(ps.value(fnn.heads[h].W), trace.hidden_out, logits);
    trace.probs[h] = softmax(logits);
  }
}

Vector fnn_backward(ParamSet& ps, const FnnParams& fnn, const FnnTrace& trace,
                    const std::vector<Vector>& dlogits) {
  Vector dhidden(fnn.hidden_size, 0.0);
  for (std::size_t h = 0; h < fnn.heads.size() && h < dlogits.size(); ++h) {
    if (dlogits[h].empty()) continue;
    outer_acc(ps.grad(fnn.heads[h].W), dlogits[h], trace.hidden_out);
    axpy(1.0, dlogits[h], ps.grad(fnn.heads[h].b).data);
    matvec_t_acc(ps.value(fnn.heads[h].W), dlogits[h], dhidden);
  }
  for (std::size_t k = 0; k < fnn.hidden_size; ++k) {
    if (!trace.hidden_mask.empty()) dhidden[k] *= trace.hidden_mask[k];
    dhidden[k] *= 1.0 - trace.hidden[k] * trace.hidden[k];
  }
  outer_acc(ps.grad(fnn.W_hidden), dhidden, trace.input);
  axpy(1.0, dhidden, ps.grad(fnn.b_hidden).data);
  Vector dinput(fnn.input_dim, 0.0);
  matvec_t_acc(ps.value(fnn.W_hidden), dhidden, dinput);
  if (!trace.input_mask.empty()) {
    for (std::size_t k = 0; k < fnn.input_dim; ++k) dinput[k] *= trace.input_mask[k];
  }
  return dinput;
}

Vector classify_pair(const ParamSet& ps, const FnnParams& fnn, const PairEncoding& enc,
                     const AugmentedFeatures& aug) {
  if (fnn.heads.size() != 1) throw std::invalid_argument("classify_pair needs a single head");
  FnnTrace trace;
  fnn_forward(ps, fnn, classifier_input(enc, aug), nullptr, trace);
  return std::move(trace.probs.front());
}

double cross_entropy(std::span<const double> probs, int gold) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= probs.size()) {
    throw std::invalid_argument("gold class " + std::to_string(gold) + " out of range");
  }
  return -std::log(std::max(probs[static_cast<std::size_t>(gold)], 1e-12));
}

std::array<Vector, 3> multitask_forward(const ParamSet& ps, const MultitaskHead& head,
                                        const PairEncoding& enc_qq, const PairEncoding& enc_qc,
                                        const PairEncoding& enc_qc2,
                                        const AugmentedFeatures& aug) {
  if (head.heads.size() != 3) throw std::invalid_argument("multitask head needs three outputs");
  Vector in = concat({enc_qq.flatten(), enc_qc.flatten(), enc_qc2.flatten(), aug.values});
  FnnTrace trace;
  fnn_forward(ps, head, in, nullptr, trace);
  return {std::move(trace.probs[0]), std::move(trace.probs[1]), std::move(trace.probs[2])};
}

double multitask_loss(const std::array<Vector, 3>& probs, const std::array<int, 3>& golds,
                      const Beta& beta) {
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(beta[k] >= 0.0)) throw std::invalid_argument("beta entries must be nonnegative");
    total += beta[k] * cross_entropy(probs[k], golds[k]);
  }
  return total;
}

}  // namespace cqa
