#include "cqa/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "cqa/eval.hpp"

namespace cqa {
namespace {

void check_same(const Matrix& p, const Matrix& g) {
  if (!p.same_shape(g)) {
    throw std::invalid_argument("parameter " + p.shape() + " vs gradient " + g.shape());
  }
}

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kDropoutStream = 0xd1b54a32d192ed03ULL;

}  // namespace

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adagrad: return "adagrad";
    case OptimizerKind::adadelta: return "adadelta";
  }
  return "?";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adagrad") return OptimizerKind::adagrad;
  if (s == "adadelta") return OptimizerKind::adadelta;
  throw std::invalid_argument("unknown optimizer: " + s);
}

void sgd_step(Matrix& param, const Matrix& grad, double lr) {
  check_same(param, grad);
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  for (std::size_t k = 0; k < param.size(); ++k) param.data[k] -= lr * grad.data[k];
}

void adagrad_step(Matrix& param, const Matrix& grad, Matrix& accum, double lr, double eps) {
  check_same(param, grad);
  check_same(param, accum);
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad.data[k];
    accum.data[k] += g * g;
    param.data[k] -= lr * g / (std::sqrt(accum.data[k]) + eps);
  }
}

void adadelta_step(Matrix& param, const Matrix& grad, Matrix& avg_sq_grad, Matrix& avg_sq_delta,
                   double rho, double eps) {
  check_same(param, grad);
  check_same(param, avg_sq_grad);
  check_same(param, avg_sq_delta);
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  for (std::size_t k = 0; k < param.size(); ++k) {
    const double g = grad.data[k];
    avg_sq_grad.data[k] = rho * avg_sq_grad.data[k] + (1.0 - rho) * g * g;
    const double delta =
        -std::sqrt(avg_sq_delta.data[k] + eps) / std::sqrt(avg_sq_grad.data[k] + eps) * g;
    avg_sq_delta.data[k] = rho * avg_sq_delta.data[k] + (1.0 - rho) * delta * delta;
    param.data[k] += delta;
  }
}

Optimizer::Optimizer(const TrainConfig& config, const ParamSet& params)
    : kind_(config.optimizer),
      lr_(config.learning_rate),
      adagrad_eps_(config.adagrad_eps),
      rho_(config.adadelta_rho),
      adadelta_eps_(config.adadelta_eps) {
  if (kind_ != OptimizerKind::sgd) {
    for (const auto& p : params.entries()) state_.first.emplace_back(p.value.rows, p.value.cols);
  }
  if (kind_ == OptimizerKind::adadelta) {
    for (const auto& p : params.entries()) state_.second.emplace_back(p.value.rows, p.value.cols);
  }
}

void Optimizer::step(ParamSet& params, const std::vector<bool>& frozen) {
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (t < frozen.size() && frozen[t]) continue;
    Param& p = params.entries()[t];
    switch (kind_) {
      case OptimizerKind::sgd: sgd_step(p.value, p.grad, lr_); break;
      case OptimizerKind::adagrad:
        adagrad_step(p.value, p.grad, state_.first[t], lr_, adagrad_eps_);
        break;
      case OptimizerKind::adadelta:
        adadelta_step(p.value, p.grad, state_.first[t], state_.second[t], rho_, adadelta_eps_);
        break;
    }
  }
}

Vector apply_dropout(std::span<const double> v, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
  Vector out(v.begin(), v.end());
  if (!training || rate == 0.0) return out;
  Vector mask = dropout_mask(v.size(), rate, rng);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= mask[k];
  return out;
}

double l2_penalty(ParamSet& params, double lambda, std::optional<ParamId> excluded,
                  bool add_grad) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("l2 lambda must be nonnegative");
  if (lambda == 0.0) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (excluded && excluded->index == t) continue;
    Param& p = params.entries()[t];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      sum += p.value.data[k] * p.value.data[k];
      if (add_grad) p.grad.data[k] += 2.0 * lambda * p.value.data[k];
    }
  }
  return lambda * sum;
}

std::string format_epoch(const EpochRecord& r) {
  char buf[160];
  if (r.has_dev) {
    std::snprintf(buf, sizeof buf, "epoch=%zu\ttrain_loss=%.10f\tdev_map=%.6f\tdev_f1=%.6f",
                  r.epoch, r.train_loss, r.dev_map, r.dev_f1);
  } else {
    std::snprintf(buf, sizeof buf, "epoch=%zu\ttrain_loss=%.10f\tdev_map=-\tdev_f1=-", r.epoch,
                  r.train_loss);
  }
  return buf;
}

double train_step(Model& model, Optimizer& optimizer, std::span<const Example> batch,
                  const TrainConfig& config, Rng* dropout_rng) {
  ParamSet& ps = model.params();
  ps.zero_grads();
  const double weight = 1.0 / static_cast<double>(batch.size());
  DropoutPlan plan{config.dropout, dropout_rng};
  const DropoutPlan* dropout = dropout_rng && config.dropout > 0.0 ? &plan : nullptr;
  double loss = 0.0;
  for (const auto& ex : batch) {
    loss += weight * model.accumulate_gradients(ex, config.beta, weight, dropout);
  }
  loss += l2_penalty(ps, config.l2, model.embedding());
  if (!std::isfinite(loss)) throw DivergenceError("non-finite loss");

  std::vector<bool> frozen(ps.size(), false);
  if (!config.embeddings_trainable) frozen[model.embedding().index] = true;
  optimizer.step(ps, frozen);
  return loss;
}

TrainResult train(Model& model, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  TrainResult result;
  if (config.epochs == 0) return result;
  if (train_set.empty()) throw std::invalid_argument("empty training set");

  Optimizer optimizer(config, model.params());
  Rng shuffle_rng(config.seed ^ kShuffleStream);
  Rng dropout_rng(config.seed ^ kDropoutStream);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  ParamSet best = model.params();
  double best_map = -1.0;
  std::vector<Example> batch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      double loss;
      try {
        loss = train_step(model, optimizer, batch, config, &dropout_rng);
      } catch (const DivergenceError&) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                              std::to_string(batches + 1) + " (first instance " +
                              batch.front().query_id + "/" + batch.front().candidate_id + ")");
      }
      total += loss;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(batches);
    if (!dev_set.empty()) {
      EvalSummary s = evaluate_model(model, dev_set, config.f1_threshold,
                                     config.map_skip_unanswerable);
      rec.has_dev = true;
      rec.dev_map = s.map;
      rec.dev_f1 = s.f1.f1;
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!rec.has_dev || rec.dev_map > best_map) {
      best_map = rec.dev_map;
      best = model.params();
      result.best_epoch = epoch;
    }
    if (rec.has_dev && config.stop_at_dev_map > 0.0 && rec.dev_map >= config.stop_at_dev_map) {
      break;
    }
  }
  model.params() = std::move(best);
  return result;
}

std::pair<Corpus, Corpus> split_dev(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("dev fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(corpus.queries.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto dev_count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(corpus.queries.size())));
  std::vector<bool> is_dev(order.size(), false);
  for (std::size_t i = 0; i < dev_count; ++i) is_dev[order[i]] = true;

  Corpus train_part, dev_part;
  train_part.task = dev_part.task = corpus.task;
  train_part.augmented = corpus.augmented;
  for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
    (is_dev[i] ? dev_part : train_part).queries.push_back(corpus.queries[i]);
  }
  return {std::move(train_part), std::move(dev_part)};
}

}  // namespace cqa
