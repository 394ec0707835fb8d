#pragma once

// Optimizers, regularization and the mini-batch training loop.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqa/classifier.hpp"
#include "cqa/data.hpp"
#include "cqa/model.hpp"

namespace cqa {

enum class OptimizerKind { sgd, adagrad, adadelta };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

/// Hyperparameters and architecture. Defaults follow the tuned settings:
/// AdaGrad, lr 0.01, dropout 0.4, L2 1e-4, 128 cells, 256 MLP nodes,
/// trainable embeddings, separate LSTM parameters.
struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::adagrad;
  double learning_rate = 0.01;
  double dropout = 0.4;
  double l2 = 0.0001;
  std::size_t cell_count = 128;
  std::size_t mlp_hidden = 256;
  std::size_t attention_hidden = 128;
  std::size_t embed_dim = 32;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  bool embeddings_trainable = true;
  bool lstm_shared = false;
  bool diagonal_peephole = false;
  Beta beta = kDefaultBeta;
  Topology topology = Topology::attention;
  std::size_t ir_rank_slots = 0;
  double init_scale = 0.1;
  double dev_fraction = 0.1;
  double f1_threshold = 0.5;
  bool map_skip_unanswerable = true;
  double adagrad_eps = 1e-8;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  /// Stop once dev MAP reaches this value; 0 disables.
  double stop_at_dev_map = 0.0;

  /// Sets one key from its text form. Throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in a stable order.
  std::vector<std::pair<std::string, std::string>> echo() const;
  static const std::vector<std::string>& keys();
  void validate() const;

  ModelConfig model_config(std::size_t vocab_size) const;
};

/// Per-parameter accumulators, shaped like the parameters.
struct OptimizerState {
  std::vector<Matrix> first;   // AdaGrad: Σg²; AdaDelta: E[g²]
  std::vector<Matrix> second;  // AdaDelta: E[Δ²]
};

void sgd_step(Matrix& param, const Matrix& grad, double lr);
void adagrad_step(Matrix& param, const Matrix& grad, Matrix& accum, double lr, double eps = 1e-8);
void adadelta_step(Matrix& param, const Matrix& grad, Matrix& avg_sq_grad, Matrix& avg_sq_delta,
                   double rho = 0.95, double eps = 1e-6);

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const ParamSet& params);

  /// Updates every parameter not listed in `frozen`.
  void step(ParamSet& params, const std::vector<bool>& frozen = {});
  const OptimizerState& state() const { return state_; }

 private:
  OptimizerKind kind_;
  double lr_, adagrad_eps_, rho_, adadelta_eps_;
  OptimizerState state_;
};

/// Inverted dropout in training mode, identity otherwise.
Vector apply_dropout(std::span<const double> v, double rate, Rng& rng, bool training);

/// λ Σ p² over every tensor except `excluded`; when `add_grad` also adds
/// 2λp to the gradients.
double l2_penalty(ParamSet& params, double lambda, std::optional<ParamId> excluded = std::nullopt,
                  bool add_grad = true);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_map = 0.0;
  double dev_f1 = 0.0;
  bool has_dev = false;
};

std::string format_epoch(const EpochRecord& r);

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One optimizer step on `batch`: gradients averaged over the batch, plus L2.
/// Returns the batch objective (mean loss + penalty).
double train_step(Model& model, Optimizer& optimizer, std::span<const Example> batch,
                  const TrainConfig& config, Rng* dropout_rng);

/// Shuffled mini-batch epochs. After each epoch the dev set (if any) is
/// scored; the parameters of the best-dev-MAP epoch are restored at the end.
TrainResult train(Model& model, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Seeded split of whole query groups into (train, dev).
std::pair<Corpus, Corpus> split_dev(const Corpus& corpus, double fraction, std::uint64_t seed);

}  // namespace cqa
