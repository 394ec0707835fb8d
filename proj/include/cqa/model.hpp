#pragma once

// The complete pair model: embedding table, one pair encoder (or three for
// the multitask topology), and the feed-forward classifier.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqa/classifier.hpp"
#include "cqa/data.hpp"
#include "cqa/encoder.hpp"
#include "cqa/params.hpp"

namespace cqa {

struct ModelConfig {
  Topology topology = Topology::attention;
  std::size_t vocab_size = 1;
  std::size_t embed_dim = 32;
  std::size_t cell_count = 128;
  std::size_t mlp_hidden = 256;
  std::size_t attention_hidden = 128;
  /// One-hot IR rank slots appended to the classifier input; 0 disables.
  std::size_t ir_rank_slots = 0;
  bool lstm_shared = false;
  bool diagonal_peephole = false;
  double init_scale = 0.1;
  /// Multitask only: keep just the main (oriQ/relC) softmax head.
  bool main_head_only = false;

  std::map<std::string, std::string> echo() const;
  static ModelConfig from_echo(const std::map<std::string, std::string>& kv);
  bool operator==(const ModelConfig&) const = default;
};

/// One training or scoring instance in vocabulary ids. For the multitask
/// topology `first` is oriQ, `second` relC and `bridge` relQ; `label` is the
/// oriQ/relC label and `aux_labels` hold (oriQ/relQ, relQ/relC).
struct Example {
  std::string query_id;
  std::string candidate_id;
  TokenIds first;
  TokenIds second;
  TokenIds bridge;
  int label = kUnknownLabel;
  std::array<int, 2> aux_labels{kUnknownLabel, kUnknownLabel};
  std::optional<int> ir_rank;
};

std::vector<Example> make_examples(const Corpus& corpus, const Vocabulary& vocab);

struct ModelTrace {
  std::array<EncoderTrace, 3> encoders;
  std::array<PairEncoding, 3> encodings;
  FnnTrace fnn;
};

class Model {
 public:
  Model() = default;
  /// Random initialization from `rng`; zero initialization when `rng` is null.
  Model(const ModelConfig& config, Rng* rng);

  const ModelConfig& config() const { return config_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  ParamId embedding() const { return embedding_; }
  const std::vector<PairEncoder>& encoders() const { return encoders_; }
  const FnnParams& classifier() const { return fnn_; }
  bool has_attention() const;
  std::size_t head_count() const { return fnn_.heads.size(); }
  /// Index of the head scoring the main pair relationship.
  std::size_t main_head() const { return head_count() == 3 ? 1 : 0; }

  /// Probabilities of every head. `dropout` null means inference.
  std::vector<Vector> forward(const Example& ex, const DropoutPlan* dropout = nullptr,
                              ModelTrace* trace = nullptr) const;

  /// Relevant-class probability of the main head.
  double relevance(const Example& ex) const;

  /// Encoding of the main pair (object one, object two).
  PairEncoding encode_main(const Example& ex) const;

  /// Weighted loss of one example; for multitask models Σ β_k L_k, for
  /// single-head models the cross entropy of `label`.
  double loss(const Example& ex, const Beta& beta = kDefaultBeta) const;

  /// Forward + backward; gradients scaled by `weight` accumulate into
  /// params(). Returns the unscaled loss.
  double accumulate_gradients(const Example& ex, const Beta& beta, double weight,
                              const DropoutPlan* dropout = nullptr);

  /// Test hook: when set, backward deliberately perturbs one gradient.
  void set_gradient_fault(bool on) { gradient_fault_ = on; }

 private:
  ModelConfig config_;
  ParamSet params_;
  ParamId embedding_;
  std::vector<PairEncoder> encoders_;
  FnnParams fnn_;
  bool gradient_fault_ = false;

  std::vector<Vector> embed(const TokenIds& ids) const;
  void scatter_embedding_grad(const TokenIds& ids, const std::vector<Vector>& dx);
  std::array<std::pair<const TokenIds*, const TokenIds*>, 3> encoder_inputs(
      const Example& ex) const;
};

}  // namespace cqa
