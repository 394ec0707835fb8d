#pragma once

// Feed-forward classification heads over pair encodings: one tanh hidden
// layer (the trunk) feeding one or more two-class softmax layers.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqa/encoder.hpp"
#include "cqa/numerics.hpp"
#include "cqa/params.hpp"

namespace cqa {

inline constexpr std::size_t kClassCount = 2;
inline constexpr int kIrrelevant = 0;
inline constexpr int kRelevant = 1;

struct SoftmaxHead {
  ParamId W;  // classes x hidden
  ParamId b;  // classes x 1
};

/// Hidden layer `mlp.W`, `mlp.b` and softmax output layers. A single head is
/// named `softmax.W` / `softmax.b`; multiple heads are `softmax.<k>.W` /
/// `softmax.<k>.b`.
struct FnnParams {
  ParamId W_hidden;
  ParamId b_hidden;
  std::vector<SoftmaxHead> heads;
  std::size_t input_dim = 0;
  std::size_t hidden_size = 0;

  static FnnParams create(ParamSet& ps, std::size_t input_dim, std::size_t hidden_size,
                          std::size_t head_count, Rng* rng, double scale = 0.1);
  void validate(const ParamSet& ps) const;
};

/// Three softmax heads over one shared trunk, ordered (oriQ/relQ, oriQ/relC,
/// relQ/relC).
using MultitaskHead = FnnParams;

/// One-hot of an IR rank (1-based) over R slots. Missing ranks and ranks past R
/// give the all-zero vector.
Vector ir_rank_onehot(std::optional<int> rank, std::size_t slots);

struct AugmentedFeatures {
  Vector values;

  static AugmentedFeatures none() { return {}; }
  static AugmentedFeatures from_rank(std::optional<int> rank, std::size_t slots) {
    return {ir_rank_onehot(rank, slots)};
  }
};

/// Dropout applied to the classifier input and hidden layer during training.
struct DropoutPlan {
  double rate = 0.0;
  Rng* rng = nullptr;
};

struct FnnTrace {
  Vector input;
  Vector input_mask;
  Vector hidden;       // tanh activations before dropout
  Vector hidden_mask;
  Vector hidden_out;   // after dropout
  std::vector<Vector> probs;
};

/// Runs the trunk and every head. With `dropout` null the pass is inference.
void fnn_forward(const ParamSet& ps, const FnnParams& fnn, std::span<const double> input,
                 const DropoutPlan* dropout, FnnTrace& trace);

/// `dlogits[k]` is the gradient at head k's logits (empty to skip the head).
/// Returns the gradient with respect to the classifier input.
Vector fnn_backward(ParamSet& ps, const FnnParams& fnn, const FnnTrace& trace,
                    const std::vector<Vector>& dlogits);

/// Class probabilities for one pair: input is [h_N; h' (if any); aug].
Vector classify_pair(const ParamSet& ps, const FnnParams& fnn, const PairEncoding& enc,
                     const AugmentedFeatures& aug);

/// -log(max(probs[gold], 1e-12)).
double cross_entropy(std::span<const double> probs, int gold);

std::array<Vector, 3> multitask_forward(const ParamSet& ps, const MultitaskHead& head,
                                        const PairEncoding& enc_qq, const PairEncoding& enc_qc,
                                        const PairEncoding& enc_qc2,
                                        const AugmentedFeatures& aug = {});

using Beta = std::array<double, 3>;
inline constexpr Beta kDefaultBeta{0.1, 0.8, 0.1};

/// β1 L1 + β2 L2 + β3 L3 with L_k the cross entropy of head k.
double multitask_loss(const std::array<Vector, 3>& probs, const std::array<int, 3>& golds,
                      const Beta& beta);

}  // namespace cqa
