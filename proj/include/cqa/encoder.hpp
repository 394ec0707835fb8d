#pragma once

// LSTM cell with peephole connections and the three pair-encoding
// topologies: parallel, serialized, and serialized with attention over the
// first object's outputs.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqa/numerics.hpp"
#include "cqa/params.hpp"

namespace cqa {

/// Handles for one LSTM's tensors. The W_*X matrices act on X = [x_t; h_{t-1}]
/// and have cell_count rows and input_dim + cell_count columns. The peephole
/// matrices W_ic, W_fc, W_oc act on c_{t-1}.
struct LstmParams {
  ParamId W_iX, W_fX, W_oX, W_cX;
  ParamId W_ic, W_fc, W_oc;
  ParamId b_i, b_f, b_o, b_c;
  std::size_t input_dim = 0;
  std::size_t cell_count = 0;
  bool diagonal_peephole = false;

  /// Registers tensors `<prefix>.W_iX` ... `<prefix>.b_c`. Values are drawn
  /// uniform in [-scale, scale] when `rng` is given, zero otherwise.
  static LstmParams create(ParamSet& ps, const std::string& prefix, std::size_t input_dim,
                           std::size_t cell_count, Rng* rng, double scale = 0.1,
                           bool diagonal_peephole = false);

  void validate(const ParamSet& ps) const;
};

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t cells) { return {Vector(cells, 0.0), Vector(cells, 0.0)}; }
  bool operator==(const LstmState&) const = default;
};

/// Intermediate values of one step, kept for the backward pass.
struct LstmStepCache {
  Vector X;
  Vector c_prev;
  Vector i, f, o, g;
  Vector tanh_c;
};

LstmState lstm_step(const ParamSet& ps, const LstmParams& lstm, std::span<const double> x_t,
                    const LstmState& prev, LstmStepCache* cache = nullptr);

/// Accumulates parameter gradients for one step. `dh` and `dc` are the
/// gradients arriving at h_t and c_t. Outputs gradients w.r.t. x_t, h_{t-1}
/// and c_{t-1}.
void lstm_step_backward(ParamSet& ps, const LstmParams& lstm, const LstmStepCache& cache,
                        std::span<const double> dh, std::span<const double> dc, Vector& dx,
                        Vector& dh_prev, Vector& dc_prev);

struct SequenceTrace {
  std::vector<LstmStepCache> steps;
};

/// Left fold of lstm_step from `init`; returns every intermediate state.
std::vector<LstmState> encode_sequence(const ParamSet& ps, const LstmParams& lstm,
                                       std::span<const Vector> inputs, const LstmState& init,
                                       SequenceTrace* trace = nullptr);

/// Backpropagation through time. `dh_steps[t]` is the external gradient on
/// h_t; `dfinal` adds to the last state's (h, c). Returns the gradient on the
/// initial state and fills `dx` per step.
LstmState encode_sequence_backward(ParamSet& ps, const LstmParams& lstm,
                                   const SequenceTrace& trace,
                                   const std::vector<Vector>& dh_steps, const LstmState& dfinal,
                                   std::vector<Vector>& dx);

/// Importance model a(h_i, h_N) = w_out · tanh(W1 h_i + W2 h_N + b).
struct AttentionParams {
  ParamId W1, W2, b, w_out;
  std::size_t hidden_dim = 0;
  std::size_t cell_count = 0;

  static AttentionParams create(ParamSet& ps, const std::string& prefix, std::size_t cell_count,
                                std::size_t hidden_dim, Rng* rng, double scale = 0.1);
  void validate(const ParamSet& ps) const;
};

double importance(const ParamSet& ps, const AttentionParams& att, std::span<const double> h_i,
                  std::span<const double> h_N);

/// Normalizes importance scores into attention weights.
Vector attention_weights(std::span<const double> scores);

struct AttentionCache {
  std::vector<Vector> hidden;  // tanh(W1 h_i + W2 h_N + b) per position
  Vector alphas;
};

/// Weighted representation h' = Σ α_i h_i over `states`, with α from the
/// importance model conditioned on h_N.
Vector attend(const ParamSet& ps, const AttentionParams& att, std::span<const Vector> states,
              std::span<const double> h_N, AttentionCache& cache);

/// Backward of attend. Adds into `dstates[i]` and `dh_N`.
void attend_backward(ParamSet& ps, const AttentionParams& att, const AttentionCache& cache,
                     std::span<const Vector> states, std::span<const double> h_N,
                     std::span<const double> dh_prime, std::vector<Vector>& dstates,
                     Vector& dh_N);

enum class Topology { parallel, serialized, attention, multitask };

std::string to_string(Topology t);
Topology topology_from_string(const std::string& s);

struct PairEncoding {
  Vector h_N;
  std::optional<Vector> h_prime;
  std::optional<Vector> alphas;

  /// [h_N; h'] when attention is present, h_N otherwise.
  Vector flatten() const;
};

struct EncoderTrace {
  SequenceTrace first;
  SequenceTrace second;
  std::vector<Vector> first_h;   // h_1 .. h_L of the first object
  Vector h_N;
  AttentionCache attention;
};

/// Gradient arriving at a PairEncoding from the classifier.
struct EncodingGrad {
  Vector dh_N;
  Vector dh_prime;
};

/// One pair encoder: two LSTMs (possibly sharing tensors) and, for the
/// attention topology, an importance model. The multitask topology uses
/// attention encoders underneath, so it is not a valid value here.
struct PairEncoder {
  Topology topology = Topology::attention;
  LstmParams first;
  LstmParams second;
  std::optional<AttentionParams> attention;

  std::size_t output_dim() const;

  PairEncoding encode(const ParamSet& ps, std::span<const Vector> seq_a,
                      std::span<const Vector> seq_b, EncoderTrace* trace = nullptr) const;

  /// Accumulates encoder gradients; fills per-token input gradients.
  void backward(ParamSet& ps, const EncoderTrace& trace, const EncodingGrad& grad,
                std::vector<Vector>& dx_a, std::vector<Vector>& dx_b) const;
};

PairEncoding encode_parallel(const ParamSet& ps, const LstmParams& p1, const LstmParams& p2,
                             std::span<const Vector> seq_a, std::span<const Vector> seq_b);

PairEncoding encode_serialized(const ParamSet& ps, const LstmParams& p1, const LstmParams& p2,
                               std::span<const Vector> seq_a, std::span<const Vector> seq_b,
                               const AttentionParams* attention);

}  // namespace cqa
