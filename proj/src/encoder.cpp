#include "cqa/encoder.hpp"

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

void expect_length(const char* what, std::size_t got, std::size_t want) {
  if (got != want) {
    throw std::invalid_argument(std::string(what) + " has length " + std::to_string(got) +
                                ", expected " + std::to_string(want));
  }
}

std::span<const double> col(const ParamSet& ps, ParamId id) { return ps.value(id).data; }

}  // namespace

LstmParams LstmParams::create(ParamSet& ps, const std::string& prefix, std::size_t input_dim,
                              std::size_t cell_count, Rng* rng, double scale,
                              bool diagonal_peephole) {
  LstmParams p;
  p.input_dim = input_dim;
  p.cell_count = cell_count;
  p.diagonal_peephole = diagonal_peephole;
  const std::size_t xdim = input_dim + cell_count;
  p.W_iX = ps.add(prefix + ".W_iX", make_tensor(cell_count, xdim, rng, scale));
  p.W_fX = ps.add(prefix + ".W_fX", make_tensor(cell_count, xdim, rng, scale));
  p.W_oX = ps.add(prefix + ".W_oX", make_tensor(cell_count, xdim, rng, scale));
  p.W_cX = ps.add(prefix + ".W_cX", make_tensor(cell_count, xdim, rng, scale));
  p.W_ic = ps.add(prefix + ".W_ic", make_tensor(cell_count, cell_count, rng, scale));
  p.W_fc = ps.add(prefix + ".W_fc", make_tensor(cell_count, cell_count, rng, scale));
  p.W_oc = ps.add(prefix + ".W_oc", make_tensor(cell_count, cell_count, rng, scale));
  p.b_i = ps.add(prefix + ".b_i", make_tensor(cell_count, 1, rng, scale));
  p.b_f = ps.add(prefix + ".b_f", make_tensor(cell_count, 1, rng, scale));
  p.b_o = ps.add(prefix + ".b_o", make_tensor(cell_count, 1, rng, scale));
  p.b_c = ps.add(prefix + ".b_c", make_tensor(cell_count, 1, rng, scale));
  return p;
}

void LstmParams::validate(const ParamSet& ps) const {
  const std::size_t xdim = input_dim + cell_count;
  for (ParamId id : {W_iX, W_fX, W_oX, W_cX}) expect_shape(ps, id, cell_count, xdim);
  for (ParamId id : {W_ic, W_fc, W_oc}) expect_shape(ps, id, cell_count, cell_count);
  for (ParamId id : {b_i, b_f, b_o, b_c}) expect_shape(ps, id, cell_count, 1);
}

LstmState lstm_step(const ParamSet& ps, const LstmParams& lstm, std::span<const double> x_t,
                    const LstmState& prev, LstmStepCache* cache) {
  const std::size_t n = lstm.cell_count;
  expect_length("x_t", x_t.size(), lstm.input_dim);
  expect_length("prev.h", prev.h.size(), n);
  expect_length("prev.c", prev.c.size(), n);

  Vector X = concat({x_t, prev.h});
  auto peep = [&](ParamId w, std::span<double> out) {
    if (lstm.diagonal_peephole) {
      diag_acc(ps.value(w), prev.c, out);
    } else {
      matvec_acc(ps.value(w), prev.c, out);
    }
  };

  Vector i(col(ps, lstm.b_i).begin(), col(ps, lstm.b_i).end());
  Vector f(col(ps, lstm.b_f).begin(), col(ps, lstm.b_f).end());
  Vector o(col(ps, lstm.b_o).begin(), col(ps, lstm.b_o).end());
  Vector g(col(ps, lstm.b_c).begin(), col(ps, lstm.b_c).end());
  matvec_acc(ps.value(lstm.W_iX), X, i);
  matvec_acc(ps.value(lstm.W_fX), X, f);
  matvec_acc(ps.value(lstm.W_oX), X, o);
  matvec_acc(ps.value(lstm.W_cX), X, g);
  peep(lstm.W_ic, i);
  peep(lstm.W_fc, f);
  peep(lstm.W_oc, o);

  LstmState next{Vector(n), Vector(n)};
  Vector tanh_c(n);
  for (std::size_t k = 0; k < n; ++k) {
    i[k] = sigmoid(i[k]);
    f[k] = sigmoid(f[k]);
    o[k] = sigmoid(o[k]);
    g[k] = tanh_act(g[k]);
    next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
    tanh_c[k] = tanh_act(next.c[k]);
    next.h[k] = o[k] * tanh_c[k];
  }
  if (cache) {
    cache->X = std::move(X);
    cache->c_prev = prev.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

void lstm_step_backward(ParamSet& ps, const LstmParams& lstm, const LstmStepCache& cache,
                        std::span<const double> dh, std::span<const double> dc, Vector& dx,
                        Vector& dh_prev, Vector& dc_prev) {
  const std::size_t n = lstm.cell_count;
  Vector dzi(n), dzf(n), dzo(n), dzg(n);
  dc_prev.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double tc = cache.tanh_c[k];
    const double dct = dc[k] + dh[k] * cache.o[k] * (1.0 - tc * tc);
    const double d_o = dh[k] * tc;
    const double d_i = dct * cache.g[k];
    const double d_g = dct * cache.i[k];
    const double d_f = dct * cache.c_prev[k];
    dc_prev[k] = dct * cache.f[k];
    dzi[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
    dzf[k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
    dzo[k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
    dzg[k] = d_g * (1.0 - cache.g[k] * cache.g[k]);
  }

  outer_acc(ps.grad(lstm.W_iX), dzi, cache.X);
  outer_acc(ps.grad(lstm.W_fX), dzf, cache.X);
  outer_acc(ps.grad(lstm.W_oX), dzo, cache.X);
  outer_acc(ps.grad(lstm.W_cX), dzg, cache.X);
  axpy(1.0, dzi, ps.grad(lstm.b_i).data);
  axpy(1.0, dzf, ps.grad(lstm.b_f).data);
  axpy(1.0, dzo, ps.grad(lstm.b_o).data);
  axpy(1.0, dzg, ps.grad(lstm.b_c).data);

  const std::pair<ParamId, const Vector*> peepholes[] = {
      {lstm.W_ic, &dzi}, {lstm.W_fc, &dzf}, {lstm.W_oc, &dzo}};
  for (const auto& [w, dz] : peepholes) {
    if (lstm.diagonal_peephole) {
      diag_outer_acc(ps.grad(w), *dz, cache.c_prev);
      diag_acc(ps.value(w), *dz, dc_prev);
    } else {
      outer_acc(ps.grad(w), *dz, cache.c_prev);
      matvec_t_acc(ps.value(w), *dz, dc_prev);
    }
  }

  Vector dX(cache.X.size(), 0.0);
  matvec_t_acc(ps.value(lstm.W_iX), dzi, dX);
  matvec_t_acc(ps.value(lstm.W_fX), dzf, dX);
  matvec_t_acc(ps.value(lstm.W_oX), dzo, dX);
  matvec_t_acc(ps.value(lstm.W_cX), dzg, dX);
  dx.assign(dX.begin(), dX.begin() + static_cast<std::ptrdiff_t>(lstm.input_dim));
  dh_prev.assign(dX.begin() + static_cast<std::ptrdiff_t>(lstm.input_dim), dX.end());
}

std::vector<LstmState> encode_sequence(const ParamSet& ps, const LstmParams& lstm,
                                       std::span<const Vector> inputs, const LstmState& init,
                                       SequenceTrace* trace) {
  if (inputs.empty()) throw std::invalid_argument("empty sequence");
  std::vector<LstmState> states;
  states.reserve(inputs.size());
  if (trace) trace->steps.assign(inputs.size(), {});
  const LstmState* prev = &init;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    states.push_back(lstm_step(ps, lstm, inputs[t], *prev, trace ? &trace->steps[t] : nullptr));
    prev = &states.back();
  }
  return states;
}

LstmState encode_sequence_backward(ParamSet& ps, const LstmParams& lstm,
                                   const SequenceTrace& trace,
                                   const std::vector<Vector>& dh_steps, const LstmState& dfinal,
                                   std::vector<Vector>& dx) {
  const std::size_t T = trace.steps.size();
  dx.assign(T, {});
  Vector dh_carry = dfinal.h;
  Vector dc_carry = dfinal.c;
  Vector dh(lstm.cell_count), dh_prev, dc_prev;
  for (std::size_t t = T; t-- > 0;) {
    dh = dh_carry;
    if (!dh_steps.empty()) axpy(1.0, dh_steps[t], dh);
    lstm_step_backward(ps, lstm, trace.steps[t], dh, dc_carry, dx[t], dh_prev, dc_prev);
    dh_carry.swap(dh_prev);
    dc_carry.swap(dc_prev);
  }
  return {std::move(dh_carry), std::move(dc_carry)};
}

AttentionParams AttentionParams::create(ParamSet& ps, const std::string& prefix,
                                        std::size_t cell_count, std::size_t hidden_dim, Rng* rng,
                                        double scale) {
  if (hidden_dim == 0) throw std::invalid_argument("attention hidden_dim must be >= 1");
  AttentionParams a;
  a.hidden_dim = hidden_dim;
  a.cell_count = cell_count;
  a.W1 = ps.add(prefix + ".W1", make_tensor(hidden_dim, cell_count, rng, scale));
  a.W2 = ps.add(prefix + ".W2", make_tensor(hidden_dim, cell_count, rng, scale));
  a.b = ps.add(prefix + ".b", make_tensor(hidden_dim, 1, rng, scale));
  a.w_out = ps.add(prefix + ".w_out", make_tensor(1, hidden_dim, rng, scale));
  return a;
}

void AttentionParams::validate(const ParamSet& ps) const {
  if (hidden_dim == 0) throw std::invalid_argument("attention hidden_dim must be >= 1");
  expect_shape(ps, W1, hidden_dim, cell_count);
  expect_shape(ps, W2, hidden_dim, cell_count);
  expect_shape(ps, b, hidden_dim, 1);
  expect_shape(ps, w_out, 1, hidden_dim);
}

double importance(const ParamSet& ps, const AttentionParams& att, std::span<const double> h_i,
                  std::span<const double> h_N) {
  expect_length("h_i", h_i.size(), att.cell_count);
  expect_length("h_N", h_N.size(), att.cell_count);
  Vector u(col(ps, att.b).begin(), col(ps, att.b).end());
  matvec_acc(ps.value(att.W1), h_i, u);
  matvec_acc(ps.value(att.W2), h_N, u);
  for (double& x : u) x = tanh_act(x);
  return dot(ps.value(att.w_out).data, u);
}

Vector attention_weights(std::span<const double> scores) { return softmax(scores); }

Vector attend(const ParamSet& ps, const AttentionParams& att, std::span<const Vector> states,
              std::span<const double> h_N, AttentionCache& cache) {
  if (states.empty()) throw std::invalid_argument("empty sequence");
  expect_length("h_N", h_N.size(), att.cell_count);
  Vector base(col(ps, att.b).begin(), col(ps, att.b).end());
  matvec_acc(ps.value(att.W2), h_N, base);

  const auto& w_out = ps.value(att.w_out).data;
  cache.hidden.assign(states.size(), {});
  Vector scores(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    expect_length("h_i", states[i].size(), att.cell_count);
    Vector u = base;
    matvec_acc(ps.value(att.W1), states[i], u);
    for (double& x : u) x = tanh_act(x);
    scores[i] = dot(w_out, u);
    cache.hidden[i] = std::move(u);
  }
  cache.alphas = attention_weights(scores);

  Vector h_prime(att.cell_count, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) axpy(cache.alphas[i], states[i], h_prime);
  return h_prime;
}

void attend_backward(ParamSet& ps, const AttentionParams& att, const AttentionCache& cache,
                     std::span<const Vector> states, std::span<const double> h_N,
                     std::span<const double> dh_prime, std::vector<Vector>& dstates,
                     Vector& dh_N) {
  const std::size_t L = states.size();
  const auto& alphas = cache.alphas;
  Vector dalpha(L);
  double mean = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    dalpha[i] = dot(dh_prime, states[i]);
    mean += alphas[i] * dalpha[i];
  }

  const auto& w_out = ps.value(att.w_out).data;
  Vector du_sum(att.hidden_dim, 0.0);
  Vector du(att.hidden_dim);
  for (std::size_t i = 0; i < L; ++i) {
    axpy(alphas[i], dh_prime, dstates[i]);
    const double ds = alphas[i] * (dalpha[i] - mean);
    const Vector& t = cache.hidden[i];
    axpy(ds, t, ps.grad(att.w_out).data);
    for (std::size_t k = 0; k < att.hidden_dim; ++k) du[k] = ds * w_out[k] * (1.0 - t[k] * t[k]);
    outer_acc(ps.grad(att.W1), du, states[i]);
    matvec_t_acc(ps.value(att.W1), du, dstates[i]);
    axpy(1.0, du, du_sum);
  }
  outer_acc(ps.grad(att.W2), du_sum, h_N);
  axpy(1.0, du_sum, ps.grad(att.b).data);
  matvec_t_acc(ps.value(att.W2), du_sum, dh_N);
}

std::string to_string(Topology t) {
  switch (t) {
    case Topology::parallel: return "parallel";
    case Topology::serialized: return "serialized";
    case Topology::attention: return "attention";
    case Topology::multitask: return "multitask";
  }
  return "?";
}

Topology topology_from_string(const std::string& s) {
  if (s == "parallel") return Topology::parallel;
  if (s == "serialized") return Topology::serialized;
  if (s == "attention") return Topology::attention;
  if (s == "multitask") return Topology::multitask;
  throw std::invalid_argument("unknown topology: " + s);
}

Vector PairEncoding::flatten() const {
  if (!h_prime) return h_N;
  return concat({h_N, *h_prime});
}

std::size_t PairEncoder::output_dim() const {
  switch (topology) {
    case Topology::parallel: return first.cell_count + second.cell_count;
    case Topology::serialized: return second.cell_count;
    case Topology::attention: return second.cell_count + first.cell_count;
    case Topology::multitask: break;
  }
  throw std::logic_error("PairEncoder cannot use the multitask topology");
}

PairEncoding PairEncoder::encode(const ParamSet& ps, std::span<const Vector> seq_a,
                                 std::span<const Vector> seq_b, EncoderTrace* trace) const {
  PairEncoding enc;
  if (topology == Topology::parallel) {
    auto a = encode_sequence(ps, first, seq_a, LstmState::zeros(first.cell_count),
                             trace ? &trace->first : nullptr);
    auto b = encode_sequence(ps, second, seq_b, LstmState::zeros(second.cell_count),
                             trace ? &trace->second : nullptr);
    enc.h_N = concat({a.back().h, b.back().h});
    return enc;
  }
  if (topology == Topology::multitask) {
    throw std::logic_error("PairEncoder cannot use the multitask topology");
  }
  if (first.cell_count != second.cell_count) {
    throw std::invalid_argument("serialized encoder needs equal cell counts, got " +
                                std::to_string(first.cell_count) + " and " +
                                std::to_string(second.cell_count));
  }
  auto a = encode_sequence(ps, first, seq_a, LstmState::zeros(first.cell_count),
                           trace ? &trace->first : nullptr);
  if (seq_b.empty()) throw std::invalid_argument("empty sequence");
  auto b = encode_sequence(ps, second, seq_b, a.back(), trace ? &trace->second : nullptr);
  enc.h_N = b.back().h;
  if (topology == Topology::attention) {
    if (!attention) throw std::logic_error("attention topology without attention params");
    std::vector<Vector> hs;
    hs.reserve(a.size());
    for (auto& s : a) hs.push_back(std::move(s.h));
    AttentionCache local;
    AttentionCache& cache = trace ? trace->attention : local;
    enc.h_prime = attend(ps, *attention, hs, enc.h_N, cache);
    enc.alphas = cache.alphas;
    if (trace) {
      trace->first_h = std::move(hs);
      trace->h_N = enc.h_N;
    }
  }
  return enc;
}

void PairEncoder::backward(ParamSet& ps, const EncoderTrace& trace, const EncodingGrad& grad,
                           std::vector<Vector>& dx_a, std::vector<Vector>& dx_b) const {
  if (topology == Topology::parallel) {
    const std::size_t n1 = first.cell_count;
    LstmState da{Vector(grad.dh_N.begin(), grad.dh_N.begin() + static_cast<std::ptrdiff_t>(n1)),
                 Vector(n1, 0.0)};
    LstmState db{Vector(grad.dh_N.begin() + static_cast<std::ptrdiff_t>(n1), grad.dh_N.end()),
                 Vector(second.cell_count, 0.0)};
    encode_sequence_backward(ps, second, trace.second, {}, db, dx_b);
    encode_sequence_backward(ps, first, trace.first, {}, da, dx_a);
    return;
  }
  const std::size_t n = first.cell_count;
  Vector dh_N = grad.dh_N;
  std::vector<Vector> dstates;
  if (topology == Topology::attention) {
    dstates.assign(trace.first_h.size(), Vector(n, 0.0));
    attend_backward(ps, *attention, trace.attention, trace.first_h, trace.h_N, grad.dh_prime,
                    dstates, dh_N);
  }
  LstmState handoff = encode_sequence_backward(ps, second, trace.second, {},
                                               LstmState{dh_N, Vector(n, 0.0)}, dx_b);
  encode_sequence_backward(ps, first, trace.first, dstates, handoff, dx_a);
}

PairEncoding encode_parallel(const ParamSet& ps, const LstmParams& p1, const LstmParams& p2,
                             std::span<const Vector> seq_a, std::span<const Vector> seq_b) {
  PairEncoder enc{Topology::parallel, p1, p2, std::nullopt};
  return enc.encode(ps, seq_a, seq_b);
}

PairEncoding encode_serialized(const ParamSet& ps, const LstmParams& p1, const LstmParams& p2,
                               std::span<const Vector> seq_a, std::span<const Vector> seq_b,
                               const AttentionParams* attention) {
  PairEncoder enc{attention ? Topology::attention : Topology::serialized, p1, p2,
                  attention ? std::optional<AttentionParams>(*attention) : std::nullopt};
  return enc.encode(ps, seq_a, seq_b);
}

}  // namespace cqa
