#include "cqa/model.hpp"

#include <stdexcept>

namespace cqa {
namespace {

std::size_t parse_count(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("model config is missing " + key);
  return static_cast<std::size_t>(std::stoull(it->second));
}

bool parse_flag(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw std::runtime_error("model config is missing " + key);
  return it->second == "true";
}

PairEncoder make_encoder(ParamSet& ps, const std::string& prefix, Topology topology,
                         const ModelConfig& cfg, Rng* rng) {
  PairEncoder enc;
  enc.topology = topology;
  enc.first = LstmParams::create(ps, prefix + ".lstm1", cfg.embed_dim, cfg.cell_count, rng,
                                 cfg.init_scale, cfg.diagonal_peephole);
  enc.second = cfg.lstm_shared
                   ? enc.first
                   : LstmParams::create(ps, prefix + ".lstm2", cfg.embed_dim, cfg.cell_count,
                                        rng, cfg.init_scale, cfg.diagonal_peephole);
  if (topology == Topology::attention) {
    enc.attention = AttentionParams::create(ps, prefix + ".attention", cfg.cell_count,
                                            cfg.attention_hidden, rng, cfg.init_scale);
  }
  return enc;
}

void require_label(int label, const Example& ex, const char* what) {
  if (label != 0 && label != 1) {
    throw std::runtime_error(std::string("missing ") + what + " label for candidate " +
                             ex.candidate_id + " of query " + ex.query_id);
  }
}

}  // namespace

std::map<std::string, std::string> ModelConfig::echo() const {
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {{"topology", to_string(topology)},
          {"vocab_size", std::to_string(vocab_size)},
          {"embed_dim", std::to_string(embed_dim)},
          {"cell_count", std::to_string(cell_count)},
          {"mlp_hidden", std::to_string(mlp_hidden)},
          {"attention_hidden", std::to_string(attention_hidden)},
          {"ir_rank_slots", std::to_string(ir_rank_slots)},
          {"lstm_shared", flag(lstm_shared)},
          {"diagonal_peephole", flag(diagonal_peephole)},
          {"main_head_only", flag(main_head_only)}};
}

ModelConfig ModelConfig::from_echo(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  auto it = kv.find("topology");
  if (it == kv.end()) throw std::runtime_error("model config is missing topology");
  c.topology = topology_from_string(it->second);
  c.vocab_size = parse_count(kv, "vocab_size");
  c.embed_dim = parse_count(kv, "embed_dim");
  c.cell_count = parse_count(kv, "cell_count");
  c.mlp_hidden = parse_count(kv, "mlp_hidden");
  c.attention_hidden = parse_count(kv, "attention_hidden");
  c.ir_rank_slots = parse_count(kv, "ir_rank_slots");
  c.lstm_shared = parse_flag(kv, "lstm_shared");
  c.diagonal_peephole = parse_flag(kv, "diagonal_peephole");
  c.main_head_only = parse_flag(kv, "main_head_only");
  return c;
}

std::vector<Example> make_examples(const Corpus& corpus, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(corpus.instance_count());
  for (const auto& q : corpus.queries) {
    TokenIds query = vocab.encode(q.query_tokens);
    for (const auto& c : q.candidates) {
      Example ex;
      ex.query_id = q.id;
      ex.candidate_id = c.id;
      ex.first = query;
      ex.second = vocab.encode(c.tokens);
      if (c.bridge) ex.bridge = vocab.encode(*c.bridge);
      ex.label = c.label;
      if (c.aux_labels) ex.aux_labels = *c.aux_labels;
      ex.ir_rank = c.ir_rank;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

Model::Model(const ModelConfig& config, Rng* rng) : config_(config) {
  if (config.vocab_size == 0 || config.embed_dim == 0 || config.cell_count == 0 ||
      config.mlp_hidden == 0 || config.attention_hidden == 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  const double scale = config.init_scale;
  embedding_ = params_.add("embedding", rng ? init_uniform(config.vocab_size, config.embed_dim,
                                                           scale, *rng)
                                            : Matrix(config.vocab_size, config.embed_dim));
  std::size_t input_dim = config.ir_rank_slots;
  if (config.topology == Topology::multitask) {
    for (int k = 0; k < 3; ++k) {
      encoders_.push_back(make_encoder(params_, "enc" + std::to_string(k), Topology::attention,
                                       config, rng));
    }
  } else {
    encoders_.push_back(make_encoder(params_, "encoder", config.topology, config, rng));
  }
  for (const auto& e : encoders_) input_dim += e.output_dim();
  const std::size_t heads =
      config.topology == Topology::multitask && !config.main_head_only ? 3 : 1;
  fnn_ = FnnParams::create(params_, input_dim, config.mlp_hidden, heads, rng, scale);
}

bool Model::has_attention() const {
  return !encoders_.empty() && encoders_.front().attention.has_value();
}

std::vector<Vector> Model::embed(const TokenIds& ids) const {
  if (ids.empty()) throw std::invalid_argument("empty sequence");
  const Matrix& table = params_.value(embedding_);
  std::vector<Vector> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside embedding table");
    }
    auto row = table.row(static_cast<std::size_t>(id));
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

void Model::scatter_embedding_grad(const TokenIds& ids, const std::vector<Vector>& dx) {
  Matrix& g = params_.grad(embedding_);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    axpy(1.0, dx[t], g.row(static_cast<std::size_t>(ids[t])));
  }
}

std::array<std::pair<const TokenIds*, const TokenIds*>, 3> Model::encoder_inputs(
    const Example& ex) const {
  if (encoders_.size() == 3) {
    if (ex.bridge.empty()) {
      throw std::runtime_error("multitask model needs relQ text for candidate " +
                               ex.candidate_id);
    }
    return {{{&ex.first, &ex.bridge}, {&ex.first, &ex.second}, {&ex.bridge, &ex.second}}};
  }
  return {{{&ex.first, &ex.second}, {nullptr, nullptr}, {nullptr, nullptr}}};
}

std::vector<Vector> Model::forward(const Example& ex, const DropoutPlan* dropout,
                                   ModelTrace* trace) const {
  ModelTrace local;
  ModelTrace& t = trace ? *trace : local;
  auto inputs = encoder_inputs(ex);
  Vector input;
  input.reserve(fnn_.input_dim);
  for (std::size_t k = 0; k < encoders_.size(); ++k) {
    auto a = embed(*inputs[k].first);
    auto b = embed(*inputs[k].second);
    t.encodings[k] = encoders_[k].encode(params_, a, b, &t.encoders[k]);
    Vector flat = t.encodings[k].flatten();
    input.insert(input.end(), flat.begin(), flat.end());
  }
  if (config_.ir_rank_slots > 0) {
    Vector aug = ir_rank_onehot(ex.ir_rank, config_.ir_rank_slots);
    input.insert(input.end(), aug.begin(), aug.end());
  }
  fnn_forward(params_, fnn_, input, dropout, t.fnn);
  return t.fnn.probs;
}

double Model::relevance(const Example& ex) const {
  return forward(ex)[main_head()][kRelevant];
}

PairEncoding Model::encode_main(const Example& ex) const {
  ModelTrace t;
  forward(ex, nullptr, &t);
  return t.encodings[encoders_.size() == 3 ? 1 : 0];
}

double Model::loss(const Example& ex, const Beta& beta) const {
  auto probs = forward(ex);
  if (probs.size() == 3) {
    require_label(ex.aux_labels[0], ex, "oriQ/relQ");
    require_label(ex.label, ex, "oriQ/relC");
    require_label(ex.aux_labels[1], ex, "relQ/relC");
    return multitask_loss({probs[0], probs[1], probs[2]},
                          {ex.aux_labels[0], ex.label, ex.aux_labels[1]}, beta);
  }
  require_label(ex.label, ex, "gold");
  return cross_entropy(probs[0], ex.label);
}

double Model::accumulate_gradients(const Example& ex, const Beta& beta, double weight,
                                   const DropoutPlan* dropout) {
  ModelTrace t;
  auto probs = forward(ex, dropout, &t);

  std::vector<int> golds;
  std::vector<double> coeffs;
  if (probs.size() == 3) {
    golds = {ex.aux_labels[0], ex.label, ex.aux_labels[1]};
    coeffs = {beta[0], beta[1], beta[2]};
    require_label(golds[0], ex, "oriQ/relQ");
    require_label(golds[1], ex, "oriQ/relC");
    require_label(golds[2], ex, "relQ/relC");
  } else {
    require_label(ex.label, ex, "gold");
    golds = {ex.label};
    coeffs = {1.0};
  }

  double loss = 0.0;
  std::vector<Vector> dlogits(probs.size());
  for (std::size_t h = 0; h < probs.size(); ++h) {
    if (!(coeffs[h] >= 0.0)) throw std::invalid_argument("beta entries must be nonnegative");
    loss += coeffs[h] * cross_entropy(probs[h], golds[h]);
    if (coeffs[h] == 0.0) continue;
    dlogits[h] = probs[h];
    dlogits[h][static_cast<std::size_t>(golds[h])] -= 1.0;
    for (double& d : dlogits[h]) d *= weight * coeffs[h];
  }

  Vector dinput = fnn_backward(params_, fnn_, t.fnn, dlogits);
  auto inputs = encoder_inputs(ex);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < encoders_.size(); ++k) {
    const PairEncoder& enc = encoders_[k];
    const std::size_t n_N = t.encodings[k].h_N.size();
    EncodingGrad g;
    g.dh_N.assign(dinput.begin() + static_cast<std::ptrdiff_t>(offset),
                  dinput.begin() + static_cast<std::ptrdiff_t>(offset + n_N));
    offset += n_N;
    if (t.encodings[k].h_prime) {
      const std::size_t n_p = t.encodings[k].h_prime->size();
      g.dh_prime.assign(dinput.begin() + static_cast<std::ptrdiff_t>(offset),
                        dinput.begin() + static_cast<std::ptrdiff_t>(offset + n_p));
      offset += n_p;
    }
    std::vector<Vector> dx_a, dx_b;
    enc.backward(params_, t.encoders[k], g, dx_a, dx_b);
    scatter_embedding_grad(*inputs[k].first, dx_a);
    scatter_embedding_grad(*inputs[k].second, dx_b);
  }

  if (gradient_fault_) {
    for (double& g : params_.grad(fnn_.b_hidden).data) g += 1e-3 * weight;
  }
  return loss;
}

}  // namespace cqa
