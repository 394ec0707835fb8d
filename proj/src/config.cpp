#include <charconv>
#include <stdexcept>

#include "cqa/training.hpp"

namespace cqa {
namespace {

double to_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument(key + ": not a number: " + v);
  return x;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw std::invalid_argument(key + ": not a nonnegative integer: " + v);
  }
  return x;
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, got " + v);
}

// Shortest text that reads back to the same double.
std::string real(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

std::string flag(bool b) { return b ? "true" : "false"; }

}  // namespace

const std::vector<std::string>& TrainConfig::keys() {
  static const std::vector<std::string> k = {
      "optimizer",     "learning_rate",    "dropout",          "l2",
      "cell_count",    "mlp_hidden",       "attention_hidden", "embed_dim",
      "epochs",        "batch_size",       "seed",             "embeddings_trainable",
      "lstm_shared",   "diagonal_peephole", "beta",            "topology",
      "ir_rank_slots", "init_scale",       "dev_fraction",     "f1_threshold",
      "map_skip_unanswerable", "adagrad_eps", "adadelta_rho",   "adadelta_eps",
      "stop_at_dev_map"};
  return k;
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  if (key == "optimizer") optimizer = optimizer_from_string(v);
  else if (key == "learning_rate") learning_rate = to_real(key, v);
  else if (key == "dropout") dropout = to_real(key, v);
  else if (key == "l2") l2 = to_real(key, v);
  else if (key == "cell_count") cell_count = to_count(key, v);
  else if (key == "mlp_hidden") mlp_hidden = to_count(key, v);
  else if (key == "attention_hidden") attention_hidden = to_count(key, v);
  else if (key == "embed_dim") embed_dim = to_count(key, v);
  else if (key == "epochs") epochs = to_count(key, v);
  else if (key == "batch_size") batch_size = to_count(key, v);
  else if (key == "seed") seed = to_count(key, v);
  else if (key == "embeddings_trainable") embeddings_trainable = to_flag(key, v);
  else if (key == "lstm_shared") lstm_shared = to_flag(key, v);
  else if (key == "diagonal_peephole") diagonal_peephole = to_flag(key, v);
  else if (key == "beta") {
    Beta b{};
    std::size_t start = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      std::size_t comma = v.find(',', start);
      if ((k < 2) != (comma != std::string::npos)) {
        throw std::invalid_argument("beta: expected three comma-separated numbers, got " + v);
      }
      b[k] = to_real(key, v.substr(start, comma == std::string::npos ? comma : comma - start));
      start = comma + 1;
    }
    beta = b;
  } else if (key == "topology") topology = topology_from_string(v);
  else if (key == "ir_rank_slots") ir_rank_slots = to_count(key, v);
  else if (key == "init_scale") init_scale = to_real(key, v);
  else if (key == "dev_fraction") dev_fraction = to_real(key, v);
  else if (key == "f1_threshold") f1_threshold = to_real(key, v);
  else if (key == "map_skip_unanswerable") map_skip_unanswerable = to_flag(key, v);
  else if (key == "adagrad_eps") adagrad_eps = to_real(key, v);
  else if (key == "adadelta_rho") adadelta_rho = to_real(key, v);
  else if (key == "adadelta_eps") adadelta_eps = to_real(key, v);
  else if (key == "stop_at_dev_map") stop_at_dev_map = to_real(key, v);
  else throw std::invalid_argument("unknown config key: " + key);
}

std::vector<std::pair<std::string, std::string>> TrainConfig::echo() const {
  return {{"optimizer", to_string(optimizer)},
          {"learning_rate", real(learning_rate)},
          {"dropout", real(dropout)},
          {"l2", real(l2)},
          {"cell_count", std::to_string(cell_count)},
          {"mlp_hidden", std::to_string(mlp_hidden)},
          {"attention_hidden", std::to_string(attention_hidden)},
          {"embed_dim", std::to_string(embed_dim)},
          {"epochs", std::to_string(epochs)},
          {"batch_size", std::to_string(batch_size)},
          {"seed", std::to_string(seed)},
          {"embeddings_trainable", flag(embeddings_trainable)},
          {"lstm_shared", flag(lstm_shared)},
          {"diagonal_peephole", flag(diagonal_peephole)},
          {"beta", real(beta[0]) + "," + real(beta[1]) + "," + real(beta[2])},
          {"topology", to_string(topology)},
          {"ir_rank_slots", std::to_string(ir_rank_slots)},
          {"init_scale", real(init_scale)},
          {"dev_fraction", real(dev_fraction)},
          {"f1_threshold", real(f1_threshold)},
          {"map_skip_unanswerable", flag(map_skip_unanswerable)},
          {"adagrad_eps", real(adagrad_eps)},
          {"adadelta_rho", real(adadelta_rho)},
          {"adadelta_eps", real(adadelta_eps)},
          {"stop_at_dev_map", real(stop_at_dev_map)}};
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
  require(l2 >= 0.0, "l2 must be nonnegative");
  require(cell_count > 0 && mlp_hidden > 0 && attention_hidden > 0 && embed_dim > 0,
          "model dimensions must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(beta[0] >= 0.0 && beta[1] >= 0.0 && beta[2] >= 0.0, "beta entries must be nonnegative");
  require(init_scale > 0.0, "init_scale must be positive");
  require(dev_fraction >= 0.0 && dev_fraction < 1.0, "dev_fraction must lie in [0, 1)");
  require(adadelta_rho > 0.0 && adadelta_rho < 1.0, "adadelta_rho must lie in (0, 1)");
  require(adagrad_eps > 0.0 && adadelta_eps > 0.0, "optimizer eps must be positive");
}

ModelConfig TrainConfig::model_config(std::size_t vocab_size) const {
  ModelConfig m;
  m.topology = topology;
  m.vocab_size = vocab_size;
  m.embed_dim = embed_dim;
  m.cell_count = cell_count;
  m.mlp_hidden = mlp_hidden;
  m.attention_hidden = attention_hidden;
  m.ir_rank_slots = ir_rank_slots;
  m.lstm_shared = lstm_shared;
  m.diagonal_peephole = diagonal_peephole;
  m.init_scale = init_scale;
  return m;
}

}  // namespace cqa
