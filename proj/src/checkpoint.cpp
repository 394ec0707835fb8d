#include "cqa/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cqa {
namespace {

constexpr char kMagic[8] = {'C', 'Q', 'A', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string32(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string get_string32(const char* what) {
    return get_bytes(get<std::uint32_t>(what), what);
  }
  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error("corrupt checkpoint at offset " + std::to_string(pos_) + ": " + why);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (n > in_.size() - pos_) fail(std::string("truncated while reading ") + what);
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

const Matrix* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.value;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const Model& model, const Vocabulary& vocab,
                           std::vector<std::pair<std::string, std::string>> train_echo) {
  Checkpoint c;
  c.model = model.config();
  c.train_echo = std::move(train_echo);
  c.vocab = vocab;
  for (const auto& p : model.params().entries()) c.tensors.push_back(Param{p.name, p.value, {}});
  return c;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(ckpt.version);
  std::string header;
  for (const auto& [k, v] : ckpt.model.echo()) header += "model." + k + "=" + v + "\n";
  for (const auto& [k, v] : ckpt.train_echo) header += "train." + k + "=" + v + "\n";
  w.put<std::uint64_t>(header.size());
  w.raw(header.data(), header.size());
  w.put<std::uint64_t>(ckpt.vocab.size());
  for (const auto& t : ckpt.vocab.tokens()) w.put_string32(t);
  w.put<std::uint64_t>(ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    w.put_string32(t.name);
    w.put<std::uint64_t>(t.value.rows);
    w.put<std::uint64_t>(t.value.cols);
    w.raw(reinterpret_cast<const char*>(t.value.data.data()), t.value.size() * sizeof(double));
  }
  const std::uint64_t sum = fnv1a(w.bytes().data(), w.bytes().size());
  w.put<std::uint64_t>(sum);
  return std::move(w.bytes());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic)) {
    throw std::runtime_error("corrupt checkpoint at offset 0: bad magic");
  }
  Checkpoint c;
  c.version = r.get<std::uint32_t>("version");
  if (c.version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint version " + std::to_string(c.version) +
                             " is not supported (expected " +
                             std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof(std::uint64_t)) r.fail("truncated");
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);

  std::map<std::string, std::string> model_kv;
  {
    std::istringstream header(r.get_bytes(r.get<std::uint64_t>("header length"), "header"));
    std::string line;
    while (std::getline(header, line)) {
      auto eq = line.find('=');
      if (eq == std::string::npos) r.fail("malformed header line '" + line + "'");
      std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key.rfind("model.", 0) == 0) {
        model_kv[key.substr(6)] = value;
      } else if (key.rfind("train.", 0) == 0) {
        c.train_echo.emplace_back(key.substr(6), value);
      }
    }
  }
  const std::uint64_t vocab_count = r.get<std::uint64_t>("vocab count");
  if (vocab_count > bytes.size()) r.fail("implausible vocab count");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_count);
  for (std::uint64_t i = 0; i < vocab_count; ++i) tokens.push_back(r.get_string32("vocab token"));

  const std::uint64_t tensor_count = r.get<std::uint64_t>("tensor count");
  if (tensor_count > bytes.size()) r.fail("implausible tensor count");
  for (std::uint64_t i = 0; i < tensor_count; ++i) {
    Param p;
    p.name = r.get_string32("tensor name");
    const auto rows = r.get<std::uint64_t>("tensor rows");
    const auto cols = r.get<std::uint64_t>("tensor cols");
    if (cols != 0 && rows > bytes.size() / cols) r.fail("implausible shape for " + p.name);
    std::string raw = r.get_bytes(rows * cols * sizeof(double), "tensor data");
    p.value = Matrix(rows, cols);
    std::memcpy(p.value.data.data(), raw.data(), raw.size());
    c.tensors.push_back(std::move(p));
  }
  if (r.pos() != body) r.fail("unexpected trailing bytes");
  const std::uint64_t stored = r.get<std::uint64_t>("checksum");
  if (stored != fnv1a(bytes.data(), body)) {
    throw std::runtime_error("corrupt checkpoint at offset " + std::to_string(body) +
                             ": checksum mismatch");
  }
  try {
    c.model = ModelConfig::from_echo(model_kv);
    c.vocab = Vocabulary::from_tokens(tokens);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint header: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Model& model, const Vocabulary& vocab, const std::string& path,
                     std::vector<std::pair<std::string, std::string>> train_echo) {
  const std::string bytes = serialize_checkpoint(make_checkpoint(model, vocab, std::move(train_echo)));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model model(ckpt.model, nullptr);
  auto& entries = model.params().entries();
  if (entries.size() != ckpt.tensors.size()) {
    throw std::runtime_error("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                             " tensors, architecture needs " + std::to_string(entries.size()));
  }
  for (auto& p : entries) {
    const Matrix* m = ckpt.find(p.name);
    if (!m) throw std::runtime_error("checkpoint is missing tensor " + p.name);
    if (!m->same_shape(p.value)) {
      throw std::runtime_error("checkpoint tensor " + p.name + " has shape " + m->shape() +
                               ", architecture needs " + p.value.shape());
    }
    p.value = *m;
  }
  return model;
}

bool is_softmax_tensor(const std::string& name) { return name.rfind("softmax.", 0) == 0; }

Model transfer_init(const Checkpoint& pretrained, const ModelConfig& target, Rng& rng) {
  Model model(target, &rng);
  std::vector<std::string> mismatched;
  for (auto& p : model.params().entries()) {
    if (is_softmax_tensor(p.name)) continue;
    const Matrix* m = pretrained.find(p.name);
    if (!m || !m->same_shape(p.value)) {
      mismatched.push_back(p.name);
      continue;
    }
    p.value = *m;
  }
  if (!mismatched.empty()) {
    std::string msg = "transfer_init: incompatible tensors:";
    for (const auto& n : mismatched) msg += " " + n;
    throw std::runtime_error(msg);
  }
  return model;
}

}  // namespace cqa
