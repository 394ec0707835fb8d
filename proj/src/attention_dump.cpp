#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cqa/eval.hpp"

namespace cqa {

std::vector<AttentionDump> dump_attention(const Model& model, const Corpus& corpus,
                                          const Vocabulary& vocab, double threshold) {
  if (!model.has_attention()) throw std::runtime_error("model has no attention");
  std::vector<AttentionDump> out;
  out.reserve(corpus.instance_count());
  const auto examples = make_examples(corpus, vocab);
  std::size_t k = 0;
  for (const auto& q : corpus.queries) {
    for (const auto& c : q.candidates) {
      const Example& ex = examples[k++];
      ModelTrace trace;
      auto probs = model.forward(ex, nullptr, &trace);
      const PairEncoding& enc = trace.encodings[model.head_count() == 3 ? 1 : 0];
      AttentionDump d;
      d.instance_id = q.id + "/" + c.id;
      d.tokens = q.query_tokens;
      d.alphas = *enc.alphas;
      d.predicted = probs[model.main_head()][kRelevant] >= threshold ? 1 : 0;
      d.gold = c.label;
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::string format_attention_dump(const std::vector<AttentionDump>& records) {
  std::ostringstream out;
  char buf[32];
  for (const auto& r : records) {
    if (r.tokens.size() != r.alphas.size()) {
      throw std::logic_error("attention dump " + r.instance_id + ": token/alpha count mismatch");
    }
    out << r.instance_id << '\t' << (r.gold == kUnknownLabel ? "?" : std::to_string(r.gold))
        << '\t' << r.predicted << '\t';
    for (std::size_t i = 0; i < r.tokens.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.6f", r.alphas[i]);
      out << (i ? " " : "") << r.tokens[i] << ':' << buf;
    }
    out << '\n';
  }
  return out.str();
}

void write_attention_dump(const std::vector<AttentionDump>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write attention dump " + path);
  out << format_attention_dump(records);
}

}  // namespace cqa
