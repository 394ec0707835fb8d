#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "cqa/eval.hpp"

namespace cqa {
namespace {

std::string keyword(std::size_t k) { return "k" + std::to_string(k); }

class TokenSource {
 public:
  TokenSource(const SyntheticSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {}

  /// Random-length sequence with `kw` planted at a random position.
  Tokens sequence(std::size_t kw) {
    if (!spec_.distractors) return {keyword(kw)};
    const std::size_t span = spec_.max_length - spec_.min_length + 1;
    const std::size_t length = spec_.min_length + rng_.index(span);
    Tokens out;
    out.reserve(length);
    for (std::size_t i = 0; i + 1 < length; ++i) {
      const std::size_t d = spec_.keywords + rng_.index(spec_.vocab_size - spec_.keywords);
      out.push_back("w" + std::to_string(d));
    }
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(rng_.index(length)), keyword(kw));
    return out;
  }

  std::size_t other_keyword(std::size_t kw) {
    std::size_t k = rng_.index(spec_.keywords - 1);
    return k >= kw ? k + 1 : k;
  }

 private:
  const SyntheticSpec& spec_;
  Rng& rng_;
};

}  // namespace

bool is_planted_keyword(const std::string& token) {
  return token.size() > 1 && token[0] == 'k' &&
         std::all_of(token.begin() + 1, token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

Corpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.keywords < 2) throw std::invalid_argument("synthetic corpus needs at least 2 keywords");
  if (spec.distractors && spec.vocab_size <= spec.keywords) {
    throw std::invalid_argument("synthetic vocab must exceed the keyword count");
  }
  if (spec.min_length < 1 || spec.max_length < spec.min_length) {
    throw std::invalid_argument("synthetic sequence lengths are inconsistent");
  }
  if (spec.groups == 0 || spec.candidates == 0) {
    throw std::invalid_argument("synthetic corpus needs groups and candidates");
  }
  if (!(spec.positive_rate >= 0.0 && spec.positive_rate <= 1.0)) {
    throw std::invalid_argument("positive_rate must lie in [0, 1]");
  }

  Rng rng(spec.seed);
  TokenSource source(spec, rng);
  Corpus corpus;
  corpus.task = spec.triples ? Task::C : Task::A;
  for (std::size_t g = 0; g < spec.groups; ++g) {
    QueryGroup q;
    q.id = spec.id_prefix + std::to_string(g);
    const std::size_t kw = rng.index(spec.keywords);
    q.query_tokens = source.sequence(kw);

    std::vector<double> ir_scores;
    for (std::size_t c = 0; c < spec.candidates; ++c) {
      Candidate cand;
      cand.id = "c" + std::to_string(c);
      const bool relevant = rng.bernoulli(spec.positive_rate);
      const std::size_t cand_kw = relevant ? kw : source.other_keyword(kw);
      cand.label = relevant ? 1 : 0;
      if (spec.triples) {
        // relQ shares relC's keyword half of the time.
        const std::size_t bridge_kw =
            rng.bernoulli(0.5) ? cand_kw : rng.index(spec.keywords);
        cand.bridge = source.sequence(bridge_kw);
        cand.aux_labels = std::array<int, 2>{bridge_kw == kw ? 1 : 0,
                                             bridge_kw == cand_kw ? 1 : 0};
      }
      cand.tokens = source.sequence(cand_kw);
      // Sum of two uniforms keeps the noise bounded and symmetric.
      const double noise = spec.ir_noise * (rng.uniform01() + rng.uniform01() - 1.0);
      ir_scores.push_back(static_cast<double>(cand.label) + noise);
      q.candidates.push_back(std::move(cand));
    }
    if (spec.with_ir_ranks) {
      std::vector<std::size_t> order(spec.candidates);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return ir_scores[a] > ir_scores[b]; });
      for (std::size_t r = 0; r < order.size(); ++r) {
        q.candidates[order[r]].ir_rank = static_cast<int>(r + 1);
      }
    }
    corpus.queries.push_back(std::move(q));
  }
  return corpus;
}

}  // namespace cqa
