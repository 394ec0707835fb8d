#pragma once

// Ranking and classification metrics, the random baseline, rank-averaging
// system combination, attention export, and the planted-keyword synthetic
// corpus used by the acceptance suite.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cqa/data.hpp"
#include "cqa/model.hpp"

namespace cqa {

struct RankedEntry {
  std::string candidate_id;
  double score = 0.0;
  int gold = 0;
};

/// Candidates of one query sorted by descending score, ties by ascending
/// candidate id.
struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  static RankedList sorted(std::string query_id, std::vector<RankedEntry> entries);
  std::size_t relevant_count() const;
};

/// (1/R) Σ_k P@k over relevant positions k; 0 when R = 0.
double average_precision(const RankedList& list);

/// Mean AP. With `skip_unanswerable` lists without relevant candidates are
/// left out of the mean; otherwise they count as 0.
double map_score(std::span<const RankedList> lists, bool skip_unanswerable = true);

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Positive-class precision, recall and F1; zero denominators give 0.
F1Result f1_score(std::span<const int> predictions, std::span<const int> golds);

struct EvalSummary {
  double map = 0.0;
  F1Result f1;
  std::size_t queries = 0;
  std::size_t instances = 0;
};

struct ScoredSet {
  std::vector<RankedList> lists;
  std::vector<int> predictions;
  std::vector<int> golds;
};

/// Scores every example with the model's relevant-class probability.
ScoredSet score_examples(const Model& model, std::span<const Example> examples,
                         double threshold = 0.5);

EvalSummary summarize(const ScoredSet& scored, bool skip_unanswerable = true);

EvalSummary evaluate_model(const Model& model, std::span<const Example> examples,
                           double threshold = 0.5, bool skip_unanswerable = true);

/// Uniform random scores and fair-coin labels, drawn per candidate in corpus
/// order.
ScoredSet random_baseline(const Corpus& corpus, Rng& rng);

using IrRanks = std::map<std::pair<std::string, std::string>, int>;

IrRanks ir_ranks_of(const Corpus& corpus);

/// Averages the 1-based positions of each candidate in two rankings of the
/// same query. The result carries score = -(average position), so the usual
/// ordering puts the best combined rank first.
RankedList combine_rankings(const RankedList& a, const RankedList& b);

/// Rescores model rankings by the average of model position and IR rank.
std::vector<RankedList> combine_with_ir(std::span<const RankedList> model_lists,
                                        const IrRanks& ir_ranks);

/// Rankings induced by IR ranks alone.
std::vector<RankedList> ir_rankings(const Corpus& corpus);

struct AttentionDump {
  std::string instance_id;
  Tokens tokens;
  Vector alphas;
  int predicted = 0;
  int gold = kUnknownLabel;
};

std::vector<AttentionDump> dump_attention(const Model& model, const Corpus& corpus,
                                          const Vocabulary& vocab, double threshold = 0.5);

/// `instance_id<TAB>gold<TAB>predicted<TAB>token:alpha token:alpha ...`
std::string format_attention_dump(const std::vector<AttentionDump>& records);
void write_attention_dump(const std::vector<AttentionDump>& records, const std::string& path);

/// Planted-keyword corpus: tokens "k<i>" for i < keywords are keywords, the
/// rest "w<i>" are distractors. Each query plants one keyword; a candidate is
/// relevant iff it carries the same keyword, otherwise it carries a different
/// one.
struct SyntheticSpec {
  std::size_t vocab_size = 50;
  std::size_t groups = 200;
  std::size_t candidates = 10;
  std::size_t keywords = 10;
  std::size_t min_length = 4;
  std::size_t max_length = 8;
  bool distractors = true;
  double positive_rate = 0.5;
  /// Noise of the IR ranker; 0 ranks purely by label.
  double ir_noise = 1.0;
  bool with_ir_ranks = true;
  /// Emit relQ bridge text and auxiliary labels (question/external comment).
  bool triples = false;
  std::string id_prefix = "q";
  std::uint64_t seed = 1;
};

Corpus generate_synthetic_corpus(const SyntheticSpec& spec);

bool is_planted_keyword(const std::string& token);

}  // namespace cqa
