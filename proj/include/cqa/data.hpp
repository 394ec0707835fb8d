#pragma once

// Corpus records, vocabulary, pretrained embeddings, in-domain data
// augmentation and the canonical text corpus format.
//
// Corpus file: one tab-separated record per line
//   query_id  candidate_id  label  ir_rank  query_text  candidate_text  [bridge_text  [aux_labels]]
// label is 0, 1, or '?' when unknown; ir_rank is a positive integer or '-'.
// bridge_text carries relQ for question/external-comment triples and
// aux_labels the oriQ/relQ and relQ/relC labels as "a,b". Lines starting with
// '#' are comments; "# provenance: augmented" marks augmentation output.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cqa/numerics.hpp"

namespace cqa {

enum class Task { A, B, C };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

using Tokens = std::vector<std::string>;
using TokenIds = std::vector<int>;

/// Lowercase whitespace split; punctuation stays attached.
Tokens tokenize(const std::string& text);

inline constexpr int kUnknownLabel = -1;

struct Candidate {
  std::string id;
  Tokens tokens;
  int label = kUnknownLabel;
  std::optional<int> ir_rank;
  std::optional<Tokens> bridge;
  std::optional<std::array<int, 2>> aux_labels;
};

struct QueryGroup {
  std::string id;
  Tokens query_tokens;
  std::vector<Candidate> candidates;
};

struct Corpus {
  Task task = Task::A;
  std::vector<QueryGroup> queries;
  bool augmented = false;

  std::size_t instance_count() const;
  bool fully_labeled() const;
  /// Throws if a group is empty, ids repeat within a group, labels are not
  /// binary/unknown, or IR ranks repeat within a group.
  void validate() const;
};

Corpus load_corpus(const std::string& path, Task task);
Corpus parse_corpus(const std::string& text, Task task);
void write_corpus(const Corpus& corpus, const std::string& path);
std::string format_corpus(const Corpus& corpus);

class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary();
  static Vocabulary from_corpora(const std::vector<const Corpus*>& corpora);
  static Vocabulary from_tokens(const std::vector<std::string>& id_to_token);

  int add(const std::string& token);
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  TokenIds encode(const Tokens& tokens) const;

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<std::string> tokens_;
};

struct EmbeddingTable {
  Matrix table;
  bool trainable = true;
  std::size_t covered = 0;
  std::vector<std::string> warnings;
};

/// Every row starts uniform in [-scale, scale] from `rng`; rows for tokens in
/// the file are then overwritten with the file values. UNK stays random.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, Rng& rng,
                               double scale = 0.1);

enum class Provenance { original, augmented_pair, task_a };

std::string to_string(Provenance p);

struct PairInstance {
  std::string group_id;
  std::string first_id;
  std::string second_id;
  Tokens first;
  Tokens second;
  int label = kUnknownLabel;
  Provenance provenance = Provenance::original;
};

/// Flattens each (query, candidate) into a pair instance.
std::vector<PairInstance> pair_instances(const Corpus& corpus, Provenance provenance);

/// Original question/related-question pairs followed by transitive pairs
/// between related questions of the same original question: both relevant
/// gives a positive, exactly one relevant gives a negative, neither gives
/// nothing. Each unordered pair appears once with the smaller id first.
std::vector<PairInstance> augment_question_pairs(const Corpus& corpus);

/// Corpus form of augment_question_pairs: generated pairs are grouped under
/// "<query_id>:<first_id>", and the result is flagged as augmented.
Corpus augmented_corpus(const Corpus& corpus);

/// Task-C pairs followed by task-A pairs, tagged by provenance; shuffled
/// when a seed is given.
std::vector<PairInstance> augment_task_c_with_task_a(
    const Corpus& task_c, const Corpus& task_a,
    std::optional<std::uint64_t> shuffle_seed = std::nullopt);

/// Corpus form of augment_task_c_with_task_a; task-A groups keep their ids
/// prefixed with "A:".
Corpus merged_corpus(const Corpus& task_c, const Corpus& task_a);

}  // namespace cqa
