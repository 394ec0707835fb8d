#include <algorithm>
#include <stdexcept>

#include "cqa/data.hpp"

namespace cqa {

std::vector<PairInstance> pair_instances(const Corpus& corpus, Provenance provenance) {
  std::vector<PairInstance> out;
  out.reserve(corpus.instance_count());
  for (const auto& q : corpus.queries) {
    for (const auto& c : q.candidates) {
      out.push_back(PairInstance{q.id, q.id, c.id, q.query_tokens, c.tokens, c.label, provenance});
    }
  }
  return out;
}

namespace {

/// Transitive pairs for one group, in deterministic order.
std::vector<PairInstance> group_pairs(const QueryGroup& q) {
  std::vector<const Candidate*> sorted;
  for (const auto& c : q.candidates) {
    if (c.label == kUnknownLabel) {
      throw std::runtime_error("augmentation needs gold labels; candidate " + c.id +
                               " is unlabeled");
    }
    sorted.push_back(&c);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Candidate* a, const Candidate* b) { return a->id < b->id; });

  std::vector<PairInstance> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const Candidate& a = *sorted[i];
      const Candidate& b = *sorted[j];
      const int relevant = a.label + b.label;
      if (relevant == 0) continue;
      out.push_back(PairInstance{q.id, a.id, b.id, a.tokens, b.tokens, relevant == 2 ? 1 : 0,
                                 Provenance::augmented_pair});
    }
  }
  return out;
}

}  // namespace

std::vector<PairInstance> augment_question_pairs(const Corpus& corpus) {
  std::vector<PairInstance> out = pair_instances(corpus, Provenance::original);
  for (const auto& q : corpus.queries) {
    auto generated = group_pairs(q);
    out.insert(out.end(), std::make_move_iterator(generated.begin()),
               std::make_move_iterator(generated.end()));
  }
  return out;
}

Corpus augmented_corpus(const Corpus& corpus) {
  if (corpus.augmented) {
    throw std::runtime_error("corpus is already augmented; refusing to augment it again");
  }
  Corpus out = corpus;
  out.augmented = true;
  for (const auto& q : corpus.queries) {
    std::vector<QueryGroup> extra;
    for (auto& p : group_pairs(q)) {
      const std::string gid = q.id + ":" + p.first_id;
      if (extra.empty() || extra.back().id != gid) {
        extra.push_back(QueryGroup{gid, p.first, {}});
      }
      Candidate c;
      c.id = p.second_id;
      c.tokens = std::move(p.second);
      c.label = p.label;
      extra.back().candidates.push_back(std::move(c));
    }
    out.queries.insert(out.queries.end(), std::make_move_iterator(extra.begin()),
                       std::make_move_iterator(extra.end()));
  }
  return out;
}

std::vector<PairInstance> augment_task_c_with_task_a(const Corpus& task_c, const Corpus& task_a,
                                                     std::optional<std::uint64_t> shuffle_seed) {
  std::vector<PairInstance> out = pair_instances(task_c, Provenance::original);
  auto extra = pair_instances(task_a, Provenance::task_a);
  out.insert(out.end(), std::make_move_iterator(extra.begin()),
             std::make_move_iterator(extra.end()));
  if (shuffle_seed) {
    Rng rng(*shuffle_seed);
    rng.shuffle(out);
  }
  return out;
}

Corpus merged_corpus(const Corpus& task_c, const Corpus& task_a) {
  if (task_c.augmented) {
    throw std::runtime_error("corpus is already augmented; refusing to augment it again");
  }
  Corpus out = task_c;
  out.augmented = true;
  for (const auto& q : task_a.queries) {
    QueryGroup g = q;
    g.id = "A:" + q.id;
    for (auto& c : g.candidates) {
      c.bridge.reset();
      c.aux_labels.reset();
    }
    out.queries.push_back(std::move(g));
  }
  return out;
}

}  // namespace cqa
