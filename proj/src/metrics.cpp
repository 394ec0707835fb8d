#include <algorithm>
#include <map>
#include <stdexcept>

#include "cqa/eval.hpp"

namespace cqa {

RankedList RankedList::sorted(std::string query_id, std::vector<RankedEntry> entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.candidate_id < b.candidate_id;
  });
  return RankedList{std::move(query_id), std::move(entries)};
}

std::size_t RankedList::relevant_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.gold == 1; }));
}

double average_precision(const RankedList& list) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < list.entries.size(); ++k) {
    if (list.entries[k].gold == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double map_score(std::span<const RankedList> lists, bool skip_unanswerable) {
  double sum = 0.0;
  std::size_t counted = 0;
  bool any_relevant = false;
  for (const auto& l : lists) {
    const bool answerable = l.relevant_count() > 0;
    any_relevant = any_relevant || answerable;
    if (!answerable && skip_unanswerable) continue;
    sum += average_precision(l);
    ++counted;
  }
  if (!any_relevant) throw std::runtime_error("no relevant candidates");
  return sum / static_cast<double>(counted);
}

F1Result f1_score(std::span<const int> predictions, std::span<const int> golds) {
  if (predictions.size() != golds.size()) {
    throw std::invalid_argument("f1_score: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (predictions.empty()) throw std::invalid_argument("f1_score: empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool g = golds[i] == 1;
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  F1Result r;
  r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

namespace {

/// Groups entries by query id, keeping first-seen order.
std::vector<RankedList> group_lists(
    const std::vector<std::pair<std::string, RankedEntry>>& flat) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<RankedEntry>> by_query;
  for (const auto& [qid, e] : flat) {
    auto [it, inserted] = by_query.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back(e);
  }
  std::vector<RankedList> out;
  out.reserve(order.size());
  for (const auto& qid : order) out.push_back(RankedList::sorted(qid, std::move(by_query[qid])));
  return out;
}

}  // namespace

ScoredSet score_examples(const Model& model, std::span<const Example> examples,
                         double threshold) {
  ScoredSet s;
  std::vector<std::pair<std::string, RankedEntry>> flat;
  flat.reserve(examples.size());
  for (const auto& ex : examples) {
    const double p = model.relevance(ex);
    flat.push_back({ex.query_id, RankedEntry{ex.candidate_id, p, ex.label == 1 ? 1 : 0}});
    s.predictions.push_back(p >= threshold ? 1 : 0);
    s.golds.push_back(ex.label == 1 ? 1 : 0);
  }
  s.lists = group_lists(flat);
  return s;
}

EvalSummary summarize(const ScoredSet& scored, bool skip_unanswerable) {
  EvalSummary e;
  e.map = map_score(scored.lists, skip_unanswerable);
  e.f1 = f1_score(scored.predictions, scored.golds);
  e.queries = scored.lists.size();
  e.instances = scored.predictions.size();
  return e;
}

EvalSummary evaluate_model(const Model& model, std::span<const Example> examples,
                           double threshold, bool skip_unanswerable) {
  return summarize(score_examples(model, examples, threshold), skip_unanswerable);
}

ScoredSet random_baseline(const Corpus& corpus, Rng& rng) {
  ScoredSet s;
  std::vector<std::pair<std::string, RankedEntry>> flat;
  for (const auto& q : corpus.queries) {
    for (const auto& c : q.candidates) {
      const double score = rng.uniform01();
      const int pred = rng.bernoulli(0.5) ? 1 : 0;
      flat.push_back({q.id, RankedEntry{c.id, score, c.label == 1 ? 1 : 0}});
      s.predictions.push_back(pred);
      s.golds.push_back(c.label == 1 ? 1 : 0);
    }
  }
  s.lists = group_lists(flat);
  return s;
}

IrRanks ir_ranks_of(const Corpus& corpus) {
  IrRanks ranks;
  for (const auto& q : corpus.queries) {
    for (const auto& c : q.candidates) {
      if (c.ir_rank) ranks[{q.id, c.id}] = *c.ir_rank;
    }
  }
  return ranks;
}

RankedList combine_rankings(const RankedList& a, const RankedList& b) {
  if (a.entries.size() != b.entries.size()) {
    throw std::invalid_argument("combine_rankings: lists for query " + a.query_id +
                                " differ in length");
  }
  std::map<std::string, std::size_t> pos_b;
  for (std::size_t i = 0; i < b.entries.size(); ++i) pos_b[b.entries[i].candidate_id] = i + 1;
  std::vector<RankedEntry> out;
  out.reserve(a.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& e = a.entries[i];
    auto it = pos_b.find(e.candidate_id);
    if (it == pos_b.end()) {
      throw std::invalid_argument("combine_rankings: candidate " + e.candidate_id +
                                  " missing from second ranking");
    }
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(it->second)) / 2.0;
    out.push_back(RankedEntry{e.candidate_id, -avg, e.gold});
  }
  return RankedList::sorted(a.query_id, std::move(out));
}

std::vector<RankedList> combine_with_ir(std::span<const RankedList> model_lists,
                                        const IrRanks& ir_ranks) {
  std::vector<RankedList> out;
  out.reserve(model_lists.size());
  for (const auto& list : model_lists) {
    std::vector<RankedEntry> combined;
    combined.reserve(list.entries.size());
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
      const auto& e = list.entries[i];
      auto it = ir_ranks.find({list.query_id, e.candidate_id});
      if (it == ir_ranks.end()) {
        throw std::runtime_error("missing IR rank for candidate " + e.candidate_id +
                                 " of query " + list.query_id);
      }
      const double avg = (static_cast<double>(i + 1) + static_cast<double>(it->second)) / 2.0;
      combined.push_back(RankedEntry{e.candidate_id, -avg, e.gold});
    }
    out.push_back(RankedList::sorted(list.query_id, std::move(combined)));
  }
  return out;
}

std::vector<RankedList> ir_rankings(const Corpus& corpus) {
  std::vector<RankedList> out;
  for (const auto& q : corpus.queries) {
    std::vector<RankedEntry> entries;
    for (const auto& c : q.candidates) {
      if (!c.ir_rank) {
        throw std::runtime_error("missing IR rank for candidate " + c.id + " of query " + q.id);
      }
      entries.push_back(RankedEntry{c.id, -static_cast<double>(*c.ir_rank), c.label == 1 ? 1 : 0});
    }
    out.push_back(RankedList::sorted(q.id, std::move(entries)));
  }
  return out;
}

}  // namespace cqa
