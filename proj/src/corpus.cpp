#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cqa/data.hpp"

namespace cqa {
namespace {

constexpr const char* kAugmentedMarker = "# provenance: augmented";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& why) {
  throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + why);
}

int parse_label(const std::string& s, std::size_t line_no) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  if (s == "?") return kUnknownLabel;
  fail_line(line_no, "label must be 0, 1 or ?, got '" + s + "'");
}

std::optional<int> parse_rank(const std::string& s, std::size_t line_no) {
  if (s == "-") return std::nullopt;
  try {
    std::size_t used = 0;
    int r = std::stoi(s, &used);
    if (used != s.size() || r < 1) throw std::invalid_argument(s);
    return r;
  } catch (const std::exception&) {
    fail_line(line_no, "ir_rank must be a positive integer or -, got '" + s + "'");
  }
}

std::string join(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string label_text(int label) { return label == kUnknownLabel ? "?" : std::to_string(label); }

}  // namespace

std::string to_string(Task t) {
  switch (t) {
    case Task::A: return "A";
    case Task::B: return "B";
    case Task::C: return "C";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  if (s == "A" || s == "a") return Task::A;
  if (s == "B" || s == "b") return Task::B;
  if (s == "C" || s == "c") return Task::C;
  throw std::invalid_argument("unknown task: " + s);
}

Tokens tokenize(const std::string& text) {
  Tokens out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(tok));
  }
  return out;
}

std::size_t Corpus::instance_count() const {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.candidates.size();
  return n;
}

bool Corpus::fully_labeled() const {
  for (const auto& q : queries) {
    for (const auto& c : q.candidates) {
      if (c.label == kUnknownLabel) return false;
    }
  }
  return true;
}

void Corpus::validate() const {
  if (queries.empty()) throw std::runtime_error("no queries");
  for (const auto& q : queries) {
    if (q.candidates.empty()) throw std::runtime_error("query " + q.id + " has no candidates");
    if (q.query_tokens.empty()) throw std::runtime_error("query " + q.id + " has no tokens");
    std::set<std::string> ids;
    std::set<int> ranks;
    for (const auto& c : q.candidates) {
      if (!ids.insert(c.id).second) {
        throw std::runtime_error("duplicate candidate id " + c.id + " in query " + q.id);
      }
      if (c.label != 0 && c.label != 1 && c.label != kUnknownLabel) {
        throw std::runtime_error("non-binary label for candidate " + c.id);
      }
      if (c.tokens.empty()) throw std::runtime_error("candidate " + c.id + " has no tokens");
      if (c.ir_rank && !ranks.insert(*c.ir_rank).second) {
        throw std::runtime_error("duplicate ir_rank in query " + q.id);
      }
    }
  }
}

Corpus parse_corpus(const std::string& text, Task task) {
  Corpus corpus;
  corpus.task = task;
  std::map<std::string, std::size_t> group_index;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind(kAugmentedMarker, 0) == 0) corpus.augmented = true;
      continue;
    }
    auto f = split_tabs(line);
    if (f.size() < 6 || f.size() > 8) {
      fail_line(line_no, "expected 6 to 8 tab-separated fields, got " + std::to_string(f.size()));
    }
    if (f[0].empty() || f[1].empty()) fail_line(line_no, "empty query or candidate id");

    Candidate cand;
    cand.id = f[1];
    cand.label = parse_label(f[2], line_no);
    cand.ir_rank = parse_rank(f[3], line_no);
    Tokens query = tokenize(f[4]);
    cand.tokens = tokenize(f[5]);
    if (query.empty()) throw std::runtime_error("query " + f[0] + " has no tokens");
    if (cand.tokens.empty()) throw std::runtime_error("candidate " + f[1] + " has no tokens");
    if (f.size() >= 7) {
      cand.bridge = tokenize(f[6]);
      if (cand.bridge->empty()) throw std::runtime_error("bridge of " + f[1] + " has no tokens");
    }
    if (f.size() == 8) {
      auto comma = f[7].find(',');
      if (comma == std::string::npos) fail_line(line_no, "aux_labels must look like a,b");
      cand.aux_labels = std::array<int, 2>{parse_label(f[7].substr(0, comma), line_no),
                                           parse_label(f[7].substr(comma + 1), line_no)};
    }

    auto [it, inserted] = group_index.try_emplace(f[0], corpus.queries.size());
    if (inserted) {
      corpus.queries.push_back(QueryGroup{f[0], std::move(query), {}});
    } else if (corpus.queries[it->second].query_tokens != query) {
      fail_line(line_no, "query " + f[0] + " text differs from its first record");
    }
    corpus.queries[it->second].candidates.push_back(std::move(cand));
  }
  corpus.validate();
  return corpus;
}

Corpus load_corpus(const std::string& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), task);
}

std::string format_corpus(const Corpus& corpus) {
  std::ostringstream out;
  if (corpus.augmented) out << kAugmentedMarker << '\n';
  for (const auto& q : corpus.queries) {
    const std::string query = join(q.query_tokens);
    for (const auto& c : q.candidates) {
      out << q.id << '\t' << c.id << '\t' << label_text(c.label) << '\t'
          << (c.ir_rank ? std::to_string(*c.ir_rank) : "-") << '\t' << query << '\t'
          << join(c.tokens);
      if (c.bridge) out << '\t' << join(*c.bridge);
      if (c.aux_labels) {
        if (!c.bridge) throw std::runtime_error("aux_labels without bridge text for " + c.id);
        out << '\t' << label_text((*c.aux_labels)[0]) << ',' << label_text((*c.aux_labels)[1]);
      }
      out << '\n';
    }
  }
  return out.str();
}

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus " + path);
  out << format_corpus(corpus);
  if (!out) throw std::runtime_error("write failed for " + path);
}

Vocabulary::Vocabulary() { add(kUnkToken); }

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

TokenIds Vocabulary::encode(const Tokens& tokens) const {
  TokenIds ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Vocabulary Vocabulary::from_corpora(const std::vector<const Corpus*>& corpora) {
  Vocabulary v;
  for (const Corpus* c : corpora) {
    for (const auto& q : c->queries) {
      for (const auto& t : q.query_tokens) v.add(t);
      for (const auto& cand : q.candidates) {
        for (const auto& t : cand.tokens) v.add(t);
        if (cand.bridge) {
          for (const auto& t : *cand.bridge) v.add(t);
        }
      }
    }
  }
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& id_to_token) {
  if (id_to_token.empty() || id_to_token.front() != kUnkToken) {
    throw std::runtime_error("vocabulary must start with " + std::string(kUnkToken));
  }
  Vocabulary v;
  for (std::size_t i = 1; i < id_to_token.size(); ++i) {
    if (v.add(id_to_token[i]) != static_cast<int>(i)) {
      throw std::runtime_error("duplicate vocabulary token " + id_to_token[i]);
    }
  }
  return v;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::original: return "original";
    case Provenance::augmented_pair: return "augmented";
    case Provenance::task_a: return "task-a";
  }
  return "?";
}

}  // namespace cqa
