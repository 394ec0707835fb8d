#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cqa/data.hpp"

namespace cqa {

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, Rng& rng,
                               double scale) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings " + path);

  std::vector<std::pair<int, Vector>> rows;
  std::vector<int> seen_line(vocab.size(), 0);
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  EmbeddingTable result;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    Vector values;
    double x;
    while (fields >> x) values.push_back(x);
    if (!fields.eof()) {
      throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": bad number");
    }
    if (values.empty()) {
      throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": no values");
    }
    if (dim == 0) dim = values.size();
    if (values.size() != dim) {
      throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": dimension " +
                               std::to_string(values.size()) + " differs from " +
                               std::to_string(dim));
    }
    const int id = vocab.id(token);
    if (id == Vocabulary::kUnk) continue;
    if (seen_line[static_cast<std::size_t>(id)]) {
      result.warnings.push_back("duplicate embedding for '" + token + "' on line " +
                                std::to_string(line_no) + ", line " +
                                std::to_string(seen_line[static_cast<std::size_t>(id)]) +
                                " overridden");
    }
    seen_line[static_cast<std::size_t>(id)] = static_cast<int>(line_no);
    rows.emplace_back(id, std::move(values));
  }
  if (dim == 0) throw std::runtime_error("embeddings file " + path + " is empty");

  result.table = init_uniform(vocab.size(), dim, scale, rng);
  for (auto& [id, values] : rows) {
    std::copy(values.begin(), values.end(), result.table.row(static_cast<std::size_t>(id)).begin());
  }
  for (int s : seen_line) result.covered += s ? 1 : 0;
  return result;
}

}  // namespace cqa
