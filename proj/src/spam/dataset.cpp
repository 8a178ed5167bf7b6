#include "hikester/spam/dataset.hpp"

#include <fstream>

namespace hikester::spam {

std::string_view to_string(Label l) { return l == Label::spam ? "spam" : "ham"; }

std::optional<Label> parse_label(std::string_view s) {
  if (s == "spam") return Label::spam;
  if (s == "ham") return Label::ham;
  return std::nullopt;
}

std::vector<TextExample> read_corpus(std::istream& in) {
  std::vector<TextExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw CorpusError("line " + std::to_string(line_no) + ": missing tab");
    auto label = parse_label(std::string_view(line).substr(0, tab));
    if (!label) throw CorpusError("line " + std::to_string(line_no) + ": unknown label");
    out.push_back({tokenize(std::string_view(line).substr(tab + 1)), *label});
  }
  return out;
}

std::vector<TextExample> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open " + path.string());
  return read_corpus(in);
}

Vocabulary Vocabulary::build(const std::vector<TextExample>& corpus) {
  Vocabulary v;
  for (const auto& ex : corpus) {
    for (const auto& [token, count] : ex.features) v.add(token);
  }
  return v;
}

std::size_t Vocabulary::add(const std::string& token) {
  auto [it, inserted] = lookup_.emplace(token, tokens_.size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

std::optional<std::size_t> Vocabulary::index(const std::string& token) const {
  auto it = lookup_.find(token);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> Vocabulary::dense(const TokenVector& v) const {
  std::vector<double> x(tokens_.size(), 0.0);
  for (const auto& [token, count] : v) {
    if (auto i = index(token)) x[*i] = count;
  }
  return x;
}

std::vector<DenseExample> Vocabulary::dense(const std::vector<TextExample>& corpus) const {
  std::vector<DenseExample> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back({dense(ex.features), ex.label});
  return out;
}

}  // namespace hikester::spam
