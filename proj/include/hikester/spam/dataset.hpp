#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hikester/spam/tokenizer.hpp"

namespace hikester::spam {

enum class Label { ham, spam };

std::string_view to_string(Label l);
std::optional<Label> parse_label(std::string_view s);
/// +1 for spam, -1 for ham.
inline int sign_of(Label l) { return l == Label::spam ? 1 : -1; }

struct TextExample {
  TokenVector features;
  Label label;
};

struct DenseExample {
  std::vector<double> x;
  Label label;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus fixture: one `label<TAB>text` record per line. Blank lines and
/// lines starting with '#' are skipped.
std::vector<TextExample> read_corpus(std::istream& in);
std::vector<TextExample> load_corpus(const std::filesystem::path& path);

/// Token -> column mapping in order of first appearance.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<TextExample>& corpus);

  std::size_t add(const std::string& token);
  std::optional<std::size_t> index(const std::string& token) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Term-frequency vector; unknown tokens are dropped.
  std::vector<double> dense(const TokenVector& v) const;
  std::vector<DenseExample> dense(const std::vector<TextExample>& corpus) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t> lookup_;
};

}  // namespace hikester::spam
