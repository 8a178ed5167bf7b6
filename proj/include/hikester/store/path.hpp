#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hikester::store {

class InvalidPath : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// True when `segment` matches [A-Za-z0-9_-]+.
bool is_valid_segment(std::string_view segment);

/// Slash-separated address of a node in the document tree, depth >= 1.
class DocumentPath {
 public:
  /// Parses "/a/b/c" (leading slash optional, no trailing slash).
  /// Throws InvalidPath.
  static DocumentPath parse(std::string_view text);

  explicit DocumentPath(std::vector<std::string> segments);

  const std::vector<std::string>& segments() const { return segments_; }
  std::size_t depth() const { return segments_.size(); }
  const std::string& leaf() const { return segments_.back(); }

  DocumentPath child(std::string_view segment) const;
  /// Prefix of the first `depth` segments.
  DocumentPath prefix(std::size_t depth) const;

  /// True when this path equals `other` or is an ancestor of it.
  bool is_prefix_of(const DocumentPath& other) const;

  std::string str() const;

  friend bool operator==(const DocumentPath&, const DocumentPath&) = default;
  friend auto operator<=>(const DocumentPath&, const DocumentPath&) = default;

 private:
  std::vector<std::string> segments_;
};

}  // namespace hikester::store
