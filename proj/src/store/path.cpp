#include "hikester/store/path.hpp"

#include <algorithm>
#include <cctype>

namespace hikester::store {

bool is_valid_segment(std::string_view segment) {
  if (segment.empty()) return false;
  return std::all_of(segment.begin(), segment.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

DocumentPath DocumentPath::parse(std::string_view text) {
  if (!text.empty() && text.front() == '/') text.remove_prefix(1);
  if (text.empty()) throw InvalidPath("path must have at least one segment");
  std::vector<std::string> segments;
  std::size_t start = 0;
  while (true) {
    auto slash = text.find('/', start);
    auto seg = text.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start);
    segments.emplace_back(seg);
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return DocumentPath(std::move(segments));
}

DocumentPath::DocumentPath(std::vector<std::string> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw InvalidPath("path must have at least one segment");
  for (const auto& s : segments_) {
    if (!is_valid_segment(s)) throw InvalidPath("invalid path segment '" + s + "'");
  }
}

DocumentPath DocumentPath::child(std::string_view segment) const {
  auto segs = segments_;
  segs.emplace_back(segment);
  return DocumentPath(std::move(segs));
}

DocumentPath DocumentPath::prefix(std::size_t depth) const {
  if (depth == 0 || depth > segments_.size()) throw InvalidPath("prefix depth out of range");
  return DocumentPath({segments_.begin(), segments_.begin() + static_cast<std::ptrdiff_t>(depth)});
}

bool DocumentPath::is_prefix_of(const DocumentPath& other) const {
  if (segments_.size() > other.segments_.size()) return false;
  return std::equal(segments_.begin(), segments_.end(), other.segments_.begin());
}

std::string DocumentPath::str() const {
  std::string out;
  for (const auto& s : segments_) {
    out += '/';
    out += s;
  }
  return out;
}

}  // namespace hikester::store
