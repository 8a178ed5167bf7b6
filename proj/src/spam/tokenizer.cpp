#include "hikester/spam/tokenizer.hpp"

#include <cctype>

namespace hikester::spam {

TokenVector tokenize(std::string_view text) {
  TokenVector out;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2) ++out[current];
    current.clear();
  };
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (c < 0x80 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace hikester::spam
