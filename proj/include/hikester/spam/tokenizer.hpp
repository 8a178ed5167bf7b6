#pragma once

#include <map>
#include <string>
#include <string_view>

namespace hikester::spam {

/// Bag of words: lowercase token -> multiplicity (always >= 1).
using TokenVector = std::map<std::string, int>;

/// Lowercases, splits on every non-alphanumeric byte, drops tokens shorter
/// than two characters and counts the rest.
TokenVector tokenize(std::string_view text);

}  // namespace hikester::spam
