#pragma once

#include <string>
#include <string_view>

namespace docgen::docstore {

// Porter suffix-stripping stemmer (the classic 1980 rule set, steps 1a-5b).
// Expects a lowercase ASCII-alphabetic word; anything else is returned
// unchanged, as are words of one or two letters.
std::string porter_stem(std::string_view word);

}  // namespace docgen::docstore
