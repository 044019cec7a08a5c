#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace esma {

/// Answer normalization used for grading: ASCII casefold, delete ASCII
/// punctuation, collapse whitespace, then drop one leading article
/// (a/an/the). Non-ASCII bytes pass through unchanged.
std::string normalize_answer(std::string_view text);

/// Whitespace tokens of normalize_answer(text).
std::vector<std::string> normalized_tokens(std::string_view text);

/// True if `needle` occurs as a contiguous run inside `haystack`.
bool contains_token_run(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& needle);

}  // namespace esma
