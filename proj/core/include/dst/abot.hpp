#pragma once

#include <string>
#include <vector>

#include "dst/world.hpp"

namespace dst {

// Rule-based answerer. Parses the closed question grammar and answers
// truthfully from the image's attribute table; anything unparseable or
// inapplicable gets "unknown". Always returns a single token.
std::string abot_answer(const std::vector<std::string>& question, const SynthImage& img);

// The closed set every answer comes from (for fuzz checks and the vocab).
const std::vector<std::string>& answer_words();

}  // namespace dst
