#pragma once

#include <string>
#include <vector>

#include "dst/game.hpp"

namespace dst {

std::string transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const std::string& line);

void save_transcripts(const std::string& path, const std::vector<Transcript>& ts);
std::vector<Transcript> load_transcripts(const std::string& path);

}  // namespace dst
