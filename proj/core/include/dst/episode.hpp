#pragma once

#include <string>
#include <vector>

#include "dst/world.hpp"

namespace dst {

struct Episode {
    int id = 0;
    int target = 0;                                   // image id, always present in pool
    std::vector<int> pool;                            // image ids, size N
    std::vector<std::string> caption;                 // tokens
    std::vector<std::vector<std::string>> questions;  // gold question per round, size T
};

// One question per caption-hidden attribute, in a fixed ask order: the
// positions of every object, then sizes, then the colors the caption
// withheld. Truncated to max_rounds; never padded here.
std::vector<std::vector<std::string>> oracle_questions(const SynthImage& img,
                                                       const std::vector<std::string>& caption,
                                                       int max_rounds);

// Filler questions for rounds beyond the informative ones: existence probes
// about nouns the image does not contain, all distinct.
std::vector<std::vector<std::string>> padding_questions(const SynthImage& img, int needed);

struct DatasetConfig {
    int pool_size = 100;
    int rounds = 10;
    double train_frac = 0.8;
    double val_frac = 0.1;

    void validate() const;
};

struct Dataset {
    std::vector<Episode> train, val, test;
};

// One episode per image: caption, gold questions padded to exactly T rounds,
// and a pool of the target plus its family (same caption) plus random
// fillers, shuffled. Split 80/10/10 by episode.
Dataset build_dataset(const World& world, const DatasetConfig& cfg);

void save_episodes(const std::string& path, const std::vector<Episode>& eps);
std::vector<Episode> load_episodes(const std::string& path);

}  // namespace dst
