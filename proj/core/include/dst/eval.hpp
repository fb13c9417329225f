#pragma once

#include <set>
#include <string>
#include <vector>

#include "dst/episode.hpp"
#include "dst/game.hpp"
#include "dst/metrics.hpp"
#include "dst/model.hpp"
#include "dst/vocab.hpp"
#include "dst/world.hpp"

namespace dst {

struct EvalOptions {
    QuestionSource questions = QuestionSource::Generated;
    bool ablate_vrds = false;
    bool ablate_strack = false;
    bool compute_nll = true;  // extra teacher-forced pass over gold questions
    bool capture_state = false;
    uint64_t seed = 1;
};

// Runs every episode with frozen weights and aggregates retrieval plus
// diversity metrics. train_questions (optional) feeds novel_q; transcripts
// (optional) receives one record per episode.
MetricReport evaluate_model(Model<float>& model, const World& world,
                            const std::vector<Episode>& episodes, const Vocab& vocab,
                            const EvalOptions& opt,
                            const std::set<std::string>* train_questions = nullptr,
                            std::vector<Transcript>* transcripts = nullptr);

// Distinct space-joined question strings across a split, for novelty checks.
std::set<std::string> question_set(const std::vector<Episode>& episodes);

}  // namespace dst
