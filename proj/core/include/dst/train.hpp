#pragma once

#include <string>

#include "dst/config.hpp"
#include "dst/episode.hpp"
#include "dst/game.hpp"
#include "dst/model.hpp"
#include "dst/vocab.hpp"
#include "dst/world.hpp"

namespace dst {

struct TrainResult {
    int epochs_run = 0;
    int best_epoch = -1;
    double best_val_pmr = 0.0;
    bool stopped_early = false;
};

// Teacher-forced training with Adam and a cosine learning-rate schedule.
// Writes checkpoints/, train_log.jsonl and trainer_state.json under out_dir.
// With resume=true picks up from the last completed epoch; optimizer moments
// are restored exactly, so an interrupted run and an uninterrupted one emit
// identical bytes from the resume point onward. max_epochs_this_run > 0 stops
// the invocation after that many epochs without shrinking the overall plan
// (stand-in for an interruption; the lr schedule still spans cfg epochs).
TrainResult train_model(Model<float>& model, const World& world, const Dataset& ds,
                        const Vocab& vocab, const Config& cfg, const std::string& out_dir,
                        bool resume = false, const Ablations& ablate = {},
                        int max_epochs_this_run = 0);

}  // namespace dst
