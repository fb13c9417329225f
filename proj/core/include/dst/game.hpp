#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dst/abot.hpp"
#include "dst/base64.hpp"
#include "dst/episode.hpp"
#include "dst/guesser.hpp"
#include "dst/losses.hpp"
#include "dst/model.hpp"
#include "dst/state.hpp"
#include "dst/strack.hpp"
#include "dst/vocab.hpp"
#include "dst/vrds.hpp"
#include "dst/world.hpp"

namespace dst {

enum class QuestionSource { Gold, Generated };

// Experiment arms. vrds/strack switch off the module, mse/pl drop the loss
// term; the same set must be applied at train and eval time.
struct Ablations {
    bool vrds = false;
    bool strack = false;
    bool mse = false;
    bool pl = false;
};

struct RunOptions {
    bool train_graph = false;     // dropout active, losses built on a train graph
    bool decision_noise = true;   // Gumbel noise on tracker decisions (train only)
    QuestionSource questions = QuestionSource::Gold;
    bool compute_loss = false;  // requires gold questions
    bool ablate_vrds = false;
    bool ablate_strack = false;
    bool use_mse = true;
    bool use_pl = true;
    bool paper_literal_signs = false;
    bool capture_state = false;
    // Interactive hooks. answer_fn replaces the rule-based answerer (it still
    // sees the question tokens); on_round fires after each round is scored.
    std::function<std::string(const std::vector<std::string>&)> answer_fn;
    std::function<void(const struct RoundRecord&)> on_round;
};

struct RoundRecord {
    std::vector<std::string> question;
    std::string answer;
    char action = '-';  // 'A' add, 'U' update, '-' frozen
    std::vector<double> y;
    int rank = 0;
    double mse = 0;
    int k = 0;
};

struct Transcript {
    int episode_id = 0;
    std::vector<std::string> caption;
    std::vector<RoundRecord> rounds;
    int final_rank = 0;
    double final_mse = 0;
    std::string state_b64;  // filled when capture_state
};

template <typename Real>
struct EpisodeResult {
    Transcript transcript;
    LossReport loss;
    GVar<Real> total{};          // loss var, valid when compute_loss
    double gold_logprob_sum = 0;  // for corpus-level nll
    long gold_tokens = 0;
};

// One full episode: caption bootstrap, then per round
// z = reason over state -> question -> answer -> fact -> track -> guess.
// Train mode teacher-forces gold questions (the tracker still takes its own
// sampled decisions); eval generates questions greedily. The whole episode is
// one graph so the loss reaches every round's parameters.
template <typename Real>
EpisodeResult<Real> run_episode(Graph<Real>& g, Model<Real>& m, const World& world, const Episode& ep,
                                const Vocab& vocab, const RunOptions& opt, Rng& rng) {
    if (opt.compute_loss && opt.questions != QuestionSource::Gold)
        throw std::logic_error("run_episode: loss needs gold questions");
    const SynthImage& target = world.image(ep.target);
    const int T = static_cast<int>(ep.questions.size());
    if (T < 1) throw std::runtime_error("run_episode: episode has no rounds");

    Mat<Real> target_feat(1, static_cast<int>(target.feature.size()));
    for (size_t i = 0; i < target.feature.size(); ++i)
        target_feat.v[i] = static_cast<Real>(target.feature[i]);
    std::vector<std::vector<double>> pool_feats;
    int target_pos = -1;
    for (size_t i = 0; i < ep.pool.size(); ++i) {
        pool_feats.push_back(world.image(ep.pool[i]).feature);
        if (ep.pool[i] == ep.target) target_pos = static_cast<int>(i);
    }
    if (target_pos < 0) throw std::runtime_error("run_episode: target not in pool");

    EpisodeResult<Real> res;
    res.transcript.episode_id = ep.id;
    res.transcript.caption = ep.caption;

    std::vector<int> caption_ids;
    for (const auto& t : ep.caption) caption_ids.push_back(vocab.id(t));
    StateVars<Real> state = init_state_vars(g, m, caption_ids);

    std::vector<GVar<Real>> logprob_sums;
    std::vector<GVar<Real>> mse_vars;

    for (int t = 0; t < T; ++t) {
        auto z = opt.ablate_vrds ? vrds_ablated(g, state.me, state.mv, m.vrds_p)
                                 : vrds(g, state.me, state.mv, m.vrds_p);
        auto memory = g.concat_rows(state.me, state.mv);

        RoundRecord rec;
        std::vector<int> q_ids;
        if (opt.questions == QuestionSource::Gold) {
            rec.question = ep.questions[static_cast<size_t>(t)];
            for (const auto& w : rec.question) q_ids.push_back(vocab.id(w));
        } else {
            q_ids = m.dec.decode_greedy(g, m.emb, z, memory, m.cfg.max_q_len);
            if (q_ids.empty()) q_ids.push_back(vocab.id("unknown"));
            for (int id : q_ids) rec.question.push_back(vocab.token(id));
        }

        if (opt.compute_loss) {
            std::vector<int> gold = q_ids;
            gold.push_back(Vocab::kEos);
            auto logits = m.dec.teacher_forcing_logits(g, m.emb, z, memory, gold);
            logprob_sums.push_back(gold_logprob_sum(g, logits, gold));
            res.gold_tokens += static_cast<long>(gold.size());
        }

        rec.answer = opt.answer_fn ? opt.answer_fn(rec.question)
                                   : abot_answer(rec.question, target);
        std::vector<int> a_ids{vocab.id(rec.answer)};

        auto f = m.enc.encode_fact(g, m.emb, q_ids, a_ids, state);

        if (opt.ablate_strack) {
            rec.action = '-';
        } else {
            auto tracked = track(g, f, state, m.strack_p, rng, /*hard=*/true,
                                 /*with_noise=*/opt.train_graph && opt.decision_noise);
            state = tracked.state;
            rec.action = tracked.added ? 'A' : 'U';
        }
        rec.k = state.k;

        auto y = predict_image_feature(g, state, z, m.guess_p);
        auto mse_t = sq_l2(g, y, target_feat);
        mse_vars.push_back(mse_t);

        const Mat<Real>& yv = g.value(y);
        rec.y.assign(yv.v.begin(), yv.v.end());
        rec.mse = static_cast<double>(g.scalar_value(mse_t));
        rec.rank = rank_pool(rec.y, pool_feats, target_pos);
        if (opt.on_round) opt.on_round(rec);
        res.transcript.rounds.push_back(std::move(rec));
        res.loss.mse_rounds.push_back(res.transcript.rounds.back().mse);
    }

    res.transcript.final_rank = res.transcript.rounds.back().rank;
    res.transcript.final_mse = res.transcript.rounds.back().mse;

    if (opt.compute_loss) {
        auto lp = logprob_sums[0];
        for (size_t i = 1; i < logprob_sums.size(); ++i) lp = g.add(lp, logprob_sums[i]);
        res.gold_logprob_sum = static_cast<double>(g.scalar_value(lp));
        auto ce = g.scale(lp, static_cast<Real>(-1.0 / res.gold_tokens));

        auto mse_sum = mse_vars[0];
        for (size_t i = 1; i < mse_vars.size(); ++i) mse_sum = g.add(mse_sum, mse_vars[i]);
        auto mse_mean = g.scale(mse_sum, static_cast<Real>(1.0 / T));

        res.loss.ce = static_cast<double>(g.scalar_value(ce));
        res.loss.mse_mean = static_cast<double>(g.scalar_value(mse_mean));

        auto total = ce;
        if (opt.use_mse)
            total = g.add(total, opt.paper_literal_signs ? g.scale(mse_mean, Real(-1)) : mse_mean);
        if (opt.use_pl && T >= 2) {
            auto pl = pl_from_rounds(g, mse_vars);
            res.loss.pl = static_cast<double>(g.scalar_value(pl));
            total = g.add(total, opt.paper_literal_signs ? g.scale(pl, Real(-1)) : pl);
        }
        res.total = total;
        res.loss.total = static_cast<double>(g.scalar_value(total));
    }

    if (opt.capture_state) {
        DialogueState snap;
        snap.me = g.value(state.me).template cast<double>();
        snap.mv = g.value(state.mv).template cast<double>();
        snap.t = T;
        res.transcript.state_b64 = base64_encode(serialize_state(snap));
    }
    return res;
}

}  // namespace dst
