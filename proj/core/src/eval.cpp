#include "dst/eval.hpp"

#include <sstream>

#include "dst/graph.hpp"
#include "dst/rng.hpp"

namespace dst {

std::set<std::string> question_set(const std::vector<Episode>& episodes) {
    std::set<std::string> out;
    for (const Episode& ep : episodes) {
        for (const auto& q : ep.questions) {
            std::ostringstream ss;
            for (size_t i = 0; i < q.size(); ++i) {
                if (i > 0) ss << ' ';
                ss << q[i];
            }
            out.insert(ss.str());
        }
    }
    return out;
}

MetricReport evaluate_model(Model<float>& model, const World& world,
                            const std::vector<Episode>& episodes, const Vocab& vocab,
                            const EvalOptions& opt,
                            const std::set<std::string>* train_questions,
                            std::vector<Transcript>* transcripts) {
    if (episodes.empty()) throw std::runtime_error("evaluate_model: no episodes");
    const int T = static_cast<int>(episodes.front().questions.size());

    std::vector<int> final_ranks;
    std::vector<std::vector<int>> round_ranks(static_cast<size_t>(T));
    std::vector<std::vector<std::vector<std::string>>> dialogues;
    double logprob_sum = 0.0;
    long token_count = 0;

    for (const Episode& ep : episodes) {
        RunOptions ro;
        ro.train_graph = false;
        ro.questions = opt.questions;
        ro.compute_loss = false;
        ro.ablate_vrds = opt.ablate_vrds;
        ro.ablate_strack = opt.ablate_strack;
        ro.capture_state = opt.capture_state;

        Graph<float> g(false, Rng::key({opt.seed, Rng::tag("evalg"), (uint64_t)ep.id}));
        Rng rng(Rng::key({opt.seed, Rng::tag("evala"), (uint64_t)ep.id}));
        EpisodeResult<float> res = run_episode(g, model, world, ep, vocab, ro, rng);

        final_ranks.push_back(res.transcript.final_rank);
        std::vector<std::vector<std::string>> dlg;
        for (int t = 0; t < T; ++t) {
            const RoundRecord& rec = res.transcript.rounds[static_cast<size_t>(t)];
            round_ranks[static_cast<size_t>(t)].push_back(rec.rank);
            dlg.push_back(rec.question);
        }
        dialogues.push_back(std::move(dlg));
        if (transcripts != nullptr) transcripts->push_back(res.transcript);

        if (opt.compute_nll) {
            RunOptions tf;
            tf.train_graph = false;
            tf.questions = QuestionSource::Gold;
            tf.compute_loss = true;
            tf.ablate_vrds = opt.ablate_vrds;
            tf.ablate_strack = opt.ablate_strack;
            Graph<float> gt(false, Rng::key({opt.seed, Rng::tag("evaln"), (uint64_t)ep.id}));
            Rng rt(Rng::key({opt.seed, Rng::tag("evalm"), (uint64_t)ep.id}));
            EpisodeResult<float> tr = run_episode(gt, model, world, ep, vocab, tf, rt);
            logprob_sum += tr.gold_logprob_sum;
            token_count += tr.gold_tokens;
        }
    }

    MetricReport rep;
    rep.n_episodes = static_cast<int>(episodes.size());
    rep.pool_size = static_cast<int>(episodes.front().pool.size());

    RetrievalSummary fin = retrieval_metrics(final_ranks, rep.pool_size);
    rep.mrr = fin.mrr;
    rep.r1 = fin.r1;
    rep.r5 = fin.r5;
    rep.r10 = fin.r10;
    rep.mean_rank = fin.mean_rank;
    rep.pmr = fin.pmr;
    for (int t = 0; t < T; ++t)
        rep.pmr_rounds.push_back(
            retrieval_metrics(round_ranks[static_cast<size_t>(t)], rep.pool_size).pmr);

    if (opt.questions == QuestionSource::Generated) {
        std::set<std::string> empty;
        DiversitySummary div = diversity_metrics(
            dialogues, train_questions != nullptr ? *train_questions : empty);
        rep.unique_q = div.unique_q;
        rep.novel_q = train_questions != nullptr ? div.novel_q : 0.0;
        rep.dist1 = div.dist1;
        rep.dist2 = div.dist2;
        rep.ent1 = div.ent1;
        rep.ent2 = div.ent2;
        rep.mutual_overlap = div.mutual_overlap;
    }

    rep.nll = (opt.compute_nll && token_count > 0)
                  ? -logprob_sum / static_cast<double>(token_count)
                  : 0.0;
    return rep;
}

}  // namespace dst
