#include "dst/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "dst/adam.hpp"
#include "dst/checkpoint.hpp"
#include "dst/eval.hpp"
#include "dst/game.hpp"
#include "dst/graph.hpp"
#include "dst/rng.hpp"
#include "json.hpp"

namespace dst {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string epoch_ckpt_name(int epoch) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "epoch_%04d.ckpt", epoch);
    return buf;
}

void save_moments(const Adam<float>& opt, const ParamRegistry<float>& reg,
                  const std::string& path) {
    std::vector<NamedTensor> ts;
    const auto& ps = reg.all();
    for (size_t i = 0; i < ps.size(); ++i) {
        ts.push_back({"m." + ps[i]->name, opt.moments_m()[i]});
        ts.push_back({"v." + ps[i]->name, opt.moments_v()[i]});
    }
    save_tensors(path, ts);
}

void load_moments(Adam<float>& opt, const ParamRegistry<float>& reg,
                  const std::string& path) {
    std::vector<NamedTensor> ts = load_tensors(path);
    const auto& ps = reg.all();
    for (size_t i = 0; i < ps.size(); ++i) {
        bool got_m = false;
        bool got_v = false;
        for (const NamedTensor& t : ts) {
            if (t.name == "m." + ps[i]->name) {
                opt.moments_m()[i] = t.value;
                got_m = true;
            } else if (t.name == "v." + ps[i]->name) {
                opt.moments_v()[i] = t.value;
                got_v = true;
            }
        }
        if (!got_m || !got_v)
            throw std::runtime_error("optimizer state missing moments for " + ps[i]->name);
    }
}

struct TrainerState {
    int epochs_completed = 0;
    long global_step = 0;
    int best_epoch = -1;
    double best_val_pmr = 0.0;
    int epochs_since_best = 0;
    long total_steps = 0;
    bool stopped_early = false;
};

void save_trainer_state(const TrainerState& st, const std::string& path) {
    json j = {{"epochs_completed", st.epochs_completed},
              {"global_step", st.global_step},
              {"best_epoch", st.best_epoch},
              {"best_val_pmr", st.best_val_pmr},
              {"epochs_since_best", st.epochs_since_best},
              {"total_steps", st.total_steps},
              {"stopped_early", st.stopped_early}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

TrainerState load_trainer_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j = json::parse(in);
    TrainerState st;
    st.epochs_completed = j.at("epochs_completed").get<int>();
    st.global_step = j.at("global_step").get<long>();
    st.best_epoch = j.at("best_epoch").get<int>();
    st.best_val_pmr = j.at("best_val_pmr").get<double>();
    st.epochs_since_best = j.at("epochs_since_best").get<int>();
    st.total_steps = j.at("total_steps").get<long>();
    st.stopped_early = j.at("stopped_early").get<bool>();
    return st;
}

// Keep the first n lines of a JSONL file so a resumed run appends from a
// clean epoch boundary.
void truncate_jsonl(const std::string& path, int n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line) && static_cast<int>(lines.size()) < n)
        lines.push_back(line);
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    for (const std::string& l : lines) out << l << "\n";
}

}  // namespace

TrainResult train_model(Model<float>& model, const World& world, const Dataset& ds,
                        const Vocab& vocab, const Config& cfg, const std::string& out_dir,
                        bool resume, const Ablations& ablate, int max_epochs_this_run) {
    if (ds.train.empty()) throw std::runtime_error("train_model: empty training split");

    const fs::path out(out_dir);
    const fs::path ckpt_dir = out / "checkpoints";
    fs::create_directories(ckpt_dir);

    const int n_train = static_cast<int>(ds.train.size());
    const int n_use = cfg.train.episodes_per_epoch > 0
                          ? std::min(n_train, cfg.train.episodes_per_epoch)
                          : n_train;
    const int batch = cfg.train.batch;
    const long steps_per_epoch = (n_use + batch - 1) / batch;
    const long total_steps = steps_per_epoch * cfg.train.epochs;

    Adam<float> opt(model.reg);
    TrainerState st;
    st.total_steps = total_steps;

    const std::string state_path = (out / "trainer_state.json").string();
    const std::string log_path = (out / "train_log.jsonl").string();

    if (resume) {
        st = load_trainer_state(state_path);
        if (st.total_steps != total_steps)
            throw std::runtime_error("resume config mismatch: step plan changed");
        load_checkpoint((ckpt_dir / "last.ckpt").string(), model.reg);
        load_moments(opt, model.reg, (ckpt_dir / "last_opt.ckpt").string());
        opt.set_step_count(st.global_step);
        truncate_jsonl(log_path, st.epochs_completed);
    } else {
        std::ofstream(log_path, std::ios::binary | std::ios::trunc);
    }

    std::vector<int> order(static_cast<size_t>(n_train));
    std::iota(order.begin(), order.end(), 0);

    const int noise_epochs =
        static_cast<int>(std::ceil(cfg.train.noise_frac * cfg.train.epochs));

    const int start_epoch = st.epochs_completed;
    for (int epoch = st.epochs_completed; epoch < cfg.train.epochs; ++epoch) {
        if (st.stopped_early) break;
        if (max_epochs_this_run > 0 && epoch - start_epoch >= max_epochs_this_run) break;
        const auto t0 = std::chrono::steady_clock::now();

        if (cfg.model.tau_anneal && cfg.train.epochs > 1) {
            double frac = static_cast<double>(epoch) / (cfg.train.epochs - 1);
            model.strack_p.tau = cfg.model.tau + (cfg.model.tau_min - cfg.model.tau) * frac;
        }

        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng(Rng::key({cfg.seed, Rng::tag("shuffle"), (uint64_t)epoch}));
        shuffle_rng.shuffle(order);

        // Round curriculum ramp; 0 rounds means "no truncation this epoch".
        int rounds_cap = 0;
        if (cfg.train.curriculum_epochs > 0 && epoch < cfg.train.curriculum_epochs) {
            const int ce = cfg.train.curriculum_epochs;
            const double frac = ce > 1 ? static_cast<double>(epoch) / (ce - 1) : 1.0;
            rounds_cap = 2 + static_cast<int>(std::lround(frac * (cfg.data.rounds - 2)));
        }

        double sum_ce = 0.0, sum_mse = 0.0, sum_pl = 0.0, sum_total = 0.0;
        double last_lr = 0.0;
        int done = 0;
        while (done < n_use) {
            const int bn = std::min(batch, n_use - done);
            model.reg.zero_grads();
            for (int b = 0; b < bn; ++b) {
                Episode ep = ds.train[static_cast<size_t>(order[static_cast<size_t>(done + b)])];
                if (cfg.train.shuffle_questions) {
                    Rng qrng(Rng::key({cfg.seed, Rng::tag("qperm"), (uint64_t)epoch,
                                       (uint64_t)ep.id}));
                    qrng.shuffle(ep.questions);
                }
                if (rounds_cap > 0 && static_cast<int>(ep.questions.size()) > rounds_cap)
                    ep.questions.resize(static_cast<size_t>(rounds_cap));
                RunOptions ro;
                ro.train_graph = true;
                ro.decision_noise = epoch < noise_epochs;
                ro.questions = QuestionSource::Gold;
                ro.compute_loss = true;
                ro.paper_literal_signs = cfg.train.paper_literal_signs;
                ro.ablate_vrds = ablate.vrds;
                ro.ablate_strack = ablate.strack;
                ro.use_mse = !ablate.mse;
                ro.use_pl = !ablate.pl;
                Graph<float> g(true, Rng::key({cfg.seed, Rng::tag("ep"), (uint64_t)epoch,
                                               (uint64_t)ep.id}));
                Rng arng(Rng::key({cfg.seed, Rng::tag("act"), (uint64_t)epoch,
                                   (uint64_t)ep.id}));
                EpisodeResult<float> res = run_episode(g, model, world, ep, vocab, ro, arng);
                auto scaled = g.scale(res.total, static_cast<float>(1.0 / bn));
                g.backward(scaled);
                sum_ce += res.loss.ce;
                sum_mse += res.loss.mse_mean;
                sum_pl += res.loss.pl;
                sum_total += res.loss.total;
            }
            last_lr = cosine_lr(cfg.train.lr_max, cfg.train.lr_min, st.global_step, total_steps);
            opt.step(last_lr);
            ++st.global_step;
            done += bn;
        }

        EvalOptions eo;
        eo.questions = QuestionSource::Generated;
        eo.compute_nll = false;
        eo.seed = cfg.seed;
        eo.ablate_vrds = ablate.vrds;
        eo.ablate_strack = ablate.strack;
        MetricReport val = evaluate_model(model, world, ds.val, vocab, eo);

        const bool improved = val.pmr > st.best_val_pmr || st.best_epoch < 0;
        if (improved) {
            st.best_val_pmr = val.pmr;
            st.best_epoch = epoch;
            st.epochs_since_best = 0;
            save_checkpoint((ckpt_dir / "best.ckpt").string(), model.reg);
            std::ofstream marker((ckpt_dir / "best.txt").string(),
                                 std::ios::binary | std::ios::trunc);
            marker << epoch_ckpt_name(epoch) << "\n";
        } else {
            ++st.epochs_since_best;
        }
        if (st.epochs_since_best >= cfg.train.patience) st.stopped_early = true;

        st.epochs_completed = epoch + 1;
        save_checkpoint((ckpt_dir / epoch_ckpt_name(epoch)).string(), model.reg);
        save_checkpoint((ckpt_dir / "last.ckpt").string(), model.reg);
        save_moments(opt, model.reg, (ckpt_dir / "last_opt.ckpt").string());
        save_trainer_state(st, state_path);

        const double inv = 1.0 / n_use;
        json line = {{"epoch", epoch},
                     {"ce", sum_ce * inv},
                     {"mse", sum_mse * inv},
                     {"pl", sum_pl * inv},
                     {"total", sum_total * inv},
                     {"lr_last", last_lr},
                     {"tau", model.strack_p.tau},
                     {"val_pmr", val.pmr},
                     {"val_mrr", val.mrr},
                     {"val_unique_q", val.unique_q},
                     {"best", improved}};
        std::ofstream log(log_path, std::ios::binary | std::ios::app);
        log << line.dump() << "\n";

        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "epoch " << epoch << " total " << sum_total * inv << " ce "
                  << sum_ce * inv << " val_pmr " << val.pmr << (improved ? " *" : "")
                  << " (" << secs << "s)\n";
    }

    TrainResult tr;
    tr.epochs_run = st.epochs_completed;
    tr.best_epoch = st.best_epoch;
    tr.best_val_pmr = st.best_val_pmr;
    tr.stopped_early = st.stopped_early;
    return tr;
}

}  // namespace dst
