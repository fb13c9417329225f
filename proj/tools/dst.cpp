#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dst/checkpoint.hpp"
#include "dst/config.hpp"
#include "dst/episode.hpp"
#include "dst/eval.hpp"
#include "dst/game.hpp"
#include "dst/guesser.hpp"
#include "dst/model.hpp"
#include "dst/train.hpp"
#include "dst/transcript.hpp"
#include "dst/vocab.hpp"
#include "dst/world.hpp"

namespace fs = std::filesystem;
using namespace dst;

namespace {

Config load_config_for(const std::string& cfg_path, const std::string& data_dir) {
    Config cfg;
    if (!cfg_path.empty()) {
        cfg = Config::from_file(cfg_path);
    } else if (!data_dir.empty() && fs::exists(fs::path(data_dir) / "config.json")) {
        cfg = Config::from_file((fs::path(data_dir) / "config.json").string());
    } else {
        cfg = Config::defaults();
    }
    apply_env_seed(cfg);
    cfg.validate();
    return cfg;
}

Ablations parse_ablate(const std::vector<std::string>& names) {
    Ablations ab;
    for (const std::string& n : names) {
        if (n == "vrds")
            ab.vrds = true;
        else if (n == "strack")
            ab.strack = true;
        else if (n == "mse")
            ab.mse = true;
        else if (n == "pl")
            ab.pl = true;
        else
            throw ConfigError("unknown --ablate value: " + n + " (expected vrds|strack|mse|pl)");
    }
    return ab;
}

struct DataBundle {
    World world;
    Vocab vocab;
    Dataset ds;
};

DataBundle load_data(const std::string& data_dir) {
    const fs::path d(data_dir);
    DataBundle b;
    b.world = World::load((d / "world.json").string());
    b.vocab = Vocab::load((d / "vocab.txt").string());
    b.ds.train = load_episodes((d / "train.jsonl").string());
    b.ds.val = load_episodes((d / "val.jsonl").string());
    b.ds.test = load_episodes((d / "test.jsonl").string());
    return b;
}

const std::vector<Episode>& pick_split(const Dataset& ds, const std::string& split) {
    if (split == "train") return ds.train;
    if (split == "val") return ds.val;
    if (split == "test") return ds.test;
    throw ConfigError("unknown split: " + split);
}

int cmd_gen_data(const std::string& cfg_path, const std::string& out_dir) {
    Config cfg = load_config_for(cfg_path, "");
    if (cfg.world.num_images > 50000)
        std::cerr << "warning: " << cfg.world.num_images
                  << " images is beyond desk scale; generation and training will be slow\n";
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    World world = World::generate(cfg.world);
    Dataset ds = build_dataset(world, cfg.data);
    Vocab vocab = Vocab::build(grammar_words());

    world.save((out / "world.json").string());
    vocab.save((out / "vocab.txt").string());
    save_episodes((out / "train.jsonl").string(), ds.train);
    save_episodes((out / "val.jsonl").string(), ds.val);
    save_episodes((out / "test.jsonl").string(), ds.test);
    std::ofstream cfg_out((out / "config.json").string(), std::ios::binary | std::ios::trunc);
    cfg_out << cfg.to_json();

    std::cout << "world: " << cfg.world.num_images << " images\n"
              << "episodes: " << ds.train.size() << " train / " << ds.val.size()
              << " val / " << ds.test.size() << " test\n"
              << "vocab: " << vocab.size() << " tokens\n";
    return 0;
}

int cmd_train(const std::string& cfg_path, const std::string& data_dir,
              const std::string& out_dir, bool resume,
              const std::vector<std::string>& ablate_names) {
    Config cfg = load_config_for(cfg_path, data_dir);
    Ablations ab = parse_ablate(ablate_names);
    DataBundle b = load_data(data_dir);
    cfg.model.vocab_size = b.vocab.size();

    Model<float> model(cfg.model, cfg.seed);
    TrainResult tr = train_model(model, b.world, b.ds, b.vocab, cfg, out_dir, resume, ab);
    std::cout << "epochs_run " << tr.epochs_run << " best_epoch " << tr.best_epoch
              << " best_val_pmr " << tr.best_val_pmr
              << (tr.stopped_early ? " (early stop)" : "") << "\n";
    return 0;
}

int cmd_eval(const std::string& cfg_path, const std::string& ckpt,
             const std::string& data_dir, const std::string& split,
             const std::vector<std::string>& ablate_names, const std::string& out_dir) {
    Config cfg = load_config_for(cfg_path, data_dir);
    Ablations ab = parse_ablate(ablate_names);
    DataBundle b = load_data(data_dir);
    cfg.model.vocab_size = b.vocab.size();

    Model<float> model(cfg.model, cfg.seed);
    load_checkpoint(ckpt, model.reg);

    EvalOptions eo;
    eo.questions = QuestionSource::Generated;
    eo.ablate_vrds = ab.vrds;
    eo.ablate_strack = ab.strack;
    eo.seed = cfg.seed;
    std::set<std::string> train_qs = question_set(b.ds.train);
    std::vector<Transcript> transcripts;
    MetricReport rep = evaluate_model(model, b.world, pick_split(b.ds, split), b.vocab, eo,
                                      &train_qs, &transcripts);

    if (ab.mse || ab.pl)
        std::cout << "note: --ablate mse/pl are train-time arms; echoed for provenance only\n";
    std::cout << rep.to_table();

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream mj((fs::path(out_dir) / "metrics.json").string(),
                         std::ios::binary | std::ios::trunc);
        mj << rep.to_json() << "\n";
        save_transcripts((fs::path(out_dir) / "transcripts.jsonl").string(), transcripts);
    }
    return 0;
}

int cmd_play(const std::string& cfg_path, const std::string& ckpt,
             const std::string& data_dir, const std::string& split, int episode_id,
             bool human_abot, const std::string& transcript_path) {
    Config cfg = load_config_for(cfg_path, data_dir);
    DataBundle b = load_data(data_dir);
    cfg.model.vocab_size = b.vocab.size();

    Model<float> model(cfg.model, cfg.seed);
    load_checkpoint(ckpt, model.reg);

    const std::vector<Episode>& eps = pick_split(b.ds, split);
    if (eps.empty()) throw std::runtime_error("split has no episodes");
    const Episode* ep = &eps.front();
    if (episode_id >= 0) {
        ep = nullptr;
        for (const Episode& e : eps)
            if (e.id == episode_id) { ep = &e; break; }
        if (ep == nullptr)
            throw std::runtime_error("episode " + std::to_string(episode_id) +
                                     " not found in split " + split);
    }

    std::vector<std::vector<double>> pool_feats;
    for (int pid : ep->pool) pool_feats.push_back(b.world.image(pid).feature);

    std::cout << "episode " << ep->id << ", pool of " << ep->pool.size() << " images\n";
    std::cout << "caption:";
    for (const auto& w : ep->caption) std::cout << ' ' << w;
    std::cout << "\n";

    int round_no = 0;
    RunOptions ro;
    ro.train_graph = false;
    ro.questions = QuestionSource::Generated;
    if (human_abot) {
        ro.answer_fn = [&](const std::vector<std::string>& q) {
            std::cout << "\nround " << (round_no + 1) << "\nQ:";
            for (const auto& w : q) std::cout << ' ' << w;
            std::cout << "\nanswer> " << std::flush;
            std::string line;
            if (!std::getline(std::cin, line))
                throw std::runtime_error("stdin closed, game aborted");
            std::vector<std::string> toks = split_ws(line);
            std::string ans = toks.empty() ? "unknown" : toks.front();
            if (!b.vocab.contains(ans)) {
                std::cout << "(unrecognized word, treating as unknown)\n";
                ans = "unknown";
            }
            return ans;
        };
    }
    ro.on_round = [&](const RoundRecord& rec) {
        ++round_no;
        if (!human_abot) {
            std::cout << "\nround " << round_no << "\nQ:";
            for (const auto& w : rec.question) std::cout << ' ' << w;
            std::cout << "\nA: " << rec.answer << "\n";
        } else {
            std::cout << "A: " << rec.answer << "\n";
        }
        std::cout << "state rows " << rec.k << ", action "
                  << (rec.action == 'A' ? "add" : rec.action == 'U' ? "update" : "frozen")
                  << "\n";
        std::vector<std::pair<double, int>> by_dist;
        for (size_t i = 0; i < pool_feats.size(); ++i) {
            double d2 = 0.0;
            for (size_t j = 0; j < rec.y.size(); ++j) {
                double diff = rec.y[j] - pool_feats[i][j];
                d2 += diff * diff;
            }
            by_dist.push_back({d2, static_cast<int>(i)});
        }
        std::stable_sort(by_dist.begin(), by_dist.end(),
                         [](const auto& a, const auto& b2) { return a.first < b2.first; });
        std::cout << "top-5 guesses:";
        for (int i = 0; i < 5 && i < static_cast<int>(by_dist.size()); ++i)
            std::cout << (i ? ", " : " ") << "image " << ep->pool[static_cast<size_t>(by_dist[static_cast<size_t>(i)].second)];
        std::cout << "\ntarget rank " << rec.rank << " of " << pool_feats.size() << "\n";
    };

    Graph<float> g(false, Rng::key({cfg.seed, Rng::tag("evalg"), (uint64_t)ep->id}));
    Rng rng(Rng::key({cfg.seed, Rng::tag("evala"), (uint64_t)ep->id}));
    EpisodeResult<float> res = run_episode(g, model, b.world, *ep, b.vocab, ro, rng);

    std::cout << "\ngame over: target was image " << ep->target << ", final rank "
              << res.transcript.final_rank << " of " << pool_feats.size() << "\n";
    if (!transcript_path.empty())
        save_transcripts(transcript_path, {res.transcript});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GuessWhich questioner with differentiable dialogue-state tracking"};
    app.require_subcommand(0, 1);

    std::string config_path;
    bool print_config = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_flag("--print-config", print_config, "Print the resolved config and exit");

    auto* gen = app.add_subcommand("gen-data", "Generate world, vocab and episode splits");
    std::string gen_out;
    gen->add_option("--config", config_path, "JSON config file");
    gen->add_option("--out", gen_out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train a model");
    std::string train_data, train_out;
    bool train_resume = false;
    std::vector<std::string> train_ablate;
    train->add_option("--config", config_path, "JSON config file");
    train->add_option("--data", train_data, "Dataset directory from gen-data")->required();
    train->add_option("--out", train_out, "Run directory for checkpoints and logs")->required();
    train->add_flag("--resume", train_resume, "Continue from the last completed epoch");
    train->add_option("--ablate", train_ablate, "Drop a module or loss term (vrds|strack|mse|pl)");

    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
    std::vector<std::string> eval_ablate;
    eval->add_option("--config", config_path, "JSON config file");
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
    eval->add_option("--data", eval_data, "Dataset directory")->required();
    eval->add_option("--split", eval_split, "train|val|test (default test)");
    eval->add_option("--ablate", eval_ablate, "Module to null out (vrds|strack|mse|pl)");
    eval->add_option("--out", eval_out, "Directory for metrics.json and transcripts.jsonl");

    auto* play = app.add_subcommand("play", "Interactive game against the rule-based or a human answerer");
    std::string play_ckpt, play_data, play_split = "test", play_transcript;
    int play_episode = -1;
    bool human_abot = false;
    play->add_option("--config", config_path, "JSON config file");
    play->add_option("--checkpoint", play_ckpt, "Checkpoint file")->required();
    play->add_option("--data", play_data, "Dataset directory")->required();
    play->add_option("--split", play_split, "train|val|test (default test)");
    play->add_option("--episode", play_episode, "Episode id (default: first in split)");
    play->add_flag("--human-abot", human_abot, "You answer the questions via stdin");
    play->add_option("--transcript", play_transcript, "Write the game transcript to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (print_config) {
            Config cfg = load_config_for(config_path, "");
            std::cout << cfg.to_json();
            return 0;
        }
        if (gen->parsed()) return cmd_gen_data(config_path, gen_out);
        if (train->parsed())
            return cmd_train(config_path, train_data, train_out, train_resume, train_ablate);
        if (eval->parsed())
            return cmd_eval(config_path, eval_ckpt, eval_data, eval_split, eval_ablate, eval_out);
        if (play->parsed())
            return cmd_play(config_path, play_ckpt, play_data, play_split, play_episode,
                            human_abot, play_transcript);
        std::cout << app.help();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
