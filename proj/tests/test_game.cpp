#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "dst/config.hpp"
#include "dst/game.hpp"
#include "dst/train.hpp"
#include "dst/transcript.hpp"
#include "helpers.hpp"
#include "json.hpp"

using namespace dst;

namespace {

struct GameFixture {
    World world;
    Dataset ds;
    Vocab vocab;
    ModelConfig mc;

    GameFixture() {
        WorldConfig wc;
        wc.seed = 11;
        wc.num_images = 64;
        wc.d_img = 8;
        wc.family_size = 8;
        world = World::generate(wc);
        DatasetConfig dc;
        dc.pool_size = 8;
        dc.rounds = 5;
        ds = build_dataset(world, dc);
        vocab = Vocab::build(grammar_words());

        mc.d = 16;
        mc.d_img = 8;
        mc.vocab_size = vocab.size();
        mc.dec_layers = 1;
        mc.enc_layers = 1;
        mc.heads = 2;
        mc.ffn_mult = 2;
        mc.max_q_len = 8;
        mc.ctx_len = 96;
        mc.dropout = 0.1;
        mc.tau = 1.0;
    }

    Model<double> make_model(uint64_t seed = 3) const { return Model<double>(mc, seed); }
};

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("gold episode: rounds, truthful answers, bounded ranks and state size") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[0];
    const int T = static_cast<int>(ep.questions.size());
    Graph<double> g;
    Rng rng(1);
    RunOptions opt;
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);

    CHECK(static_cast<int>(res.transcript.rounds.size()) == T);
    CHECK(res.transcript.episode_id == ep.id);
    CHECK(res.transcript.caption == ep.caption);
    int prev_k = 1;
    for (int t = 0; t < T; ++t) {
        const auto& r = res.transcript.rounds[static_cast<size_t>(t)];
        CHECK(r.question == ep.questions[static_cast<size_t>(t)]);
        CHECK(r.answer == abot_answer(r.question, fx.world.image(ep.target)));
        CHECK((r.action == 'A' || r.action == 'U'));
        CHECK(r.k >= prev_k);
        CHECK(r.k <= prev_k + 1);
        prev_k = r.k;
        CHECK(r.k <= 1 + T);
        CHECK(r.rank >= 1);
        CHECK(r.rank <= static_cast<int>(ep.pool.size()));
        CHECK(std::isfinite(r.mse));
        CHECK(static_cast<int>(r.y.size()) == fx.mc.d_img);
        CHECK(r.mse == res.loss.mse_rounds[static_cast<size_t>(t)]);
    }
    CHECK(res.transcript.final_rank == res.transcript.rounds.back().rank);
    CHECK(res.transcript.final_mse == res.transcript.rounds.back().mse);
}

TEST_CASE("loss composition: total = ce + mse + pl, and ablatable terms") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[1];

    auto run_with = [&](bool use_mse, bool use_pl, bool literal) {
        Graph<double> g(true, 909);
        Rng rng(4);
        RunOptions opt;
        opt.train_graph = true;
        opt.compute_loss = true;
        opt.use_mse = use_mse;
        opt.use_pl = use_pl;
        opt.paper_literal_signs = literal;
        return run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    };

    auto all = run_with(true, true, false);
    CHECK(all.loss.ce > 0);
    CHECK(all.loss.mse_mean > 0);
    CHECK(std::isfinite(all.loss.pl));
    CHECK(all.loss.total == doctest::Approx(all.loss.ce + all.loss.mse_mean + all.loss.pl).epsilon(1e-9));
    CHECK(all.gold_tokens > 0);
    // ce is the mean negative log-prob of the gold tokens
    CHECK(all.loss.ce ==
          doctest::Approx(-all.gold_logprob_sum / static_cast<double>(all.gold_tokens)).epsilon(1e-9));

    auto no_mse = run_with(false, true, false);
    CHECK(no_mse.loss.total == doctest::Approx(no_mse.loss.ce + no_mse.loss.pl).epsilon(1e-9));
    auto no_pl = run_with(true, false, false);
    CHECK(no_pl.loss.total == doctest::Approx(no_pl.loss.ce + no_pl.loss.mse_mean).epsilon(1e-9));
    auto literal = run_with(true, true, true);
    CHECK(literal.loss.total ==
          doctest::Approx(literal.loss.ce - literal.loss.mse_mean - literal.loss.pl).epsilon(1e-9));
}

TEST_CASE("episode loss reaches parameters across the whole model") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[2];
    Graph<double> g(true, 707);
    Rng rng(7);
    RunOptions opt;
    opt.train_graph = true;
    opt.compute_loss = true;
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    for (auto* p : m.reg.all()) p->zero_grad();
    g.backward(res.total);
    int touched = 0;
    for (auto* p : m.reg.all()) {
        double mx = 0;
        for (double x : p->grad.v) mx = std::max(mx, std::abs(x));
        if (mx > 0) ++touched;
    }
    // decoder, encoder, embeddings, reasoning, tracker and guesser all get grads
    CHECK(touched > static_cast<int>(m.reg.all().size()) / 2);
}

TEST_CASE("same keys replay the identical episode; eval is noise-free") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[3];

    auto run_train = [&](uint64_t gkey, uint64_t rkey) {
        Graph<double> g(true, gkey);
        Rng rng(rkey);
        RunOptions opt;
        opt.train_graph = true;
        return run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    };
    auto a = run_train(5, 6);
    auto b = run_train(5, 6);
    REQUIRE(a.transcript.rounds.size() == b.transcript.rounds.size());
    for (size_t t = 0; t < a.transcript.rounds.size(); ++t) {
        CHECK(a.transcript.rounds[t].action == b.transcript.rounds[t].action);
        CHECK(a.transcript.rounds[t].y == b.transcript.rounds[t].y);
        CHECK(a.transcript.rounds[t].rank == b.transcript.rounds[t].rank);
    }

    // eval-mode episodes ignore the rng entirely: different seeds, same bytes
    auto run_eval = [&](uint64_t rkey) {
        Graph<double> g;
        Rng rng(rkey);
        RunOptions opt;
        return run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    };
    auto e1 = run_eval(111);
    auto e2 = run_eval(999);
    for (size_t t = 0; t < e1.transcript.rounds.size(); ++t) {
        CHECK(e1.transcript.rounds[t].action == e2.transcript.rounds[t].action);
        CHECK(e1.transcript.rounds[t].y == e2.transcript.rounds[t].y);
    }
}

TEST_CASE("generated questions: in-vocab tokens, loss refused") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.val[0];
    Graph<double> g;
    Rng rng(2);
    RunOptions opt;
    opt.questions = QuestionSource::Generated;
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    for (const auto& r : res.transcript.rounds) {
        CHECK(!r.question.empty());
        CHECK(static_cast<int>(r.question.size()) <= fx.mc.max_q_len);
        for (const auto& w : r.question) {
            CHECK(fx.vocab.contains(w));
            CHECK(w != "[SOS]");
            CHECK(w != "[EOS]");
        }
        // whatever the question, the answerer replies from its closed set
        CHECK(std::count(answer_words().begin(), answer_words().end(), r.answer) == 1);
    }

    RunOptions bad;
    bad.questions = QuestionSource::Generated;
    bad.compute_loss = true;
    Graph<double> g2;
    CHECK_THROWS_AS(run_episode(g2, m, fx.world, ep, fx.vocab, bad, rng), std::logic_error);
}

TEST_CASE("ablations: frozen tracker keeps k at 1, no-reasoning arm still runs") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[4];
    Graph<double> g;
    Rng rng(3);
    RunOptions opt;
    opt.ablate_strack = true;
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    for (const auto& r : res.transcript.rounds) {
        CHECK(r.action == '-');
        CHECK(r.k == 1);
    }

    Graph<double> g2;
    RunOptions opt2;
    opt2.ablate_vrds = true;
    auto res2 = run_episode(g2, m, fx.world, ep, fx.vocab, opt2, rng);
    CHECK(res2.transcript.rounds.size() == ep.questions.size());
    for (const auto& r : res2.transcript.rounds) CHECK(std::isfinite(r.mse));
}

TEST_CASE("interactive hooks: answer_fn overrides the answerer, on_round observes") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[5];
    std::vector<std::string> seen_questions;
    int rounds_seen = 0;
    Graph<double> g;
    Rng rng(8);
    RunOptions opt;
    opt.answer_fn = [&](const std::vector<std::string>& q) {
        seen_questions.push_back(q.empty() ? "" : q[0]);
        return std::string("yes");
    };
    opt.on_round = [&](const RoundRecord& r) {
        ++rounds_seen;
        CHECK(r.answer == "yes");
        CHECK(r.rank >= 1);
    };
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    CHECK(rounds_seen == static_cast<int>(ep.questions.size()));
    CHECK(seen_questions.size() == ep.questions.size());
    for (const auto& r : res.transcript.rounds) CHECK(r.answer == "yes");
}

TEST_CASE("captured state decodes to the final dialogue state") {
    GameFixture fx;
    auto m = fx.make_model();
    const Episode& ep = fx.ds.train[6];
    Graph<double> g;
    Rng rng(9);
    RunOptions opt;
    opt.capture_state = true;
    auto res = run_episode(g, m, fx.world, ep, fx.vocab, opt, rng);
    REQUIRE(!res.transcript.state_b64.empty());
    DialogueState s = deserialize_state(base64_decode(res.transcript.state_b64));
    CHECK(s.k() == res.transcript.rounds.back().k);
    CHECK(s.d() == fx.mc.d);
    CHECK(s.t == static_cast<int>(ep.questions.size()));
    s.validate();
}

TEST_CASE("transcripts round-trip through JSON and JSONL") {
    GameFixture fx;
    auto m = fx.make_model();
    std::vector<Transcript> ts;
    for (int i = 0; i < 3; ++i) {
        Graph<double> g;
        Rng rng(static_cast<uint64_t>(20 + i));
        RunOptions opt;
        opt.capture_state = i == 0;
        ts.push_back(run_episode(g, m, fx.world, fx.ds.train[static_cast<size_t>(i)], fx.vocab, opt, rng)
                         .transcript);
    }

    for (const auto& t : ts) {
        Transcript r = transcript_from_json(transcript_to_json(t));
        CHECK(r.episode_id == t.episode_id);
        CHECK(r.caption == t.caption);
        CHECK(r.final_rank == t.final_rank);
        CHECK(r.final_mse == t.final_mse);
        CHECK(r.state_b64 == t.state_b64);
        REQUIRE(r.rounds.size() == t.rounds.size());
        for (size_t i = 0; i < t.rounds.size(); ++i) {
            CHECK(r.rounds[i].question == t.rounds[i].question);
            CHECK(r.rounds[i].answer == t.rounds[i].answer);
            CHECK(r.rounds[i].action == t.rounds[i].action);
            CHECK(r.rounds[i].y == t.rounds[i].y);
            CHECK(r.rounds[i].rank == t.rounds[i].rank);
            CHECK(r.rounds[i].mse == t.rounds[i].mse);
            CHECK(r.rounds[i].k == t.rounds[i].k);
        }
    }

    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "dst_test_transcripts.jsonl").string();
    save_transcripts(path, ts);
    auto back = load_transcripts(path);
    REQUIRE(back.size() == ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        CHECK(back[i].episode_id == ts[i].episode_id);
        CHECK(back[i].rounds.size() == ts[i].rounds.size());
    }
    fs::remove(path);
    CHECK_THROWS(load_transcripts(path + ".missing"));
    CHECK_THROWS(transcript_from_json("not json"));
}

TEST_CASE("empty episode is rejected") {
    GameFixture fx;
    auto m = fx.make_model();
    Episode ep = fx.ds.train[0];
    ep.questions.clear();
    Graph<double> g;
    Rng rng(1);
    RunOptions opt;
    CHECK_THROWS(run_episode(g, m, fx.world, ep, fx.vocab, opt, rng));

    Episode bad_pool = fx.ds.train[0];
    bad_pool.pool.erase(std::remove(bad_pool.pool.begin(), bad_pool.pool.end(), bad_pool.target),
                        bad_pool.pool.end());
    Graph<double> g2;
    CHECK_THROWS(run_episode(g2, m, fx.world, bad_pool, fx.vocab, opt, rng));
}

namespace {

Config tiny_train_config(int epochs) {
    Config cfg = Config::defaults();
    cfg.seed = 21;
    cfg.model.d = 16;
    cfg.model.d_img = 8;
    cfg.model.dec_layers = 1;
    cfg.model.enc_layers = 1;
    cfg.model.heads = 2;
    cfg.model.max_q_len = 8;
    cfg.model.ctx_len = 96;
    cfg.model.tau_anneal = true;
    cfg.model.tau_min = 0.5;
    cfg.world.seed = cfg.seed;
    cfg.world.num_images = 48;
    cfg.world.d_img = 8;
    cfg.world.family_size = 8;
    cfg.data.pool_size = 8;
    cfg.data.rounds = 4;
    cfg.train.batch = 8;
    cfg.train.epochs = epochs;
    cfg.train.patience = epochs;
    return cfg;
}

}  // namespace

TEST_CASE("training writes its artifacts and an interrupted run resumes byte-exactly") {
    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / "dst_test_train";
    fs::remove_all(base);
    fs::create_directories(base);

    Config cfg = tiny_train_config(4);
    WorldConfig wc;
    wc.seed = cfg.world.seed;
    wc.num_images = cfg.world.num_images;
    wc.d_img = cfg.world.d_img;
    wc.family_size = cfg.world.family_size;
    World world = World::generate(wc);
    DatasetConfig dc;
    dc.pool_size = cfg.data.pool_size;
    dc.rounds = cfg.data.rounds;
    Dataset ds = build_dataset(world, dc);
    Vocab vocab = Vocab::build(grammar_words());
    cfg.model.vocab_size = vocab.size();

    // run A: all four epochs in one go
    const std::string out_a = (base / "a").string();
    Model<float> ma(cfg.model, cfg.seed);
    TrainResult ra = train_model(ma, world, ds, vocab, cfg, out_a);
    CHECK(ra.epochs_run == 4);
    CHECK(ra.best_epoch >= 0);  // zero-based epoch index

    CHECK(fs::exists(fs::path(out_a) / "checkpoints" / "last.ckpt"));
    CHECK(fs::exists(fs::path(out_a) / "checkpoints" / "best.ckpt"));
    CHECK(fs::exists(fs::path(out_a) / "checkpoints" / "last_opt.ckpt"));
    CHECK(fs::exists(fs::path(out_a) / "trainer_state.json"));

    // the log holds one JSON line per epoch with the expected keys
    {
        std::ifstream is(fs::path(out_a) / "train_log.jsonl");
        REQUIRE(is);
        std::string line;
        int lines = 0;
        while (std::getline(is, line)) {
            ++lines;
            auto j = nlohmann::json::parse(line);
            for (const char* k : {"epoch", "ce", "mse", "pl", "total", "lr_last", "tau", "val_pmr"})
                CHECK(j.contains(k));
        }
        CHECK(lines == 4);
    }

    // run B: two epochs, then resume for the rest
    const std::string out_b = (base / "b").string();
    {
        Model<float> mb(cfg.model, cfg.seed);
        TrainResult rb1 = train_model(mb, world, ds, vocab, cfg, out_b, false, {}, 2);
        CHECK(rb1.epochs_run == 2);
    }
    {
        Model<float> mb(cfg.model, cfg.seed);
        TrainResult rb2 = train_model(mb, world, ds, vocab, cfg, out_b, true);
        CHECK(rb2.epochs_run == 4);
    }

    CHECK(read_file((fs::path(out_a) / "checkpoints" / "last.ckpt").string()) ==
          read_file((fs::path(out_b) / "checkpoints" / "last.ckpt").string()));
    CHECK(read_file((fs::path(out_a) / "checkpoints" / "last_opt.ckpt").string()) ==
          read_file((fs::path(out_b) / "checkpoints" / "last_opt.ckpt").string()));
    CHECK(read_file((fs::path(out_a) / "train_log.jsonl").string()) ==
          read_file((fs::path(out_b) / "train_log.jsonl").string()));
    CHECK(read_file((fs::path(out_a) / "trainer_state.json").string()) ==
          read_file((fs::path(out_b) / "trainer_state.json").string()));

    // resuming a finished run is a no-op that rewrites nothing
    const std::string before = read_file((fs::path(out_b) / "checkpoints" / "last.ckpt").string());
    {
        Model<float> mb(cfg.model, cfg.seed);
        TrainResult rb3 = train_model(mb, world, ds, vocab, cfg, out_b, true);
        CHECK(rb3.epochs_run == 4);
    }
    CHECK(read_file((fs::path(out_b) / "checkpoints" / "last.ckpt").string()) == before);

    // resume with a changed schedule is refused
    {
        Config changed = cfg;
        changed.train.epochs = 8;
        Model<float> mb(cfg.model, cfg.seed);
        CHECK_THROWS(train_model(mb, world, ds, vocab, changed, out_b, true));
    }

    fs::remove_all(base);
}
