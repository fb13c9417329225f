#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunOut {
    int code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE_MESSAGE(bool(is), "cannot open " << p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Shared scratch space for the whole binary; set up once, reused across cases
// so the expensive gen-data/train steps run a single time.
const fs::path& scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "dst_cli_scratch";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunOut run(const std::string& args, const std::string& env = "") {
    static int n = 0;
    const fs::path out = scratch() / ("out" + std::to_string(n) + ".txt");
    const fs::path err = scratch() / ("err" + std::to_string(n) + ".txt");
    ++n;
    std::string cmd = env + (env.empty() ? "" : " ") + DST_CLI_PATH + " " + args + " > " +
                      out.string() + " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    RunOut r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

const std::string& small_config_path() {
    static const std::string path = [] {
        nlohmann::json j;
        j["seed"] = 5;
        j["model"] = {{"d", 16},      {"d_img", 8},    {"dec_layers", 1}, {"enc_layers", 1},
                      {"heads", 2},   {"ffn_mult", 2}, {"max_q_len", 8},  {"ctx_len", 96},
                      {"dropout", 0.1}, {"tau", 1.0},  {"tau_anneal", true}, {"tau_min", 0.5}};
        j["train"] = {{"batch", 8}, {"epochs", 2}, {"patience", 2}};
        j["world"] = {{"num_images", 48}, {"family_size", 8}, {"min_objects", 2}, {"max_objects", 3}};
        j["data"] = {{"pool_size", 8}, {"rounds", 4}};
        const fs::path p = scratch() / "small_config.json";
        std::ofstream os(p);
        os << j.dump(2) << "\n";
        return p.string();
    }();
    return path;
}

// gen-data and a short training run, once; later cases evaluate and play
// against these artifacts.
struct Artifacts {
    std::string data = (scratch() / "data").string();
    std::string run_dir = (scratch() / "run").string();
    std::string ckpt;
    bool ok = false;
};

const Artifacts& artifacts() {
    static const Artifacts a = [] {
        Artifacts art;
        RunOut g = run("gen-data --config " + small_config_path() + " --out " + art.data);
        REQUIRE_MESSAGE(g.code == 0, "gen-data failed: " << g.err);
        RunOut t = run("train --data " + art.data + " --out " + art.run_dir);
        REQUIRE_MESSAGE(t.code == 0, "train failed: " << t.err);
        art.ckpt = art.run_dir + "/checkpoints/best.ckpt";
        art.ok = true;
        return art;
    }();
    return a;
}

}  // namespace

TEST_CASE("--print-config emits valid JSON that round-trips through --config") {
    RunOut r = run("--print-config");
    CHECK(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j.contains("seed"));
    CHECK(j.contains("model"));
    CHECK(j.contains("train"));
    CHECK(j.contains("world"));
    CHECK(j.contains("data"));

    const fs::path echo = scratch() / "echo_config.json";
    std::ofstream(echo) << r.out;
    RunOut r2 = run("--print-config --config " + echo.string());
    CHECK(r2.code == 0);
    CHECK(r2.out == r.out);
}

TEST_CASE("help paths exit 0; usage errors exit 2") {
    CHECK(run("--help").code == 0);
    CHECK(run("").code == 0);  // bare invocation prints help
    CHECK(run("gen-data --help").code == 0);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("gen-data").code == 2);           // missing required --out
    CHECK(run("gen-data --bogus-flag x --out " + (scratch() / "nope").string()).code == 2);
}

TEST_CASE("config schema violations are rejected with exit 2") {
    auto write_cfg = [](const std::string& name, const nlohmann::json& j) {
        const fs::path p = scratch() / name;
        std::ofstream(p) << j.dump() << "\n";
        return p.string();
    };

    // unknown key
    auto bad1 = write_cfg("bad1.json", {{"seed", 1}, {"bogus_key", 2}});
    RunOut r1 = run("--print-config --config " + bad1);
    CHECK(r1.code == 2);
    CHECK(r1.err.find("bogus_key") != std::string::npos);

    // pool bigger than the world
    auto bad2 = write_cfg("bad2.json",
                          {{"world", {{"num_images", 10}}}, {"data", {{"pool_size", 50}}}});
    CHECK(run("gen-data --config " + bad2 + " --out " + (scratch() / "nope2").string()).code == 2);

    // wrong value type
    auto bad3 = write_cfg("bad3.json", {{"seed", "not-a-number"}});
    CHECK(run("--print-config --config " + bad3).code == 2);

    // unparseable file
    const fs::path garbled = scratch() / "garbled.json";
    std::ofstream(garbled) << "{{{";
    CHECK(run("--print-config --config " + garbled.string()).code == 2);

    // missing file
    CHECK(run("--print-config --config " + (scratch() / "missing.json").string()).code == 2);
}

TEST_CASE("gen-data writes the full bundle and is byte-deterministic") {
    const Artifacts& art = artifacts();
    for (const char* f : {"world.json", "vocab.txt", "train.jsonl", "val.jsonl", "test.jsonl",
                          "config.json"})
        CHECK(fs::exists(fs::path(art.data) / f));

    const std::string again = (scratch() / "data_again").string();
    RunOut r = run("gen-data --config " + small_config_path() + " --out " + again);
    CHECK(r.code == 0);
    CHECK(r.out.find("world:") != std::string::npos);
    CHECK(r.out.find("episodes:") != std::string::npos);
    for (const char* f : {"world.json", "vocab.txt", "train.jsonl", "val.jsonl", "test.jsonl",
                          "config.json"})
        CHECK(read_file(fs::path(art.data) / f) == read_file(fs::path(again) / f));
}

TEST_CASE("DST_SEED environment override reseeds the whole pipeline") {
    const std::string d1 = (scratch() / "data_seed_env").string();
    RunOut r = run("gen-data --config " + small_config_path() + " --out " + d1, "DST_SEED=99");
    CHECK(r.code == 0);
    auto cfg = nlohmann::json::parse(read_file(fs::path(d1) / "config.json"));
    CHECK(cfg.at("seed").get<int>() == 99);
    CHECK(read_file(fs::path(d1) / "world.json") !=
          read_file(fs::path(artifacts().data) / "world.json"));

    RunOut bad = run("--print-config", "DST_SEED=zebra");
    CHECK(bad.code == 2);
}

TEST_CASE("train produces checkpoints and logs, and reports its result") {
    const Artifacts& art = artifacts();
    CHECK(art.ok);
    CHECK(fs::exists(fs::path(art.run_dir) / "checkpoints" / "best.ckpt"));
    CHECK(fs::exists(fs::path(art.run_dir) / "checkpoints" / "last.ckpt"));
    CHECK(fs::exists(fs::path(art.run_dir) / "train_log.jsonl"));
    CHECK(fs::exists(fs::path(art.run_dir) / "trainer_state.json"));

    // resume on a finished run is a no-op success
    const std::string before = read_file(fs::path(art.run_dir) / "checkpoints" / "last.ckpt");
    RunOut r = run("train --data " + art.data + " --out " + art.run_dir + " --resume");
    CHECK(r.code == 0);
    CHECK(read_file(fs::path(art.run_dir) / "checkpoints" / "last.ckpt") == before);

    // missing data directory is a runtime error, not a crash
    CHECK(run("train --data " + (scratch() / "no_such_dir").string() + " --out " +
              (scratch() / "no_run").string())
              .code == 1);
}

TEST_CASE("eval writes metrics and transcripts, byte-identical across reruns") {
    const Artifacts& art = artifacts();
    const std::string e1 = (scratch() / "eval1").string();
    const std::string e2 = (scratch() / "eval2").string();
    RunOut r1 = run("eval --checkpoint " + art.ckpt + " --data " + art.data + " --split val --out " + e1);
    CHECK(r1.code == 0);
    CHECK(r1.out.find("pmr") != std::string::npos);
    RunOut r2 = run("eval --checkpoint " + art.ckpt + " --data " + art.data + " --split val --out " + e2);
    CHECK(r2.code == 0);
    CHECK(r1.out == r2.out);
    CHECK(read_file(fs::path(e1) / "metrics.json") == read_file(fs::path(e2) / "metrics.json"));
    CHECK(read_file(fs::path(e1) / "transcripts.jsonl") ==
          read_file(fs::path(e2) / "transcripts.jsonl"));

    auto m = nlohmann::json::parse(read_file(fs::path(e1) / "metrics.json"));
    CHECK(m.at("pool_size").get<int>() == 8);
    CHECK(m.at("pmr").get<double>() >= 0.0);
    CHECK(m.at("pmr").get<double>() <= 1.0);
    CHECK(m.at("pmr_rounds").size() == 4);

    // ablation arms run; bogus names and splits are usage errors
    CHECK(run("eval --checkpoint " + art.ckpt + " --data " + art.data +
              " --split val --ablate vrds")
              .code == 0);
    CHECK(run("eval --checkpoint " + art.ckpt + " --data " + art.data +
              " --split val --ablate zzz")
              .code == 2);
    CHECK(run("eval --checkpoint " + art.ckpt + " --data " + art.data + " --split zzz").code == 2);
    CHECK(run("eval --checkpoint " + (scratch() / "no.ckpt").string() + " --data " + art.data)
              .code == 1);
}

TEST_CASE("play: bot answerer runs a full deterministic game") {
    const Artifacts& art = artifacts();
    const std::string t1 = (scratch() / "play1.jsonl").string();
    const std::string t2 = (scratch() / "play2.jsonl").string();
    RunOut r1 = run("play --checkpoint " + art.ckpt + " --data " + art.data +
                    " --split val --transcript " + t1);
    CHECK(r1.code == 0);
    CHECK(r1.out.find("caption:") != std::string::npos);
    CHECK(r1.out.find("round 1") != std::string::npos);
    CHECK(r1.out.find("top-5 guesses:") != std::string::npos);
    CHECK(r1.out.find("game over") != std::string::npos);
    RunOut r2 = run("play --checkpoint " + art.ckpt + " --data " + art.data +
                    " --split val --transcript " + t2);
    CHECK(r2.code == 0);
    CHECK(r1.out == r2.out);
    CHECK(read_file(t1) == read_file(t2));

    CHECK(run("play --checkpoint " + art.ckpt + " --data " + art.data +
              " --split val --episode 1234567")
              .code == 1);
}

TEST_CASE("play: human answerer consumes stdin and survives odd input") {
    const Artifacts& art = artifacts();
    const fs::path answers = scratch() / "answers.txt";
    // enough lines for every round; includes an out-of-vocab word
    std::ofstream(answers) << "yes\nno\nzzz-not-a-word\nyes\nno\nyes\nno\nyes\n";
    const std::string base_cmd = DST_CLI_PATH + std::string(" play --checkpoint ") + art.ckpt +
                                 " --data " + art.data + " --split val --human-abot";
    const fs::path out = scratch() / "human_out.txt";
    int raw = std::system((base_cmd + " < " + answers.string() + " > " + out.string() + " 2>&1").c_str());
    CHECK(WEXITSTATUS(raw) == 0);
    const std::string txt = read_file(out);
    CHECK(txt.find("answer>") != std::string::npos);
    CHECK(txt.find("unrecognized word") != std::string::npos);
    CHECK(txt.find("game over") != std::string::npos);

    // stdin closing mid-game aborts with a runtime error
    raw = std::system((base_cmd + " < /dev/null > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(raw) == 1);
}

TEST_CASE("play transcript matches the eval transcript for the same episode") {
    const Artifacts& art = artifacts();
    const std::string t = (scratch() / "play_match.jsonl").string();
    RunOut r = run("play --checkpoint " + art.ckpt + " --data " + art.data +
                   " --split val --transcript " + t);
    REQUIRE(r.code == 0);
    auto played = nlohmann::json::parse(read_file(t).substr(0, read_file(t).find('\n')));

    const std::string ev = (scratch() / "eval_match").string();
    RunOut re = run("eval --checkpoint " + art.ckpt + " --data " + art.data + " --split val --out " + ev);
    REQUIRE(re.code == 0);
    std::istringstream lines(read_file(fs::path(ev) / "transcripts.jsonl"));
    std::string line;
    bool found = false;
    while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        if (j.at("episode") == played.at("episode")) {
            found = true;
            CHECK(j.at("rounds") == played.at("rounds"));
            CHECK(j.at("final_rank") == played.at("final_rank"));
        }
    }
    CHECK(found);
}
