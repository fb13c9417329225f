#include "dst/transcript.hpp"

#include <fstream>
#include <stdexcept>

#include "dst/base64.hpp"
#include "dst/vocab.hpp"
#include "json.hpp"

namespace dst {

namespace {
std::string join(const std::vector<std::string>& toks) {
    std::string s;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (i) s += ' ';
        s += toks[i];
    }
    return s;
}
}  // namespace

std::string transcript_to_json(const Transcript& t) {
    nlohmann::json j;
    j["episode"] = t.episode_id;
    j["caption"] = join(t.caption);
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : t.rounds) {
        nlohmann::json jr;
        jr["q"] = join(r.question);
        jr["a"] = r.answer;
        jr["action"] = std::string(1, r.action);
        jr["y"] = base64_encode_f64(r.y);
        jr["rank"] = r.rank;
        jr["mse"] = r.mse;
        jr["k"] = r.k;
        rounds.push_back(std::move(jr));
    }
    j["rounds"] = std::move(rounds);
    j["final_rank"] = t.final_rank;
    j["final_mse"] = t.final_mse;
    if (!t.state_b64.empty()) j["state"] = t.state_b64;
    return j.dump();
}

Transcript transcript_from_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("transcript: bad JSON: ") + e.what());
    }
    Transcript t;
    t.episode_id = j.at("episode").get<int>();
    t.caption = split_ws(j.at("caption").get<std::string>());
    for (const auto& jr : j.at("rounds")) {
        RoundRecord r;
        r.question = split_ws(jr.at("q").get<std::string>());
        r.answer = jr.at("a").get<std::string>();
        const auto action = jr.at("action").get<std::string>();
        if (action.size() != 1) throw std::runtime_error("transcript: bad action");
        r.action = action[0];
        r.y = base64_decode_f64(jr.at("y").get<std::string>());
        r.rank = jr.at("rank").get<int>();
        r.mse = jr.at("mse").get<double>();
        r.k = jr.at("k").get<int>();
        t.rounds.push_back(std::move(r));
    }
    t.final_rank = j.at("final_rank").get<int>();
    t.final_mse = j.at("final_mse").get<double>();
    if (j.contains("state")) t.state_b64 = j.at("state").get<std::string>();
    return t;
}

void save_transcripts(const std::string& path, const std::vector<Transcript>& ts) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("transcript: cannot write " + path);
    for (const auto& t : ts) os << transcript_to_json(t) << "\n";
    if (!os) throw std::runtime_error("transcript: write failed " + path);
}

std::vector<Transcript> load_transcripts(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("transcript: cannot open " + path);
    std::vector<Transcript> ts;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ts.push_back(transcript_from_json(line));
    return ts;
}

}  // namespace dst
