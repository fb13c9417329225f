#include "dst/episode.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "dst/rng.hpp"
#include "dst/vocab.hpp"
#include "json.hpp"

namespace dst {

std::vector<std::vector<std::string>> oracle_questions(const SynthImage& img,
                                                       const std::vector<std::string>& caption,
                                                       int max_rounds) {
    (void)caption;  // exposure is fixed by the caption template
    std::vector<std::vector<std::string>> qs;
    for (const auto& o : img.objects)
        qs.push_back({"where", "is", "the", noun_words()[static_cast<size_t>(o.noun)]});
    for (const auto& o : img.objects)
        qs.push_back({"what", "size", "is", "the", noun_words()[static_cast<size_t>(o.noun)]});
    for (size_t i = 1; i < img.objects.size(); ++i)
        qs.push_back({"what", "color", "is", "the", noun_words()[static_cast<size_t>(img.objects[i].noun)]});
    if (static_cast<int>(qs.size()) > max_rounds) qs.resize(static_cast<size_t>(max_rounds));
    return qs;
}

std::vector<std::vector<std::string>> padding_questions(const SynthImage& img, int needed) {
    std::vector<bool> present(noun_words().size(), false);
    for (const auto& o : img.objects) present[static_cast<size_t>(o.noun)] = true;
    std::vector<std::vector<std::string>> qs;
    for (int round = 0; static_cast<int>(qs.size()) < needed; ++round) {
        if (round >= static_cast<int>(color_words().size()))
            throw std::runtime_error("padding_questions: ran out of distinct probes");
        bool any_absent = false;
        for (size_t n = 0; n < noun_words().size() && static_cast<int>(qs.size()) < needed; ++n) {
            if (present[n]) continue;
            any_absent = true;
            const auto& color = color_words()[static_cast<size_t>((3 * round + static_cast<int>(n)) %
                                                                  static_cast<int>(color_words().size()))];
            qs.push_back({"is", "there", "a", color, noun_words()[n]});
        }
        if (!any_absent) throw std::runtime_error("padding_questions: image uses every noun");
    }
    return qs;
}

void DatasetConfig::validate() const {
    if (pool_size < 2) throw std::runtime_error("dataset: pool_size must be >= 2");
    if (rounds < 1) throw std::runtime_error("dataset: rounds must be >= 1");
    if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac >= 1.0)
        throw std::runtime_error("dataset: bad split fractions");
}

Dataset build_dataset(const World& world, const DatasetConfig& cfg) {
    cfg.validate();
    const auto& images = world.images();
    const int n = static_cast<int>(images.size());
    if (cfg.pool_size > n) throw std::runtime_error("dataset: pool_size exceeds world size");

    std::vector<std::vector<int>> families;
    for (const auto& img : images) {
        if (img.family >= static_cast<int>(families.size())) families.resize(static_cast<size_t>(img.family) + 1);
        families[static_cast<size_t>(img.family)].push_back(img.id);
    }

    std::vector<Episode> all;
    all.reserve(static_cast<size_t>(n));
    for (const auto& img : images) {
        Episode ep;
        ep.id = img.id;
        ep.target = img.id;
        ep.caption = render_caption(img);

        ep.questions = oracle_questions(img, ep.caption, cfg.rounds);
        if (static_cast<int>(ep.questions.size()) < cfg.rounds) {
            auto pads = padding_questions(img, cfg.rounds - static_cast<int>(ep.questions.size()));
            ep.questions.insert(ep.questions.end(), pads.begin(), pads.end());
        }

        Rng rng(Rng::key({world.config().seed, Rng::tag("pool"), static_cast<uint64_t>(img.id)}));
        std::set<int> used{img.id};
        ep.pool.push_back(img.id);
        for (int sib : families[static_cast<size_t>(img.family)]) {
            if (static_cast<int>(ep.pool.size()) >= cfg.pool_size) break;
            if (used.insert(sib).second) ep.pool.push_back(sib);
        }
        while (static_cast<int>(ep.pool.size()) < cfg.pool_size) {
            const int cand = rng.uniform_int(n);
            if (used.insert(cand).second) ep.pool.push_back(cand);
        }
        rng.shuffle(ep.pool);
        all.push_back(std::move(ep));
    }

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng split_rng(Rng::key({world.config().seed, Rng::tag("split")}));
    split_rng.shuffle(order);
    const int n_train = static_cast<int>(cfg.train_frac * n);
    const int n_val = static_cast<int>(cfg.val_frac * n);

    Dataset ds;
    for (int i = 0; i < n; ++i) {
        auto& ep = all[static_cast<size_t>(order[static_cast<size_t>(i)])];
        if (i < n_train)
            ds.train.push_back(std::move(ep));
        else if (i < n_train + n_val)
            ds.val.push_back(std::move(ep));
        else
            ds.test.push_back(std::move(ep));
    }
    return ds;
}

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

void save_episodes(const std::string& path, const std::vector<Episode>& eps) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("episodes: cannot write " + path);
    for (const auto& ep : eps) {
        nlohmann::json j;
        j["id"] = ep.id;
        j["target"] = ep.target;
        j["pool"] = ep.pool;
        j["caption"] = join(ep.caption);
        nlohmann::json qs = nlohmann::json::array();
        for (const auto& q : ep.questions) qs.push_back(join(q));
        j["questions"] = std::move(qs);
        os << j.dump() << "\n";
    }
    if (!os) throw std::runtime_error("episodes: write failed " + path);
}

std::vector<Episode> load_episodes(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("episodes: cannot open " + path);
    std::vector<Episode> eps;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("episodes: bad JSONL in " + path + ": " + e.what());
        }
        Episode ep;
        ep.id = j.at("id").get<int>();
        ep.target = j.at("target").get<int>();
        ep.pool = j.at("pool").get<std::vector<int>>();
        ep.caption = split_ws(j.at("caption").get<std::string>());
        for (const auto& q : j.at("questions")) ep.questions.push_back(split_ws(q.get<std::string>()));
        eps.push_back(std::move(ep));
    }
    return eps;
}

}  // namespace dst
