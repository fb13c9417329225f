#include "dst/world.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include "dst/base64.hpp"
#include "dst/rng.hpp"
#include "json.hpp"

namespace dst {

const std::vector<std::string>& noun_words() {
    static const std::vector<std::string> v = {"ball", "dog",  "cat",  "car", "tree", "house",
                                               "bird", "fish", "book", "cup", "hat",  "star"};
    return v;
}

const std::vector<std::string>& noun_plural_words() {
    static const std::vector<std::string> v = {"balls", "dogs",   "cats",  "cars", "trees", "houses",
                                               "birds", "fishes", "books", "cups", "hats",  "stars"};
    return v;
}

const std::vector<std::string>& color_words() {
    static const std::vector<std::string> v = {"red",   "blue",  "green",  "yellow",
                                               "black", "white", "orange", "purple"};
    return v;
}

const std::vector<std::string>& size_words() {
    static const std::vector<std::string> v = {"small", "medium", "large"};
    return v;
}

const std::vector<std::string>& position_words() {
    static const std::vector<std::string> v = {"top-left", "top-right", "bottom-left", "bottom-right"};
    return v;
}

const std::vector<std::string>& count_answer_words() {
    static const std::vector<std::string> v = {"one", "two", "three", "four"};
    return v;
}

const std::vector<std::string>& count_caption_words() {
    static const std::vector<std::string> v = {"a", "two", "three", "four"};
    return v;
}

std::vector<std::string> grammar_words() {
    std::vector<std::string> out;
    std::set<std::string> seen;
    auto push_all = [&](const std::vector<std::string>& ws) {
        for (const auto& w : ws)
            if (seen.insert(w).second) out.push_back(w);
    };
    push_all(noun_words());
    push_all(noun_plural_words());
    push_all(color_words());
    push_all(size_words());
    push_all(position_words());
    push_all(count_answer_words());
    push_all(count_caption_words());
    push_all({"yes", "no", "none", "unknown"});
    push_all({"is", "there", "what", "color", "size", "where", "how", "many", "the", "and"});
    return out;
}

void WorldConfig::validate() const {
    if (num_images < 2) throw std::runtime_error("world: num_images must be >= 2");
    if (d_img < 1) throw std::runtime_error("world: d_img must be >= 1");
    if (family_size < 1) throw std::runtime_error("world: family_size must be >= 1");
    if (min_objects < 1 || max_objects > 4 || min_objects > max_objects)
        throw std::runtime_error("world: object count range must satisfy 1 <= min <= max <= 4");
}

const SynthImage& World::image(int id) const {
    if (id < 0 || id >= static_cast<int>(images_.size()))
        throw std::runtime_error("world: image id out of range");
    return images_[static_cast<size_t>(id)];
}

std::vector<int> World::family_members(int family) const {
    std::vector<int> out;
    for (const auto& img : images_)
        if (img.family == family) out.push_back(img.id);
    return out;
}

std::vector<double> World::attr_embedding(uint64_t seed, int d_img, const std::string& kind, int value,
                                          int noun) {
    Rng rng(Rng::key({seed, Rng::tag("feat"), Rng::tag(kind), static_cast<uint64_t>(value),
                      static_cast<uint64_t>(noun)}));
    std::vector<double> out(static_cast<size_t>(d_img));
    for (auto& x : out) x = rng.normal() * 0.35;
    return out;
}

std::vector<double> World::compute_feature(uint64_t seed, int d_img, const std::vector<ObjectSpec>& objs) {
    std::vector<double> f(static_cast<size_t>(d_img), 0.0);
    auto acc = [&](const std::string& kind, int value, int noun) {
        const auto e = attr_embedding(seed, d_img, kind, value, noun);
        for (size_t i = 0; i < f.size(); ++i) f[i] += e[i];
    };
    for (const auto& o : objs) {
        acc("noun", o.noun, o.noun);
        acc("color", o.color, o.noun);
        acc("size", o.size, o.noun);
        acc("count", o.count, o.noun);
        acc("pos", o.pos, o.noun);
    }
    return f;
}

namespace {

// A hidden attribute slot in the order the oracle questioner asks about it.
struct HiddenSlot {
    int obj;
    char kind;  // 'p' position, 's' size, 'c' color
    int domain;
};

std::vector<HiddenSlot> hidden_slots(int nobj) {
    std::vector<HiddenSlot> slots;
    for (int i = 0; i < nobj; ++i) slots.push_back({i, 'p', 4});
    for (int i = 0; i < nobj; ++i) slots.push_back({i, 's', 3});
    for (int i = 1; i < nobj; ++i) slots.push_back({i, 'c', 8});
    return slots;
}

std::string visible_key(const std::vector<ObjectSpec>& objs) {
    std::string key;
    for (size_t i = 0; i < objs.size(); ++i) {
        key += std::to_string(objs[i].noun) + "." + std::to_string(objs[i].count) + "|";
        if (i == 0) key += "c" + std::to_string(objs[i].color) + "|";
    }
    return key;
}

}  // namespace

World World::generate(const WorldConfig& cfg) {
    cfg.validate();
    World w;
    w.cfg_ = cfg;
    Rng rng(Rng::key({cfg.seed, Rng::tag("world")}));
    std::set<std::string> profiles;
    const int num_nouns = static_cast<int>(noun_words().size());

    int family = 0;
    while (static_cast<int>(w.images_.size()) < cfg.num_images) {
        // sample a caption-visible profile not seen before
        std::vector<ObjectSpec> base;
        bool fresh = false;
        for (int attempt = 0; attempt < 10000 && !fresh; ++attempt) {
            base.clear();
            const int nobj = cfg.min_objects + rng.uniform_int(cfg.max_objects - cfg.min_objects + 1);
            std::vector<int> nouns(static_cast<size_t>(num_nouns));
            for (int i = 0; i < num_nouns; ++i) nouns[static_cast<size_t>(i)] = i;
            rng.shuffle(nouns);
            for (int i = 0; i < nobj; ++i) {
                ObjectSpec o;
                o.noun = nouns[static_cast<size_t>(i)];
                o.color = rng.uniform_int(8);
                o.size = rng.uniform_int(3);
                o.count = 1 + rng.uniform_int(4);
                o.pos = rng.uniform_int(4);
                base.push_back(o);
            }
            fresh = profiles.insert(visible_key(base)).second;
        }
        if (!fresh)
            throw std::runtime_error("world: cannot find enough distinct caption profiles; "
                                     "reduce num_images or family_size");

        // hidden-attribute variation grid: budget the family size over the
        // slots starting from the LAST-asked one, so early answers prune
        // little and late answers prune hard
        const auto slots = hidden_slots(static_cast<int>(base.size()));
        std::vector<int> counts(slots.size(), 1);
        {
            long prod = 1;
            for (int i = static_cast<int>(slots.size()) - 1; i >= 0; --i) {
                const long want = cfg.family_size / prod;
                counts[static_cast<size_t>(i)] =
                    static_cast<int>(std::max(1L, std::min(static_cast<long>(slots[static_cast<size_t>(i)].domain), want)));
                prod *= counts[static_cast<size_t>(i)];
            }
        }

        long members = 1;
        for (int c : counts) members *= c;
        for (long j = 0; j < members && static_cast<int>(w.images_.size()) < cfg.num_images; ++j) {
            auto objs = base;
            long rem = j;
            for (size_t s = 0; s < slots.size(); ++s) {
                const int digit = static_cast<int>(rem % counts[s]);
                rem /= counts[s];
                auto& o = objs[static_cast<size_t>(slots[s].obj)];
                switch (slots[s].kind) {
                    case 'p': o.pos = (o.pos + digit) % slots[s].domain; break;
                    case 's': o.size = (o.size + digit) % slots[s].domain; break;
                    case 'c': o.color = (o.color + digit) % slots[s].domain; break;
                }
            }
            SynthImage img;
            img.id = static_cast<int>(w.images_.size());
            img.family = family;
            img.objects = std::move(objs);
            img.feature = compute_feature(cfg.seed, cfg.d_img, img.objects);
            w.images_.push_back(std::move(img));
        }
        ++family;
    }
    return w;
}

std::vector<std::string> render_caption(const SynthImage& img) {
    std::vector<std::string> out;
    for (size_t i = 0; i < img.objects.size(); ++i) {
        const auto& o = img.objects[i];
        if (i) out.push_back("and");
        out.push_back(count_caption_words()[static_cast<size_t>(o.count - 1)]);
        if (i == 0) out.push_back(color_words()[static_cast<size_t>(o.color)]);
        out.push_back(o.count == 1 ? noun_words()[static_cast<size_t>(o.noun)]
                                   : noun_plural_words()[static_cast<size_t>(o.noun)]);
    }
    return out;
}

namespace {
int index_of(const std::vector<std::string>& table, const std::string& w, const char* what) {
    for (size_t i = 0; i < table.size(); ++i)
        if (table[i] == w) return static_cast<int>(i);
    throw std::runtime_error(std::string("world: unknown ") + what + " " + w);
}
}  // namespace

void World::save(const std::string& path) const {
    nlohmann::json j;
    j["seed"] = cfg_.seed;
    j["num_images"] = cfg_.num_images;
    j["d_img"] = cfg_.d_img;
    j["family_size"] = cfg_.family_size;
    j["min_objects"] = cfg_.min_objects;
    j["max_objects"] = cfg_.max_objects;
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& img : images_) {
        nlohmann::json ji;
        ji["id"] = img.id;
        ji["family"] = img.family;
        nlohmann::json objs = nlohmann::json::array();
        for (const auto& o : img.objects) {
            objs.push_back({{"noun", noun_words()[static_cast<size_t>(o.noun)]},
                            {"color", color_words()[static_cast<size_t>(o.color)]},
                            {"size", size_words()[static_cast<size_t>(o.size)]},
                            {"count", o.count},
                            {"pos", position_words()[static_cast<size_t>(o.pos)]}});
        }
        ji["objects"] = std::move(objs);
        ji["feature"] = base64_encode_f64(img.feature);
        imgs.push_back(std::move(ji));
    }
    j["images"] = std::move(imgs);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("world: cannot write " + path);
    os << j.dump() << "\n";
    if (!os) throw std::runtime_error("world: write failed " + path);
}

World World::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("world: cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("world: bad JSON in " + path + ": " + e.what());
    }
    World w;
    w.cfg_.seed = j.at("seed").get<uint64_t>();
    w.cfg_.num_images = j.at("num_images").get<int>();
    w.cfg_.d_img = j.at("d_img").get<int>();
    w.cfg_.family_size = j.at("family_size").get<int>();
    w.cfg_.min_objects = j.at("min_objects").get<int>();
    w.cfg_.max_objects = j.at("max_objects").get<int>();
    for (const auto& ji : j.at("images")) {
        SynthImage img;
        img.id = ji.at("id").get<int>();
        img.family = ji.at("family").get<int>();
        for (const auto& jo : ji.at("objects")) {
            ObjectSpec o;
            o.noun = index_of(noun_words(), jo.at("noun").get<std::string>(), "noun");
            o.color = index_of(color_words(), jo.at("color").get<std::string>(), "color");
            o.size = index_of(size_words(), jo.at("size").get<std::string>(), "size");
            o.count = jo.at("count").get<int>();
            o.pos = index_of(position_words(), jo.at("pos").get<std::string>(), "position");
            if (o.count < 1 || o.count > 4) throw std::runtime_error("world: count out of range");
            img.objects.push_back(o);
        }
        img.feature = base64_decode_f64(ji.at("feature").get<std::string>());
        if (static_cast<int>(img.feature.size()) != w.cfg_.d_img)
            throw std::runtime_error("world: feature length mismatch");
        w.images_.push_back(std::move(img));
    }
    if (static_cast<int>(w.images_.size()) != w.cfg_.num_images)
        throw std::runtime_error("world: image count mismatch");
    for (size_t i = 0; i < w.images_.size(); ++i)
        if (w.images_[i].id != static_cast<int>(i)) throw std::runtime_error("world: ids must be 0..n-1");
    return w;
}

}  // namespace dst
