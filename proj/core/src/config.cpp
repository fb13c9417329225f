#include "dst/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace dst {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch < 1) throw ConfigError("train.batch must be >= 1");
    if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (!(lr_max > 0.0) || !(lr_min > 0.0)) throw ConfigError("learning rates must be positive");
    if (lr_min > lr_max) throw ConfigError("train.lr_min must not exceed train.lr_max");
    if (patience < 1) throw ConfigError("train.patience must be >= 1");
    if (episodes_per_epoch < 0) throw ConfigError("train.episodes_per_epoch must be >= 0");
    if (noise_frac < 0.0 || noise_frac > 1.0)
        throw ConfigError("train.noise_frac must be in [0, 1]");
    if (curriculum_epochs < 0) throw ConfigError("train.curriculum_epochs must be >= 0");
}

void Config::validate() const {
    try {
        model.validate();
        train.validate();
        world.validate();
        data.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (world.d_img != model.d_img)
        throw ConfigError("world.d_img out of sync with model.d_img");
    if (data.pool_size > world.num_images)
        throw ConfigError("data.pool_size cannot exceed world.num_images");
}

Config Config::defaults() { return Config{}; }

namespace {

void reject_unknown(const json& j, const char* scope,
                    std::initializer_list<const char*> known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok)
            throw ConfigError(std::string("unknown config key: ") + scope + "." + it.key());
    }
}

template <typename T>
void pick(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("bad value type for config key: ") + key);
    }
}

}  // namespace

Config Config::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown(j, "<root>", {"seed", "model", "train", "world", "data"});

    Config cfg;
    pick(j, "seed", cfg.seed);

    if (j.contains("model")) {
        const json& m = j.at("model");
        if (!m.is_object()) throw ConfigError("model must be an object");
        reject_unknown(m, "model",
                       {"d", "d_img", "dec_layers", "enc_layers", "heads", "ffn_mult",
                        "max_q_len", "ctx_len", "dropout", "tau", "tau_anneal", "tau_min"});
        pick(m, "d", cfg.model.d);
        pick(m, "d_img", cfg.model.d_img);
        pick(m, "dec_layers", cfg.model.dec_layers);
        pick(m, "enc_layers", cfg.model.enc_layers);
        pick(m, "heads", cfg.model.heads);
        pick(m, "ffn_mult", cfg.model.ffn_mult);
        pick(m, "max_q_len", cfg.model.max_q_len);
        pick(m, "ctx_len", cfg.model.ctx_len);
        pick(m, "dropout", cfg.model.dropout);
        pick(m, "tau", cfg.model.tau);
        pick(m, "tau_anneal", cfg.model.tau_anneal);
        pick(m, "tau_min", cfg.model.tau_min);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        if (!t.is_object()) throw ConfigError("train must be an object");
        reject_unknown(t, "train",
                       {"batch", "epochs", "lr_max", "lr_min", "patience",
                        "episodes_per_epoch", "noise_frac", "shuffle_questions",
                        "curriculum_epochs", "paper_literal_signs"});
        pick(t, "batch", cfg.train.batch);
        pick(t, "epochs", cfg.train.epochs);
        pick(t, "lr_max", cfg.train.lr_max);
        pick(t, "lr_min", cfg.train.lr_min);
        pick(t, "patience", cfg.train.patience);
        pick(t, "episodes_per_epoch", cfg.train.episodes_per_epoch);
        pick(t, "noise_frac", cfg.train.noise_frac);
        pick(t, "shuffle_questions", cfg.train.shuffle_questions);
        pick(t, "curriculum_epochs", cfg.train.curriculum_epochs);
        pick(t, "paper_literal_signs", cfg.train.paper_literal_signs);
    }
    if (j.contains("world")) {
        const json& w = j.at("world");
        if (!w.is_object()) throw ConfigError("world must be an object");
        reject_unknown(w, "world",
                       {"num_images", "family_size", "min_objects", "max_objects"});
        pick(w, "num_images", cfg.world.num_images);
        pick(w, "family_size", cfg.world.family_size);
        pick(w, "min_objects", cfg.world.min_objects);
        pick(w, "max_objects", cfg.world.max_objects);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        if (!d.is_object()) throw ConfigError("data must be an object");
        reject_unknown(d, "data", {"pool_size", "rounds", "train_frac", "val_frac"});
        pick(d, "pool_size", cfg.data.pool_size);
        pick(d, "rounds", cfg.data.rounds);
        pick(d, "train_frac", cfg.data.train_frac);
        pick(d, "val_frac", cfg.data.val_frac);
    }

    cfg.world.seed = cfg.seed;
    cfg.world.d_img = cfg.model.d_img;
    cfg.validate();
    return cfg;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string Config::to_json(bool pretty) const {
    json j;
    j["seed"] = seed;
    j["model"] = {{"d", model.d},
                  {"d_img", model.d_img},
                  {"dec_layers", model.dec_layers},
                  {"enc_layers", model.enc_layers},
                  {"heads", model.heads},
                  {"ffn_mult", model.ffn_mult},
                  {"max_q_len", model.max_q_len},
                  {"ctx_len", model.ctx_len},
                  {"dropout", model.dropout},
                  {"tau", model.tau},
                  {"tau_anneal", model.tau_anneal},
                  {"tau_min", model.tau_min}};
    j["train"] = {{"batch", train.batch},
                  {"epochs", train.epochs},
                  {"lr_max", train.lr_max},
                  {"lr_min", train.lr_min},
                  {"patience", train.patience},
                  {"episodes_per_epoch", train.episodes_per_epoch},
                  {"noise_frac", train.noise_frac},
                  {"shuffle_questions", train.shuffle_questions},
                  {"curriculum_epochs", train.curriculum_epochs},
                  {"paper_literal_signs", train.paper_literal_signs}};
    j["world"] = {{"num_images", world.num_images},
                  {"family_size", world.family_size},
                  {"min_objects", world.min_objects},
                  {"max_objects", world.max_objects}};
    j["data"] = {{"pool_size", data.pool_size},
                 {"rounds", data.rounds},
                 {"train_frac", data.train_frac},
                 {"val_frac", data.val_frac}};
    return pretty ? j.dump(2) + "\n" : j.dump();
}

void apply_env_seed(Config& cfg) {
    const char* env = std::getenv("DST_SEED");
    if (env == nullptr || *env == '\0') return;
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
        throw ConfigError(std::string("DST_SEED is not a valid integer: ") + env);
    cfg.seed = static_cast<uint64_t>(v);
    cfg.world.seed = cfg.seed;
}

}  // namespace dst
