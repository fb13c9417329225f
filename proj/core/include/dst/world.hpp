#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dst {

// Attribute vocabulary tables. Indices into these are what SynthImage stores.
const std::vector<std::string>& noun_words();
const std::vector<std::string>& noun_plural_words();
const std::vector<std::string>& color_words();
const std::vector<std::string>& size_words();
const std::vector<std::string>& position_words();
const std::vector<std::string>& count_answer_words();   // one two three four
const std::vector<std::string>& count_caption_words();  // a two three four

// Every grammar word (attribute tables + question/answer/function words);
// feed to Vocab::build.
std::vector<std::string> grammar_words();

struct ObjectSpec {
    int noun = 0;
    int color = 0;
    int size = 0;
    int count = 1;  // 1..4
    int pos = 0;

    bool operator==(const ObjectSpec&) const = default;
};

struct SynthImage {
    int id = 0;
    int family = 0;
    std::vector<ObjectSpec> objects;
    std::vector<double> feature;
};

struct WorldConfig {
    uint64_t seed = 1;
    int num_images = 4096;
    int d_img = 32;
    int family_size = 40;  // target count of images sharing one caption
    int min_objects = 2;
    int max_objects = 3;

    void validate() const;
};

// Procedural image set. Images come in families sharing the caption-visible
// profile (nouns, counts, first object's color) while caption-hidden
// attributes (positions, sizes, remaining colors) vary on a grid, so pools
// built from a family contain many hard negatives that only questioning can
// separate. Hidden variation is concentrated on the attributes the oracle
// asks about LAST, which makes per-round rank improve gradually instead of
// jumping to 1 after the first answer.
class World {
public:
    static World generate(const WorldConfig& cfg);

    const WorldConfig& config() const { return cfg_; }
    const std::vector<SynthImage>& images() const { return images_; }
    const SynthImage& image(int id) const;
    std::vector<int> family_members(int family) const;

    // Deterministic per-attribute embedding; a feature is the sum over
    // objects and attribute kinds of these. Attributes are keyed by the
    // object's noun so different objects' attributes occupy different
    // subspaces.
    static std::vector<double> attr_embedding(uint64_t seed, int d_img, const std::string& kind, int value,
                                              int noun);
    static std::vector<double> compute_feature(uint64_t seed, int d_img, const std::vector<ObjectSpec>& objs);

    void save(const std::string& path) const;
    static World load(const std::string& path);

private:
    WorldConfig cfg_;
    std::vector<SynthImage> images_;
};

// Caption template: object 0 as "<count> <color> <noun>", later objects as
// "<count> <noun>" (colors withheld), joined by "and". Count 1 renders as
// "a" and a singular noun; counts above 1 use the plural.
std::vector<std::string> render_caption(const SynthImage& img);

}  // namespace dst
