#include "dst/abot.hpp"

namespace dst {

namespace {

int find_in(const std::vector<std::string>& table, const std::string& w) {
    for (size_t i = 0; i < table.size(); ++i)
        if (table[i] == w) return static_cast<int>(i);
    return -1;
}

const ObjectSpec* object_with_noun(const SynthImage& img, int noun) {
    for (const auto& o : img.objects)
        if (o.noun == noun) return &o;
    return nullptr;
}

}  // namespace

const std::vector<std::string>& answer_words() {
    static const std::vector<std::string> v = [] {
        std::vector<std::string> w = {"yes", "no", "none", "unknown"};
        for (const auto& c : color_words()) w.push_back(c);
        for (const auto& s : size_words()) w.push_back(s);
        for (const auto& p : position_words()) w.push_back(p);
        for (const auto& c : count_answer_words()) w.push_back(c);
        return w;
    }();
    return v;
}

std::string abot_answer(const std::vector<std::string>& q, const SynthImage& img) {
    // is there a <color|size> <noun>
    if (q.size() == 5 && q[0] == "is" && q[1] == "there" && q[2] == "a") {
        const int noun = find_in(noun_words(), q[4]);
        if (noun < 0) return "unknown";
        const int color = find_in(color_words(), q[3]);
        if (color >= 0) {
            for (const auto& o : img.objects)
                if (o.noun == noun && o.color == color) return "yes";
            return "no";
        }
        const int size = find_in(size_words(), q[3]);
        if (size >= 0) {
            for (const auto& o : img.objects)
                if (o.noun == noun && o.size == size) return "yes";
            return "no";
        }
        return "unknown";
    }
    // what color is the <noun> / what size is the <noun>
    if (q.size() == 5 && q[0] == "what" && q[2] == "is" && q[3] == "the") {
        const int noun = find_in(noun_words(), q[4]);
        if (noun < 0) return "unknown";
        const ObjectSpec* o = object_with_noun(img, noun);
        if (q[1] == "color") return o ? color_words()[static_cast<size_t>(o->color)] : "unknown";
        if (q[1] == "size") return o ? size_words()[static_cast<size_t>(o->size)] : "unknown";
        return "unknown";
    }
    // where is the <noun>
    if (q.size() == 4 && q[0] == "where" && q[1] == "is" && q[2] == "the") {
        const int noun = find_in(noun_words(), q[3]);
        if (noun < 0) return "unknown";
        const ObjectSpec* o = object_with_noun(img, noun);
        return o ? position_words()[static_cast<size_t>(o->pos)] : "unknown";
    }
    // how many <plural-noun>
    if (q.size() == 3 && q[0] == "how" && q[1] == "many") {
        const int noun = find_in(noun_plural_words(), q[2]);
        if (noun < 0) return "unknown";
        const ObjectSpec* o = object_with_noun(img, noun);
        return o ? count_answer_words()[static_cast<size_t>(o->count - 1)] : "none";
    }
    return "unknown";
}

}  // namespace dst
