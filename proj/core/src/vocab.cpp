#include "dst/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dst {

static const char* kSpecials[5] = {"[SOS]", "[EOS]", "[PAD]", "[SEP]", "[CLS]"};

std::vector<std::string> split_ws(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

void Vocab::index() {
    ids_.clear();
    for (size_t i = 0; i < tokens_.size(); ++i) {
        if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second)
            throw std::runtime_error("vocab: duplicate token " + tokens_[i]);
    }
}

Vocab Vocab::build(const std::vector<std::string>& words) {
    Vocab v;
    for (const char* s : kSpecials) v.tokens_.push_back(s);
    for (const auto& w : words) {
        if (w.empty()) throw std::runtime_error("vocab: empty token");
        v.tokens_.push_back(w);
    }
    v.index();
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("vocab: cannot open " + path);
    Vocab v;
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) throw std::runtime_error("vocab: empty line in " + path);
        v.tokens_.push_back(line);
    }
    if (v.tokens_.size() < 5) throw std::runtime_error("vocab: file too short, specials missing: " + path);
    for (int i = 0; i < 5; ++i)
        if (v.tokens_[static_cast<size_t>(i)] != kSpecials[i])
            throw std::runtime_error("vocab: line " + std::to_string(i) + " must be " + kSpecials[i]);
    v.index();
    return v;
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("vocab: cannot write " + path);
    for (const auto& t : tokens_) os << t << "\n";
    if (!os) throw std::runtime_error("vocab: write failed " + path);
}

int Vocab::id(const std::string& tok) const {
    auto it = ids_.find(tok);
    if (it == ids_.end()) throw std::runtime_error("vocab: unknown token " + tok);
    return it->second;
}

int Vocab::id_or(const std::string& tok, int fallback) const {
    auto it = ids_.find(tok);
    return it == ids_.end() ? fallback : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || id >= size()) throw std::runtime_error("vocab: id out of range " + std::to_string(id));
    return tokens_[static_cast<size_t>(id)];
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> out;
    for (const auto& t : split_ws(text)) out.push_back(id(t));
    return out;
}

std::vector<int> Vocab::encode_lossy(const std::string& text, int fallback) const {
    std::vector<int> out;
    for (const auto& t : split_ws(text)) out.push_back(id_or(t, fallback));
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        out += token(ids[i]);
    }
    return out;
}

}  // namespace dst
