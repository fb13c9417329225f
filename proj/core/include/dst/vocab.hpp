#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace dst {

// Token inventory shared by the decoder and encoder. IDs are line numbers in
// vocab.txt; the five specials always occupy the first five lines.
class Vocab {
public:
    static constexpr int kSos = 0;
    static constexpr int kEos = 1;
    static constexpr int kPad = 2;
    static constexpr int kSep = 3;
    static constexpr int kCls = 4;

    // Builds from the non-special word list; specials are prepended.
    static Vocab build(const std::vector<std::string>& words);
    static Vocab load(const std::string& path);
    void save(const std::string& path) const;

    int size() const { return static_cast<int>(tokens_.size()); }
    bool contains(const std::string& tok) const { return ids_.count(tok) != 0; }
    int id(const std::string& tok) const;
    int id_or(const std::string& tok, int fallback) const;
    const std::string& token(int id) const;

    // Whitespace tokenization. encode throws on unknown words;
    // encode_lossy maps them to `fallback` instead.
    std::vector<int> encode(const std::string& text) const;
    std::vector<int> encode_lossy(const std::string& text, int fallback) const;
    std::string decode(const std::vector<int>& ids) const;

    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
    void index();
};

std::vector<std::string> split_ws(const std::string& text);

}  // namespace dst
