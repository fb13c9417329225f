#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "dst/graph.hpp"
#include "dst/mat.hpp"

namespace dst {

// Paired words/images state snapshot at the episode boundary. During an
// episode the live state is a pair of graph vars (StateVars) so gradients
// flow across rounds; this plain form is for init, serialization,
// transcripts, and tests.
struct DialogueState {
    Mat<double> me{0, 0};
    Mat<double> mv{0, 0};
    int t = 0;  // rounds tracked so far

    int k() const { return me.rows; }
    int d() const { return me.cols; }

    void validate() const {
        if (me.rows != mv.rows || me.cols != mv.cols)
            throw std::runtime_error("DialogueState: words/images shape mismatch");
        if (me.rows < 1) throw std::runtime_error("DialogueState: k must be >= 1");
    }
};

// Live state inside an episode graph.
template <typename Real>
struct StateVars {
    GVar<Real> me;
    GVar<Real> mv;
    int k = 0;
};

namespace detail {
inline void put_u32v(std::vector<uint8_t>& out, uint32_t x) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<uint8_t>((x >> (8 * b)) & 0xff));
}
inline uint32_t get_u32v(const std::vector<uint8_t>& in, size_t& pos) {
    if (pos + 4 > in.size()) throw std::runtime_error("state: truncated");
    uint32_t x = 0;
    for (int b = 0; b < 4; ++b) x |= static_cast<uint32_t>(in[pos + b]) << (8 * b);
    pos += 4;
    return x;
}
inline void put_f64v(std::vector<uint8_t>& out, double x) {
    uint64_t u;
    std::memcpy(&u, &x, 8);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<uint8_t>((u >> (8 * b)) & 0xff));
}
inline double get_f64v(const std::vector<uint8_t>& in, size_t& pos) {
    if (pos + 8 > in.size()) throw std::runtime_error("state: truncated");
    uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= static_cast<uint64_t>(in[pos + b]) << (8 * b);
    pos += 8;
    double x;
    std::memcpy(&x, &u, 8);
    return x;
}
}  // namespace detail

inline std::vector<uint8_t> serialize_state(const DialogueState& s) {
    s.validate();
    std::vector<uint8_t> out;
    const char* magic = "DSTSTAT1";
    out.insert(out.end(), magic, magic + 8);
    detail::put_u32v(out, static_cast<uint32_t>(s.k()));
    detail::put_u32v(out, static_cast<uint32_t>(s.d()));
    detail::put_u32v(out, static_cast<uint32_t>(s.t));
    for (double x : s.me.v) detail::put_f64v(out, x);
    for (double x : s.mv.v) detail::put_f64v(out, x);
    return out;
}

inline DialogueState deserialize_state(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), "DSTSTAT1", 8) != 0)
        throw std::runtime_error("state: bad magic");
    size_t pos = 8;
    const uint32_t k = detail::get_u32v(bytes, pos);
    const uint32_t d = detail::get_u32v(bytes, pos);
    const uint32_t t = detail::get_u32v(bytes, pos);
    if (k < 1 || d < 1) throw std::runtime_error("state: bad dimensions");
    DialogueState s;
    s.me = Mat<double>(static_cast<int>(k), static_cast<int>(d));
    s.mv = Mat<double>(static_cast<int>(k), static_cast<int>(d));
    s.t = static_cast<int>(t);
    for (auto& x : s.me.v) x = detail::get_f64v(bytes, pos);
    for (auto& x : s.mv.v) x = detail::get_f64v(bytes, pos);
    if (pos != bytes.size()) throw std::runtime_error("state: trailing bytes");
    return s;
}

}  // namespace dst
