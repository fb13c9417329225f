#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dst/param.hpp"

namespace dst {

// Binary checkpoint: magic "DSTCKPT1", then u32 LE count, then per tensor
// u32 name_len + UTF-8 name + u32 rows + u32 cols + rows*cols f32 LE values.
// Works for both model parameters and named optimizer moment tensors.

struct NamedTensor {
    std::string name;
    Mat<float> value{0, 0};
};

namespace detail {

inline void put_u32(std::ostream& os, uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x & 0xff), static_cast<unsigned char>((x >> 8) & 0xff),
                          static_cast<unsigned char>((x >> 16) & 0xff),
                          static_cast<unsigned char>((x >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("checkpoint: truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& os, float x) {
    uint32_t u;
    std::memcpy(&u, &x, 4);
    put_u32(os, u);
}

inline float get_f32(std::istream& is) {
    const uint32_t u = get_u32(is);
    float x;
    std::memcpy(&x, &u, 4);
    return x;
}

}  // namespace detail

inline void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
    os.write("DSTCKPT1", 8);
    detail::put_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        detail::put_u32(os, static_cast<uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::put_u32(os, static_cast<uint32_t>(t.value.rows));
        detail::put_u32(os, static_cast<uint32_t>(t.value.cols));
        for (float x : t.value.v) detail::put_f32(os, x);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline std::vector<NamedTensor> load_tensors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, "DSTCKPT1", 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const uint32_t count = detail::get_u32(is);
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = detail::get_u32(is);
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw std::runtime_error("checkpoint: truncated name");
        const uint32_t rows = detail::get_u32(is);
        const uint32_t cols = detail::get_u32(is);
        NamedTensor t;
        t.name = std::move(name);
        t.value = Mat<float>(static_cast<int>(rows), static_cast<int>(cols));
        for (auto& x : t.value.v) x = detail::get_f32(is);
        out.push_back(std::move(t));
    }
    return out;
}

template <typename Real>
void save_checkpoint(const std::string& path, const ParamRegistry<Real>& params) {
    std::vector<NamedTensor> tensors;
    for (const auto* p : params.all()) {
        NamedTensor t;
        t.name = p->name;
        t.value = p->value.template cast<float>();
        tensors.push_back(std::move(t));
    }
    save_tensors(path, tensors);
}

// Loads by name; every registry parameter must be present with its exact shape.
template <typename Real>
void load_checkpoint(const std::string& path, ParamRegistry<Real>& params) {
    auto tensors = load_tensors(path);
    for (auto* p : params.all()) {
        const NamedTensor* found = nullptr;
        for (const auto& t : tensors)
            if (t.name == p->name) {
                found = &t;
                break;
            }
        if (!found) throw std::runtime_error("checkpoint: missing tensor " + p->name + " in " + path);
        if (found->value.rows != p->value.rows || found->value.cols != p->value.cols)
            throw std::runtime_error("checkpoint: shape mismatch for " + p->name + ": file " +
                                     shape_str(found->value.rows, found->value.cols) + ", model " +
                                     shape_str(p->value.rows, p->value.cols));
        p->value = found->value.template cast<Real>();
    }
}

}  // namespace dst
