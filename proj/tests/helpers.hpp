#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dst/mat.hpp"
#include "dst/param.hpp"
#include "dst/rng.hpp"

namespace testutil {

inline dst::Mat<double> random_mat(int r, int c, uint64_t key, double scale = 1.0) {
    dst::Rng rng(key);
    dst::Mat<double> m(r, c);
    for (auto& x : m.v) x = rng.normal() * scale;
    return m;
}

inline void randomize(dst::Parameter<double>& p, uint64_t key, double scale = 0.5) {
    dst::Rng rng(key);
    for (auto& x : p.value.v) x = rng.normal() * scale;
}

// Standard normal CDF, the reference for the exact-erf gelu.
inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace testutil
