#pragma once

#include <string>
#include <vector>

#include "dst/graph.hpp"
#include "dst/param.hpp"
#include "dst/state.hpp"

namespace dst {

template <typename Real>
struct GuesserParams {
    Parameter<Real> w1;  // 3d x d
    Parameter<Real> w2;  // d x d_img

    GuesserParams(const std::string& name, int d, int d_img)
        : w1(name + ".w1", 3 * d, d), w2(name + ".w2", d, d_img) {}

    void register_into(ParamRegistry<Real>& reg) {
        reg.add(w1);
        reg.add(w2);
    }

    void init(uint64_t seed) {
        init_uniform(w1, seed, w1.value.rows);
        init_uniform(w2, seed, w2.value.rows);
    }
};

// Regresses the target image feature as a sum of per-row readouts,
// y = W2 * sum_i gelu(W1 [e_i; v_i; z]). Image features are additive over
// scene attributes, so the readout is additive over tracked facts: each row
// contributes independently through a shared map and new facts shift the
// guess without rescaling the contribution of earlier ones.
template <typename Real>
GVar<Real> predict_image_feature(Graph<Real>& g, const StateVars<Real>& state, GVar<Real> z,
                                 GuesserParams<Real>& p) {
    auto x = g.concat_cols(g.concat_cols(state.me, state.mv), g.repeat_rows(z, state.k));
    return g.matmul(g.sum_rows(g.gelu(g.matmul(x, g.param(p.w1)))), g.param(p.w2));
}

// 1-based rank of the target by ascending Euclidean distance to the guess;
// equal-distance competitors count ahead of the target (pessimistic ties).
inline int rank_pool(const std::vector<double>& y, const std::vector<std::vector<double>>& pool,
                     int target) {
    const int n = static_cast<int>(pool.size());
    if (n < 2) throw std::invalid_argument("rank_pool: pool must have at least 2 candidates");
    if (target < 0 || target >= n) throw std::invalid_argument("rank_pool: target index out of range");
    auto sqdist = [&](const std::vector<double>& f) {
        if (f.size() != y.size()) throw std::invalid_argument("rank_pool: feature dimension mismatch");
        double s = 0;
        for (size_t i = 0; i < y.size(); ++i) {
            const double d = y[i] - f[i];
            s += d * d;
        }
        return s;
    };
    const double dt = sqdist(pool[static_cast<size_t>(target)]);
    int rank = 1;
    for (int j = 0; j < n; ++j) {
        if (j == target) continue;
        if (sqdist(pool[static_cast<size_t>(j)]) <= dt) ++rank;
    }
    return rank;
}

}  // namespace dst
