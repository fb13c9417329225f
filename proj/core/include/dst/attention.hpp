#pragma once

#include <cmath>
#include <string>

#include "dst/graph.hpp"
#include "dst/param.hpp"

namespace dst {

template <typename Real>
struct LnParams {
    Parameter<Real> g, b;
    LnParams(const std::string& name, int d) : g(name + ".g", 1, d), b(name + ".b", 1, d) {}
    void register_into(ParamRegistry<Real>& reg) {
        reg.add(g);
        reg.add(b);
    }
    void init() {
        init_constant(g, Real(1));
        init_constant(b, Real(0));
    }
    GVar<Real> apply(Graph<Real>& gr, GVar<Real> x) { return gr.layer_norm(x, gr.param(g), gr.param(b)); }
};

template <typename Real>
struct MhaParams {
    Parameter<Real> wq, wk, wv, wo;  // d x d each
    MhaParams(const std::string& name, int d)
        : wq(name + ".wq", d, d), wk(name + ".wk", d, d), wv(name + ".wv", d, d), wo(name + ".wo", d, d) {}
    void register_into(ParamRegistry<Real>& reg) {
        reg.add(wq);
        reg.add(wk);
        reg.add(wv);
        reg.add(wo);
    }
    void init(uint64_t seed) {
        const int d = wq.value.rows;
        init_uniform(wq, seed, d);
        init_uniform(wk, seed, d);
        init_uniform(wv, seed, d);
        init_uniform(wo, seed, d);
    }
};

// Scaled dot-product multi-head attention. xq is n x d, xkv is m x d; the
// optional additive mask (n x m, 0 or -inf) is shared across heads and
// disables key positions (causal or padding).
template <typename Real>
GVar<Real> mha(Graph<Real>& g, GVar<Real> xq, GVar<Real> xkv, MhaParams<Real>& p, int heads,
               const Mat<Real>* mask, double dropout) {
    const int d = p.wq.value.rows;
    if (heads < 1 || d % heads != 0) throw std::invalid_argument("mha: heads must divide d");
    const int dh = d / heads;
    auto Q = g.matmul(xq, g.param(p.wq));
    auto K = g.matmul(xkv, g.param(p.wk));
    auto V = g.matmul(xkv, g.param(p.wv));
    const Real inv_sqrt = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(dh)));
    GVar<Real> out{};
    for (int h = 0; h < heads; ++h) {
        auto Qh = g.slice_cols(Q, h * dh, (h + 1) * dh);
        auto Kh = g.slice_cols(K, h * dh, (h + 1) * dh);
        auto Vh = g.slice_cols(V, h * dh, (h + 1) * dh);
        auto scores = g.scale(g.matmul(Qh, g.transpose(Kh)), inv_sqrt);
        auto attn = mask ? g.softmax_rows_masked(scores, *mask) : g.softmax_rows(scores);
        auto oh = g.matmul(attn, Vh);
        out = (h == 0) ? oh : g.concat_cols(out, oh);
    }
    return g.dropout(g.matmul(out, g.param(p.wo)), dropout);
}

// Position-wise feed-forward used inside transformer blocks (pre-LN outside).
template <typename Real>
struct BlockFfnParams {
    Parameter<Real> w1, w2;
    BlockFfnParams(const std::string& name, int d, int hidden)
        : w1(name + ".w1", d, hidden), w2(name + ".w2", hidden, d) {}
    void register_into(ParamRegistry<Real>& reg) {
        reg.add(w1);
        reg.add(w2);
    }
    void init(uint64_t seed) {
        init_uniform(w1, seed, w1.value.rows);
        init_uniform(w2, seed, w2.value.rows);
    }
    GVar<Real> apply(Graph<Real>& g, GVar<Real> x, double dropout) {
        auto h = g.dropout(g.gelu(g.matmul(x, g.param(w1))), dropout);
        return g.matmul(h, g.param(w2));
    }
};

// 0 where allowed, -inf where query i may not see key j (j > i).
template <typename Real>
Mat<Real> causal_mask(int n) {
    Mat<Real> m(n, n);
    const Real ninf = -std::numeric_limits<Real>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) m.at(i, j) = ninf;
    return m;
}

// n x m mask hiding the key positions marked true in `hidden`.
template <typename Real>
Mat<Real> key_padding_mask(int n, const std::vector<bool>& hidden) {
    Mat<Real> m(n, static_cast<int>(hidden.size()));
    const Real ninf = -std::numeric_limits<Real>::infinity();
    for (int i = 0; i < n; ++i)
        for (size_t j = 0; j < hidden.size(); ++j)
            if (hidden[j]) m.at(i, static_cast<int>(j)) = ninf;
    return m;
}

}  // namespace dst
