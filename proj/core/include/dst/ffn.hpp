#pragma once

#include <string>

#include "dst/graph.hpp"
#include "dst/param.hpp"

namespace dst {

// Two-layer feed-forward block: LayerNorm -> linear -> GELU -> dropout -> linear.
// Used for the state tracker's decision/content networks. No biases.
template <typename Real>
struct Ffn {
    Parameter<Real> ln_g, ln_b, w1, w2;

    Ffn(const std::string& name, int d_in, int d_hidden, int d_out)
        : ln_g(name + ".ln_g", 1, d_in),
          ln_b(name + ".ln_b", 1, d_in),
          w1(name + ".w1", d_in, d_hidden),
          w2(name + ".w2", d_hidden, d_out) {}

    void register_into(ParamRegistry<Real>& reg) {
        reg.add(ln_g);
        reg.add(ln_b);
        reg.add(w1);
        reg.add(w2);
    }

    void init(uint64_t seed) {
        init_constant(ln_g, Real(1));
        init_constant(ln_b, Real(0));
        init_uniform(w1, seed, w1.value.rows);
        init_uniform(w2, seed, w2.value.rows);
    }

    // Applies rowwise to an n x d_in input.
    GVar<Real> apply(Graph<Real>& g, GVar<Real> x, double dropout_rate) {
        auto h = g.layer_norm(x, g.param(ln_g), g.param(ln_b));
        h = g.gelu(g.matmul(h, g.param(w1)));
        h = g.dropout(h, dropout_rate);
        return g.matmul(h, g.param(w2));
    }
};

}  // namespace dst
