#pragma once

#include <string>

#include "dst/graph.hpp"
#include "dst/param.hpp"
#include "dst/rsre.hpp"

namespace dst {

template <typename Real>
struct VrdsParams {
    RsreParams<Real> hop_ee;  // words self hop
    RsreParams<Real> hop_ev;  // words -> images hop
    RsreParams<Real> hop_ve;  // images -> words hop
    Parameter<Real> w_v;      // 2d x d
    double dropout = 0.1;

    VrdsParams(const std::string& name, int d)
        : hop_ee(name + ".hop_ee", d),
          hop_ev(name + ".hop_ev", d),
          hop_ve(name + ".hop_ve", d),
          w_v(name + ".w_v", 2 * d, d) {}

    void register_into(ParamRegistry<Real>& reg) {
        hop_ee.register_into(reg);
        hop_ev.register_into(reg);
        hop_ve.register_into(reg);
        reg.add(w_v);
    }

    void init(uint64_t seed) {
        hop_ee.init(seed);
        hop_ev.init(seed);
        hop_ve.init(seed);
        init_uniform(w_v, seed, w_v.value.rows);
    }
};

// Three-hop reasoning over the state: words self-attend, the refined words
// guide the images hop, the refined images guide a final words hop. Column
// sums of the two refined matrices are fused into the context vector z (1 x d).
// The state matrices are read, never written.
template <typename Real>
GVar<Real> vrds(Graph<Real>& g, GVar<Real> me, GVar<Real> mv, VrdsParams<Real>& p) {
    auto me_hat = rsre(g, me, me, p.hop_ee).out;
    auto mv_hat = rsre(g, me_hat, mv, p.hop_ev).out;
    auto a_v = g.sum_rows(mv_hat);
    auto me_tilde = rsre(g, mv_hat, me_hat, p.hop_ve).out;
    auto a_e = g.sum_rows(me_tilde);
    auto z = g.matmul(g.concat_cols(a_v, a_e), g.param(p.w_v));
    return g.dropout(z, p.dropout);
}

// Ablated form: no reasoning hops, z comes from mean-pooled raw state through
// the same fusion projection.
template <typename Real>
GVar<Real> vrds_ablated(Graph<Real>& g, GVar<Real> me, GVar<Real> mv, VrdsParams<Real>& p) {
    auto z = g.matmul(g.concat_cols(g.mean_rows(mv), g.mean_rows(me)), g.param(p.w_v));
    return g.dropout(z, p.dropout);
}

}  // namespace dst
