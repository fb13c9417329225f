#pragma once

#include <string>

#include "dst/ffn.hpp"
#include "dst/graph.hpp"
#include "dst/rng.hpp"
#include "dst/state.hpp"

namespace dst {

template <typename Real>
struct StrackParams {
    Ffn<Real> dec;                    // per-row d -> 2 decision logits
    Ffn<Real> add_e, add_v;           // d -> d new-row content
    Ffn<Real> psi_dist, gamma_dist;   // per-row d -> 1 assignment logits
    Ffn<Real> psi, gamma;             // d -> d update content
    double tau = 1.0;
    double dropout = 0.1;

    StrackParams(const std::string& name, int d)
        : dec(name + ".dec", d, d, 2),
          add_e(name + ".add_e", d, d, d),
          add_v(name + ".add_v", d, d, d),
          psi_dist(name + ".psi_dist", d, d, 1),
          gamma_dist(name + ".gamma_dist", d, d, 1),
          psi(name + ".psi", d, d, d),
          gamma(name + ".gamma", d, d, d) {}

    void register_into(ParamRegistry<Real>& reg) {
        dec.register_into(reg);
        add_e.register_into(reg);
        add_v.register_into(reg);
        psi_dist.register_into(reg);
        gamma_dist.register_into(reg);
        psi.register_into(reg);
        gamma.register_into(reg);
    }

    void init(uint64_t seed) {
        dec.init(seed);
        add_e.init(seed);
        add_v.init(seed);
        psi_dist.init(seed);
        gamma_dist.init(seed);
        psi.init(seed);
        gamma.init(seed);
    }
};

template <typename Real>
struct TrackOut {
    StateVars<Real> state;
    GVar<Real> phi;  // 1 x 2; phi[0] is the Add probability/indicator
    bool added = false;
};

// phi = one-hot over {Add, Update} from Gumbel-Softmax over mean-pooled
// per-row decision logits. hard=true applies the straight-through hard
// one-hot (training/eval forward); hard=false keeps the soft distribution
// (finite-difference checks). with_noise=false gives the noise-free argmax
// path used at eval.
template <typename Real>
GVar<Real> decide_action(Graph<Real>& g, GVar<Real> f, const StateVars<Real>& state, StrackParams<Real>& p,
                         Rng& rng, bool hard, bool with_noise) {
    auto rows_feat = g.mul(g.repeat_rows(f, state.k), state.me);
    auto logits = p.dec.apply(g, rows_feat, p.dropout);  // k x 2
    auto pooled = g.mean_rows(logits);                   // 1 x 2
    Mat<Real> noise(1, 2);
    if (with_noise) {
        noise.at(0, 0) = static_cast<Real>(rng.gumbel());
        noise.at(0, 1) = static_cast<Real>(rng.gumbel());
    }
    auto y = g.softmax_rows(g.scale(g.add(pooled, g.constant(std::move(noise))),
                                    static_cast<Real>(1.0 / p.tau)));
    return hard ? g.st_hard_onehot(y) : y;
}

// Appends new rows built from f to both matrices. The new content is scaled
// by phi[0] so the decision stays on the gradient path (exactly 1 in the
// hard forward).
template <typename Real>
StateVars<Real> add_action(Graph<Real>& g, GVar<Real> f, const StateVars<Real>& state, StrackParams<Real>& p,
                           GVar<Real> phi) {
    auto phi0 = g.slice_cols(phi, 0, 1);
    auto e_new = g.mul_scalar_var(p.add_e.apply(g, f, p.dropout), phi0);
    auto v_new = g.mul_scalar_var(p.add_v.apply(g, f, p.dropout), phi0);
    StateVars<Real> out;
    out.me = g.concat_rows(state.me, e_new);
    out.mv = g.concat_rows(state.mv, v_new);
    out.k = state.k + 1;
    return out;
}

// Distributes f's content over existing rows: row i of M_e gains
// psi_i * FFN_psi(f), and M_v analogously with its own gamma networks.
template <typename Real>
StateVars<Real> update_action(Graph<Real>& g, GVar<Real> f, const StateVars<Real>& state,
                              StrackParams<Real>& p, GVar<Real> phi) {
    auto phi1 = g.slice_cols(phi, 1, 2);
    auto rf = g.repeat_rows(f, state.k);
    auto feat_e = g.mul(rf, state.me);
    auto psi = g.transpose(g.softmax_rows(g.transpose(p.psi_dist.apply(g, feat_e, p.dropout))));  // k x 1
    auto delta_e = g.matmul(psi, p.psi.apply(g, f, p.dropout));
    auto feat_v = g.mul(rf, state.mv);
    auto gamma = g.transpose(g.softmax_rows(g.transpose(p.gamma_dist.apply(g, feat_v, p.dropout))));
    auto delta_v = g.matmul(gamma, p.gamma.apply(g, f, p.dropout));
    StateVars<Real> out;
    out.me = g.add(state.me, g.mul_scalar_var(delta_e, phi1));
    out.mv = g.add(state.mv, g.mul_scalar_var(delta_v, phi1));
    out.k = state.k;
    return out;
}

template <typename Real>
TrackOut<Real> track(Graph<Real>& g, GVar<Real> f, const StateVars<Real>& state, StrackParams<Real>& p,
                     Rng& rng, bool hard, bool with_noise) {
    TrackOut<Real> out;
    out.phi = decide_action(g, f, state, p, rng, hard, with_noise);
    const auto& phi_val = g.value(out.phi);
    out.added = phi_val.at(0, 0) > phi_val.at(0, 1);
    out.state = out.added ? add_action(g, f, state, p, out.phi) : update_action(g, f, state, p, out.phi);
    return out;
}

}  // namespace dst
