#pragma once

#include <string>

#include "dst/graph.hpp"
#include "dst/param.hpp"

namespace dst {

template <typename Real>
struct RsreParams {
    Parameter<Real> w_alpha;  // d x 1
    Parameter<Real> w_beta;   // 3d x 1

    RsreParams(const std::string& name, int d)
        : w_alpha(name + ".w_alpha", d, 1), w_beta(name + ".w_beta", 3 * d, 1) {}

    void register_into(ParamRegistry<Real>& reg) {
        reg.add(w_alpha);
        reg.add(w_beta);
    }

    void init(uint64_t seed) {
        init_uniform(w_alpha, seed, w_alpha.value.rows);
        init_uniform(w_beta, seed, w_beta.value.rows);
    }
};

template <typename Real>
struct RsreOut {
    GVar<Real> out;    // k x d, rows of V rescaled by beta
    GVar<Real> alpha;  // 1 x k attention over the query rows
    GVar<Real> beta;   // 1 x k attention over the value rows
    GVar<Real> q;      // 1 x d summary of Q
};

// V' = R-SRE(Q, V): self-attention over Q gives a summary q, then a second
// attention over [q repeated; q*V; V] rescales each row of V. Row i of the
// output is beta_i times row i of V, so the shape stays k x d and k=1 is the
// exact identity.
template <typename Real>
RsreOut<Real> rsre(Graph<Real>& g, GVar<Real> Q, GVar<Real> V, RsreParams<Real>& p) {
    const auto& Qm = g.value(Q);
    const auto& Vm = g.value(V);
    if (Qm.rows != Vm.rows || Qm.cols != Vm.cols)
        throw std::invalid_argument("rsre: Q and V must share shape, got " + shape_str(Qm.rows, Qm.cols) +
                                    " vs " + shape_str(Vm.rows, Vm.cols));
    if (Qm.rows < 1) throw std::invalid_argument("rsre: k must be >= 1");
    const int k = Qm.rows;
    const int d = Qm.cols;
    if (p.w_alpha.value.rows != d) throw std::invalid_argument("rsre: w_alpha does not match d");

    RsreOut<Real> r;
    // attention over the k rows: scores live in a 1 x k row so softmax_rows
    // normalizes across rows of Q
    r.alpha = g.softmax_rows(g.transpose(g.matmul(Q, g.param(p.w_alpha))));
    r.q = g.matmul(r.alpha, Q);
    auto rq = g.repeat_rows(r.q, k);
    auto cat = g.concat_cols(g.concat_cols(rq, g.mul(rq, V)), V);
    r.beta = g.softmax_rows(g.transpose(g.matmul(cat, g.param(p.w_beta))));
    // broadcast the k betas across columns and rescale V rowwise
    Mat<Real> ones(1, d);
    ones.fill(Real(1));
    auto bcast = g.matmul(g.transpose(r.beta), g.constant(std::move(ones)));
    r.out = g.mul(V, bcast);
    return r;
}

}  // namespace dst
