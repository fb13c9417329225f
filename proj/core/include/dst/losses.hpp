#pragma once

#include <vector>

#include "dst/graph.hpp"

namespace dst {

struct LossReport {
    double ce = 0;
    double mse_mean = 0;
    std::vector<double> mse_rounds;
    double pl = 0;
    double total = 0;
};

// Sum of log-probabilities of the gold tokens (1x1, to be combined across
// rounds before averaging by the dialogue's total token count).
template <typename Real>
GVar<Real> gold_logprob_sum(Graph<Real>& g, GVar<Real> logits, const std::vector<int>& gold) {
    if (gold.empty()) throw std::invalid_argument("gold_logprob_sum: empty gold sequence");
    const auto& L = g.value(logits);
    if (L.rows != static_cast<int>(gold.size()))
        throw std::invalid_argument("gold_logprob_sum: logits rows != gold length");
    auto logp = g.log_softmax_rows(logits);
    return g.sum_all(g.gather_col_per_row(logp, gold));
}

// Mean negative log-probability over one sequence.
template <typename Real>
GVar<Real> ce_loss(Graph<Real>& g, GVar<Real> logits, const std::vector<int>& gold) {
    return g.scale(gold_logprob_sum(g, logits, gold), static_cast<Real>(-1.0 / gold.size()));
}

// Squared L2 distance between a predicted row and a constant target row.
template <typename Real>
GVar<Real> sq_l2(Graph<Real>& g, GVar<Real> y, const Mat<Real>& target) {
    const auto& Y = g.value(y);
    if (Y.rows != 1 || !Y.same_shape(target))
        throw std::invalid_argument("sq_l2: prediction/target shape mismatch");
    auto diff = g.sub(y, g.constant(target));
    return g.sum_all(g.mul(diff, diff));
}

// (mse_T - mse_1) / (T-1): the mean of successive per-round differences.
// Negative when the guess moves toward the target over the dialogue.
template <typename Real>
GVar<Real> pl_from_rounds(Graph<Real>& g, const std::vector<GVar<Real>>& mse_rounds) {
    const int T = static_cast<int>(mse_rounds.size());
    if (T < 2) throw std::invalid_argument("pl_loss: need at least 2 rounds");
    return g.scale(g.sub(mse_rounds.back(), mse_rounds.front()), static_cast<Real>(1.0 / (T - 1)));
}

inline double pl_loss(const std::vector<double>& mse_rounds) {
    const int T = static_cast<int>(mse_rounds.size());
    if (T < 2) throw std::invalid_argument("pl_loss: need at least 2 rounds");
    double s = 0;
    for (int t = 1; t < T; ++t) s += mse_rounds[static_cast<size_t>(t)] - mse_rounds[static_cast<size_t>(t - 1)];
    return s / (T - 1);
}

}  // namespace dst
