#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dst/param.hpp"

namespace dst {

// Central-difference gradient check in double precision. `forward` must
// rebuild the graph from scratch, run backward when asked, and return the
// scalar loss; parameter gradients accumulate into the registry.
//
// Returns the max relative error |analytic - fd| / max(|analytic|, |fd|, 1e-8)
// over every parameter scalar.
inline double gradcheck(ParamRegistry<double>& params, const std::function<double(bool)>& forward,
                        double eps = 1e-5) {
    if (eps < 1e-6 || eps > 1e-3) throw std::invalid_argument("gradcheck: eps out of sane range [1e-6, 1e-3]");

    params.zero_grads();
    const double base = forward(true);
    if (!std::isfinite(base)) throw std::runtime_error("gradcheck: loss is not finite");

    std::vector<std::vector<double>> analytic;
    for (auto* p : params.all()) analytic.push_back(p->grad.v);

    double worst = 0.0;
    const auto& ps = params.all();
    for (size_t k = 0; k < ps.size(); ++k) {
        auto& p = *ps[k];
        for (size_t i = 0; i < p.value.v.size(); ++i) {
            const double saved = p.value.v[i];
            p.value.v[i] = saved + eps;
            const double up = forward(false);
            p.value.v[i] = saved - eps;
            const double dn = forward(false);
            p.value.v[i] = saved;
            const double fd = (up - dn) / (2.0 * eps);
            const double an = analytic[k][i];
            const double denom = std::max({std::abs(an), std::abs(fd), 1e-8});
            worst = std::max(worst, std::abs(an - fd) / denom);
        }
    }
    return worst;
}

}  // namespace dst
