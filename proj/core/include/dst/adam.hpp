#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dst/param.hpp"

namespace dst {

// Cosine decay from lr_max to lr_min over total_steps, flat at lr_min after.
inline double cosine_lr(double lr_max, double lr_min, long step, long total_steps) {
    if (total_steps <= 0) throw std::invalid_argument("cosine_lr: total_steps must be positive");
    if (step >= total_steps) return lr_min;
    const double t = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(t * M_PI));
}

// Moments are kept in Real so that optimizer state saved to f32 checkpoints
// reloads bit-exactly, making an interrupted-and-resumed run identical to an
// uninterrupted one. Update arithmetic runs in double.
template <typename Real>
class Adam {
public:
    Adam(ParamRegistry<Real>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : params_(params), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto* p : params_.all()) {
            m_.emplace_back(p->value.rows, p->value.cols);
            v_.emplace_back(p->value.rows, p->value.cols);
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const auto& ps = params_.all();
        for (size_t k = 0; k < ps.size(); ++k) {
            auto& p = *ps[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (size_t i = 0; i < p.value.v.size(); ++i) {
                const double g = static_cast<double>(p.grad.v[i]);
                const double mi = beta1_ * static_cast<double>(m.v[i]) + (1.0 - beta1_) * g;
                const double vi = beta2_ * static_cast<double>(v.v[i]) + (1.0 - beta2_) * g * g;
                m.v[i] = static_cast<Real>(mi);
                v.v[i] = static_cast<Real>(vi);
                p.value.v[i] -= static_cast<Real>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps_));
            }
        }
    }

    long step_count() const { return t_; }
    void set_step_count(long t) { t_ = t; }

    // Exposed for checkpoint/resume; order matches the registry.
    std::vector<Mat<Real>>& moments_m() { return m_; }
    std::vector<Mat<Real>>& moments_v() { return v_; }
    const std::vector<Mat<Real>>& moments_m() const { return m_; }
    const std::vector<Mat<Real>>& moments_v() const { return v_; }

private:
    ParamRegistry<Real>& params_;
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Mat<Real>> m_;
    std::vector<Mat<Real>> v_;
};

}  // namespace dst
