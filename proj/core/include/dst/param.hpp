#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dst/mat.hpp"
#include "dst/rng.hpp"

namespace dst {

// A named trainable matrix with its gradient accumulator.
template <typename Real>
struct Parameter {
    std::string name;
    Mat<Real> value;
    Mat<Real> grad;

    Parameter() = default;
    Parameter(std::string n, int rows, int cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

    void zero_grad() { grad.zero(); }
};

// Flat, ordered view over all parameters of a model. Order is the
// registration order and is stable for a given model configuration;
// checkpoints and optimizer state rely on it.
template <typename Real>
class ParamRegistry {
public:
    void add(Parameter<Real>& p) {
        if (p.name.empty()) throw std::invalid_argument("ParamRegistry: unnamed parameter");
        for (auto* q : items_)
            if (q->name == p.name) throw std::invalid_argument("ParamRegistry: duplicate name " + p.name);
        items_.push_back(&p);
    }

    Parameter<Real>* find(const std::string& name) const {
        for (auto* p : items_)
            if (p->name == name) return p;
        return nullptr;
    }

    const std::vector<Parameter<Real>*>& all() const { return items_; }
    size_t size() const { return items_.size(); }

    void zero_grads() {
        for (auto* p : items_) p->zero_grad();
    }

    size_t num_scalars() const {
        size_t n = 0;
        for (auto* p : items_) n += p->value.size();
        return n;
    }

private:
    std::vector<Parameter<Real>*> items_;
};

// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], keyed by (seed, name) so
// a parameter's initial value does not depend on what else the model contains.
template <typename Real>
void init_uniform(Parameter<Real>& p, uint64_t seed, int fan_in) {
    if (fan_in <= 0) throw std::invalid_argument("init_uniform: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Rng rng(Rng::key({seed, Rng::tag("init"), Rng::tag(p.name)}));
    for (auto& x : p.value.v) x = static_cast<Real>(rng.uniform_range(-bound, bound));
}

template <typename Real>
void init_constant(Parameter<Real>& p, Real c) {
    p.value.fill(c);
}

}  // namespace dst
