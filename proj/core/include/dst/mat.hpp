#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dst {

// Dense row-major matrix. Vectors are 1xN or Nx1 matrices; scalars are 1x1.
template <typename Real>
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<Real> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, Real(0)) {
        if (r < 0 || c < 0) throw std::invalid_argument("Mat: negative shape");
    }
    Mat(int r, int c, std::vector<Real> data) : rows(r), cols(c), v(std::move(data)) {
        if (v.size() != static_cast<size_t>(r) * c) throw std::invalid_argument("Mat: data size mismatch");
    }

    Real& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    Real at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(Real x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(Real(0)); }

    bool all_finite() const {
        for (Real x : v)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    bool operator==(const Mat& o) const { return rows == o.rows && cols == o.cols && v == o.v; }

    template <typename Other>
    Mat<Other> cast() const {
        Mat<Other> out(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<Other>(v[i]);
        return out;
    }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = Real(1);
        return m;
    }
};

inline std::string shape_str(int r, int c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

template <typename Real>
double max_abs_diff(const Mat<Real>& a, const Mat<Real>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.v[i]) - static_cast<double>(b.v[i])));
    return m;
}

}  // namespace dst
