#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dst/mat.hpp"
#include "dst/param.hpp"
#include "dst/rng.hpp"

namespace dst {

// Tape-based reverse-mode autodiff over dense matrices. Ops execute eagerly
// and record themselves on the tape; backward() replays the tape in exact
// reverse order. One graph per episode; graphs are not thread-safe, but
// independent graphs may live on separate threads.
template <typename Real>
class Graph {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    explicit Graph(bool train_mode = false, uint64_t rng_key = 0)
        : train_(train_mode), rng_(rng_key) {}

    bool train_mode() const { return train_; }

    // ---- leaves ----

    Var input(Mat<Real> m, bool requires_grad = false) {
        Node n;
        n.op = Op::Input;
        n.val = std::move(m);
        n.rg = requires_grad;
        return push(std::move(n));
    }

    Var constant(Mat<Real> m) { return input(std::move(m), false); }

    // Same forward value, no gradient path (a fresh non-grad leaf).
    Var detach(Var a) {
        Mat<Real> copy = val(a);
        return input(std::move(copy), false);
    }

    Var scalar(Real x) {
        Mat<Real> m(1, 1);
        m.v[0] = x;
        return input(std::move(m), false);
    }

    Var param(Parameter<Real>& p) {
        Node n;
        n.op = Op::Param;
        n.val = p.value;
        n.rg = true;
        n.param = &p;
        return push(std::move(n));
    }

    // ---- ops ----

    Var matmul(Var a, Var b) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& B = val(b);
        if (A.cols != B.rows)
            throw std::invalid_argument("matmul: inner dimensions disagree, " + shape_str(A.rows, A.cols) +
                                        " * " + shape_str(B.rows, B.cols));
        Node n = unary(Op::MatMul, a);
        n.b = b.id;
        n.rg = rg(a) || rg(b);
        n.val = Mat<Real>(A.rows, B.cols);
        mm_nn(A, B, n.val);
        return push(std::move(n));
    }

    Var transpose(Var a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Transpose, a);
        n.val = Mat<Real>(A.cols, A.rows);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) n.val.at(j, i) = A.at(i, j);
        return push(std::move(n));
    }

    Var add(Var a, Var b) { return binary_elemwise(Op::Add, a, b); }
    Var sub(Var a, Var b) { return binary_elemwise(Op::Sub, a, b); }
    Var mul(Var a, Var b) { return binary_elemwise(Op::Mul, a, b); }

    Var scale(Var a, Real c) {
        Node n = unary(Op::Scale, a);
        n.x = c;
        n.val = val(a);
        for (auto& t : n.val.v) t *= c;
        return push(std::move(n));
    }

    // a * s where s is a 1x1 var.
    Var mul_scalar_var(Var a, Var s) {
        const Mat<Real>& S = val(s);
        if (S.rows != 1 || S.cols != 1) throw std::invalid_argument("mul_scalar_var: scalar must be 1x1");
        Node n = unary(Op::MulScalarVar, a);
        n.b = s.id;
        n.rg = rg(a) || rg(s);
        n.val = val(a);
        const Real c = S.v[0];
        for (auto& t : n.val.v) t *= c;
        return push(std::move(n));
    }

    // a (n x m) + row (1 x m) broadcast over rows.
    Var add_row(Var a, Var r) { return rowwise(Op::AddRow, a, r); }
    Var mul_row(Var a, Var r) { return rowwise(Op::MulRow, a, r); }

    // Numerically-stabilized softmax per row. An optional additive mask with
    // -inf entries disables positions (causal or padding masks).
    Var softmax_rows(Var a) { return softmax_impl(a, nullptr); }
    Var softmax_rows_masked(Var a, const Mat<Real>& mask) { return softmax_impl(a, &mask); }

    Var log_softmax_rows(Var a) {
        const Mat<Real>& A = val(a);
        check_finite(A, "log_softmax_rows");
        Node n = unary(Op::LogSoftmaxRows, a);
        n.val = Mat<Real>(A.rows, A.cols);
        n.aux = Mat<Real>(A.rows, A.cols);  // softmax, for backward
        for (int i = 0; i < A.rows; ++i) {
            Real mx = A.at(i, 0);
            for (int j = 1; j < A.cols; ++j) mx = std::max(mx, A.at(i, j));
            Real sum = 0;
            for (int j = 0; j < A.cols; ++j) sum += std::exp(A.at(i, j) - mx);
            const Real lse = mx + std::log(sum);
            for (int j = 0; j < A.cols; ++j) {
                n.val.at(i, j) = A.at(i, j) - lse;
                n.aux.at(i, j) = std::exp(n.val.at(i, j));
            }
        }
        return push(std::move(n));
    }

    Var concat_cols(Var a, Var b) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& B = val(b);
        if (A.rows != B.rows)
            throw std::invalid_argument("concat_cols: row mismatch " + shape_str(A.rows, A.cols) + " vs " +
                                        shape_str(B.rows, B.cols));
        Node n = unary(Op::ConcatCols, a);
        n.b = b.id;
        n.rg = rg(a) || rg(b);
        n.val = Mat<Real>(A.rows, A.cols + B.cols);
        for (int i = 0; i < A.rows; ++i) {
            for (int j = 0; j < A.cols; ++j) n.val.at(i, j) = A.at(i, j);
            for (int j = 0; j < B.cols; ++j) n.val.at(i, A.cols + j) = B.at(i, j);
        }
        return push(std::move(n));
    }

    Var concat_rows(Var a, Var b) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& B = val(b);
        if (A.cols != B.cols)
            throw std::invalid_argument("concat_rows: col mismatch " + shape_str(A.rows, A.cols) + " vs " +
                                        shape_str(B.rows, B.cols));
        Node n = unary(Op::ConcatRows, a);
        n.b = b.id;
        n.rg = rg(a) || rg(b);
        n.val = Mat<Real>(A.rows + B.rows, A.cols);
        std::copy(A.v.begin(), A.v.end(), n.val.v.begin());
        std::copy(B.v.begin(), B.v.end(), n.val.v.begin() + A.v.size());
        return push(std::move(n));
    }

    // r^(k): repeat a 1xd row k times.
    Var repeat_rows(Var a, int k) {
        const Mat<Real>& A = val(a);
        if (A.rows != 1) throw std::invalid_argument("repeat_rows: input must be 1xd");
        if (k < 1) throw std::invalid_argument("repeat_rows: k must be >= 1");
        Node n = unary(Op::RepeatRows, a);
        n.val = Mat<Real>(k, A.cols);
        for (int i = 0; i < k; ++i)
            std::copy(A.v.begin(), A.v.end(), n.val.v.begin() + static_cast<size_t>(i) * A.cols);
        return push(std::move(n));
    }

    // Sum over the row index (k-dimension): n x m -> 1 x m.
    Var sum_rows(Var a) { return reduce_rows(Op::SumRows, a); }
    Var mean_rows(Var a) { return reduce_rows(Op::MeanRows, a); }

    Var sum_all(Var a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::SumAll, a);
        n.val = Mat<Real>(1, 1);
        Real s = 0;
        for (Real x : A.v) s += x;
        n.val.v[0] = s;
        return push(std::move(n));
    }

    Var gelu(Var a) {
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Gelu, a);
        n.val = Mat<Real>(A.rows, A.cols);
        for (size_t i = 0; i < A.v.size(); ++i) {
            const double x = static_cast<double>(A.v[i]);
            n.val.v[i] = static_cast<Real>(x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2)));
        }
        return push(std::move(n));
    }

    // Inverted-scaling dropout; identity when not in train mode or rate == 0.
    Var dropout(Var a, double rate) {
        if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
        if (!train_ || rate == 0.0) return a;
        const Mat<Real>& A = val(a);
        Node n = unary(Op::Dropout, a);
        n.val = Mat<Real>(A.rows, A.cols);
        n.aux = Mat<Real>(A.rows, A.cols);
        const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
        for (size_t i = 0; i < A.v.size(); ++i) {
            const Real m = rng_.uniform() < rate ? Real(0) : keep_scale;
            n.aux.v[i] = m;
            n.val.v[i] = A.v[i] * m;
        }
        return push(std::move(n));
    }

    // Per-row layer normalization with learnable gain/bias rows.
    Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& G = val(gain);
        const Mat<Real>& B = val(bias);
        if (G.rows != 1 || G.cols != A.cols || B.rows != 1 || B.cols != A.cols)
            throw std::invalid_argument("layer_norm: gain/bias must be 1x" + std::to_string(A.cols));
        Node n = unary(Op::LayerNorm, a);
        n.b = gain.id;
        n.c = bias.id;
        n.rg = rg(a) || rg(gain) || rg(bias);
        n.x = static_cast<Real>(eps);
        n.val = Mat<Real>(A.rows, A.cols);
        n.aux = Mat<Real>(A.rows, A.cols);  // normalized x
        n.aux2 = Mat<Real>(A.rows, 1);      // 1/std per row
        for (int i = 0; i < A.rows; ++i) {
            double mu = 0;
            for (int j = 0; j < A.cols; ++j) mu += A.at(i, j);
            mu /= A.cols;
            double var = 0;
            for (int j = 0; j < A.cols; ++j) {
                const double d = A.at(i, j) - mu;
                var += d * d;
            }
            var /= A.cols;
            const double inv = 1.0 / std::sqrt(var + eps);
            n.aux2.at(i, 0) = static_cast<Real>(inv);
            for (int j = 0; j < A.cols; ++j) {
                const Real xh = static_cast<Real>((A.at(i, j) - mu) * inv);
                n.aux.at(i, j) = xh;
                n.val.at(i, j) = xh * G.at(0, j) + B.at(0, j);
            }
        }
        return push(std::move(n));
    }

    Var slice_rows(Var a, int r0, int r1) {
        const Mat<Real>& A = val(a);
        if (r0 < 0 || r1 > A.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
        Node n = unary(Op::SliceRows, a);
        n.i0 = r0;
        n.i1 = r1;
        n.val = Mat<Real>(r1 - r0, A.cols);
        std::copy(A.v.begin() + static_cast<size_t>(r0) * A.cols, A.v.begin() + static_cast<size_t>(r1) * A.cols,
                  n.val.v.begin());
        return push(std::move(n));
    }

    Var slice_cols(Var a, int c0, int c1) {
        const Mat<Real>& A = val(a);
        if (c0 < 0 || c1 > A.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
        Node n = unary(Op::SliceCols, a);
        n.i0 = c0;
        n.i1 = c1;
        n.val = Mat<Real>(A.rows, c1 - c0);
        for (int i = 0; i < A.rows; ++i)
            for (int j = c0; j < c1; ++j) n.val.at(i, j - c0) = A.at(i, j);
        return push(std::move(n));
    }

    // Embedding lookup: rows of `table` selected by ids.
    Var embed_rows(Var table, std::vector<int> ids) {
        const Mat<Real>& T = val(table);
        if (ids.empty()) throw std::invalid_argument("embed_rows: empty id list");
        for (int id : ids)
            if (id < 0 || id >= T.rows) throw std::invalid_argument("embed_rows: id out of range");
        Node n = unary(Op::EmbedRows, table);
        n.ids = std::move(ids);
        n.val = Mat<Real>(static_cast<int>(n.ids.size()), T.cols);
        for (size_t i = 0; i < n.ids.size(); ++i)
            std::copy(T.v.begin() + static_cast<size_t>(n.ids[i]) * T.cols,
                      T.v.begin() + static_cast<size_t>(n.ids[i] + 1) * T.cols,
                      n.val.v.begin() + i * T.cols);
        return push(std::move(n));
    }

    // Per row i, pick column ids[i]: n x m -> n x 1.
    Var gather_col_per_row(Var a, std::vector<int> ids) {
        const Mat<Real>& A = val(a);
        if (static_cast<int>(ids.size()) != A.rows)
            throw std::invalid_argument("gather_col_per_row: need one column id per row");
        for (int id : ids)
            if (id < 0 || id >= A.cols) throw std::invalid_argument("gather_col_per_row: id out of range");
        Node n = unary(Op::GatherColPerRow, a);
        n.ids = std::move(ids);
        n.val = Mat<Real>(A.rows, 1);
        for (int i = 0; i < A.rows; ++i) n.val.at(i, 0) = A.at(i, n.ids[static_cast<size_t>(i)]);
        return push(std::move(n));
    }

    // Straight-through hard one-hot: forward is onehot(argmax), backward is
    // the identity, so gradients flow as if the soft input had been used.
    Var st_hard_onehot(Var a) {
        const Mat<Real>& A = val(a);
        if (A.rows != 1) throw std::invalid_argument("st_hard_onehot: input must be 1xn");
        Node n = unary(Op::StHard, a);
        n.val = Mat<Real>(1, A.cols);
        int best = 0;
        for (int j = 1; j < A.cols; ++j)
            if (A.at(0, j) > A.at(0, best)) best = j;
        n.val.at(0, best) = Real(1);
        return push(std::move(n));
    }

    // ---- access ----

    const Mat<Real>& value(Var v) const { return val(v); }
    Real scalar_value(Var v) const {
        const Mat<Real>& m = val(v);
        if (m.rows != 1 || m.cols != 1) throw std::invalid_argument("scalar_value: not 1x1");
        return m.v[0];
    }
    const Mat<Real>& gradient(Var v) const {
        if (!backward_done_) throw std::logic_error("gradient: backward has not run");
        return nodes_[check(v)].grad;
    }
    bool requires_grad(Var v) const { return rg(v); }
    size_t num_nodes() const { return nodes_.size(); }

    // ---- backward ----

    void backward(Var root) {
        if (backward_done_)
            throw std::logic_error("backward: tape already consumed; re-run the forward pass first");
        const Mat<Real>& R = val(root);
        if (R.rows != 1 || R.cols != 1) throw std::invalid_argument("backward: root must be a 1x1 scalar");
        if (!nodes_[root.id].rg) throw std::invalid_argument("backward: root does not require grad");
        backward_done_ = true;
        for (auto& n : nodes_)
            if (n.rg) {
                n.grad = Mat<Real>(n.val.rows, n.val.cols);
            }
        nodes_[root.id].grad.v[0] = Real(1);
        for (int id = root.id; id >= 0; --id) {
            Node& n = nodes_[static_cast<size_t>(id)];
            if (!n.rg) continue;
            step_backward(n);
        }
        for (auto& n : nodes_)
            if (n.op == Op::Param && n.rg) {
                for (size_t i = 0; i < n.grad.v.size(); ++i) n.param->grad.v[i] += n.grad.v[i];
            }
    }

private:
    enum class Op : uint8_t {
        Input,
        Param,
        MatMul,
        Transpose,
        Add,
        Sub,
        Mul,
        Scale,
        MulScalarVar,
        AddRow,
        MulRow,
        SoftmaxRows,
        LogSoftmaxRows,
        ConcatCols,
        ConcatRows,
        RepeatRows,
        SumRows,
        MeanRows,
        SumAll,
        Gelu,
        Dropout,
        LayerNorm,
        SliceRows,
        SliceCols,
        EmbedRows,
        GatherColPerRow,
        StHard,
    };

    struct Node {
        Op op = Op::Input;
        int a = -1, b = -1, c = -1;
        int i0 = 0, i1 = 0;
        Real x = Real(0);
        bool rg = false;
        Mat<Real> val;
        Mat<Real> grad;
        Mat<Real> aux;
        Mat<Real> aux2;
        std::vector<int> ids;
        Parameter<Real>* param = nullptr;
    };

    bool train_;
    Rng rng_;
    bool backward_done_ = false;
    std::vector<Node> nodes_;

    int check(Var v) const {
        if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("Graph: invalid var handle");
        return v.id;
    }
    const Mat<Real>& val(Var v) const { return nodes_[check(v)].val; }
    bool rg(Var v) const { return nodes_[check(v)].rg; }

    Var push(Node&& n) {
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }

    Node unary(Op op, Var a) {
        Node n;
        n.op = op;
        n.a = check(a);
        n.rg = nodes_[n.a].rg;
        return n;
    }

    static void check_finite(const Mat<Real>& m, const char* op) {
        if (!m.all_finite()) throw std::invalid_argument(std::string(op) + ": non-finite input");
    }

    Var binary_elemwise(Op op, Var a, Var b) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& B = val(b);
        if (!A.same_shape(B))
            throw std::invalid_argument("elementwise op: shape mismatch " + shape_str(A.rows, A.cols) + " vs " +
                                        shape_str(B.rows, B.cols));
        Node n = unary(op, a);
        n.b = b.id;
        n.rg = rg(a) || rg(b);
        n.val = Mat<Real>(A.rows, A.cols);
        switch (op) {
            case Op::Add:
                for (size_t i = 0; i < A.v.size(); ++i) n.val.v[i] = A.v[i] + B.v[i];
                break;
            case Op::Sub:
                for (size_t i = 0; i < A.v.size(); ++i) n.val.v[i] = A.v[i] - B.v[i];
                break;
            case Op::Mul:
                for (size_t i = 0; i < A.v.size(); ++i) n.val.v[i] = A.v[i] * B.v[i];
                break;
            default:
                throw std::logic_error("binary_elemwise: bad op");
        }
        return push(std::move(n));
    }

    Var rowwise(Op op, Var a, Var r) {
        const Mat<Real>& A = val(a);
        const Mat<Real>& R = val(r);
        if (R.rows != 1 || R.cols != A.cols)
            throw std::invalid_argument("row broadcast: row must be 1x" + std::to_string(A.cols));
        Node n = unary(op, a);
        n.b = r.id;
        n.rg = rg(a) || rg(r);
        n.val = Mat<Real>(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j)
                n.val.at(i, j) = (op == Op::AddRow) ? A.at(i, j) + R.at(0, j) : A.at(i, j) * R.at(0, j);
        return push(std::move(n));
    }

    Var softmax_impl(Var a, const Mat<Real>* mask) {
        const Mat<Real>& A = val(a);
        check_finite(A, "softmax_rows");
        if (mask && !mask->same_shape(A)) throw std::invalid_argument("softmax_rows: mask shape mismatch");
        Node n = unary(Op::SoftmaxRows, a);
        n.val = Mat<Real>(A.rows, A.cols);
        for (int i = 0; i < A.rows; ++i) {
            Real mx = -std::numeric_limits<Real>::infinity();
            for (int j = 0; j < A.cols; ++j) {
                const Real z = A.at(i, j) + (mask ? mask->at(i, j) : Real(0));
                mx = std::max(mx, z);
            }
            Real sum = 0;
            for (int j = 0; j < A.cols; ++j) {
                const Real z = A.at(i, j) + (mask ? mask->at(i, j) : Real(0));
                const Real e = std::isinf(static_cast<double>(z)) && z < 0 ? Real(0) : std::exp(z - mx);
                n.val.at(i, j) = e;
                sum += e;
            }
            const Real inv = Real(1) / sum;
            for (int j = 0; j < A.cols; ++j) n.val.at(i, j) *= inv;
        }
        return push(std::move(n));
    }

    Var reduce_rows(Op op, Var a) {
        const Mat<Real>& A = val(a);
        Node n = unary(op, a);
        n.val = Mat<Real>(1, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int j = 0; j < A.cols; ++j) n.val.at(0, j) += A.at(i, j);
        if (op == Op::MeanRows)
            for (auto& x : n.val.v) x /= static_cast<Real>(A.rows);
        return push(std::move(n));
    }

    // C += A * B
    static void mm_nn(const Mat<Real>& A, const Mat<Real>& B, Mat<Real>& C) {
        const int n = A.rows, k = A.cols, m = B.cols;
        for (int i = 0; i < n; ++i) {
            const Real* arow = &A.v[static_cast<size_t>(i) * k];
            Real* crow = &C.v[static_cast<size_t>(i) * m];
            for (int p = 0; p < k; ++p) {
                const Real a = arow[p];
                if (a == Real(0)) continue;
                const Real* brow = &B.v[static_cast<size_t>(p) * m];
                for (int j = 0; j < m; ++j) crow[j] += a * brow[j];
            }
        }
    }

    // C += A * B^T
    static void mm_nt(const Mat<Real>& A, const Mat<Real>& B, Mat<Real>& C) {
        const int n = A.rows, k = A.cols, m = B.rows;
        for (int i = 0; i < n; ++i) {
            const Real* arow = &A.v[static_cast<size_t>(i) * k];
            Real* crow = &C.v[static_cast<size_t>(i) * m];
            for (int j = 0; j < m; ++j) {
                const Real* brow = &B.v[static_cast<size_t>(j) * k];
                Real s = 0;
                for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
                crow[j] += s;
            }
        }
    }

    // C += A^T * B
    static void mm_tn(const Mat<Real>& A, const Mat<Real>& B, Mat<Real>& C) {
        const int n = A.cols, k = A.rows, m = B.cols;
        for (int p = 0; p < k; ++p) {
            const Real* arow = &A.v[static_cast<size_t>(p) * n];
            const Real* brow = &B.v[static_cast<size_t>(p) * m];
            for (int i = 0; i < n; ++i) {
                const Real a = arow[i];
                if (a == Real(0)) continue;
                Real* crow = &C.v[static_cast<size_t>(i) * m];
                for (int j = 0; j < m; ++j) crow[j] += a * brow[j];
            }
        }
    }

    Mat<Real>* grad_of(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        return n.rg ? &n.grad : nullptr;
    }

    void step_backward(Node& n) {
        const Mat<Real>& gy = n.grad;
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::MatMul: {
                const Mat<Real>& A = nodes_[n.a].val;
                const Mat<Real>& B = nodes_[n.b].val;
                if (auto* ga = grad_of(n.a)) mm_nt(gy, B, *ga);
                if (auto* gb = grad_of(n.b)) mm_tn(A, gy, *gb);
                break;
            }
            case Op::Transpose: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(j, i) += gy.at(i, j);
                break;
            }
            case Op::Add: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i];
                if (auto* gb = grad_of(n.b))
                    for (size_t i = 0; i < gy.v.size(); ++i) gb->v[i] += gy.v[i];
                break;
            }
            case Op::Sub: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i];
                if (auto* gb = grad_of(n.b))
                    for (size_t i = 0; i < gy.v.size(); ++i) gb->v[i] -= gy.v[i];
                break;
            }
            case Op::Mul: {
                const Mat<Real>& A = nodes_[n.a].val;
                const Mat<Real>& B = nodes_[n.b].val;
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i] * B.v[i];
                if (auto* gb = grad_of(n.b))
                    for (size_t i = 0; i < gy.v.size(); ++i) gb->v[i] += gy.v[i] * A.v[i];
                break;
            }
            case Op::Scale: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i] * n.x;
                break;
            }
            case Op::MulScalarVar: {
                const Mat<Real>& A = nodes_[n.a].val;
                const Real s = nodes_[n.b].val.v[0];
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i] * s;
                if (auto* gb = grad_of(n.b)) {
                    Real acc = 0;
                    for (size_t i = 0; i < gy.v.size(); ++i) acc += gy.v[i] * A.v[i];
                    gb->v[0] += acc;
                }
                break;
            }
            case Op::AddRow: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i];
                if (auto* gb = grad_of(n.b))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) gb->at(0, j) += gy.at(i, j);
                break;
            }
            case Op::MulRow: {
                const Mat<Real>& A = nodes_[n.a].val;
                const Mat<Real>& R = nodes_[n.b].val;
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(i, j) += gy.at(i, j) * R.at(0, j);
                if (auto* gb = grad_of(n.b))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) gb->at(0, j) += gy.at(i, j) * A.at(i, j);
                break;
            }
            case Op::SoftmaxRows: {
                if (auto* ga = grad_of(n.a)) {
                    const Mat<Real>& Y = n.val;
                    for (int i = 0; i < Y.rows; ++i) {
                        Real dot = 0;
                        for (int j = 0; j < Y.cols; ++j) dot += gy.at(i, j) * Y.at(i, j);
                        for (int j = 0; j < Y.cols; ++j) ga->at(i, j) += Y.at(i, j) * (gy.at(i, j) - dot);
                    }
                }
                break;
            }
            case Op::LogSoftmaxRows: {
                if (auto* ga = grad_of(n.a)) {
                    const Mat<Real>& S = n.aux;
                    for (int i = 0; i < S.rows; ++i) {
                        Real rowsum = 0;
                        for (int j = 0; j < S.cols; ++j) rowsum += gy.at(i, j);
                        for (int j = 0; j < S.cols; ++j) ga->at(i, j) += gy.at(i, j) - S.at(i, j) * rowsum;
                    }
                }
                break;
            }
            case Op::ConcatCols: {
                const int ac = nodes_[n.a].val.cols;
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < ac; ++j) ga->at(i, j) += gy.at(i, j);
                if (auto* gb = grad_of(n.b))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = ac; j < gy.cols; ++j) gb->at(i, j - ac) += gy.at(i, j);
                break;
            }
            case Op::ConcatRows: {
                const int ar = nodes_[n.a].val.rows;
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < ga->v.size(); ++i) ga->v[i] += gy.v[i];
                if (auto* gb = grad_of(n.b))
                    for (size_t i = 0; i < gb->v.size(); ++i)
                        gb->v[i] += gy.v[static_cast<size_t>(ar) * gy.cols + i];
                break;
            }
            case Op::RepeatRows: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(0, j) += gy.at(i, j);
                break;
            }
            case Op::SumRows: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < ga->rows; ++i)
                        for (int j = 0; j < ga->cols; ++j) ga->at(i, j) += gy.at(0, j);
                break;
            }
            case Op::MeanRows: {
                if (auto* ga = grad_of(n.a)) {
                    const Real inv = Real(1) / static_cast<Real>(ga->rows);
                    for (int i = 0; i < ga->rows; ++i)
                        for (int j = 0; j < ga->cols; ++j) ga->at(i, j) += gy.at(0, j) * inv;
                }
                break;
            }
            case Op::SumAll: {
                if (auto* ga = grad_of(n.a)) {
                    const Real g = gy.v[0];
                    for (auto& x : ga->v) x += g;
                }
                break;
            }
            case Op::Gelu: {
                if (auto* ga = grad_of(n.a)) {
                    const Mat<Real>& A = nodes_[n.a].val;
                    for (size_t i = 0; i < gy.v.size(); ++i) {
                        const double x = static_cast<double>(A.v[i]);
                        const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
                        const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
                        ga->v[i] += gy.v[i] * static_cast<Real>(cdf + x * pdf);
                    }
                }
                break;
            }
            case Op::Dropout: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i] * n.aux.v[i];
                break;
            }
            case Op::LayerNorm: {
                const Mat<Real>& G = nodes_[n.b].val;
                const Mat<Real>& XH = n.aux;
                const int cols = gy.cols;
                if (auto* gg = grad_of(n.b))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < cols; ++j) gg->at(0, j) += gy.at(i, j) * XH.at(i, j);
                if (auto* gb = grad_of(n.c))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < cols; ++j) gb->at(0, j) += gy.at(i, j);
                if (auto* ga = grad_of(n.a)) {
                    for (int i = 0; i < gy.rows; ++i) {
                        const Real inv = n.aux2.at(i, 0);
                        Real m1 = 0, m2 = 0;
                        for (int j = 0; j < cols; ++j) {
                            const Real dxh = gy.at(i, j) * G.at(0, j);
                            m1 += dxh;
                            m2 += dxh * XH.at(i, j);
                        }
                        m1 /= static_cast<Real>(cols);
                        m2 /= static_cast<Real>(cols);
                        for (int j = 0; j < cols; ++j) {
                            const Real dxh = gy.at(i, j) * G.at(0, j);
                            ga->at(i, j) += inv * (dxh - m1 - XH.at(i, j) * m2);
                        }
                    }
                }
                break;
            }
            case Op::SliceRows: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(n.i0 + i, j) += gy.at(i, j);
                break;
            }
            case Op::SliceCols: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(i, n.i0 + j) += gy.at(i, j);
                break;
            }
            case Op::EmbedRows: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < n.ids.size(); ++i)
                        for (int j = 0; j < gy.cols; ++j) ga->at(n.ids[i], j) += gy.at(static_cast<int>(i), j);
                break;
            }
            case Op::GatherColPerRow: {
                if (auto* ga = grad_of(n.a))
                    for (int i = 0; i < gy.rows; ++i) ga->at(i, n.ids[static_cast<size_t>(i)]) += gy.at(i, 0);
                break;
            }
            case Op::StHard: {
                if (auto* ga = grad_of(n.a))
                    for (size_t i = 0; i < gy.v.size(); ++i) ga->v[i] += gy.v[i];
                break;
            }
        }
    }
};

template <typename Real>
using GVar = typename Graph<Real>::Var;

}  // namespace dst
