#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "dst/gradcheck.hpp"
#include "dst/graph.hpp"
#include "helpers.hpp"

using dst::Graph;
using dst::Mat;
using dst::Parameter;
using dst::ParamRegistry;
using testutil::random_mat;
using testutil::randomize;

using G = Graph<double>;

TEST_CASE("matmul matches a hand-computed product") {
    G g;
    Mat<double> a(2, 3, {1, 2, 3, 4, 5, 6});
    Mat<double> b(3, 2, {7, 8, 9, 10, 11, 12});
    auto c = g.matmul(g.input(a), g.input(b));
    const Mat<double>& C = g.value(c);
    CHECK(C.rows == 2);
    CHECK(C.cols == 2);
    CHECK(C.at(0, 0) == doctest::Approx(58).epsilon(1e-12));
    CHECK(C.at(0, 1) == doctest::Approx(64).epsilon(1e-12));
    CHECK(C.at(1, 0) == doctest::Approx(139).epsilon(1e-12));
    CHECK(C.at(1, 1) == doctest::Approx(154).epsilon(1e-12));
}

TEST_CASE("matmul rejects mismatched shapes") {
    G g;
    auto a = g.input(random_mat(2, 3, 1));
    auto b = g.input(random_mat(2, 3, 2));
    CHECK_THROWS_AS((void)g.matmul(a, b), std::invalid_argument);
}

TEST_CASE("softmax rows sum to one and match a direct computation") {
    for (uint64_t s = 0; s < 100; ++s) {
        G g;
        Mat<double> x = random_mat(3, 5, s, 2.0);
        auto sm = g.softmax_rows(g.input(x));
        const Mat<double>& S = g.value(sm);
        for (int i = 0; i < 3; ++i) {
            double sum = 0;
            double ref_den = 0;
            double mx = x.at(i, 0);
            for (int j = 1; j < 5; ++j) mx = std::max(mx, x.at(i, j));
            for (int j = 0; j < 5; ++j) ref_den += std::exp(x.at(i, j) - mx);
            for (int j = 0; j < 5; ++j) {
                sum += S.at(i, j);
                const double ref = std::exp(x.at(i, j) - mx) / ref_den;
                CHECK(S.at(i, j) == doctest::Approx(ref).epsilon(1e-12));
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("softmax is shift invariant and stable for large inputs") {
    G g;
    Mat<double> x(1, 4, {1000.0, 1001.0, 999.5, 1000.5});
    Mat<double> y(1, 4, {0.0, 1.0, -0.5, 0.5});
    auto a = g.softmax_rows(g.input(x));
    auto b = g.softmax_rows(g.input(y));
    for (int j = 0; j < 4; ++j) {
        CHECK(std::isfinite(g.value(a).at(0, j)));
        CHECK(g.value(a).at(0, j) == doctest::Approx(g.value(b).at(0, j)).epsilon(1e-12));
    }
}

TEST_CASE("masked softmax zeroes -inf positions exactly") {
    G g;
    Mat<double> x = random_mat(2, 4, 3);
    Mat<double> mask(2, 4);
    mask.zero();
    const double ninf = -std::numeric_limits<double>::infinity();
    mask.at(0, 2) = ninf;
    mask.at(1, 0) = ninf;
    mask.at(1, 3) = ninf;
    auto sm = g.softmax_rows_masked(g.input(x), mask);
    const Mat<double>& S = g.value(sm);
    CHECK(S.at(0, 2) == 0.0);
    CHECK(S.at(1, 0) == 0.0);
    CHECK(S.at(1, 3) == 0.0);
    double r0 = S.at(0, 0) + S.at(0, 1) + S.at(0, 3);
    double r1 = S.at(1, 1) + S.at(1, 2);
    CHECK(r0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r1 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax rejects non-finite inputs") {
    G g;
    Mat<double> x(1, 3, {1.0, std::numeric_limits<double>::quiet_NaN(), 0.0});
    CHECK_THROWS(g.softmax_rows(g.input(x)));
}

TEST_CASE("log softmax equals log of softmax") {
    for (uint64_t s = 0; s < 20; ++s) {
        G g;
        Mat<double> x = random_mat(4, 6, 100 + s, 3.0);
        auto ls = g.log_softmax_rows(g.input(x));
        auto sm = g.softmax_rows(g.input(x));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 6; ++j)
                CHECK(g.value(ls).at(i, j) ==
                      doctest::Approx(std::log(g.value(sm).at(i, j))).epsilon(1e-10));
    }
}

TEST_CASE("gelu matches x * normal_cdf(x)") {
    G g;
    Mat<double> x(1, 5, {-2.0, -0.5, 0.0, 0.5, 2.0});
    auto y = g.gelu(g.input(x));
    for (int j = 0; j < 5; ++j)
        CHECK(g.value(y).at(0, j) ==
              doctest::Approx(x.at(0, j) * testutil::phi_cdf(x.at(0, j))).epsilon(1e-12));
}

TEST_CASE("layer norm normalizes each row") {
    G g;
    Parameter<double> gain("g", 1, 6);
    Parameter<double> bias("b", 1, 6);
    gain.value.fill(1.0);
    bias.value.zero();
    Mat<double> x = random_mat(3, 6, 9, 4.0);
    auto y = g.layer_norm(g.input(x), g.param(gain), g.param(bias));
    const Mat<double>& Y = g.value(y);
    for (int i = 0; i < 3; ++i) {
        double mean = 0, var = 0;
        for (int j = 0; j < 6; ++j) mean += Y.at(i, j);
        mean /= 6;
        for (int j = 0; j < 6; ++j) var += (Y.at(i, j) - mean) * (Y.at(i, j) - mean);
        var /= 6;
        CHECK(mean == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps shifts variance slightly
    }
}

TEST_CASE("transpose twice is the identity") {
    G g;
    Mat<double> x = random_mat(3, 5, 11);
    auto y = g.transpose(g.transpose(g.input(x)));
    CHECK(g.value(y) == x);
}

TEST_CASE("concat and slice round-trip") {
    G g;
    Mat<double> a = random_mat(2, 3, 12);
    Mat<double> b = random_mat(2, 4, 13);
    auto cat = g.concat_cols(g.input(a), g.input(b));
    CHECK(g.value(g.slice_cols(cat, 0, 3)) == a);
    CHECK(g.value(g.slice_cols(cat, 3, 7)) == b);

    Mat<double> c = random_mat(3, 4, 14);
    Mat<double> d = random_mat(2, 4, 15);
    auto rcat = g.concat_rows(g.input(c), g.input(d));
    CHECK(g.value(g.slice_rows(rcat, 0, 3)) == c);
    CHECK(g.value(g.slice_rows(rcat, 3, 5)) == d);
}

TEST_CASE("embed rows gathers table rows and repeats allowed") {
    G g;
    Mat<double> table = random_mat(5, 3, 16);
    auto e = g.embed_rows(g.input(table), {4, 0, 4});
    const Mat<double>& E = g.value(e);
    for (int j = 0; j < 3; ++j) {
        CHECK(E.at(0, j) == table.at(4, j));
        CHECK(E.at(1, j) == table.at(0, j));
        CHECK(E.at(2, j) == table.at(4, j));
    }
}

TEST_CASE("gather col per row picks the right entries") {
    G g;
    Mat<double> x = random_mat(3, 4, 17);
    auto picked = g.gather_col_per_row(g.input(x), {2, 0, 3});
    CHECK(g.value(picked).at(0, 0) == x.at(0, 2));
    CHECK(g.value(picked).at(1, 0) == x.at(1, 0));
    CHECK(g.value(picked).at(2, 0) == x.at(2, 3));
}

TEST_CASE("sum and mean rows") {
    G g;
    Mat<double> x(2, 3, {1, 2, 3, 4, 5, 6});
    auto s = g.sum_rows(g.input(x));
    auto m = g.mean_rows(g.input(x));
    CHECK(g.value(s).at(0, 0) == doctest::Approx(5.0));
    CHECK(g.value(s).at(0, 2) == doctest::Approx(9.0));
    CHECK(g.value(m).at(0, 1) == doctest::Approx(3.5));
    auto sa = g.sum_all(g.input(x));
    CHECK(g.scalar_value(sa) == doctest::Approx(21.0));
}

TEST_CASE("straight-through hard onehot: forward argmax, backward identity") {
    Parameter<double> w("w", 1, 4);
    w.value = Mat<double>(1, 4, {0.1, 0.6, 0.2, 0.1});
    ParamRegistry<double> reg;
    reg.add(w);
    Mat<double> c(1, 4, {1.0, -2.0, 3.0, 0.5});

    reg.zero_grads();
    G g1(true, 1);
    auto p1 = g1.softmax_rows(g1.param(w));
    auto h = g1.st_hard_onehot(p1);
    const Mat<double>& H = g1.value(h);
    CHECK(H.at(0, 0) == 0.0);
    CHECK(H.at(0, 1) == 1.0);
    CHECK(H.at(0, 2) == 0.0);
    CHECK(H.at(0, 3) == 0.0);
    auto loss1 = g1.sum_all(g1.mul(h, g1.constant(c)));
    g1.backward(loss1);
    Mat<double> grad_st = w.grad;

    // identity backward: same parameter gradient as the soft surrogate
    reg.zero_grads();
    G g2(true, 1);
    auto p2 = g2.softmax_rows(g2.param(w));
    auto loss2 = g2.sum_all(g2.mul(p2, g2.constant(c)));
    g2.backward(loss2);
    CHECK(dst::max_abs_diff(grad_st, w.grad) < 1e-15);
}

TEST_CASE("second backward without re-forward throws") {
    Parameter<double> w("w", 2, 2);
    randomize(w, 21);
    G g;
    auto loss = g.sum_all(g.mul(g.param(w), g.param(w)));
    g.backward(loss);
    CHECK_THROWS_AS(g.backward(loss), std::logic_error);
}

TEST_CASE("backward requires a 1x1 root that requires grad") {
    G g;
    auto c = g.constant(random_mat(1, 1, 22));
    CHECK_THROWS(g.backward(c));
    Parameter<double> w("w", 2, 2);
    randomize(w, 23);
    G g2;
    auto m = g2.param(w);
    CHECK_THROWS(g2.backward(m));  // not scalar
}

TEST_CASE("gradients accumulate across uses of the same parameter") {
    Parameter<double> w("w", 1, 3);
    w.value = Mat<double>(1, 3, {1.0, 2.0, 3.0});
    ParamRegistry<double> reg;
    reg.add(w);
    reg.zero_grads();
    G g;
    auto x = g.param(w);
    auto loss = g.sum_all(g.add(x, x));
    g.backward(loss);
    for (double v : w.grad.v) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("dropout: eval identity, train scales by kept mass, key reproducible") {
    Mat<double> x = random_mat(8, 16, 30);
    {
        G g(false, 7);
        auto y = g.dropout(g.input(x), 0.5);
        CHECK(g.value(y) == x);
    }
    {
        G g(true, 7);
        auto y = g.dropout(g.input(x), 0.0);
        CHECK(g.value(y) == x);
    }
    G a(true, 7), b(true, 7), c(true, 8);
    auto ya = a.dropout(a.input(x), 0.5);
    auto yb = b.dropout(b.input(x), 0.5);
    auto yc = c.dropout(c.input(x), 0.5);
    CHECK(a.value(ya) == b.value(yb));
    CHECK_FALSE(a.value(ya) == c.value(yc));
    // inverted scaling: surviving entries are x / (1 - rate)
    int kept = 0;
    for (size_t i = 0; i < x.v.size(); ++i) {
        double v = a.value(ya).v[i];
        if (v != 0.0) {
            ++kept;
            CHECK(v == doctest::Approx(x.v[i] / 0.5).epsilon(1e-12));
        }
    }
    CHECK(kept > 20);
    CHECK(kept < 108);
}

// ---- gradient checks on every differentiable primitive ----

namespace {

double check_op(uint64_t seed,
                const std::function<dst::GVar<double>(G&, dst::GVar<double>)>& build,
                int rows = 3, int cols = 4, double scale = 0.7) {
    Parameter<double> w("w", rows, cols);
    randomize(w, seed * 7919 + 13, scale);
    ParamRegistry<double> reg;
    reg.add(w);
    auto fwd = [&](bool backward) {
        G g(true, seed);
        auto out = build(g, g.param(w));
        auto loss = g.sum_all(out);
        if (backward) g.backward(loss);
        return g.scalar_value(loss);
    };
    return dst::gradcheck(reg, fwd);
}

}  // namespace

TEST_CASE("primitive gradcheck sweep over 100 seeds") {
    // weights beyond the sum reduce trivial cancellation in sum_all
    Mat<double> wts34 = random_mat(3, 4, 999);
    Mat<double> wts43 = random_mat(4, 3, 998);
    Mat<double> wts31 = random_mat(3, 1, 997);
    Mat<double> wts14 = random_mat(1, 4, 996);
    Mat<double> wts64 = random_mat(6, 4, 995);
    Mat<double> wts313 = random_mat(3, 13, 994);

    struct Case {
        const char* name;
        std::function<dst::GVar<double>(G&, dst::GVar<double>)> build;
    };
    std::vector<Case> cases;
    cases.push_back({"matmul", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.matmul(x, g.constant(wts43)), g.constant(random_mat(3, 3, 101)));
                     }});
    cases.push_back({"transpose", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.transpose(x), g.constant(wts43));
                     }});
    cases.push_back({"add", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.add(x, g.constant(random_mat(3, 4, 102))), g.constant(wts34));
                     }});
    cases.push_back({"sub", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.sub(g.constant(random_mat(3, 4, 103)), x), g.constant(wts34));
                     }});
    cases.push_back({"mul", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.mul(x, g.constant(random_mat(3, 4, 104))), g.constant(wts34));
                     }});
    cases.push_back({"scale", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.scale(x, -1.7), g.constant(wts34));
                     }});
    cases.push_back({"add_row", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.add_row(x, g.constant(random_mat(1, 4, 105))), g.constant(wts34));
                     }});
    cases.push_back({"mul_row", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.mul_row(x, g.constant(random_mat(1, 4, 106))), g.constant(wts34));
                     }});
    cases.push_back({"softmax", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.softmax_rows(x), g.constant(wts34));
                     }});
    cases.push_back({"log_softmax", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.log_softmax_rows(x), g.constant(wts34));
                     }});
    cases.push_back({"gelu", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.gelu(x), g.constant(wts34));
                     }});
    cases.push_back({"concat_cols", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.concat_cols(x, g.mul(x, x)), g.constant(random_mat(3, 8, 107)));
                     }});
    cases.push_back({"concat_rows", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.concat_rows(x, g.mul(x, x)), g.constant(random_mat(6, 4, 108)));
                     }});
    cases.push_back({"sum_rows", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.sum_rows(x), g.constant(wts14));
                     }});
    cases.push_back({"mean_rows", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.mean_rows(x), g.constant(wts14));
                     }});
    cases.push_back({"slice", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.slice_cols(g.slice_rows(x, 1, 3), 0, 2),
                                      g.constant(random_mat(2, 2, 109)));
                     }});
    cases.push_back({"repeat_rows", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.repeat_rows(g.slice_rows(x, 0, 1), 6),
                                      g.constant(random_mat(6, 4, 110)));
                     }});
    cases.push_back({"mul_scalar_var", [&](G& g, dst::GVar<double> x) {
                         auto s = g.sum_all(g.slice_cols(g.slice_rows(x, 0, 1), 0, 1));
                         return g.mul(g.mul_scalar_var(x, s), g.constant(wts34));
                     }});
    cases.push_back({"layer_norm", [&](G& g, dst::GVar<double> x) {
                         auto gain = g.constant(random_mat(1, 4, 111, 0.5));
                         auto bias = g.constant(random_mat(1, 4, 112, 0.5));
                         return g.mul(g.layer_norm(x, gain, bias), g.constant(wts34));
                     }});
    cases.push_back({"dropout", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.dropout(x, 0.3), g.constant(wts34));
                     }});
    cases.push_back({"embed_rows", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.embed_rows(x, {2, 0, 2, 1}), g.constant(random_mat(4, 4, 113)));
                     }});
    cases.push_back({"gather_col", [&](G& g, dst::GVar<double> x) {
                         return g.mul(g.gather_col_per_row(x, {3, 0, 2}), g.constant(wts31));
                     }});

    int seeds_per_case = 5;  // 23 cases x 5 seeds > 100 primitive checks
    for (const auto& c : cases) {
        double worst = 0;
        for (uint64_t s = 1; s <= static_cast<uint64_t>(seeds_per_case); ++s)
            worst = std::max(worst, check_op(s, c.build));
        INFO(c.name);
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("masked softmax gradcheck ignores masked entries") {
    Mat<double> mask(3, 4);
    mask.zero();
    mask.at(0, 1) = -std::numeric_limits<double>::infinity();
    mask.at(2, 3) = -std::numeric_limits<double>::infinity();
    Mat<double> wts = random_mat(3, 4, 200);
    for (uint64_t s = 1; s <= 10; ++s) {
        double err = check_op(s, [&](G& g, dst::GVar<double> x) {
            return g.mul(g.softmax_rows_masked(x, mask), g.constant(wts));
        });
        CHECK(err < 1e-6);
    }
}

TEST_CASE("input marked requires_grad participates in backward") {
    G g;
    auto x = g.input(random_mat(2, 2, 300), true);
    auto loss = g.sum_all(g.mul(x, x));
    g.backward(loss);
    const Mat<double>& gx = g.gradient(x);
    const Mat<double>& xv = g.value(x);
    for (int i = 0; i < 4; ++i) CHECK(gx.v[i] == doctest::Approx(2 * xv.v[i]).epsilon(1e-12));
}
