#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "gruwe/numerics.hpp"

using namespace gruwe;

namespace {

// robust relative error: genuinely relative above `floor`, absolute below it
double rel_err(double a, double b, double floor_scale) {
    const double denom = std::max({std::fabs(a), std::fabs(b), floor_scale});
    return std::fabs(a - b) / denom;
}

} // namespace

TEST_CASE("matvec identity, zero, and hand-computed cases") {
    DenseMatrix id(3, 3);
    for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
    DenseVector x = DenseVector::checked({1.0, 2.0, 3.0});
    auto y = matvec(id, x);
    CHECK(y.data == std::vector<double>{1.0, 2.0, 3.0});

    DenseMatrix zero(2, 2);
    auto z = matvec(zero, DenseVector::checked({5.0, 7.0}));
    CHECK(z.data == std::vector<double>{0.0, 0.0});

    // [[1,2],[3,4]] x [1,1] = [3,7]
    DenseMatrix m = DenseMatrix::checked(2, 2, {1.0, 2.0, 3.0, 4.0});
    auto r = matvec(m, DenseVector::checked({1.0, 1.0}));
    CHECK(r.data == std::vector<double>{3.0, 7.0});
}

TEST_CASE("matvec shape mismatch raises") {
    DenseMatrix m(2, 3);
    DenseVector v(2);
    CHECK_THROWS_AS(matvec(m, v), ShapeError);
    CHECK_THROWS_AS(matvec_t(m, DenseVector(3)), ShapeError);
}

TEST_CASE("matvec_t equals matvec with an explicitly transposed matrix") {
    RngState rng(11);
    DenseMatrix m(4, 3);
    for (auto& v : m.data) v = rng.uniform(-2.0, 2.0);
    DenseMatrix mt(3, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) mt.at(j, i) = m.at(i, j);
    DenseVector x(4);
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    auto a = matvec_t(m, x);
    auto b = matvec(mt, x);
    for (std::size_t j = 0; j < 3; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-15));
}

TEST_CASE("add_outer accumulates a b^T") {
    DenseMatrix acc(2, 2, 1.0);
    add_outer(acc, DenseVector::checked({1.0, 2.0}), DenseVector::checked({3.0, 4.0}));
    CHECK(acc.data == std::vector<double>{4.0, 5.0, 7.0, 9.0});
    CHECK_THROWS_AS(add_outer(acc, DenseVector(3), DenseVector(2)), ShapeError);
}

TEST_CASE("nonlinearity anchor values") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(std::tanh(0.0) == 0.0);
}

TEST_CASE("nonlinearity derivatives match central finite differences") {
    // 1000 random points in [-20, 20], step 1e-5, relative error < 1e-6
    // (denominator floored at 1e-4 so the far tails, where the derivative
    // underflows toward zero, are judged on an absolute scale)
    RngState rng(101);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-20.0, 20.0);

        const double fd_sig = (sigmoid(x + h) - sigmoid(x - h)) / (2.0 * h);
        worst = std::max(worst, rel_err(fd_sig, sigmoid_grad_from_value(sigmoid(x)), 1e-4));

        const double fd_tanh = (std::tanh(x + h) - std::tanh(x - h)) / (2.0 * h);
        worst = std::max(worst, rel_err(fd_tanh, tanh_grad_from_value(std::tanh(x)), 1e-4));

        const double fd_sp = (softplus(x + h) - softplus(x - h)) / (2.0 * h);
        worst = std::max(worst, rel_err(fd_sp, softplus_grad(x), 1e-4));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("softplus is overflow-safe and never negative") {
    CHECK(softplus(1e6) == 1e6);
    CHECK(std::isfinite(softplus(1e6)));
    for (double x : {-1e6, -745.0, -20.0, 0.0, 20.0, 745.0, 1e6}) {
        CHECK(softplus(x) >= 0.0);
        CHECK(std::isfinite(softplus(x)));
    }
}

TEST_CASE("rng streams reproduce exactly from the same seed") {
    RngState a(12345), b(12345), c(54321);
    bool all_equal = true;
    bool any_diff_c = false;
    for (int i = 0; i < 10000; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_diff_c = any_diff_c || (x != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff_c);
}

TEST_CASE("rng uniform respects bounds and exponential matches its mean") {
    RngState rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform(-2.0, 3.0);
        CHECK(u >= -2.0);
        CHECK(u < 3.0);
    }
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) sum += rng.exponential(2.0);
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK_THROWS_AS(rng.exponential(0.0), DomainError);
}

TEST_CASE("next_below is bounded and deterministic") {
    RngState a(99), b(99);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_below(7);
        CHECK(x < 7);
        CHECK(x == b.next_below(7));
    }
    CHECK_THROWS_AS(a.next_below(0), DomainError);
}

TEST_CASE("derive_seed gives stable, distinct child seeds") {
    const auto s0 = derive_seed(42, 0);
    CHECK(s0 == derive_seed(42, 0));
    CHECK(s0 != derive_seed(42, 1));
    CHECK(s0 != derive_seed(43, 0));
}

TEST_CASE("uniform_init determinism, bounds, and mean") {
    RngState a(42), b(42);
    auto p = uniform_init(a, "p", 2, 2, 0.5);
    auto q = uniform_init(b, "q", 2, 2, 0.5);
    CHECK(p.value.data == q.value.data);

    RngState rng(5);
    const double scale = 0.3;
    Parameter big("big", 1000, 1000);
    uniform_init(rng, big, scale);
    double mean = 0.0;
    for (double v : big.value.data) {
        CHECK(std::fabs(v) <= scale);
        mean += v;
    }
    mean /= static_cast<double>(big.count());
    CHECK(std::fabs(mean) < 0.01 * scale);
}

TEST_CASE("uniform_init rejects non-positive or non-finite scale") {
    RngState rng(1);
    Parameter p("p", 2, 2);
    CHECK_THROWS_AS(uniform_init(rng, p, 0.0), ConfigError);
    CHECK_THROWS_AS(uniform_init(rng, p, -1.0), ConfigError);
    CHECK_THROWS_AS(uniform_init(rng, p, std::nan("")), ConfigError);
}

TEST_CASE("checked constructors reject non-finite entries") {
    CHECK_THROWS_AS(DenseVector::checked({1.0, std::nan("")}), DataError);
    CHECK_THROWS_AS(DenseMatrix::checked(1, 2, {1.0, INFINITY}), DataError);
    CHECK_THROWS_AS(DenseMatrix::checked(2, 2, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("zero_grad zeroes the gradient accumulator") {
    Parameter p("p", 2, 3);
    for (auto& g : p.grad.data) g = 1.5;
    p.zero_grad();
    for (double g : p.grad.data) CHECK(g == 0.0);
}
