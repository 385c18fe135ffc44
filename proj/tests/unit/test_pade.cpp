#include <cmath>
#include <numbers>
#include <vector>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"
#include "doctest.h"

using namespace compactflow;

namespace {

std::vector<double> sample(int n, double lo, double hi, double (*f)(double)) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = f(lo + (hi - lo) * i / (n - 1));
    return v;
}

double interior_sin_error(int n) {
    const double pi = std::numbers::pi;
    const auto v = sample(n, 0.0, pi, [](double x) { return std::sin(x); });
    const auto d = pade_derivative_line(v, pi / (n - 1));
    double e = 0.0;
    for (int i = 1; i < n - 1; ++i) e = std::max(e, std::abs(d[i] - std::cos(pi * i / (n - 1))));
    return e;
}

}  // namespace

TEST_CASE("pade: derivative of a constant is exactly zero") {
    for (int n : {5, 6, 17, 40}) {
        std::vector<double> v(n, 7.0);
        for (double d : pade_derivative_line(v, 0.3)) CHECK(d == 0.0);
    }
}

TEST_CASE("pade: exact for polynomials up to degree three") {
    const int n = 5;
    const auto d = pade_derivative_line(sample(n, 0.0, 1.0, [](double x) { return x * x; }), 0.25);
    for (int i = 0; i < n; ++i) CHECK(std::abs(d[i] - 0.5 * i) <= 1e-12);

    for (int n2 : {5, 9, 23}) {
        const double lo = -0.7, hi = 1.9, s = (hi - lo) / (n2 - 1);
        const auto c = sample(n2, lo, hi, [](double x) { return 2.0 - x + 0.5 * x * x - 1.5 * x * x * x; });
        const auto dc = pade_derivative_line(c, s);
        for (int i = 0; i < n2; ++i) {
            const double x = lo + s * i;
            CHECK(std::abs(dc[i] - (-1.0 + x - 4.5 * x * x)) <= 1e-12);
        }
    }
}

TEST_CASE("pade: fourth-order interior convergence for sin on [0, pi]") {
    const double ratio = interior_sin_error(17) / interior_sin_error(33);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
    // independent dense-solve oracle gives 15.84
    CHECK(ratio == doctest::Approx(15.838).epsilon(1e-3));
    const double order = std::log2(ratio);
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
}

TEST_CASE("pade: argument validation") {
    std::vector<double> v4(4, 1.0), v5(5, 1.0);
    CHECK_THROWS_AS(pade_derivative_line(v4, 0.1), StencilSupportError);
    CHECK_THROWS_AS(pade_derivative_line(v5, 0.0), InvalidArgument);
    CHECK_THROWS_AS(pade_derivative_line(v5, -1.0), InvalidArgument);
}

TEST_CASE("pade: 2D sweeps share the line kernel") {
    Field f(7, 6);
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 7; ++i) f(i, j) = std::sin(0.3 * i + 0.2 * j * j);
    const Field dx = pade_d_xi(f, 0.1);
    const Field dy = pade_d_eta(f, 0.2);
    for (int j = 0; j < 6; ++j) {
        std::vector<double> row(7);
        for (int i = 0; i < 7; ++i) row[i] = f(i, j);
        const auto d = pade_derivative_line(row, 0.1);
        for (int i = 0; i < 7; ++i) CHECK(dx(i, j) == d[i]);
    }
    for (int i = 0; i < 7; ++i) {
        std::vector<double> col(6);
        for (int j = 0; j < 6; ++j) col[j] = f(i, j);
        const auto d = pade_derivative_line(col, 0.2);
        for (int j = 0; j < 6; ++j) CHECK(dy(i, j) == doctest::Approx(d[j]).epsilon(1e-15));
    }
}
