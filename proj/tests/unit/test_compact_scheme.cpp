#include <cmath>
#include <numbers>

#include "compactflow/compact_scheme.hpp"
#include "compactflow/errors.hpp"
#include "doctest.h"

using namespace compactflow;

namespace {

constexpr double kPi = std::numbers::pi;

PhysicalGrid mapped(const ParamSpace& p, double t, auto fx, auto fy) {
    PhysicalGrid g(p, t);
    for (int j = 0; j < p.n_eta(); ++j)
        for (int i = 0; i < p.n_xi(); ++i) {
            g.x(i, j) = fx(p.xi(i), p.eta(j));
            g.y(i, j) = fy(p.xi(i), p.eta(j));
        }
    return g;
}

// Static wavy grid on [0, pi]^2.
PhysicalGrid wavy(const ParamSpace& p, double amp = 0.08) {
    return mapped(
        p, 0.0, [&](double s, double e) { return s + amp * std::sin(2 * e); },
        [&](double s, double e) { return e + amp * std::sin(2 * s); });
}

Field sample(const PhysicalGrid& g, auto f) {
    Field out = g.param.make_field();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = f(g.x[n], g.y[n]);
    return out;
}

double max_err(const Field& a, const Field& b) {
    double e = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) e = std::max(e, std::abs(a[n] - b[n]));
    return e;
}

// -lap(phi) = 2 sin x sin y, phi = 0 on the boundary of [0, pi]^2.
double dirichlet_error(int n, bool curved, Coupling coupling = Coupling::Krylov) {
    const ParamSpace p = ParamSpace::square(n, 0.0, kPi);
    const PhysicalGrid g = curved ? wavy(p) : PhysicalGrid::identity(p);
    const MetricField m = compute_metrics(g);
    const auto exact = [](double x, double y) { return std::sin(x) * std::sin(y); };
    const Field ex = sample(g, exact);
    Field rhs = sample(g, [&](double x, double y) { return 2.0 * exact(x, y); });
    SchemeConfig cfg;
    cfg.coupling = coupling;
    const ScalarField s = solve_elliptic(elliptic_coefficients(m), rhs, BoundarySpec::dirichlet(p, ex), cfg);
    return max_err(s.phi, ex);
}

// Same operator with zero normal derivative: phi = cos x cos y.
double neumann_error(int n, bool curved) {
    const ParamSpace p = ParamSpace::square(n, 0.0, kPi);
    const PhysicalGrid g = curved ? wavy(p, 0.05) : PhysicalGrid::identity(p);
    const MetricField m = compute_metrics(g);
    const auto exact = [](double x, double y) { return std::cos(x) * std::cos(y); };
    Field ex = sample(g, exact);
    const Field rhs = sample(g, [&](double x, double y) { return 2.0 * exact(x, y); });
    // boundary data: n . grad(phi) evaluated exactly
    Field gn = p.make_field();
    for (const NodeIndex& nd : boundary_nodes(p)) {
        const Vec2 nv = wall_normal(m, nd.i, nd.j);
        const double x = g.x(nd.i, nd.j), y = g.y(nd.i, nd.j);
        gn(nd.i, nd.j) = nv.x * -std::sin(x) * std::cos(y) + nv.y * -std::cos(x) * std::sin(y);
    }
    const ScalarField s = solve_elliptic(elliptic_coefficients(m), rhs, BoundarySpec::neumann(m, gn), {});
    const double ref = ex(n / 2, 0);
    for (std::size_t c = 0; c < ex.size(); ++c) ex[c] -= ref;
    return max_err(s.phi, ex);
}

}  // namespace

TEST_CASE("coefficients on the identity grid reduce to the Cartesian operator") {
    const ParamSpace p = ParamSpace::unit_square(9);
    const MetricField m = compute_metrics(PhysicalGrid::identity(p));
    const OperatorCoefficients co = transformed_coefficients(m, 0.3, Vec2{1.5, -2.0});
    for (std::size_t n = 0; n < p.size(); ++n) {
        CHECK(co.alpha1[n] == doctest::Approx(0.3).epsilon(1e-13));
        CHECK(co.alpha2[n] == doctest::Approx(0.3).epsilon(1e-13));
        CHECK(std::abs(co.beta[n]) < 1e-13);
        CHECK(co.chi1[n] == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(co.chi2[n] == doctest::Approx(-2.0).epsilon(1e-12));
    }
}

TEST_CASE("a translating grid adds minus the grid velocity to the convection") {
    const ParamSpace p = ParamSpace::unit_square(9);
    const double v = 0.7, dt = 0.01;
    GridHistory hist;
    for (int l = 0; l < 3; ++l) {
        const double t = l * dt;
        hist.push(mapped(p, t, [&](double s, double) { return s + v * t; }, [](double, double e) { return e; }));
    }
    const MetricField m = compute_time_metrics(hist, 2);
    const OperatorCoefficients co = transformed_coefficients(m, 0.0, Vec2{});
    for (std::size_t n = 0; n < p.size(); ++n) {
        CHECK(co.chi1[n] == doctest::Approx(-v).epsilon(1e-10));
        CHECK(std::abs(co.chi2[n]) < 1e-10);
    }
}

TEST_CASE("a degenerate diffusion matrix is rejected when a > 0 only") {
    const ParamSpace p = ParamSpace::unit_square(6);
    MetricField m(p);
    m.jac = p.make_field(1.0);
    m.x_xi = p.make_field(1.0);
    m.y_eta = p.make_field(0.0);  // alpha1 = 0
    CHECK_THROWS_AS(transformed_coefficients(m, 1.0, Vec2{}), CoefficientError);
    CHECK_NOTHROW(transformed_coefficients(m, 0.0, Vec2{}));
}

TEST_CASE("the compact operator is exact for quadratics on the identity grid") {
    const ParamSpace p = ParamSpace::unit_square(11);
    const PhysicalGrid g = PhysicalGrid::identity(p);
    const OperatorCoefficients co = elliptic_coefficients(compute_metrics(g));
    ScalarField f(p, sample(g, [](double x, double y) { return x * x + y * y; }));
    CHECK_THROWS_AS(apply_operator(co, f), StateError);
    close_gradients(f);
    const Field a = apply_operator(co, f);
    for (int j = 1; j < p.n_eta() - 1; ++j)
        for (int i = 1; i < p.n_xi() - 1; ++i) CHECK(a(i, j) == doctest::Approx(-4.0).epsilon(1e-10));
    CHECK(a(0, 0) == 0.0);
}

TEST_CASE("constants are annihilated exactly on curved grids") {
    const ParamSpace p = ParamSpace::square(17, 0.0, kPi);
    const MetricField m = compute_metrics(wavy(p));
    const OperatorCoefficients co = transformed_coefficients(m, 0.01, Vec2{0.3, 0.4});
    const ScalarField f = pade_gradients(ScalarField(p, p.make_field(2.5)));
    const Field a = apply_operator(co, f);
    for (std::size_t n = 0; n < a.size(); ++n) CHECK(a[n] == 0.0);

    const Field zero = p.make_field();
    StepStats st;
    const ScalarField next = cn_step(co, co, f, zero, zero, 0.05, BoundarySpec::dirichlet(p, 2.5), {}, &st);
    CHECK(max_err(next.phi, f.phi) < 1e-13);
}

TEST_CASE("Dirichlet Poisson solves converge at fourth order") {
    for (bool curved : {false, true}) {
        CAPTURE(curved);
        const double e1 = dirichlet_error(17, curved), e2 = dirichlet_error(33, curved);
        CHECK(e2 < 1e-4);
        CHECK(std::log2(e1 / e2) > 3.5);
    }
}

TEST_CASE("Neumann Poisson solves converge with a pinned node") {
    for (bool curved : {false, true}) {
        CAPTURE(curved);
        const double e1 = neumann_error(17, curved), e2 = neumann_error(33, curved);
        // the one-sided gradient closures limit Neumann problems to third order
        CHECK(e2 < 1e-2);
        CHECK(std::log2(e1 / e2) > 2.7);
    }
}

TEST_CASE("fixed-point and Krylov coupling reach the same discrete solution") {
    const double a = dirichlet_error(17, true, Coupling::Krylov);
    const double b = dirichlet_error(17, true, Coupling::FixedPoint);
    CHECK(std::abs(a - b) < 1e-8);
}

TEST_CASE("Crank-Nicolson is second order in time") {
    // phi = exp(-t) sin x sin y solves phi_t - lap(phi) = exp(-t) sin x sin y
    const ParamSpace p = ParamSpace::square(33, 0.0, kPi);
    const PhysicalGrid g = PhysicalGrid::identity(p);
    const MetricField m = compute_metrics(g);
    const OperatorCoefficients co = transformed_coefficients(m, 1.0, Vec2{});
    const Field shape = sample(g, [](double x, double y) { return std::sin(x) * std::sin(y); });
    auto run = [&](int steps) {
        const double dt = 1.0 / steps;
        ScalarField f = pade_gradients(ScalarField(p, shape));
        const BoundarySpec bc = BoundarySpec::dirichlet(p, 0.0);
        for (int s = 0; s < steps; ++s) {
            Field sn = shape, snp = shape;
            for (std::size_t c = 0; c < sn.size(); ++c) {
                sn[c] *= std::exp(-s * dt);
                snp[c] *= std::exp(-(s + 1) * dt);
            }
            f = cn_step(co, co, f, sn, snp, dt, bc, {});
        }
        Field ex = shape;
        for (std::size_t c = 0; c < ex.size(); ++c) ex[c] *= std::exp(-1.0);
        return max_err(f.phi, ex);
    };
    const double e1 = run(10), e2 = run(20);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("wall normals on the identity grid") {
    const ParamSpace p = ParamSpace::unit_square(5);
    const MetricField m = compute_metrics(PhysicalGrid::identity(p));
    const Vec2 left = wall_normal(m, 0, 2);
    CHECK(left.x == doctest::Approx(-1.0));
    CHECK(left.y == doctest::Approx(0.0));
    const Vec2 corner = wall_normal(m, 4, 4);
    CHECK(corner.x == doctest::Approx(0.5));
    CHECK(corner.y == doctest::Approx(0.5));
    const auto [cx, ce] = wall_normal_coefficients(m, 2, 0);
    CHECK(cx == doctest::Approx(0.0));
    CHECK(ce == doctest::Approx(-1.0));
    CHECK_THROWS_AS(wall_normal(m, 2, 2), InvalidArgument);
}

TEST_CASE("compatibility defect measures the net source") {
    const ParamSpace p = ParamSpace::unit_square(21);
    const MetricField m = compute_metrics(PhysicalGrid::identity(p));
    const BoundarySpec bc = BoundarySpec::neumann(m, p.make_field());
    CHECK(compatibility_defect(p.make_field(), bc) == 0.0);
    CHECK(compatibility_defect(p.make_field(1.0), bc) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(compatibility_defect(p.make_field(1.0), BoundarySpec::dirichlet(p, 0.0)) == 0.0);
}

TEST_CASE("boundary specifications are validated") {
    const ParamSpace p = ParamSpace::unit_square(7);
    const MetricField m = compute_metrics(PhysicalGrid::identity(p));
    const OperatorCoefficients co = elliptic_coefficients(m);
    BoundarySpec partial(p);
    partial.set_dirichlet(0, 0, 1.0);
    CHECK_THROWS_AS(solve_elliptic(co, p.make_field(), partial, {}), InvalidArgument);
    BoundarySpec nopin = BoundarySpec::neumann(m, p.make_field());
    nopin.pin.reset();
    CHECK_THROWS_AS(solve_elliptic(co, p.make_field(), nopin, {}), InvalidArgument);
    BoundarySpec periodic = BoundarySpec::dirichlet(p, 0.0);
    BoundarySpec corner = BoundarySpec::neumann(m, p.make_field());
    corner.pin = NodeIndex{0, 0};
    CHECK_THROWS_AS(corner.validate(), InvalidArgument);
    periodic.at(0, 3).kind = BoundaryKind::Periodic;
    CHECK_THROWS_AS(periodic.validate(), InvalidArgument);
    CHECK_THROWS_AS(partial.set_dirichlet(3, 3, 0.0), InvalidArgument);
}

TEST_CASE("fixed-point coupling reports non-convergence") {
    const ParamSpace p = ParamSpace::square(17, 0.0, kPi);
    const MetricField m = compute_metrics(wavy(p));
    SchemeConfig cfg;
    cfg.coupling = Coupling::FixedPoint;
    cfg.max_inner = 2;
    cfg.inner_tol = 1e-14;
    const Field rhs = p.make_field(1.0);
    try {
        solve_elliptic(elliptic_coefficients(m), rhs, BoundarySpec::dirichlet(p, 0.0), cfg);
        FAIL("expected IterationError");
    } catch (const IterationError& e) {
        CHECK(e.history().size() == 2);
    }
}

TEST_CASE("the elliptic cache reuses its factor for a matching stamp") {
    const ParamSpace p = ParamSpace::square(17, 0.0, kPi);
    const MetricField m = compute_metrics(wavy(p));
    const OperatorCoefficients co = elliptic_coefficients(m);
    const BoundarySpec bc = BoundarySpec::dirichlet(p, 0.0);
    EllipticCache cache;
    const Field rhs = p.make_field(1.0);
    const ScalarField a = solve_elliptic(co, rhs, bc, {}, nullptr, nullptr, &cache, 7);
    CHECK(cache.stamp == 7);
    CHECK_FALSE(cache.ilu.empty());
    const ScalarField b = solve_elliptic(co, rhs, bc, {}, nullptr, nullptr, &cache, 7);
    CHECK(a.phi == b.phi);
}
