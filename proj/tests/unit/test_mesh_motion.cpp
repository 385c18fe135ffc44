#include <cmath>
#include <numbers>

#include "compactflow/errors.hpp"
#include "compactflow/mesh_motion.hpp"
#include "compactflow/metrics.hpp"
#include "doctest.h"

using namespace compactflow;

namespace {

constexpr double kPi = std::numbers::pi;

double max_dist(const PhysicalGrid& a, const PhysicalGrid& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.x.size(); ++n)
        m = std::max(m, std::hypot(a.x[n] - b.x[n], a.y[n] - b.y[n]));
    return m;
}

PhysicalGrid shifted(const PhysicalGrid& g, Vec2 t) {
    PhysicalGrid out = g;
    for (std::size_t n = 0; n < g.x.size(); ++n) {
        out.x[n] += t.x;
        out.y[n] += t.y;
    }
    return out;
}

// Mildly stretched base grid so arc-length blending differs from index blending.
PhysicalGrid stretched(int n) {
    const ParamSpace p = ParamSpace::unit_square(n);
    PhysicalGrid g(p);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const double s = p.xi(i), e = p.eta(j);
            g.x(i, j) = s * s * (3 - 2 * s) * 0.5 + 0.5 * s;
            g.y(i, j) = e + 0.05 * std::sin(kPi * e) * s;
        }
    return g;
}

}  // namespace

TEST_CASE("quaternions rotate planar vectors") {
    const Quaternion q = Quaternion::rotation_z(kPi / 2);
    const Vec2 r = q.rotate({1.0, 0.0});
    CHECK(r.x == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(r.y == doctest::Approx(1.0));
    CHECK(q.norm() == doctest::Approx(1.0));
    const Quaternion qq = q * q;
    const Vec2 r2 = qq.rotate({1.0, 0.0});
    CHECK(r2.x == doctest::Approx(-1.0));
    CHECK_THROWS_AS(Quaternion({0, 0, 0, 0}).normalized(), InvalidArgument);
}

TEST_CASE("TFI reproduces zero and uniform displacements") {
    const PhysicalGrid base = stretched(17);
    CHECK(tfi_deform(base, BoundaryDisplacement(base.param)) == base);
    const Vec2 t{0.3, -0.1};
    const PhysicalGrid out = tfi_deform(base, BoundaryDisplacement::uniform(base.param, t));
    CHECK(max_dist(out, shifted(base, t)) <= 1e-12);
}

TEST_CASE("TFI keeps boundary nodes exactly where prescribed") {
    const PhysicalGrid base = stretched(13);
    BoundaryDisplacement bd(base.param);
    for (std::size_t n = 0; n < bd.d.size(); ++n) bd.d[n] = {0.01 * std::sin(0.3 * n), 0.02 * std::cos(0.2 * n)};
    const PhysicalGrid out = tfi_deform(base, bd);
    const auto nodes = boundary_nodes(base.param);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        CHECK(out.x(nodes[n].i, nodes[n].j) == base.x(nodes[n].i, nodes[n].j) + bd.d[n].x);
        CHECK(out.y(nodes[n].i, nodes[n].j) == base.y(nodes[n].i, nodes[n].j) + bd.d[n].y);
    }
    BoundaryDisplacement short_bd = bd;
    short_bd.d.pop_back();
    CHECK_THROWS_AS(tfi_deform(base, short_bd), InvalidArgument);
}

TEST_CASE("TFI reports tangled results") {
    const PhysicalGrid base = PhysicalGrid::identity(ParamSpace::unit_square(9));
    BoundaryDisplacement bd(base.param);
    const auto nodes = boundary_nodes(base.param);
    for (std::size_t n = 0; n < nodes.size(); ++n)
        if (nodes[n].j == 0 && nodes[n].i > 0 && nodes[n].i < 8) bd.d[n] = {0.0, 1.5};
    CHECK_THROWS_AS(tfi_deform(base, bd), TangledMeshError);
}

TEST_CASE("the pulse domain at its final time stays valid") {
    const MotionPrescription m = MotionPrescription::pulse_deform_translate(41);
    const PhysicalGrid g = m.grid(m.period);
    CHECK_NOTHROW(check_positive_jacobian(g));
    // The side and top laws both leave the corner (0, 2) with slope 0.2 pi,
    // so no interior fill can beat |sin| = (1 - s^2) / (1 + s^2) there.
    const double s2 = std::pow(0.2 * kPi, 2);
    CHECK(min_skew_quality(g) == doctest::Approx((1 - s2) / (1 + s2)).epsilon(1e-3));
    // corner (0, 0) only translates
    const double shift = 0.5 * m.velocity * m.period;
    CHECK(g.x(0, 0) == doctest::Approx(shift));
    CHECK(g.y(0, 0) == doctest::Approx(shift));
}

TEST_CASE("IDW reproduces uniform translation in both modes") {
    const PhysicalGrid base = stretched(15);
    const Vec2 t{0.25, 0.4};
    const PhysicalGrid a = idw_deform(base, BoundaryDisplacement::uniform(base.param, t));
    CHECK(max_dist(a, shifted(base, t)) <= 1e-12);
    const PhysicalGrid b = idw_deform(base, RigidMotionSample::rigid(base.param, 0.0, {}, t));
    CHECK(max_dist(b, shifted(base, t)) <= 1e-12);
}

TEST_CASE("quaternion IDW reproduces a rigid rotation") {
    const PhysicalGrid base = stretched(15);
    const Vec2 c{0.5, 0.5};
    const double angle = 10.0 * kPi / 180.0;
    const PhysicalGrid out = idw_deform(base, RigidMotionSample::rigid(base.param, angle, c));
    PhysicalGrid exact = base;
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (std::size_t n = 0; n < base.x.size(); ++n) {
        const double dx = base.x[n] - c.x, dy = base.y[n] - c.y;
        exact.x[n] = c.x + cs * dx - sn * dy;
        exact.y[n] = c.y + sn * dx + cs * dy;
    }
    CHECK(max_dist(out, exact) <= 1e-10);
}

TEST_CASE("rotation quaternions are recovered from node positions") {
    const PhysicalGrid base = stretched(9);
    const RigidMotionSample rigid = RigidMotionSample::rigid(base.param, 0.3, {0.2, -0.1}, {0.05, 0.0});
    const auto nodes = boundary_nodes(base.param);
    BoundaryDisplacement bd(base.param);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const Vec2 x = base.node(nodes[n].i, nodes[n].j);
        bd.d[n] = rigid.moved(n, x) - x;
    }
    const RigidMotionSample back = RigidMotionSample::from_positions(base, bd, rigid.translation);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        CHECK(std::abs(back.rotation[n].norm() - 1.0) <= 1e-12);
        const Vec2 x = base.node(nodes[n].i, nodes[n].j);
        CHECK((back.moved(n, x) - (x + bd.d[n])).norm() <= 1e-12);
    }
    std::vector<Vec2> wrong(nodes.size());
    CHECK_THROWS_AS(RigidMotionSample::from_positions(base, bd, wrong), InvalidArgument);
}

TEST_CASE("IDW shift of a cylinder inside a fixed box keeps the mesh usable") {
    const PhysicalGrid base = o_grid(81, 41, 0.5, 8.0, 3.0);
    std::vector<NodeIndex> moving;
    std::vector<Vec2> disp;
    for (int i = 0; i < base.param.n_xi(); ++i) {
        moving.push_back({i, 0});
        disp.push_back({0.0, 1.2});
        moving.push_back({i, base.param.n_eta() - 1});
        disp.push_back({0.0, 0.0});
    }
    const PhysicalGrid out = idw_deform(base, moving, disp);
    CHECK(out.y(10, 0) == doctest::Approx(base.y(10, 0) + 1.2));
    const MetricField m = compute_metrics(out);
    for (std::size_t n = 0; n < m.jac.size(); ++n) REQUIRE(m.jac[n] > 0.0);
    CHECK(min_skew_quality(out) >= 0.4);
}

TEST_CASE("IDW rejects interior nodes on top of boundary nodes") {
    PhysicalGrid base = PhysicalGrid::identity(ParamSpace::unit_square(7));
    base.x(1, 1) = 0.0;
    base.y(1, 1) = 0.0;
    std::vector<NodeIndex> moving{{0, 0}};
    CHECK_THROWS_AS(idw_deform(base, moving, {Vec2{0.1, 0.0}}), CoincidentNodeError);
}

TEST_CASE("skew quality by definition") {
    const ParamSpace p = ParamSpace::unit_square(9);
    const Field q = skew_quality(PhysicalGrid::identity(p));
    for (std::size_t n = 0; n < q.size(); ++n) CHECK(q[n] == doctest::Approx(1.0));
    PhysicalGrid shear = PhysicalGrid::identity(p);
    for (std::size_t n = 0; n < shear.x.size(); ++n) shear.x[n] += shear.y[n];
    const Field qs = skew_quality(shear);
    for (std::size_t n = 0; n < qs.size(); ++n) CHECK(qs[n] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    PhysicalGrid flat(p);
    CHECK_THROWS_AS(skew_quality(flat), DegenerateCellError);
}

TEST_CASE("stretched cavity grid quality at its extreme stays fixed") {
    const MotionPrescription m = MotionPrescription::cavity_stretch(65);
    const double q = min_skew_quality(m.grid(0.25));
    CHECK(q == min_skew_quality(m.grid(0.25)));
    CHECK(q == doctest::Approx(0.947078).epsilon(1e-6));  // golden value from the first run
}

TEST_CASE("randomized meshes are bounded and reproducible") {
    const PhysicalGrid base = PhysicalGrid::identity(ParamSpace::unit_square(51));
    CHECK(randomize_mesh(base, 0.0, 1) == base);
    const PhysicalGrid a = randomize_mesh(base, 0.2, 42);
    const PhysicalGrid b = randomize_mesh(base, 0.2, 42);
    CHECK(a == b);
    CHECK_FALSE(a == randomize_mesh(base, 0.2, 43));
    const double h = base.param.h();
    for (int j = 0; j < 51; ++j)
        for (int i = 0; i < 51; ++i) {
            CHECK(std::abs(a.x(i, j) - base.x(i, j)) <= 0.2 * h + 1e-15);
            CHECK(std::abs(a.y(i, j) - base.y(i, j)) <= 0.2 * h + 1e-15);
            if (i < 3 || j < 3 || i > 47 || j > 47) CHECK(a.x(i, j) == base.x(i, j));
        }
    CHECK_NOTHROW(check_positive_jacobian(a));
    CHECK_THROWS_AS(randomize_mesh(base, 0.5, 1), InvalidArgument);
    CHECK_THROWS_AS(randomize_mesh(base, 0.1, 1, 0), InvalidArgument);
}

TEST_CASE("prescribed motions") {
    SUBCASE("wavy grid starts as the identity and keeps its edges") {
        const MotionPrescription m = MotionPrescription::wavy(25, 4);
        CHECK(m.grid(0.0) == PhysicalGrid::identity(m.param));
        const PhysicalGrid g = m.grid(1.0);
        for (int i = 0; i < 25; ++i) CHECK(g.x(i, 0) == doctest::Approx(m.param.xi(i)));
        // amplitude (pi / 24) at the crest of the wave
        const double e = kPi / 8.0;  // sin(4 e) = 1
        const int j = 3;
        CHECK(m.param.eta(j) == doctest::Approx(e));
        CHECK(g.x(5, j) - m.param.xi(5) == doctest::Approx(kPi / 24.0));
    }
    SUBCASE("bump extremum") {
        const MotionPrescription m = MotionPrescription::cavity_bump(65);
        CHECK(m.bump_height(0.375, 1.25) == doctest::Approx(0.1 * (1.0 - std::exp(-3.75))).epsilon(1e-12));
        const PhysicalGrid g = m.grid(1.25);
        CHECK(g.y(24, 0) == doctest::Approx(m.bump_height(0.375, 1.25)));
        CHECK(g.y(24, 64) == 1.0);
    }
    SUBCASE("all case grids stay untangled over a period") {
        for (const MotionPrescription& m :
             {MotionPrescription::wavy(25, 4), MotionPrescription::wavy(65, 6), MotionPrescription::wavy_fixed(33),
              MotionPrescription::wavy_fixed(65), MotionPrescription::cavity_stretch(65),
              MotionPrescription::cavity_bump(65), MotionPrescription::pulse_deform_translate(21)}) {
            CAPTURE(to_string(m.kind));
            for (double t = 0.0; t <= 5.0; t += 0.05) REQUIRE_NOTHROW(m.grid(t));
        }
    }
    SUBCASE("case names round-trip") {
        CHECK(motion_case_from_string(to_string(MotionCase::CavityBump)) == MotionCase::CavityBump);
        CHECK_THROWS_AS(motion_case_from_string("spiral"), InvalidArgument);
    }
}
