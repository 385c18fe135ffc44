#include "compactflow/properties.hpp"

#include <cmath>
#include <numbers>

#include "compactflow/bench.hpp"
#include "compactflow/compact_scheme.hpp"
#include "compactflow/flow.hpp"
#include "compactflow/mesh_motion.hpp"
#include "compactflow/metrics.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

namespace {

constexpr double kPi = std::numbers::pi;

PhysicalGrid mapped(const ParamSpace& p, auto fx, auto fy) {
    PhysicalGrid g(p, 0.0);
    for (int j = 0; j < p.n_eta(); ++j)
        for (int i = 0; i < p.n_xi(); ++i) {
            g.x(i, j) = fx(p.xi(i), p.eta(j));
            g.y(i, j) = fy(p.xi(i), p.eta(j));
        }
    return g;
}

Field sample(const PhysicalGrid& g, auto f) {
    Field out = g.param.make_field();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = f(g.x[n], g.y[n]);
    return out;
}

double max_dist(const PhysicalGrid& a, const PhysicalGrid& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.x.size(); ++n)
        m = std::max(m, std::hypot(a.x[n] - b.x[n], a.y[n] - b.y[n]));
    return m;
}

// Stretched base so arc-length blending differs from index blending.
PhysicalGrid stretched(int n) {
    const ParamSpace p = ParamSpace::unit_square(n);
    return mapped(
        p, [](double s, double) { return s * s * (3 - 2 * s) * 0.5 + 0.5 * s; },
        [](double s, double e) { return e + 0.05 * std::sin(kPi * e) * s; });
}

double pade_cubic() {
    const int n = 17;
    const double h = 0.1, x0 = -0.7;
    std::vector<double> f(n);
    double err = 0.0;
    for (int deg = 0; deg <= 3; ++deg) {
        for (int i = 0; i < n; ++i) f[i] = std::pow(x0 + i * h, deg) + 0.5 * (x0 + i * h);
        const std::vector<double> d = pade_derivative_line(f, h);
        for (int i = 0; i < n; ++i) {
            const double exact = (deg == 0 ? 0.0 : deg * std::pow(x0 + i * h, deg - 1)) + 0.5;
            err = std::max(err, std::abs(d[i] - exact));
        }
    }
    return err;
}

double affine_metrics() {
    const ParamSpace p = ParamSpace::unit_square(13);
    const MetricField m = compute_metrics(mapped(
        p, [](double s, double e) { return 1.2 * s + 0.3 * e + 0.1; },
        [](double s, double e) { return 0.2 * s + 0.9 * e; }));
    double err = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        err = std::max({err, std::abs(m.x_xi[n] - 1.2), std::abs(m.x_eta[n] - 0.3), std::abs(m.y_xi[n] - 0.2),
                        std::abs(m.y_eta[n] - 0.9), std::abs(m.jac[n] - 1.02)});
        for (const Field* f : {&m.x_xixi, &m.x_xieta, &m.x_etaeta, &m.y_xixi, &m.y_xieta, &m.y_etaeta,
                               &m.jac_xi, &m.jac_eta})
            err = std::max(err, std::abs((*f)[n]));
    }
    return err;
}

double gcl_conservative() {
    MotionPrescription w = MotionPrescription::wavy_fixed(25, kPi / 24.0, 4);
    const double dt = 0.025;
    double err = 0.0;
    for (int order : {1, 2}) {
        GridHistory h(3);
        std::vector<MetricField> levels;
        for (int l = 0; l < 5; ++l) {
            h.push(w.grid(0.4 + l * dt));
            if (h.size() >= 2) levels.push_back(conservative_metrics(h, order));
        }
        const std::size_t used = static_cast<std::size_t>(order) + 1;
        const GclResidual r =
            gcl_residual(std::span<const MetricField>(levels.data() + levels.size() - used, used), dt, order);
        err = std::max({err, r.max_time(), r.max_spatial()});
    }
    return err;
}

double tfi_translation() {
    const PhysicalGrid base = stretched(17);
    const Vec2 t{0.3, -0.1};
    PhysicalGrid exact = base;
    for (std::size_t n = 0; n < base.x.size(); ++n) {
        exact.x[n] += t.x;
        exact.y[n] += t.y;
    }
    return max_dist(tfi_deform(base, BoundaryDisplacement::uniform(base.param, t)), exact);
}

PhysicalGrid rotated(const PhysicalGrid& base, double angle, Vec2 c) {
    PhysicalGrid out = base;
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (std::size_t n = 0; n < base.x.size(); ++n) {
        const double dx = base.x[n] - c.x, dy = base.y[n] - c.y;
        out.x[n] = c.x + cs * dx - sn * dy;
        out.y[n] = c.y + sn * dx + cs * dy;
    }
    return out;
}

// Rotation is linear in position, so TFI reproduces it on a Cartesian base.
double tfi_rotation() {
    const PhysicalGrid base = PhysicalGrid::identity(ParamSpace::unit_square(17));
    const PhysicalGrid exact = rotated(base, 0.2, {0.5, 0.5});
    return max_dist(tfi_deform(base, BoundaryDisplacement::between(base, exact)), exact);
}

double idw_translation() {
    const PhysicalGrid base = stretched(15);
    const Vec2 t{0.25, 0.4};
    PhysicalGrid exact = base;
    for (std::size_t n = 0; n < base.x.size(); ++n) {
        exact.x[n] += t.x;
        exact.y[n] += t.y;
    }
    return std::max(max_dist(idw_deform(base, BoundaryDisplacement::uniform(base.param, t)), exact),
                    max_dist(idw_deform(base, RigidMotionSample::rigid(base.param, 0.0, {}, t)), exact));
}

double idw_rotation() {
    const PhysicalGrid base = stretched(15);
    const Vec2 c{0.5, 0.5};
    const double angle = 10.0 * kPi / 180.0;
    return max_dist(idw_deform(base, RigidMotionSample::rigid(base.param, angle, c)), rotated(base, angle, c));
}

double operator_quadratic() {
    const ParamSpace p = ParamSpace::unit_square(11);
    const PhysicalGrid g = PhysicalGrid::identity(p);
    const OperatorCoefficients co = elliptic_coefficients(compute_metrics(g));
    ScalarField f(p, sample(g, [](double x, double y) { return x * x + y * y; }));
    close_gradients(f);
    const Field a = apply_operator(co, f);
    double err = 0.0;
    for (int j = 1; j < p.n_eta() - 1; ++j)
        for (int i = 1; i < p.n_xi() - 1; ++i) err = std::max(err, std::abs(a(i, j) + 4.0));
    return err;
}

double rotation_divergence() {
    const ParamSpace p = ParamSpace::square(17, -1.0, 1.0);
    const PhysicalGrid g = mapped(
        p, [](double s, double e) { return 1.2 * s + 0.3 * e; },
        [](double s, double e) { return 0.2 * s + 0.9 * e; });
    const MetricField m = compute_metrics(g);
    const ScalarField u = pade_gradients(ScalarField(p, sample(g, [](double, double y) { return -y; })));
    const ScalarField v = pade_gradients(ScalarField(p, sample(g, [](double x, double) { return x; })));
    return divergence(u, v, m).second;
}

// 1 when two identical runs differ in any bit, else 0.
double determinism() {
    const ParamSpace p = ParamSpace::square(17, 0.0, kPi);
    const PhysicalGrid g = mapped(
        p, [](double s, double e) { return s + 0.08 * std::sin(2 * e); },
        [](double s, double e) { return e + 0.08 * std::sin(2 * s); });
    const OperatorCoefficients co = elliptic_coefficients(compute_metrics(g));
    const Field rhs = sample(g, [](double x, double y) { return 2 * std::sin(x) * std::sin(y); });
    const BoundarySpec bc = BoundarySpec::dirichlet(p, 0.0);
    const ScalarField a = solve_elliptic(co, rhs, bc, {});
    const ScalarField b = solve_elliptic(co, rhs, bc, {});
    if (!(a.phi == b.phi)) return 1.0;

    CaseConfig cfg = CaseConfig::defaults(CaseTag::PulseDeform);
    cfg.grid = 11;
    cfg.report_times = {0.5};
    cfg.t_end = 0.5;
    return run_case(cfg).same_results(run_case(cfg)) ? 0.0 : 1.0;
}

}  // namespace

std::vector<PropertyResult> run_property_suite() {
    struct Check {
        const char* name;
        double (*fn)();
        double tol;
    };
    const Check checks[] = {
        {"pade derivative exact for cubics", pade_cubic, 1e-12},
        {"affine grid metrics exact", affine_metrics, 1e-12},
        {"conservative metrics satisfy the discrete GCL", gcl_conservative, 1e-12},
        {"TFI reproduces a uniform translation", tfi_translation, 1e-10},
        {"TFI reproduces a rigid rotation", tfi_rotation, 1e-10},
        {"IDW reproduces a uniform translation", idw_translation, 1e-10},
        {"quaternion IDW reproduces a rigid rotation", idw_rotation, 1e-10},
        {"compact operator exact for quadratics", operator_quadratic, 1e-10},
        {"rigid rotation is divergence free", rotation_divergence, 1e-12},
        {"solvers are bitwise repeatable", determinism, 0.0},
    };
    std::vector<PropertyResult> out;
    for (const Check& c : checks) {
        const double v = c.fn();
        out.push_back({c.name, v, c.tol, v <= c.tol});
    }
    return out;
}

}  // namespace compactflow
