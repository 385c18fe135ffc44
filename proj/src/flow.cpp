#include "compactflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

namespace {

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

Field negated(const Field& f) {
    Field out = f;
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = -out[n];
    return out;
}

std::string picard_failure(double t, double update) {
    std::ostringstream os;
    os << "Picard iteration did not converge at t = " << t << " (update " << std::scientific
       << std::setprecision(3) << update << ")";
    return os.str();
}

Vec2 node_position(const MetricField& m, int i, int j) { return {m.x(i, j), m.y(i, j)}; }

Vec2 boundary_velocity(const FlowBoundary& bc, const MetricField& m, int i, int j, double tau) {
    if (!bc.velocity) throw InvalidArgument("flow boundary has no velocity rule");
    return bc.velocity(i, j, node_position(m, i, j), tau);
}

// Dirichlet specs for both velocity components at time tau on grid m.
std::pair<BoundarySpec, BoundarySpec> velocity_bcs(const FlowBoundary& bc, const MetricField& m, double tau) {
    BoundarySpec bu(m.param), bv(m.param);
    for (const NodeIndex& n : boundary_nodes(m.param)) {
        const Vec2 w = boundary_velocity(bc, m, n.i, n.j, tau);
        bu.set_dirichlet(n.i, n.j, w.x);
        bv.set_dirichlet(n.i, n.j, w.y);
    }
    return {std::move(bu), std::move(bv)};
}

// 2 f_n - f_{n-1} in the interior, f_n elsewhere.
Field extrapolate(const Field& now, const Field& before) {
    Field out = now;
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = 2.0 * now[n] - before[n];
    return out;
}

void check_state_grid(const ParamSpace& p, const ScalarField& f, const char* what) {
    if (!(f.param == p)) throw InvalidArgument(std::string(what) + " does not live on the step grid");
    if (!f.closed) throw StateError(std::string(what) + " must have closed gradients");
}

// Derivative of `g` along the wall direction at node (i, j); central where
// both neighbours exist, one-sided second order at the ends.
double along(const Field& g, int i, int j, bool along_eta, double step) {
    const int n = along_eta ? g.ny() : g.nx();
    const int c = along_eta ? j : i;
    auto at = [&](int t) { return along_eta ? g(i, t) : g(t, j); };
    if (c == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * step);
    if (c == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * step);
    return (at(c + 1) - at(c - 1)) / (2.0 * step);
}

}  // namespace

FlowBoundary FlowBoundary::cavity(int n_eta, double lid_speed) {
    if (n_eta < 2) throw InvalidArgument("cavity needs at least two eta rows");
    FlowBoundary b;
    b.velocity = [n_eta, lid_speed](int, int j, Vec2, double) {
        return j == n_eta - 1 ? Vec2{lid_speed, 0.0} : Vec2{};
    };
    return b;
}

std::pair<Field, Field> physical_gradient(const MetricField& m, const ScalarField& f) {
    if (!f.closed) throw StateError("physical_gradient needs closed gradients");
    Field fx = m.param.make_field(), fy = m.param.make_field();
    for (std::size_t n = 0; n < fx.size(); ++n) {
        fx[n] = m.dx(n, f.phi_xi[n], f.phi_eta[n]);
        fy[n] = m.dy(n, f.phi_xi[n], f.phi_eta[n]);
    }
    return {std::move(fx), std::move(fy)};
}

Field physical_laplacian(const MetricField& m, const ScalarField& f) {
    if (!f.closed) throw StateError("physical_laplacian needs closed gradients");
    const double h = m.param.h(), k = m.param.k();
    const OperatorCoefficients co = elliptic_coefficients(m);
    const Field fxx = pade_d_xi(f.phi_xi, h);
    const Field fxe = pade_d_eta(f.phi_xi, k);
    const Field fee = pade_d_eta(f.phi_eta, k);
    Field out = m.param.make_field();
    for (std::size_t n = 0; n < out.size(); ++n)
        out[n] = co.alpha1[n] * fxx[n] + co.beta[n] * fxe[n] + co.alpha2[n] * fee[n] -
                 co.chi1[n] * f.phi_xi[n] - co.chi2[n] * f.phi_eta[n];
    return out;
}

Field pressure_rhs(const ScalarField& u, const ScalarField& v, const MetricField& m) {
    const auto [ux, uy] = physical_gradient(m, u);
    const auto [vx, vy] = physical_gradient(m, v);
    Field out = m.param.make_field();
    for (std::size_t n = 0; n < out.size(); ++n)
        out[n] = ux[n] * ux[n] + 2.0 * uy[n] * vx[n] + vy[n] * vy[n];
    return out;
}

Field pressure_neumann_data(const ScalarField& u, const ScalarField& v, const MetricField& m, double re,
                            const FlowBoundary& bc, double tau) {
    const auto [ux, uy] = physical_gradient(m, u);
    const auto [vx, vy] = physical_gradient(m, v);
    // Viscous term in curl form, lap(u) = grad(div u) - curl(omega), with the
    // divergence part dropped: the Laplacian form lets wall divergence grow.
    Field omega = m.param.make_field();
    for (std::size_t n = 0; n < omega.size(); ++n) omega[n] = vx[n] - uy[n];
    const auto [wx_, wy_] = physical_gradient(m, pade_gradients(ScalarField(m.param, std::move(omega))));
    Field g = m.param.make_field();
    for (const NodeIndex& nd : boundary_nodes(m.param)) {
        const std::size_t n = static_cast<std::size_t>(nd.j) * m.param.n_xi() + nd.i;
        const Vec2 acc = bc.node_acceleration ? bc.node_acceleration(nd.i, nd.j, node_position(m, nd.i, nd.j), tau)
                                              : Vec2{};
        const double wx = u.phi[n] - m.x_tau[n], wy = v.phi[n] - m.y_tau[n];
        const Vec2 f{-wy_[n] / re - acc.x - (wx * ux[n] + wy * uy[n]),
                     wx_[n] / re - acc.y - (wx * vx[n] + wy * vy[n])};
        const Vec2 nv = wall_normal(m, nd.i, nd.j);
        g[n] = nv.x * f.x + nv.y * f.y;
    }
    return g;
}

std::pair<Field, double> divergence(const ScalarField& u, const ScalarField& v, const MetricField& m) {
    const auto [ux, uy] = physical_gradient(m, u);
    const auto [vx, vy] = physical_gradient(m, v);
    Field d = m.param.make_field();
    double mx = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        d[n] = ux[n] + vy[n];
        mx = std::max(mx, std::abs(d[n]));
    }
    return {std::move(d), mx};
}

ScalarField solve_pressure(const ScalarField& u, const ScalarField& v, const MetricField& m, double re,
                           const FlowBoundary& bc, double tau, const FlowConfig& cfg) {
    const Field rhs = pressure_rhs(u, v, m);
    const BoundarySpec bp = BoundarySpec::neumann(m, pressure_neumann_data(u, v, m, re, bc, tau));
    return solve_elliptic(elliptic_coefficients(m), rhs, bp, cfg.elliptic);
}

PrimitiveState step_primitive(const PrimitiveState& s, const MetricField& m_n, const MetricField& m_np1,
                              double dt, const FlowBoundary& bc, const FlowConfig& cfg, FlowStepReport* report,
                              const PrimitiveState* previous, FlowWorkspace* ws, long grid_stamp) {
    const ParamSpace& p = m_np1.param;
    if (!(m_n.param == p)) throw InvalidArgument("metric levels live on different grids");
    if (!(dt > 0.0) || !(s.re > 0.0)) throw InvalidArgument("time step and Reynolds number must be positive");
    check_state_grid(p, s.u, "u");
    check_state_grid(p, s.v, "v");
    check_state_grid(p, s.p, "p");
    const double tnp = s.time + dt;
    const double a = 1.0 / s.re;

    const OperatorCoefficients co_n = transformed_coefficients(m_n, a, s.u.phi, s.v.phi);
    const auto [px_n, py_n] = physical_gradient(m_n, s.p);
    const Field su_n = negated(px_n), sv_n = negated(py_n);
    const auto [bu, bv] = velocity_bcs(bc, m_np1, tnp);
    const OperatorCoefficients co_p = elliptic_coefficients(m_np1);

    ScalarField u_k = s.u, v_k = s.v, p_k = s.p;
    if (previous && previous->u.param == p) {
        u_k = pade_gradients(ScalarField(p, extrapolate(s.u.phi, previous->u.phi)));
        v_k = pade_gradients(ScalarField(p, extrapolate(s.v.phi, previous->v.phi)));
        p_k = pade_gradients(ScalarField(p, extrapolate(s.p.phi, previous->p.phi)));
    }
    // wall values of the guess are known exactly
    for (const NodeIndex& n : boundary_nodes(p)) {
        u_k.phi(n.i, n.j) = bu.at(n.i, n.j).g;
        v_k.phi(n.i, n.j) = bv.at(n.i, n.j).g;
    }

    FlowStepReport rep;
    EllipticCache* cache = ws ? &ws->elliptic : nullptr;
    for (int it = 1; it <= cfg.max_picard; ++it) {
        const OperatorCoefficients co_np1 = transformed_coefficients(m_np1, a, u_k.phi, v_k.phi);
        const auto [px, py] = physical_gradient(m_np1, p_k);
        StepStats st;
        ScalarField u_new = cn_step(co_n, co_np1, s.u, su_n, negated(px), dt, bu, cfg.momentum, &st, &u_k.phi);
        rep.linear_iterations += st.linear_iterations;
        ScalarField v_new = cn_step(co_n, co_np1, s.v, sv_n, negated(py), dt, bv, cfg.momentum, &st, &v_k.phi);
        rep.linear_iterations += st.linear_iterations;

        Field rhs = pressure_rhs(u_new, v_new, m_np1);
        if (cfg.divergence_damping) {
            const Field d = divergence(u_new, v_new, m_np1).first;
            for (std::size_t n = 0; n < rhs.size(); ++n) rhs[n] -= d[n] / dt;
        }
        const BoundarySpec bp =
            BoundarySpec::neumann(m_np1, pressure_neumann_data(u_new, v_new, m_np1, s.re, bc, tnp));
        ScalarField p_new = solve_elliptic(co_p, rhs, bp, cfg.elliptic, &st, &p_k.phi, cache, grid_stamp);
        rep.linear_iterations += st.linear_iterations;

        const double upd = std::max(max_diff(u_new.phi, u_k.phi), max_diff(v_new.phi, v_k.phi));
        u_k = std::move(u_new);
        v_k = std::move(v_new);
        p_k = std::move(p_new);
        rep.picard_iterations = it;
        rep.picard_update = upd;
        rep.picard_history.push_back(upd);
        if (upd < cfg.picard_tol) break;
        if (it == cfg.max_picard)
            throw IterationError(picard_failure(tnp, upd), rep.picard_history);
    }
    rep.divergence_max = divergence(u_k, v_k, m_np1).second;
    if (report) *report = std::move(rep);
    return PrimitiveState{std::move(u_k), std::move(v_k), std::move(p_k), s.re, tnp};
}

std::pair<Field, Field> velocity_from_stream(const ScalarField& psi, const MetricField& m) {
    auto [px, py] = physical_gradient(m, psi);
    return {std::move(py), negated(px)};
}

Field wall_vorticity(const ScalarField& psi, const Field& omega, const MetricField& m) {
    if (!psi.closed) throw StateError("wall_vorticity needs closed streamfunction gradients");
    const ParamSpace& p = m.param;
    const int nx = p.n_xi(), ny = p.n_eta();
    const double h = p.h(), k = p.k();
    // fluxes of J lap(psi) = F_xi + G_eta
    Field f = p.make_field(), g = p.make_field();
    for (std::size_t n = 0; n < f.size(); ++n) {
        const double jac = m.jac[n];
        const double q11 = (m.x_eta[n] * m.x_eta[n] + m.y_eta[n] * m.y_eta[n]) / jac;
        const double q22 = (m.x_xi[n] * m.x_xi[n] + m.y_xi[n] * m.y_xi[n]) / jac;
        const double q12 = (m.x_xi[n] * m.x_eta[n] + m.y_xi[n] * m.y_eta[n]) / jac;
        f[n] = q11 * psi.phi_xi[n] - q12 * psi.phi_eta[n];
        g[n] = q22 * psi.phi_eta[n] - q12 * psi.phi_xi[n];
    }
    // Wall formula for a xi = const wall (i0 on the wall, i1 inside).
    auto xi_wall = [&](int i0, int i1, int j) {
        const double sgn = i1 > i0 ? 1.0 : -1.0;
        const double normal = sgn * (2.0 / h) * (f(i0, j) - f(i1, j));
        const double tangential = -(along(g, i0, j, true, k) + along(g, i1, j, true, k));
        return -omega(i1, j) + 2.0 / (m.jac(i0, j) + m.jac(i1, j)) * (normal + tangential);
    };
    auto eta_wall = [&](int i, int j0, int j1) {
        const double sgn = j1 > j0 ? 1.0 : -1.0;
        const double normal = sgn * (2.0 / k) * (g(i, j0) - g(i, j1));
        const double tangential = -(along(f, i, j0, false, h) + along(f, i, j1, false, h));
        return -omega(i, j1) + 2.0 / (m.jac(i, j0) + m.jac(i, j1)) * (normal + tangential);
    };
    Field out = omega;
    for (const NodeIndex& n : boundary_nodes(p)) {
        const bool xw = n.i == 0 || n.i == nx - 1;
        const bool ew = n.j == 0 || n.j == ny - 1;
        double sum = 0.0;
        int cnt = 0;
        if (xw) {
            sum += xi_wall(n.i, n.i == 0 ? 1 : nx - 2, n.j);
            ++cnt;
        }
        if (ew) {
            sum += eta_wall(n.i, n.j, n.j == 0 ? 1 : ny - 2);
            ++cnt;
        }
        out(n.i, n.j) = sum / cnt;
    }
    return out;
}

void close_stream_gradients(ScalarField& psi, const MetricField& m, const FlowBoundary& bc, double tau) {
    const ParamSpace& p = m.param;
    const int nx = p.n_xi(), ny = p.n_eta();
    if (!psi.phi_xi.same_shape(psi.phi)) psi.phi_xi = p.make_field();
    if (!psi.phi_eta.same_shape(psi.phi)) psi.phi_eta = p.make_field();
    Field wxi = p.make_field(), weta = p.make_field();
    for (const NodeIndex& n : boundary_nodes(p)) {
        const Vec2 w = boundary_velocity(bc, m, n.i, n.j, tau);
        // psi_xi = y_xi u - x_xi v, psi_eta = y_eta u - x_eta v
        wxi(n.i, n.j) = m.y_xi(n.i, n.j) * w.x - m.x_xi(n.i, n.j) * w.y;
        weta(n.i, n.j) = m.y_eta(n.i, n.j) * w.x - m.x_eta(n.i, n.j) * w.y;
    }
    for (int j = 0; j < ny; ++j) {
        psi.phi_xi(0, j) = wxi(0, j);
        psi.phi_xi(nx - 1, j) = wxi(nx - 1, j);
    }
    pade_d_xi_clamped(psi.phi, p.h(), psi.phi_xi);
    for (int i = 0; i < nx; ++i) {
        psi.phi_eta(i, 0) = weta(i, 0);
        psi.phi_eta(i, ny - 1) = weta(i, ny - 1);
    }
    pade_d_eta_clamped(psi.phi, p.k(), psi.phi_eta);
    // tangential derivatives along the walls follow the wall velocity too
    for (int i = 0; i < nx; ++i) {
        psi.phi_xi(i, 0) = wxi(i, 0);
        psi.phi_xi(i, ny - 1) = wxi(i, ny - 1);
    }
    for (int j = 0; j < ny; ++j) {
        psi.phi_eta(0, j) = weta(0, j);
        psi.phi_eta(nx - 1, j) = weta(nx - 1, j);
    }
    psi.closed = true;
}

PsiOmegaState step_psiomega(const PsiOmegaState& s, const MetricField& m_n, const MetricField& m_np1,
                            double dt, const FlowBoundary& bc, const FlowConfig& cfg, FlowStepReport* report,
                            const PsiOmegaState* previous, FlowWorkspace* ws, long grid_stamp) {
    const ParamSpace& p = m_np1.param;
    if (!(m_n.param == p)) throw InvalidArgument("metric levels live on different grids");
    if (!(dt > 0.0) || !(s.re > 0.0)) throw InvalidArgument("time step and Reynolds number must be positive");
    check_state_grid(p, s.psi, "psi");
    check_state_grid(p, s.omega, "omega");
    const double tnp = s.time + dt;
    const double a = 1.0 / s.re;

    const auto [u_n, v_n] = velocity_from_stream(s.psi, m_n);
    const OperatorCoefficients co_n = transformed_coefficients(m_n, a, u_n, v_n);
    const OperatorCoefficients co_p = elliptic_coefficients(m_np1);
    const Field zero = p.make_field();

    BoundarySpec bpsi(p);
    for (const NodeIndex& n : boundary_nodes(p))
        bpsi.set_dirichlet(n.i, n.j, bc.stream ? bc.stream(n.i, n.j, node_position(m_np1, n.i, n.j), tnp) : 0.0);

    ScalarField psi_k = s.psi, omega_k = s.omega;
    if (previous && previous->psi.param == p) {
        psi_k = ScalarField(p, extrapolate(s.psi.phi, previous->psi.phi));
        omega_k = pade_gradients(ScalarField(p, extrapolate(s.omega.phi, previous->omega.phi)));
    }
    for (const NodeIndex& n : boundary_nodes(p)) psi_k.phi(n.i, n.j) = bpsi.at(n.i, n.j).g;
    close_stream_gradients(psi_k, m_np1, bc, tnp);
    auto [u_k, v_k] = velocity_from_stream(psi_k, m_np1);

    FlowStepReport rep;
    EllipticCache* cache = ws ? &ws->elliptic : nullptr;
    for (int it = 1; it <= cfg.max_picard; ++it) {
        const OperatorCoefficients co_np1 = transformed_coefficients(m_np1, a, u_k, v_k);
        const Field wall = wall_vorticity(psi_k, omega_k.phi, m_np1);
        BoundarySpec bw(p);
        for (const NodeIndex& n : boundary_nodes(p)) bw.set_dirichlet(n.i, n.j, wall(n.i, n.j));
        StepStats st;
        ScalarField omega_new = cn_step(co_n, co_np1, s.omega, zero, zero, dt, bw, cfg.momentum, &st, &omega_k.phi);
        rep.linear_iterations += st.linear_iterations;
        ScalarField psi_new = solve_elliptic(co_p, omega_new.phi, bpsi, cfg.elliptic, &st, &psi_k.phi, cache, grid_stamp);
        rep.linear_iterations += st.linear_iterations;
        close_stream_gradients(psi_new, m_np1, bc, tnp);
        auto [u_new, v_new] = velocity_from_stream(psi_new, m_np1);

        const double upd = std::max(max_diff(u_new, u_k), max_diff(v_new, v_k));
        psi_k = std::move(psi_new);
        omega_k = std::move(omega_new);
        u_k = std::move(u_new);
        v_k = std::move(v_new);
        rep.picard_iterations = it;
        rep.picard_update = upd;
        rep.picard_history.push_back(upd);
        if (upd < cfg.picard_tol) break;
        if (it == cfg.max_picard)
            throw IterationError(picard_failure(tnp, upd), rep.picard_history);
    }
    // keep the boundary vorticity consistent with the final streamfunction
    omega_k.phi = wall_vorticity(psi_k, omega_k.phi, m_np1);
    close_gradients(omega_k);
    rep.divergence_max = 0.0;
    if (report) *report = std::move(rep);
    return PsiOmegaState{std::move(psi_k), std::move(omega_k), s.re, tnp};
}

double sample_at(const PhysicalGrid& g, const Field& f, Vec2 pt) {
    const ParamSpace& p = g.param;
    if (!f.same_shape(g.x)) throw InvalidArgument("field does not match the grid");
    constexpr double tol = 1e-10;
    for (int j = 0; j + 1 < p.n_eta(); ++j)
        for (int i = 0; i + 1 < p.n_xi(); ++i) {
            const Vec2 c[4] = {g.node(i, j), g.node(i + 1, j), g.node(i + 1, j + 1), g.node(i, j + 1)};
            double xmin = c[0].x, xmax = c[0].x, ymin = c[0].y, ymax = c[0].y;
            for (const Vec2& q : c) {
                xmin = std::min(xmin, q.x);
                xmax = std::max(xmax, q.x);
                ymin = std::min(ymin, q.y);
                ymax = std::max(ymax, q.y);
            }
            if (pt.x < xmin - tol || pt.x > xmax + tol || pt.y < ymin - tol || pt.y > ymax + tol) continue;
            // Newton on the bilinear map
            double s = 0.5, t = 0.5;
            for (int it = 0; it < 30; ++it) {
                const Vec2 q = c[0] * ((1 - s) * (1 - t)) + c[1] * (s * (1 - t)) + c[2] * (s * t) + c[3] * ((1 - s) * t);
                const Vec2 ds = (c[1] - c[0]) * (1 - t) + (c[2] - c[3]) * t;
                const Vec2 dt = (c[3] - c[0]) * (1 - s) + (c[2] - c[1]) * s;
                const Vec2 r = q - pt;
                const double det = ds.x * dt.y - ds.y * dt.x;
                if (det == 0.0) break;
                const double es = (r.x * dt.y - r.y * dt.x) / det;
                const double et = (ds.x * r.y - ds.y * r.x) / det;
                s -= es;
                t -= et;
                if (std::abs(es) + std::abs(et) < 1e-15) break;
            }
            if (s < -tol || s > 1 + tol || t < -tol || t > 1 + tol) continue;
            return f(i, j) * (1 - s) * (1 - t) + f(i + 1, j) * s * (1 - t) + f(i + 1, j + 1) * s * t +
                   f(i, j + 1) * (1 - s) * t;
        }
    throw InvalidArgument("sample point lies outside the grid");
}

}  // namespace compactflow
