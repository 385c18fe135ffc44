#include "compactflow/metrics.hpp"

#include <array>
#include <vector>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

MetricField::MetricField(const ParamSpace& p) : param(p) {
    for (Field* f : {&x, &y, &x_xi, &x_eta, &y_xi, &y_eta, &x_xixi, &x_xieta, &x_etaeta, &y_xixi,
                     &y_xieta, &y_etaeta, &jac, &jac_xi, &jac_eta, &x_tau, &y_tau, &j1, &j2})
        *f = p.make_field();
}

namespace {

void check_jacobian(const MetricField& m) {
    for (int j = 0; j < m.param.n_eta(); ++j)
        for (int i = 0; i < m.param.n_xi(); ++i)
            if (!(m.jac(i, j) > 0.0))
                throw TangledMeshError("non-positive Jacobian", i, j, m.jac(i, j));
}

Field product(const Field& a, const Field& b) {
    Field out(a.nx(), a.ny());
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] * b[n];
    return out;
}

void assemble_time_jacobians(MetricField& m) {
    for (std::size_t n = 0; n < m.jac.size(); ++n) {
        m.j1[n] = m.x_tau[n] * m.y_eta[n] - m.y_tau[n] * m.x_eta[n];
        m.j2[n] = m.x_xi[n] * m.y_tau[n] - m.y_xi[n] * m.x_tau[n];
    }
}

}  // namespace

MetricField compute_metrics(const PhysicalGrid& grid) {
    const ParamSpace& p = grid.param;
    if (grid.x.nx() != p.n_xi() || grid.x.ny() != p.n_eta() || !grid.y.same_shape(grid.x))
        throw InvalidArgument("grid arrays do not match the parametric space");
    const double h = p.h(), k = p.k();
    MetricField m(p);
    m.time = grid.time;
    m.x = grid.x;
    m.y = grid.y;
    pade_d_xi(grid.x, h, m.x_xi);
    pade_d_eta(grid.x, k, m.x_eta);
    pade_d_xi(grid.y, h, m.y_xi);
    pade_d_eta(grid.y, k, m.y_eta);
    pade_d_xi(m.x_xi, h, m.x_xixi);
    pade_d_eta(m.x_xi, k, m.x_xieta);
    pade_d_eta(m.x_eta, k, m.x_etaeta);
    pade_d_xi(m.y_xi, h, m.y_xixi);
    pade_d_eta(m.y_xi, k, m.y_xieta);
    pade_d_eta(m.y_eta, k, m.y_etaeta);
    for (std::size_t n = 0; n < m.jac.size(); ++n)
        m.jac[n] = m.x_xi[n] * m.y_eta[n] - m.x_eta[n] * m.y_xi[n];
    check_jacobian(m);
    pade_d_xi(m.jac, h, m.jac_xi);
    pade_d_eta(m.jac, k, m.jac_eta);
    return m;
}

int effective_time_order(std::size_t snapshots, int order) {
    if (order != 1 && order != 2) throw InvalidArgument("grid-velocity order must be 1 or 2");
    if (snapshots < 2) throw InsufficientHistoryError(2, static_cast<int>(snapshots));
    return snapshots >= 3 ? order : 1;
}

Field backward_difference(std::span<const Field* const> levels, double dt, int order) {
    if (static_cast<int>(levels.size()) < order + 1)
        throw InsufficientHistoryError(order + 1, static_cast<int>(levels.size()));
    const std::size_t last = levels.size() - 1;
    const Field& f0 = *levels[last];
    const Field& f1 = *levels[last - 1];
    Field out(f0.nx(), f0.ny());
    if (order == 1) {
        for (std::size_t n = 0; n < out.size(); ++n) out[n] = (f0[n] - f1[n]) / dt;
    } else {
        const Field& f2 = *levels[last - 2];
        for (std::size_t n = 0; n < out.size(); ++n)
            out[n] = (3.0 * f0[n] - 4.0 * f1[n] + f2[n]) / (2.0 * dt);
    }
    return out;
}

void compute_time_metrics(MetricField& m, const GridHistory& history, int order) {
    const int ord = effective_time_order(history.size(), order);
    const double dt = history.dt();
    std::vector<const Field*> xs, ys;
    for (std::size_t n = ord + 1; n-- > 0;) {
        xs.push_back(&history.back(n).x);
        ys.push_back(&history.back(n).y);
    }
    m.x_tau = backward_difference(xs, dt, ord);
    m.y_tau = backward_difference(ys, dt, ord);
    assemble_time_jacobians(m);
}

MetricField compute_time_metrics(const GridHistory& history, int order) {
    if (history.empty()) throw InsufficientHistoryError(2, 0);
    MetricField m = compute_metrics(history.newest());
    compute_time_metrics(m, history, order);
    return m;
}

MetricField conservative_metrics(const GridHistory& history, int order) {
    if (history.empty()) throw InsufficientHistoryError(2, 0);
    const int ord = effective_time_order(history.size(), order);
    const double dt = history.dt();
    const PhysicalGrid& g = history.newest();
    const double h = g.param.h(), k = g.param.k();
    MetricField m = compute_metrics(g);
    compute_time_metrics(m, history, ord);

    // Products (x_eta y), (x y_eta), (x_xi y), (x y_xi) at every level used
    // by the time derivative, oldest first.
    std::vector<Field> xe_y, x_ye, xs_y, x_ys;
    for (std::size_t n = ord + 1; n-- > 0;) {
        const PhysicalGrid& gl = history.back(n);
        xe_y.push_back(product(pade_d_eta(gl.x, k), gl.y));
        x_ye.push_back(product(gl.x, pade_d_eta(gl.y, k)));
        xs_y.push_back(product(pade_d_xi(gl.x, h), gl.y));
        x_ys.push_back(product(gl.x, pade_d_xi(gl.y, h)));
    }
    auto tau = [&](const std::vector<Field>& seq) {
        std::vector<const Field*> ptrs;
        for (const Field& f : seq) ptrs.push_back(&f);
        return backward_difference(ptrs, dt, ord);
    };
    const Field& xs_y_n = xs_y.back();
    const Field& xe_y_n = xe_y.back();
    const Field& x_ye_n = x_ye.back();
    const Field& x_ys_n = x_ys.back();

    const Field a = pade_d_eta(xs_y_n, k);
    const Field b = pade_d_xi(xe_y_n, h);
    const Field c = pade_d_xi(x_ye_n, h);
    const Field d = pade_d_eta(x_ys_n, k);
    for (std::size_t n = 0; n < m.jac.size(); ++n) m.jac[n] = 0.5 * (a[n] - b[n] + c[n] - d[n]);

    const Field xt_y = product(m.x_tau, g.y);
    const Field x_yt = product(g.x, m.y_tau);
    // J1 = [(x_tau y)_eta - (x_eta y)_tau + (x y_eta)_tau - (x y_tau)_eta] / 2
    const Field j1a = pade_d_eta(xt_y, k);
    const Field j1b = tau(xe_y);
    const Field j1c = tau(x_ye);
    const Field j1d = pade_d_eta(x_yt, k);
    // J2 = [(x_xi y)_tau - (x_tau y)_xi + (x y_tau)_xi - (x y_xi)_tau] / 2
    const Field j2a = tau(xs_y);
    const Field j2b = pade_d_xi(xt_y, h);
    const Field j2c = pade_d_xi(x_yt, h);
    const Field j2d = tau(x_ys);
    for (std::size_t n = 0; n < m.jac.size(); ++n) {
        m.j1[n] = 0.5 * (j1a[n] - j1b[n] + j1c[n] - j1d[n]);
        m.j2[n] = 0.5 * (j2a[n] - j2b[n] + j2c[n] - j2d[n]);
    }
    check_jacobian(m);
    pade_d_xi(m.jac, h, m.jac_xi);
    pade_d_eta(m.jac, k, m.jac_eta);
    return m;
}

GclResidual gcl_residual(std::span<const MetricField> levels, double dt, int order) {
    if (levels.empty()) throw InsufficientHistoryError(1, 0);
    const MetricField& m = levels.back();
    for (const MetricField& l : levels)
        if (!(l.param == m.param)) throw InvalidArgument("metric levels have mismatched shapes");
    const double h = m.param.h(), k = m.param.k();
    GclResidual r;

    if (levels.size() >= 2) {
        const int ord = effective_time_order(levels.size(), order);
        std::vector<const Field*> js;
        for (const MetricField& l : levels) js.push_back(&l.jac);
        const Field jt = backward_difference(js, dt, ord);
        const Field j1x = pade_d_xi(m.j1, h);
        const Field j2y = pade_d_eta(m.j2, k);
        r.time = Field(m.jac.nx(), m.jac.ny());
        for (std::size_t n = 0; n < jt.size(); ++n) r.time[n] = jt[n] - j1x[n] - j2y[n];
    } else {
        // A single level can only be static: dJ/dtau = 0.
        const Field j1x = pade_d_xi(m.j1, h);
        const Field j2y = pade_d_eta(m.j2, k);
        r.time = Field(m.jac.nx(), m.jac.ny());
        for (std::size_t n = 0; n < j1x.size(); ++n) r.time[n] = -j1x[n] - j2y[n];
    }

    const Field a = pade_d_xi(m.y_eta, h);
    const Field b = pade_d_eta(m.y_xi, k);
    const Field c = pade_d_xi(m.x_eta, h);
    const Field d = pade_d_eta(m.x_xi, k);
    r.spatial_x = Field(a.nx(), a.ny());
    r.spatial_y = Field(a.nx(), a.ny());
    for (std::size_t n = 0; n < a.size(); ++n) {
        r.spatial_x[n] = a[n] - b[n];
        r.spatial_y[n] = -c[n] + d[n];
    }
    return r;
}

}  // namespace compactflow
