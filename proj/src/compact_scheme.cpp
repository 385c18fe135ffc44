#include "compactflow/compact_scheme.hpp"

#include <cmath>
#include <string>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

namespace {

// Share of the gradient terms moved into the 9-point part of the split
// operator (phi_xi ~ delta_xi phi). Half of it minimises the Fourier
// contraction factor of the lagged remainder for pure diffusion (1/3 instead
// of 1/2 with fully lagged gradients).
constexpr double kSplitSecond = 0.5;
constexpr double kSplitMixed = 0.5;

double max_abs_span(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void check_shape(const ParamSpace& p, const Field& f, const char* what) {
    if (f.nx() != p.n_xi() || f.ny() != p.n_eta())
        throw InvalidArgument(std::string(what) + " does not match the parametric grid");
}

// A phi at interior node c from phi and its gradients.
inline double eval_node(const OperatorCoefficients& co, const double* phi, const double* px,
                        const double* pe, std::size_t c, std::size_t sx, double h, double k) {
    const double a1 = co.alpha1[c], a2 = co.alpha2[c], b = co.beta[c];
    const double d2x = (phi[c + 1] - 2.0 * phi[c] + phi[c - 1]) / (h * h);
    const double d2y = (phi[c + sx] - 2.0 * phi[c] + phi[c - sx]) / (k * k);
    const double dxy =
        (phi[c + sx + 1] - phi[c + sx - 1] - phi[c - sx + 1] + phi[c - sx - 1]) / (4.0 * h * k);
    const double dx_px = (px[c + 1] - px[c - 1]) / (2.0 * h);
    const double dy_px = (px[c + sx] - px[c - sx]) / (2.0 * k);
    const double dx_pe = (pe[c + 1] - pe[c - 1]) / (2.0 * h);
    const double dy_pe = (pe[c + sx] - pe[c - sx]) / (2.0 * k);
    return -2.0 * a1 * d2x - 2.0 * a2 * d2y + b * dxy + a1 * dx_px - b * dy_px + co.chi1[c] * px[c] +
           a2 * dy_pe - b * dx_pe + co.chi2[c] * pe[c];
}

void check_ellipticity(const OperatorCoefficients& co) {
    const ParamSpace& p = co.param;
    for (int j = 0; j < p.n_eta(); ++j)
        for (int i = 0; i < p.n_xi(); ++i) {
            const double a1 = co.alpha1(i, j), a2 = co.alpha2(i, j), b = co.beta(i, j);
            if (!(a1 > 0.0) || !(a2 > 0.0)) throw CoefficientError("non-positive diffusion coefficient", i, j);
            if (!(b * b <= 4.0 * a1 * a2 * (1.0 + 1e-12)))
                throw CoefficientError("diffusion matrix is not positive definite", i, j);
            if (!std::isfinite(co.chi1(i, j)) || !std::isfinite(co.chi2(i, j)))
                throw CoefficientError("non-finite convection coefficient", i, j);
        }
}

OperatorCoefficients build(const MetricField& m, double a, const Field* c1, const Field* c2,
                           bool time_terms) {
    const ParamSpace& p = m.param;
    OperatorCoefficients co;
    co.param = p;
    co.diffusion = a;
    co.alpha1 = p.make_field();
    co.alpha2 = p.make_field();
    co.beta = p.make_field();
    co.chi1 = p.make_field();
    co.chi2 = p.make_field();
    for (std::size_t n = 0; n < p.size(); ++n) {
        const double xs = m.x_xi[n], xe = m.x_eta[n], ys = m.y_xi[n], ye = m.y_eta[n];
        const double jac = m.jac[n], j2 = jac * jac, j3 = j2 * jac;
        const double g11 = xe * xe + ye * ye;  // |x_eta|^2
        const double g22 = xs * xs + ys * ys;  // |x_xi|^2
        const double g12 = xs * xe + ys * ye;
        co.alpha1[n] = a / j2 * g11;
        co.alpha2[n] = a / j2 * g22;
        co.beta[n] = -2.0 * a / j2 * g12;
        const double u = c1 ? (*c1)[n] : 0.0;
        const double v = c2 ? (*c2)[n] : 0.0;
        const double jt1 = time_terms ? m.j1[n] : 0.0;
        const double jt2 = time_terms ? m.j2[n] : 0.0;
        co.chi1[n] = (-jt1 + u * ye - v * xe) / jac -
                     a / j3 *
                         (m.jac_eta[n] * g12 - m.jac_xi[n] * g11 +
                          jac * (xe * m.x_xieta[n] + ye * m.y_xieta[n] - xs * m.x_etaeta[n] -
                                 ys * m.y_etaeta[n]));
        co.chi2[n] = (-jt2 - u * ys + v * xs) / jac -
                     a / j3 *
                         (m.jac_xi[n] * g12 - m.jac_eta[n] * g22 +
                          jac * (xs * m.x_xieta[n] + ys * m.y_xieta[n] - xe * m.x_xixi[n] -
                                 ye * m.y_xixi[n]));
    }
    if (a > 0.0) check_ellipticity(co);
    return co;
}

// Explicit 9-point part of the split operator, with boundary rows. Interior
// rows are shift * I + scale * A_split.
StencilMatrix build_split(const OperatorCoefficients& co, double shift, double scale,
                          const BoundarySpec& bc) {
    const ParamSpace& p = co.param;
    const int nx = p.n_xi(), ny = p.n_eta();
    const double h = p.h(), k = p.k();
    StencilMatrix a(p);
    for (int j = 1; j < ny - 1; ++j)
        for (int i = 1; i < nx - 1; ++i) {
            const double a1 = co.alpha1(i, j), a2 = co.alpha2(i, j), b = co.beta(i, j);
            const double cx = -(2.0 - kSplitSecond) * a1 / (h * h);
            const double cy = -(2.0 - kSplitSecond) * a2 / (k * k);
            const double cxy = b * (1.0 - 2.0 * kSplitMixed) / (4.0 * h * k);
            const double u = co.chi1(i, j) / (2.0 * h), v = co.chi2(i, j) / (2.0 * k);
            a.coef(i, j, 0, 0) = shift + scale * (-2.0 * cx - 2.0 * cy);
            a.coef(i, j, 1, 0) = scale * (cx + u);
            a.coef(i, j, -1, 0) = scale * (cx - u);
            a.coef(i, j, 0, 1) = scale * (cy + v);
            a.coef(i, j, 0, -1) = scale * (cy - v);
            a.coef(i, j, 1, 1) = scale * cxy;
            a.coef(i, j, -1, -1) = scale * cxy;
            a.coef(i, j, 1, -1) = -scale * cxy;
            a.coef(i, j, -1, 1) = -scale * cxy;
        }
    for (const NodeIndex& nd : boundary_nodes(p)) {
        const int i = nd.i, j = nd.j;
        SparseRow& row = a.boundary_row(i, j);
        const std::size_t c = static_cast<std::size_t>(j) * nx + i;
        if (bc.pin && bc.pin->i == i && bc.pin->j == j) {
            row.add(c, 1.0);
            continue;
        }
        const BoundaryCondition& b = bc.at(i, j);
        row.add(c, b.theta1);
        if (b.kind != BoundaryKind::Neumann || b.theta2 == 0.0) continue;
        // wall-normal parts of the gradient through the one-sided closures
        if (i == 0 || i == nx - 1) {
            const double sgn = i == 0 ? 1.0 : -1.0;
            for (int m = 0; m < 4; ++m)
                row.add(static_cast<std::size_t>(j) * nx + (i == 0 ? m : nx - 1 - m),
                        b.theta2 * b.c_xi * sgn * kClosure[m] / h);
        }
        if (j == 0 || j == ny - 1) {
            const double sgn = j == 0 ? 1.0 : -1.0;
            for (int m = 0; m < 4; ++m)
                row.add(static_cast<std::size_t>(j == 0 ? m : ny - 1 - m) * nx + i,
                        b.theta2 * b.c_eta * sgn * kClosure[m] / k);
        }
    }
    return a;
}

// The full compact system: interior rows shift * phi + scale * A phi with
// Pade gradients of phi, boundary rows from bc.
class CompactSystem : public LinearOperator {
public:
    CompactSystem(const OperatorCoefficients& co, double shift, double scale, const BoundarySpec& bc,
                  const StencilMatrix& split)
        : co_(co), shift_(shift), scale_(scale), bc_(bc), split_(split), work_(co.param.make_field()),
          px_(co.param.make_field()), pe_(co.param.make_field()), bnodes_(boundary_nodes(co.param)) {}

    std::size_t size() const override { return co_.param.size(); }

    void apply(std::span<const double> x, std::span<double> y) const override {
        const ParamSpace& p = co_.param;
        const int nx = p.n_xi(), ny = p.n_eta();
        const std::size_t sx = static_cast<std::size_t>(nx);
        std::copy(x.begin(), x.end(), work_.data());
        pade_d_xi(work_, p.h(), px_);
        pade_d_eta(work_, p.k(), pe_);
        const double* phi = work_.data();
        for (int j = 1; j < ny - 1; ++j)
            for (int i = 1; i < nx - 1; ++i) {
                const std::size_t c = j * sx + i;
                y[c] = shift_ * phi[c] + scale_ * eval_node(co_, phi, px_.data(), pe_.data(), c, sx,
                                                            p.h(), p.k());
            }
        for (const NodeIndex& nd : bnodes_) {
            const std::size_t c = nd.j * sx + nd.i;
            if (bc_.pin && bc_.pin->i == nd.i && bc_.pin->j == nd.j) {
                y[c] = phi[c];
                continue;
            }
            const BoundaryCondition& b = bc_.nodes[c];
            double v = b.theta1 * phi[c];
            if (b.kind == BoundaryKind::Neumann) v += b.theta2 * (b.c_xi * px_[c] + b.c_eta * pe_[c]);
            y[c] = v;
        }
    }

    void diagonal(std::span<double> d) const override { split_.diagonal(d); }

private:
    const OperatorCoefficients& co_;
    double shift_, scale_;
    const BoundarySpec& bc_;
    const StencilMatrix& split_;
    mutable Field work_, px_, pe_;
    std::vector<NodeIndex> bnodes_;
};

// Drives either coupling strategy on op x = rhs, x holding the initial guess.
void solve_system(const CompactSystem& op, const StencilMatrix& split, std::span<const double> rhs,
                  std::span<double> x, const SchemeConfig& cfg, StepStats& st, const IluFactor* ilu) {
    if (cfg.coupling == Coupling::Krylov) {
        const SolveStats s = solve_structured(op, rhs, x, cfg.linear, split, ilu);
        st.inner_iterations = 1;
        st.linear_iterations += s.iterations;
        st.residual = s.residual;
        st.history.push_back(s.residual);
        return;
    }
    // Lagged-gradient iteration: split * delta = rhs - op(x), x += delta.
    IluFactor local;
    if (cfg.linear.preconditioner == Preconditioner::ILU && (!ilu || ilu->empty())) {
        local = IluFactor(split);
        ilu = &local;
    }
    const std::size_t n = x.size();
    std::vector<double> r(n), delta(n);
    for (int it = 1; it <= cfg.max_inner; ++it) {
        op.apply(x, r);
        for (std::size_t c = 0; c < n; ++c) r[c] = rhs[c] - r[c];
        std::fill(delta.begin(), delta.end(), 0.0);
        SolverConfig inner = cfg.linear;
        const SolveStats s = solve_structured(split, r, delta, inner, split, ilu);
        st.linear_iterations += s.iterations;
        for (std::size_t c = 0; c < n; ++c) x[c] += delta[c];
        const double upd = max_abs_span(delta);
        st.inner_iterations = it;
        st.residual = upd;
        st.history.push_back(upd);
        if (upd < cfg.inner_tol) return;
    }
    throw IterationError("gradient coupling did not converge in " + std::to_string(cfg.max_inner) +
                             " iterations",
                         st.history);
}

void check_config(const SchemeConfig& cfg) {
    if (!(cfg.inner_tol > 0.0) || cfg.max_inner < 1)
        throw InvalidArgument("inner_tol must be positive and max_inner at least 1");
}

}  // namespace

void close_gradients(ScalarField& f) {
    check_shape(f.param, f.phi, "field");
    if (!f.phi_xi.same_shape(f.phi)) f.phi_xi = f.param.make_field();
    if (!f.phi_eta.same_shape(f.phi)) f.phi_eta = f.param.make_field();
    pade_d_xi(f.phi, f.param.h(), f.phi_xi);
    pade_d_eta(f.phi, f.param.k(), f.phi_eta);
    f.closed = true;
}

ScalarField pade_gradients(ScalarField f) {
    close_gradients(f);
    return f;
}

OperatorCoefficients transformed_coefficients(const MetricField& m, double a, const Field& c1,
                                              const Field& c2) {
    if (!(a >= 0.0)) throw InvalidArgument("diffusion coefficient must be non-negative");
    check_shape(m.param, c1, "convection velocity");
    check_shape(m.param, c2, "convection velocity");
    return build(m, a, &c1, &c2, true);
}

OperatorCoefficients transformed_coefficients(const MetricField& m, double a, Vec2 c) {
    const Field c1 = m.param.make_field(c.x), c2 = m.param.make_field(c.y);
    return transformed_coefficients(m, a, c1, c2);
}

OperatorCoefficients elliptic_coefficients(const MetricField& m) {
    return build(m, 1.0, nullptr, nullptr, false);
}

Field apply_operator(const OperatorCoefficients& co, const ScalarField& f) {
    if (!f.closed) throw StateError("apply_operator needs closed gradients");
    if (!(f.param == co.param)) throw InvalidArgument("field and coefficients live on different grids");
    const ParamSpace& p = co.param;
    const std::size_t sx = static_cast<std::size_t>(p.n_xi());
    Field out = p.make_field();
    for (int j = 1; j < p.n_eta() - 1; ++j)
        for (int i = 1; i < p.n_xi() - 1; ++i) {
            const std::size_t c = j * sx + i;
            out[c] = eval_node(co, f.phi.data(), f.phi_xi.data(), f.phi_eta.data(), c, sx, p.h(), p.k());
        }
    return out;
}

BoundarySpec::BoundarySpec(const ParamSpace& p) : param(p), nodes(p.size()) {}

void BoundarySpec::set_dirichlet(int i, int j, double g) {
    if (!param.is_boundary(i, j)) throw InvalidArgument("Dirichlet data on an interior node");
    at(i, j) = BoundaryCondition{BoundaryKind::Dirichlet, 1.0, 0.0, g, 0.0, 0.0};
}

void BoundarySpec::set_robin(int i, int j, const MetricField& m, double theta1, double theta2,
                             double g) {
    if (!param.is_boundary(i, j)) throw InvalidArgument("Neumann data on an interior node");
    const auto [cx, ce] = wall_normal_coefficients(m, i, j);
    at(i, j) = BoundaryCondition{BoundaryKind::Neumann, theta1, theta2, g, cx, ce};
}

BoundarySpec BoundarySpec::dirichlet(const ParamSpace& p, const Field& values) {
    check_shape(p, values, "boundary values");
    BoundarySpec bc(p);
    for (const NodeIndex& n : boundary_nodes(p)) bc.set_dirichlet(n.i, n.j, values(n.i, n.j));
    return bc;
}

BoundarySpec BoundarySpec::dirichlet(const ParamSpace& p, double value) {
    return dirichlet(p, p.make_field(value));
}

BoundarySpec BoundarySpec::neumann(const MetricField& m, const Field& g) {
    check_shape(m.param, g, "Neumann data");
    BoundarySpec bc(m.param);
    for (const NodeIndex& n : boundary_nodes(m.param)) bc.set_neumann(n.i, n.j, m, g(n.i, n.j));
    bc.pin = NodeIndex{m.param.n_xi() / 2, 0};
    bc.set_quadrature(m);
    return bc;
}

void BoundarySpec::set_quadrature(const MetricField& m) {
    const ParamSpace& p = m.param;
    const int nx = p.n_xi(), ny = p.n_eta();
    area_weight = p.make_field();
    flux_weight = p.make_field();
    auto w = [](int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) area_weight(i, j) = m.jac(i, j) * p.h() * p.k() * w(i, nx) * w(j, ny);
    for (const NodeIndex& n : boundary_nodes(p)) {
        double len = 0.0;
        if (n.j == 0 || n.j == ny - 1)
            len += std::hypot(m.x_xi(n.i, n.j), m.y_xi(n.i, n.j)) * p.h() * w(n.i, nx);
        if (n.i == 0 || n.i == nx - 1)
            len += std::hypot(m.x_eta(n.i, n.j), m.y_eta(n.i, n.j)) * p.k() * w(n.j, ny);
        flux_weight(n.i, n.j) = len;
    }
}

bool BoundarySpec::all_neumann() const {
    for (const NodeIndex& n : boundary_nodes(param)) {
        const BoundaryCondition& b = at(n.i, n.j);
        if (b.kind != BoundaryKind::Neumann || b.theta1 != 0.0) return false;
    }
    return true;
}

void BoundarySpec::validate() const {
    if (nodes.size() != param.size()) throw InvalidArgument("boundary spec does not match the grid");
    for (const NodeIndex& n : boundary_nodes(param)) {
        const BoundaryCondition& b = at(n.i, n.j);
        switch (b.kind) {
        case BoundaryKind::Interior:
            throw InvalidArgument("boundary node (" + std::to_string(n.i) + ", " + std::to_string(n.j) +
                                  ") has no condition");
        case BoundaryKind::Periodic:
            throw InvalidArgument("periodic boundaries are not supported");
        case BoundaryKind::Dirichlet:
            if (b.theta2 != 0.0 || b.theta1 == 0.0)
                throw InvalidArgument("Dirichlet rows need theta2 = 0 and theta1 != 0");
            break;
        case BoundaryKind::Neumann:
            if (b.theta2 == 0.0 && b.theta1 == 0.0) throw InvalidArgument("empty Robin row");
            break;
        }
    }
    if (pin) {
        if (!param.is_boundary(pin->i, pin->j)) throw InvalidArgument("pinned node must lie on the boundary");
        // corner Neumann rows are combinations of their neighbours, so a
        // pin there would leave the constant mode unresolved
        const bool xi_end = pin->i == 0 || pin->i == param.n_xi() - 1;
        const bool eta_end = pin->j == 0 || pin->j == param.n_eta() - 1;
        if (xi_end && eta_end) throw InvalidArgument("pinned node must not be a corner");
    }
}

Vec2 wall_normal(const MetricField& m, int i, int j) {
    const ParamSpace& p = m.param;
    if (!p.is_boundary(i, j)) throw InvalidArgument("wall normal requested at an interior node");
    const std::size_t n = static_cast<std::size_t>(j) * p.n_xi() + i;
    const double jac = m.jac[n];
    const Vec2 gxi{m.y_eta[n] / jac, -m.x_eta[n] / jac};
    const Vec2 geta{-m.y_xi[n] / jac, m.x_xi[n] / jac};
    Vec2 sum;
    int walls = 0;
    if (i == 0 || i == p.n_xi() - 1) {
        sum += gxi * ((i == 0 ? -1.0 : 1.0) / gxi.norm());
        ++walls;
    }
    if (j == 0 || j == p.n_eta() - 1) {
        sum += geta * ((j == 0 ? -1.0 : 1.0) / geta.norm());
        ++walls;
    }
    return sum * (1.0 / walls);
}

std::pair<double, double> wall_normal_coefficients(const MetricField& m, int i, int j) {
    const Vec2 nv = wall_normal(m, i, j);
    const std::size_t n = static_cast<std::size_t>(j) * m.param.n_xi() + i;
    const double jac = m.jac[n];
    const double cx = (nv.x * m.y_eta[n] - nv.y * m.x_eta[n]) / jac;
    const double ce = (-nv.x * m.y_xi[n] + nv.y * m.x_xi[n]) / jac;
    return {cx, ce};
}

ScalarField cn_step(const OperatorCoefficients& co_n, const OperatorCoefficients& co_np1,
                    const ScalarField& f_n, const Field& s_n, const Field& s_np1, double dt,
                    const BoundarySpec& bc, const SchemeConfig& cfg, StepStats* stats,
                    const Field* guess) {
    check_config(cfg);
    if (!(dt > 0.0)) throw InvalidArgument("time step must be positive");
    const ParamSpace& p = co_np1.param;
    if (!(co_n.param == p) || !(f_n.param == p) || !(bc.param == p))
        throw InvalidArgument("cn_step inputs live on different grids");
    check_shape(p, s_n, "source");
    check_shape(p, s_np1, "source");
    bc.validate();
    if (!f_n.closed) throw StateError("cn_step needs closed gradients at level n");

    const Field an = apply_operator(co_n, f_n);
    Field rhs = p.make_field();
    for (std::size_t c = 0; c < p.size(); ++c)
        rhs[c] = f_n.phi[c] - 0.5 * dt * an[c] + 0.5 * dt * (s_n[c] + s_np1[c]);
    for (const NodeIndex& n : boundary_nodes(p)) rhs(n.i, n.j) = bc.at(n.i, n.j).g;

    const StencilMatrix split = build_split(co_np1, 1.0, 0.5 * dt, bc);
    const CompactSystem op(co_np1, 1.0, 0.5 * dt, bc, split);
    ScalarField out(p, guess ? *guess : f_n.phi);
    for (const NodeIndex& n : boundary_nodes(p)) {
        const BoundaryCondition& b = bc.at(n.i, n.j);
        if (b.kind == BoundaryKind::Dirichlet) out.phi(n.i, n.j) = b.g / b.theta1;
    }
    StepStats st;
    solve_system(op, split, rhs.span(), out.phi.span(), cfg, st, nullptr);
    close_gradients(out);
    if (stats) *stats = std::move(st);
    return out;
}

double pin_residual(const ScalarField& f, const BoundarySpec& bc) {
    const NodeIndex n = *bc.pin;
    const BoundaryCondition& c = bc.at(n.i, n.j);
    return c.theta1 * f.phi(n.i, n.j) + c.theta2 * (c.c_xi * f.phi_xi(n.i, n.j) + c.c_eta * f.phi_eta(n.i, n.j)) - c.g;
}

double compatibility_defect(const Field& rhs, const BoundarySpec& bc) {
    if (bc.area_weight.empty()) return 0.0;
    double integral = 0.0, area = 0.0;
    for (std::size_t c = 0; c < rhs.size(); ++c) {
        integral += rhs[c] * bc.area_weight[c];
        area += bc.area_weight[c];
    }
    for (const NodeIndex& n : boundary_nodes(bc.param))
        integral += bc.at(n.i, n.j).g * bc.flux_weight(n.i, n.j);
    return integral / area;
}

ScalarField solve_elliptic(const OperatorCoefficients& co, const Field& rhs, const BoundarySpec& bc,
                           const SchemeConfig& cfg, StepStats* stats, const Field* guess,
                           EllipticCache* cache, long cache_stamp) {
    check_config(cfg);
    const ParamSpace& p = co.param;
    if (!(bc.param == p)) throw InvalidArgument("boundary spec lives on a different grid");
    check_shape(p, rhs, "right-hand side");
    bc.validate();
    const bool floating = bc.all_neumann();
    if (floating && !bc.pin) throw InvalidArgument("all-Neumann problem needs a pinned node");

    Field b = rhs;
    if (floating) {
        const double d = compatibility_defect(rhs, bc);
        for (std::size_t c = 0; c < b.size(); ++c) b[c] -= d;
    }
    for (const NodeIndex& n : boundary_nodes(p)) b(n.i, n.j) = bc.at(n.i, n.j).g;
    if (bc.pin) b(bc.pin->i, bc.pin->j) = 0.0;

    const StencilMatrix split = build_split(co, 0.0, 1.0, bc);
    const CompactSystem op(co, 0.0, 1.0, bc, split);
    const IluFactor* ilu = nullptr;
    if (cache && cfg.linear.preconditioner == Preconditioner::ILU) {
        if (cache_stamp < 0 || cache->stamp != cache_stamp || cache->ilu.empty()) {
            cache->ilu = IluFactor(split);
            cache->unit_response = ScalarField();
            cache->stamp = cache_stamp;
        }
        ilu = &cache->ilu;
    } else if (cache) {
        cache->unit_response = ScalarField();
    }
    ScalarField out(p, guess ? *guess : p.make_field());
    for (const NodeIndex& n : boundary_nodes(p)) {
        const BoundaryCondition& bcn = bc.at(n.i, n.j);
        if (bcn.kind == BoundaryKind::Dirichlet) out.phi(n.i, n.j) = bcn.g / bcn.theta1;
    }
    StepStats st;
    solve_system(op, split, b.span(), out.phi.span(), cfg, st, ilu);
    close_gradients(out);
    if (floating) {
        // The quadrature shift only approximates the discrete left null
        // vector; the remainder would sit in the dropped pin row as a local
        // defect. Add the multiple of a uniform source that zeroes it.
        const ScalarField* unit = nullptr;
        ScalarField local;
        if (cache && cache->unit_response.closed) {
            unit = &cache->unit_response;
        } else {
            Field ub = p.make_field(-1.0);
            for (const NodeIndex& n : boundary_nodes(p)) ub(n.i, n.j) = 0.0;
            local = ScalarField(p, p.make_field());
            StepStats su;
            solve_system(op, split, ub.span(), local.phi.span(), cfg, su, ilu);
            st.linear_iterations += su.linear_iterations;
            close_gradients(local);
            if (cache) {
                cache->unit_response = std::move(local);
                unit = &cache->unit_response;
            } else {
                unit = &local;
            }
        }
        BoundarySpec homogeneous = bc;
        for (BoundaryCondition& c : homogeneous.nodes) c.g = 0.0;
        const double r0 = pin_residual(out, bc);
        const double r1 = pin_residual(*unit, homogeneous);
        if (r1 == 0.0) throw SingularSystemError("uniform source leaves the pinned row unchanged");
        const double lambda = -r0 / r1;
        for (std::size_t c = 0; c < out.phi.size(); ++c) {
            out.phi[c] += lambda * unit->phi[c];
            out.phi_xi[c] += lambda * unit->phi_xi[c];
            out.phi_eta[c] += lambda * unit->phi_eta[c];
        }
    }
    if (bc.pin) {
        const double ref = out.phi(bc.pin->i, bc.pin->j);
        if (ref != 0.0)
            for (std::size_t c = 0; c < out.phi.size(); ++c) out.phi[c] -= ref;
    }
    if (stats) *stats = std::move(st);
    return out;
}

}  // namespace compactflow
