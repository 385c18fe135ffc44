#include "compactflow/linear_solvers.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "compactflow/errors.hpp"

#include <Eigen/Sparse>

namespace compactflow {

namespace {

constexpr std::size_t kNoSlot = std::numeric_limits<std::size_t>::max();

double dot(std::span<const double> a, std::span<const double> b) {
    // fixed left-to-right order keeps results bitwise reproducible
    double s = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void residual(const LinearOperator& A, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
    A.apply(x, r);
    for (std::size_t n = 0; n < r.size(); ++n) r[n] = b[n] - r[n];
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << v;
    return os.str();
}

int iteration_cap(const SolverConfig& cfg, std::size_t n) {
    return cfg.max_iter > 0 ? cfg.max_iter : static_cast<int>(10 * n);
}

void check_config(const SolverConfig& cfg) {
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
        throw InvalidArgument("solver tolerances must be positive");
}

using Precond = std::function<void(std::span<const double>, std::span<double>)>;

Precond jacobi_of(const LinearOperator& M) {
    std::vector<double> minv(M.size());
    M.diagonal(minv);
    for (double& d : minv) d = (d != 0.0) ? 1.0 / d : 1.0;
    return [minv = std::move(minv)](std::span<const double> r, std::span<double> z) {
        for (std::size_t m = 0; m < r.size(); ++m) z[m] = minv[m] * r[m];
    };
}

Precond identity_precond() {
    return [](std::span<const double> r, std::span<double> z) { std::copy(r.begin(), r.end(), z.begin()); };
}

SolveStats bicgstab(const LinearOperator& A, std::span<const double> b, std::span<double> x,
                    const SolverConfig& cfg, const Precond& prec) {
    const std::size_t n = A.size();
    std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), z(n);
    SolveStats st;
    st.rhs_norm = norm2(b);
    const double target = std::max(cfg.rel_tol * st.rhs_norm, cfg.abs_tol);
    const int cap = iteration_cap(cfg, n);
    std::vector<double> trace;

    residual(A, b, x, r);
    double rnorm = norm2(r);
    trace.push_back(rnorm);
    if (rnorm <= target) {
        st.residual = rnorm;
        st.converged = true;
        return st;
    }
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    int restarts = 0;
    // The recurrence residual can drop below the target while the true one
    // sits on a rounding floor above it; give up after a few such restarts
    // that do not halve the best true residual.
    bool stalled = false;
    double best_true = rnorm;
    int flat = 0;
    auto floor_hit = [&](double true_norm) {
        if (true_norm < 0.5 * best_true) {
            best_true = true_norm;
            flat = 0;
        } else if (++flat >= 5) {
            stalled = true;
        }
        return stalled;
    };
    for (int it = 1; it <= cap; ++it) {
        st.iterations = it;
        const double rho_new = dot(rhat, r);
        if (rho_new == 0.0 || omega == 0.0) {
            // breakdown: restart the shadow space from the true residual
            if (++restarts > 20) break;
            residual(A, b, x, r);
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t m = 0; m < n; ++m) p[m] = r[m] + beta * (p[m] - omega * v[m]);
        prec(p, y);
        A.apply(y, v);
        const double rv = dot(rhat, v);
        if (rv == 0.0) {
            rho = 0.0;
            omega = 0.0;
            continue;
        }
        alpha = rho / rv;
        for (std::size_t m = 0; m < n; ++m) s[m] = r[m] - alpha * v[m];
        const double snorm = norm2(s);
        if (snorm <= target) {
            for (std::size_t m = 0; m < n; ++m) x[m] += alpha * y[m];
            residual(A, b, x, r);
            rnorm = norm2(r);
            trace.push_back(rnorm);
            if (rnorm <= target) {
                st.residual = rnorm;
                st.converged = true;
                return st;
            }
            if (floor_hit(rnorm)) break;
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
            continue;
        }
        prec(s, z);
        A.apply(z, t);
        const double tt = dot(t, t);
        omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            x[m] += alpha * y[m] + omega * z[m];
            r[m] = s[m] - omega * t[m];
        }
        rnorm = norm2(r);
        trace.push_back(rnorm);
        if (rnorm <= target) {
            residual(A, b, x, r);
            rnorm = norm2(r);
            if (rnorm <= target) {
                st.residual = rnorm;
                st.converged = true;
                return st;
            }
            if (floor_hit(rnorm)) break;
            rhat = r;
            std::fill(p.begin(), p.end(), 0.0);
            std::fill(v.begin(), v.end(), 0.0);
            rho = alpha = omega = 1.0;
        }
    }
    residual(A, b, x, r);
    st.residual = norm2(r);
    trace.push_back(st.residual);
    throw IterationError("BiCGSTAB " + std::string(stalled ? "stagnated after " : "did not converge in ") +
                             std::to_string(st.iterations) + " iterations (residual " + sci(st.residual) +
                             ", target " + sci(target) + ")",
                         std::move(trace));
}

SolveStats gauss_seidel(const StencilMatrix& A, std::span<const double> b, std::span<double> x,
                        const SolverConfig& cfg) {
    const ParamSpace& p = A.param();
    const std::size_t n = A.size();
    std::vector<double> r(n);
    SolveStats st;
    st.rhs_norm = norm2(b);
    const double target = std::max(cfg.rel_tol * st.rhs_norm, cfg.abs_tol);
    const int cap = iteration_cap(cfg, n);
    std::vector<double> trace;
    for (int it = 0; it <= cap; ++it) {
        if (it % 10 == 0) {
            residual(A, b, x, r);
            const double rn = norm2(r);
            trace.push_back(rn);
            if (rn <= target) {
                st.iterations = it;
                st.residual = rn;
                st.converged = true;
                return st;
            }
        }
        for (int j = 0; j < p.n_eta(); ++j)
            for (int i = 0; i < p.n_xi(); ++i) {
                const std::size_t row = static_cast<std::size_t>(j) * p.n_xi() + i;
                double diag = 0.0, acc = b[row];
                A.for_each_in_row(i, j, [&](std::size_t c, double v) {
                    if (c == row) diag += v;
                    else acc -= v * x[c];
                });
                if (diag == 0.0) throw SingularSystemError("zero diagonal in Gauss-Seidel sweep");
                x[row] = acc / diag;
            }
        st.iterations = it + 1;
    }
    residual(A, b, x, r);
    st.residual = norm2(r);
    trace.push_back(st.residual);
    throw IterationError("Gauss-Seidel did not converge in " + std::to_string(st.iterations) +
                             " sweeps (residual " + sci(st.residual) + ", target " + sci(target) + ")",
                         std::move(trace));
}

}  // namespace

std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys) {
    const std::size_t n = sys.diag.size();
    if (n < 3) throw InvalidArgument("tridiagonal system needs at least 3 rows");
    if (sys.sub.size() != n || sys.super.size() != n || sys.rhs.size() != n)
        throw InvalidArgument("tridiagonal arrays have inconsistent lengths");
    std::vector<double> c(n), d(n), x(n);
    double m = sys.diag[0];
    if (m == 0.0) throw SingularSystemError("zero pivot in row 0");
    c[0] = sys.super[0] / m;
    d[0] = sys.rhs[0] / m;
    for (std::size_t i = 1; i < n; ++i) {
        m = sys.diag[i] - sys.sub[i] * c[i - 1];
        if (m == 0.0) throw SingularSystemError("zero pivot in row " + std::to_string(i));
        c[i] = (i + 1 < n) ? sys.super[i] / m : 0.0;
        d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

StencilMatrix::StencilMatrix(const ParamSpace& p) : param_(p) {
    for (auto& s : stencil_) s.assign(p.size(), 0.0);
    boundary_slot_.assign(p.size(), kNoSlot);
    const auto nodes = boundary_nodes(p);
    boundary_.resize(nodes.size());
    boundary_node_.resize(nodes.size());
    for (std::size_t s = 0; s < nodes.size(); ++s) {
        boundary_node_[s] = idx(nodes[s].i, nodes[s].j);
        boundary_slot_[boundary_node_[s]] = s;
    }
}

std::size_t StencilMatrix::boundary_slot(int i, int j) const {
    const std::size_t s = boundary_slot_[idx(i, j)];
    if (s == kNoSlot) throw InvalidArgument("node is not on the boundary");
    return s;
}

void StencilMatrix::apply(std::span<const double> x, std::span<double> y) const {
    const int nx = param_.n_xi(), ny = param_.n_eta();
    const std::size_t sx = static_cast<std::size_t>(nx);
    for (int j = 1; j < ny - 1; ++j) {
        const std::size_t base = static_cast<std::size_t>(j) * sx;
        for (int i = 1; i < nx - 1; ++i) {
            const std::size_t c = base + i;
            y[c] = stencil_[0][c] * x[c - sx - 1] + stencil_[1][c] * x[c - sx] +
                   stencil_[2][c] * x[c - sx + 1] + stencil_[3][c] * x[c - 1] +
                   stencil_[4][c] * x[c] + stencil_[5][c] * x[c + 1] +
                   stencil_[6][c] * x[c + sx - 1] + stencil_[7][c] * x[c + sx] +
                   stencil_[8][c] * x[c + sx + 1];
        }
    }
    for (std::size_t s = 0; s < boundary_.size(); ++s) {
        const SparseRow& r = boundary_[s];
        double acc = 0.0;
        for (std::size_t m = 0; m < r.cols.size(); ++m) acc += r.vals[m] * x[r.cols[m]];
        y[boundary_node_[s]] = acc;
    }
}

void StencilMatrix::diagonal(std::span<double> d) const {
    for (std::size_t c = 0; c < size(); ++c) d[c] = stencil_[4][c];
    for (std::size_t s = 0; s < boundary_.size(); ++s) {
        const std::size_t row = boundary_node_[s];
        double v = 0.0;
        const SparseRow& r = boundary_[s];
        for (std::size_t m = 0; m < r.cols.size(); ++m)
            if (r.cols[m] == row) v += r.vals[m];
        d[row] = v;
    }
}

SolveStats solve_structured(const LinearOperator& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg) {
    check_config(cfg);
    if (rhs.size() != A.size() || x.size() != A.size())
        throw InvalidArgument("solver vectors do not match the operator size");
    if (cfg.method == SolverMethod::GaussSeidel)
        throw InvalidArgument("Gauss-Seidel needs an explicit StencilMatrix");
    if (cfg.preconditioner == Preconditioner::ILU)
        throw InvalidArgument("ILU needs an explicit approximating StencilMatrix");
    return bicgstab(A, rhs, x, cfg,
                    cfg.preconditioner == Preconditioner::Jacobi ? jacobi_of(A) : identity_precond());
}

SolveStats solve_structured(const LinearOperator& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg,
                            const StencilMatrix& approx, const IluFactor* ilu) {
    check_config(cfg);
    if (rhs.size() != A.size() || x.size() != A.size() || approx.size() != A.size())
        throw InvalidArgument("solver vectors do not match the operator size");
    if (cfg.method == SolverMethod::GaussSeidel)
        throw InvalidArgument("Gauss-Seidel needs an explicit StencilMatrix");
    switch (cfg.preconditioner) {
    case Preconditioner::None:
        return bicgstab(A, rhs, x, cfg, identity_precond());
    case Preconditioner::Jacobi:
        return bicgstab(A, rhs, x, cfg, jacobi_of(approx));
    case Preconditioner::ILU: {
        const IluFactor f = (ilu && !ilu->empty()) ? *ilu : IluFactor(approx);
        return bicgstab(A, rhs, x, cfg,
                        [&f](std::span<const double> r, std::span<double> z) { f.apply(r, z); });
    }
    }
    return {};
}

struct IluFactor::Impl {
    Eigen::IncompleteLUT<double> ilu;
};

IluFactor::IluFactor(const StencilMatrix& a) {
    const ParamSpace& p = a.param();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(a.size() * 9);
    for (int j = 0; j < p.n_eta(); ++j)
        for (int i = 0; i < p.n_xi(); ++i) {
            const int row = j * p.n_xi() + i;
            a.for_each_in_row(i, j, [&](std::size_t c, double v) {
                trip.emplace_back(row, static_cast<int>(c), v);
            });
        }
    Eigen::SparseMatrix<double> m(static_cast<int>(a.size()), static_cast<int>(a.size()));
    m.setFromTriplets(trip.begin(), trip.end());
    auto impl = std::make_shared<Impl>();
    impl->ilu.setDroptol(1e-6);
    impl->ilu.setFillfactor(8);
    impl->ilu.compute(m);
    if (impl->ilu.info() != Eigen::Success) throw SingularSystemError("incomplete LU factorization failed");
    impl_ = std::move(impl);
}

void IluFactor::apply(std::span<const double> r, std::span<double> z) const {
    if (!impl_) throw StateError("empty ILU factor");
    const Eigen::Map<const Eigen::VectorXd> in(r.data(), static_cast<Eigen::Index>(r.size()));
    Eigen::Map<Eigen::VectorXd> out(z.data(), static_cast<Eigen::Index>(z.size()));
    out = impl_->ilu.solve(in);
}

SolveStats solve_structured(const StencilMatrix& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg) {
    check_config(cfg);
    if (rhs.size() != A.size() || x.size() != A.size())
        throw InvalidArgument("solver vectors do not match the operator size");
    for (std::size_t c = 0; c < A.size(); ++c)
        if (!std::isfinite(rhs[c])) throw InvalidArgument("non-finite right-hand side");
    if (cfg.method == SolverMethod::GaussSeidel) return gauss_seidel(A, rhs, x, cfg);
    return solve_structured(static_cast<const LinearOperator&>(A), rhs, x, cfg, A);
}

}  // namespace compactflow
