#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "compactflow/grid.hpp"

namespace compactflow {

struct TridiagonalSystem {
    std::vector<double> sub;    // sub[0] unused
    std::vector<double> diag;
    std::vector<double> super;  // super[n-1] unused
    std::vector<double> rhs;
};

// Thomas elimination. Throws SingularSystemError on a zero pivot.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& sys);

// Anything that can be applied to a vector. Iterative solvers only need
// this, so the coupled compact operator can be used matrix-free.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::size_t size() const = 0;
    virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
    // Diagonal estimate for point-Jacobi preconditioning.
    virtual void diagonal(std::span<double> d) const = 0;
};

// A sparse row used for boundary nodes (identity, one-sided closures, ...).
struct SparseRow {
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    void add(std::size_t c, double v) {
        for (std::size_t n = 0; n < cols.size(); ++n)
            if (cols[n] == c) { vals[n] += v; return; }
        cols.push_back(c);
        vals.push_back(v);
    }
};

// Structured matrix on a ParamSpace: interior nodes carry a 9-point stencil
// over (i-1..i+1, j-1..j+1), boundary nodes carry explicit sparse rows.
// Stencil slot s = (dj + 1) * 3 + (di + 1).
class StencilMatrix : public LinearOperator {
public:
    StencilMatrix() = default;
    explicit StencilMatrix(const ParamSpace& p);

    const ParamSpace& param() const { return param_; }
    std::size_t size() const override { return param_.size(); }

    double& coef(int i, int j, int di, int dj) {
        return stencil_[(dj + 1) * 3 + (di + 1)][idx(i, j)];
    }
    double coef(int i, int j, int di, int dj) const {
        return stencil_[(dj + 1) * 3 + (di + 1)][idx(i, j)];
    }
    SparseRow& boundary_row(int i, int j) { return boundary_[boundary_slot(i, j)]; }
    const SparseRow& boundary_row(int i, int j) const { return boundary_[boundary_slot(i, j)]; }

    void apply(std::span<const double> x, std::span<double> y) const override;
    void diagonal(std::span<double> d) const override;

    // Row access for Gauss-Seidel; calls f(col, value) for each entry.
    template <class F>
    void for_each_in_row(int i, int j, F&& f) const;

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * param_.n_xi() + i; }
    std::size_t boundary_slot(int i, int j) const;

    ParamSpace param_;
    std::array<std::vector<double>, 9> stencil_;
    std::vector<SparseRow> boundary_;
    std::vector<std::size_t> boundary_slot_;  // node -> slot, or npos
    std::vector<std::size_t> boundary_node_;  // slot -> node
};

enum class SolverMethod { BiCGSTAB, GaussSeidel };
enum class Preconditioner { None, Jacobi, ILU };

struct SolverConfig {
    SolverMethod method = SolverMethod::BiCGSTAB;
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    int max_iter = 0;  // 0 means 10 * N
    Preconditioner preconditioner = Preconditioner::Jacobi;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;       // recomputed ||b - A x||_2 at exit
    double rhs_norm = 0.0;
    bool converged = false;
};

// Solves A x = rhs starting from x (the initial guess). Success is decided on
// a residual recomputed from scratch. Throws IterationError carrying the
// residual trace when max_iter is exhausted.
SolveStats solve_structured(const LinearOperator& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg);

// Gauss-Seidel needs explicit rows, so it only accepts a StencilMatrix.
SolveStats solve_structured(const StencilMatrix& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg);

// Threshold incomplete LU of a StencilMatrix. Cheap to copy; factor once and
// reuse while the matrix does not change.
class IluFactor {
public:
    IluFactor() = default;
    explicit IluFactor(const StencilMatrix& a);
    bool empty() const { return !impl_; }
    void apply(std::span<const double> r, std::span<double> z) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

// BiCGSTAB on a (possibly matrix-free) operator A, preconditioned through an
// explicit approximation M of A: Jacobi uses diag(M), ILU factors M unless a
// prebuilt factor is passed in.
SolveStats solve_structured(const LinearOperator& A, std::span<const double> rhs,
                            std::span<double> x, const SolverConfig& cfg,
                            const StencilMatrix& approx, const IluFactor* ilu = nullptr);

// ---- template implementation ----

template <class F>
void StencilMatrix::for_each_in_row(int i, int j, F&& f) const {
    if (param_.is_boundary(i, j)) {
        const SparseRow& r = boundary_row(i, j);
        for (std::size_t n = 0; n < r.cols.size(); ++n) f(r.cols[n], r.vals[n]);
        return;
    }
    const std::size_t c = idx(i, j);
    for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
            const double v = stencil_[(dj + 1) * 3 + (di + 1)][c];
            if (v != 0.0) f(idx(i + di, j + dj), v);
        }
}

}  // namespace compactflow
