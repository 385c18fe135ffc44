#include "compactflow/pade.hpp"

#include <string>

#include "compactflow/errors.hpp"

namespace compactflow {

namespace {

void check_line(std::size_t n, double spacing) {
    if (n < 5)
        throw StencilSupportError("compact derivative needs at least 5 nodes per line, got " +
                                  std::to_string(n));
    if (!(spacing > 0.0)) throw InvalidArgument("grid spacing must be positive");
}

// Reciprocal pivots of the (1, 4, 1) interior system for a line of n nodes.
std::vector<double> thomas_pivots(int n) {
    std::vector<double> inv(n, 0.0);
    double m = 4.0;
    inv[1] = 1.0 / m;
    for (int k = 2; k <= n - 2; ++k) {
        m = 4.0 - inv[k - 1];
        inv[k] = 1.0 / m;
    }
    return inv;
}

// Derivative along a strided line. `out` may not alias `f`. With `clamped`
// the end values already in `out` are kept as boundary derivatives.
void line_kernel(const double* f, double* out, int n, std::ptrdiff_t stride, double s,
                 const std::vector<double>& inv, bool clamped = false) {
    auto F = [&](int k) { return f[k * stride]; };
    auto O = [&](int k) -> double& { return out[k * stride]; };
    const double six_s = 6.0 * s;
    const double three_over_s = 3.0 / s;
    if (!clamped) {
        O(0) = (-11.0 * F(0) + 18.0 * F(1) - 9.0 * F(2) + 2.0 * F(3)) / six_s;
        O(n - 1) = (11.0 * F(n - 1) - 18.0 * F(n - 2) + 9.0 * F(n - 3) - 2.0 * F(n - 4)) / six_s;
    }
    // forward sweep, storing the modified rhs in place
    double prev = O(0);
    for (int k = 1; k <= n - 2; ++k) {
        double r = three_over_s * (F(k + 1) - F(k - 1)) - prev;
        if (k == n - 2) r -= O(n - 1);
        prev = r * inv[k];
        O(k) = prev;
    }
    for (int k = n - 3; k >= 1; --k) O(k) -= inv[k] * O(k + 1);
}

}  // namespace

void pade_derivative_line(std::span<const double> values, double spacing, std::span<double> out) {
    check_line(values.size(), spacing);
    if (out.size() != values.size()) throw InvalidArgument("output line has the wrong length");
    const int n = static_cast<int>(values.size());
    line_kernel(values.data(), out.data(), n, 1, spacing, thomas_pivots(n));
}

std::vector<double> pade_derivative_line(std::span<const double> values, double spacing) {
    std::vector<double> out(values.size());
    pade_derivative_line(values, spacing, out);
    return out;
}

void pade_d_xi(const Field& f, double h, Field& out) {
    check_line(static_cast<std::size_t>(f.nx()), h);
    if (!out.same_shape(f)) out = Field(f.nx(), f.ny());
    const auto inv = thomas_pivots(f.nx());
    for (int j = 0; j < f.ny(); ++j)
        line_kernel(f.data() + f.index(0, j), out.data() + out.index(0, j), f.nx(), 1, h, inv);
}

void pade_d_eta(const Field& f, double k, Field& out) {
    const int nx = f.nx();
    const int n = f.ny();
    check_line(static_cast<std::size_t>(n), k);
    if (!out.same_shape(f)) out = Field(nx, n);
    const auto inv = thomas_pivots(n);
    // Same arithmetic as line_kernel, swept row by row so the inner loop is
    // contiguous. Each column is an independent line.
    auto F = [&](int i, int j) { return f(i, j); };
    const double six_k = 6.0 * k;
    const double three_over_k = 3.0 / k;
    for (int i = 0; i < nx; ++i) {
        out(i, 0) = (-11.0 * F(i, 0) + 18.0 * F(i, 1) - 9.0 * F(i, 2) + 2.0 * F(i, 3)) / six_k;
        out(i, n - 1) =
            (11.0 * F(i, n - 1) - 18.0 * F(i, n - 2) + 9.0 * F(i, n - 3) - 2.0 * F(i, n - 4)) / six_k;
    }
    for (int j = 1; j <= n - 2; ++j) {
        const double piv = inv[j];
        for (int i = 0; i < nx; ++i) {
            double r = three_over_k * (F(i, j + 1) - F(i, j - 1)) - out(i, j - 1);
            if (j == n - 2) r -= out(i, n - 1);
            out(i, j) = r * piv;
        }
    }
    for (int j = n - 3; j >= 1; --j) {
        const double piv = inv[j];
        for (int i = 0; i < nx; ++i) out(i, j) -= piv * out(i, j + 1);
    }
}

void pade_d_xi_clamped(const Field& f, double h, Field& out) {
    check_line(static_cast<std::size_t>(f.nx()), h);
    if (!out.same_shape(f)) throw InvalidArgument("clamped derivative needs end values in out");
    const auto inv = thomas_pivots(f.nx());
    for (int j = 0; j < f.ny(); ++j)
        line_kernel(f.data() + f.index(0, j), out.data() + out.index(0, j), f.nx(), 1, h, inv, true);
}

void pade_d_eta_clamped(const Field& f, double k, Field& out) {
    check_line(static_cast<std::size_t>(f.ny()), k);
    if (!out.same_shape(f)) throw InvalidArgument("clamped derivative needs end values in out");
    const auto inv = thomas_pivots(f.ny());
    for (int i = 0; i < f.nx(); ++i)
        line_kernel(f.data() + i, out.data() + i, f.ny(), f.nx(), k, inv, true);
}

Field pade_d_xi(const Field& f, double h) {
    Field out(f.nx(), f.ny());
    pade_d_xi(f, h, out);
    return out;
}

Field pade_d_eta(const Field& f, double k) {
    Field out(f.nx(), f.ny());
    pade_d_eta(f, k, out);
    return out;
}

}  // namespace compactflow
