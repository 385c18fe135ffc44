#pragma once

#include <span>
#include <vector>

#include "compactflow/field.hpp"

namespace compactflow {

// Fourth-order compact first derivative of a line of samples.
//
// Interior nodes solve the tridiagonal relation
//     f'[i-1]/6 + 2 f'[i]/3 + f'[i+1]/6 = (f[i+1] - f[i-1]) / (2 s),
// while the two end nodes use explicit one-sided third-order closures
//     f'[0]   = (-11 f[0] + 18 f[1] - 9 f[2] + 2 f[3]) / (6 s)
// and its mirror image. Exact for cubics everywhere on the line.
//
// Requires n >= 5 and spacing > 0.
void pade_derivative_line(std::span<const double> values, double spacing, std::span<double> out);
std::vector<double> pade_derivative_line(std::span<const double> values, double spacing);

// Same operator applied along every grid line of a 2D field.
void pade_d_xi(const Field& f, double h, Field& out);
void pade_d_eta(const Field& f, double k, Field& out);
// Variants that keep the end values already stored in `out` (known boundary
// derivatives) and solve only the interior relation.
void pade_d_xi_clamped(const Field& f, double h, Field& out);
void pade_d_eta_clamped(const Field& f, double k, Field& out);
Field pade_d_xi(const Field& f, double h);
Field pade_d_eta(const Field& f, double k);

// Explicit one-sided closure weights (already divided by 6) used at the
// low end of a line; the high end uses the negated mirror.
inline constexpr double kClosure[4] = {-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0};

}  // namespace compactflow
