#pragma once

#include <optional>
#include <vector>

#include "compactflow/field.hpp"
#include "compactflow/grid.hpp"
#include "compactflow/linear_solvers.hpp"
#include "compactflow/metrics.hpp"

namespace compactflow {

// A transported quantity with its compact gradients on the parametric grid.
struct ScalarField {
    ParamSpace param;
    Field phi, phi_xi, phi_eta;
    bool closed = false;  // gradients consistent with phi

    ScalarField() = default;
    explicit ScalarField(const ParamSpace& p, double value = 0.0)
        : param(p), phi(p.make_field(value)), phi_xi(p.make_field()), phi_eta(p.make_field()),
          closed(true) {}
    ScalarField(const ParamSpace& p, Field values)
        : param(p), phi(std::move(values)), phi_xi(p.make_field()), phi_eta(p.make_field()) {}
};

// Fills phi_xi and phi_eta with Pade derivatives (line solves along every
// grid line, explicit closures at the ends) and marks the field closed.
ScalarField pade_gradients(ScalarField f);
void close_gradients(ScalarField& f);

// Per-node coefficients of
//   A = -alpha1 d_xixi - beta d_xieta - alpha2 d_etaeta + chi1 d_xi + chi2 d_eta.
struct OperatorCoefficients {
    ParamSpace param;
    Field alpha1, alpha2, beta, chi1, chi2;
    double diffusion = 0.0;
};

// Coefficients of the transformed convection-diffusion operator
// phi_t + c.grad(phi) - a lap(phi) on the moving grid. Grid motion enters
// through -J1/J and -J2/J in chi. Throws CoefficientError when a > 0 and the
// diffusion matrix is not positive definite at some node.
OperatorCoefficients transformed_coefficients(const MetricField& m, double a, const Field& c1,
                                              const Field& c2);
OperatorCoefficients transformed_coefficients(const MetricField& m, double a, Vec2 c);

// Same with a = 1, c = 0 and no time metrics: the transformed -Laplacian.
OperatorCoefficients elliptic_coefficients(const MetricField& m);

// Fourth-order compact evaluation of A phi at interior nodes; boundary nodes
// are set to zero. Throws StateError if f's gradients are not closed.
Field apply_operator(const OperatorCoefficients& co, const ScalarField& f);

enum class BoundaryKind { Interior, Dirichlet, Neumann, Periodic };

// theta1 phi + theta2 (c_xi phi_xi + c_eta phi_eta) = g. For a Neumann node
// (c_xi, c_eta) expresses the outward normal derivative in the parametric
// gradients; see wall_normal_coefficients.
struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Interior;
    double theta1 = 1.0;
    double theta2 = 0.0;
    double g = 0.0;
    double c_xi = 0.0;
    double c_eta = 0.0;
};

// One condition per node (interior entries unused), plus an optional pinned
// node for all-Neumann problems.
struct BoundarySpec {
    ParamSpace param;
    std::vector<BoundaryCondition> nodes;
    std::optional<NodeIndex> pin;
    // Quadrature weights for the all-Neumann compatibility shift: J h k times
    // trapezoid weights, and boundary arc length per node. Set from metrics by
    // neumann() or set_quadrature().
    Field area_weight, flux_weight;

    BoundarySpec() = default;
    explicit BoundarySpec(const ParamSpace& p);

    BoundaryCondition& at(int i, int j) { return nodes[static_cast<std::size_t>(j) * param.n_xi() + i]; }
    const BoundaryCondition& at(int i, int j) const {
        return nodes[static_cast<std::size_t>(j) * param.n_xi() + i];
    }

    void set_dirichlet(int i, int j, double g);
    void set_robin(int i, int j, const MetricField& m, double theta1, double theta2, double g);
    void set_neumann(int i, int j, const MetricField& m, double g) { set_robin(i, j, m, 0.0, 1.0, g); }

    // Every boundary node Dirichlet with the value taken from `values`.
    static BoundarySpec dirichlet(const ParamSpace& p, const Field& values);
    static BoundarySpec dirichlet(const ParamSpace& p, double value);
    // Every boundary node Neumann with data g (indexed like a Field); pinned at
    // the middle of the eta = eta_min edge.
    static BoundarySpec neumann(const MetricField& m, const Field& g);

    void set_quadrature(const MetricField& m);
    bool all_neumann() const;
    // Throws InvalidArgument for unset boundary nodes, unsupported kinds or
    // Dirichlet nodes with theta2 != 0 / theta1 == 0, and for corner pins.
    void validate() const;
};

// Outward wall direction at a boundary node: n = -grad(xi)/|grad(xi)| on the
// xi = xi_min wall, +grad(eta)/|grad(eta)| on eta = eta_max, and so on.
// Corner nodes get the mean of the two wall normals (not renormalised) so a
// corner row is the average of the two edge rows.
Vec2 wall_normal(const MetricField& m, int i, int j);
// (n.grad(xi), n.grad(eta)) for the n above.
std::pair<double, double> wall_normal_coefficients(const MetricField& m, int i, int j);

enum class Coupling { FixedPoint, Krylov };

struct SchemeConfig {
    // FixedPoint: lag the gradients, solve the 9-point system, refresh the
    // gradients, repeat. Krylov: BiCGSTAB on the full compact operator with
    // the 9-point system as preconditioner. Both converge to the same discrete
    // solution.
    Coupling coupling = Coupling::Krylov;
    double inner_tol = 1e-10;
    int max_inner = 50;
    SolverConfig linear{SolverMethod::BiCGSTAB, 1e-11, 1e-14, 0, Preconditioner::ILU};
};

struct StepStats {
    int inner_iterations = 0;   // fixed-point sweeps (1 in Krylov mode)
    int linear_iterations = 0;  // summed Krylov iterations
    double residual = 0.0;      // final max-norm update (fixed point) or residual
    std::vector<double> history;
};

// Crank-Nicolson step
//   (1 + dt/2 A^{n+1}) phi^{n+1} = (1 - dt/2 A^n) phi^n + dt/2 (s^n + s^{n+1})
// with boundary rows from bc. guess (optional) seeds the iteration.
ScalarField cn_step(const OperatorCoefficients& co_n, const OperatorCoefficients& co_np1,
                    const ScalarField& f_n, const Field& s_n, const Field& s_np1, double dt,
                    const BoundarySpec& bc, const SchemeConfig& cfg, StepStats* stats = nullptr,
                    const Field* guess = nullptr);

// Reusable preconditioner state for repeated elliptic solves on an unchanged
// grid (the pressure and streamfunction systems of a static mesh).
struct EllipticCache {
    IluFactor ilu;
    ScalarField unit_response;  // all-Neumann response to a uniform source
    long stamp = -1;  // caller-chosen version of the coefficients; -1 never matches
};

// Solves A~ phi = rhs with bc. All-Neumann problems must declare bc.pin; their
// right-hand side is shifted by a uniform constant chosen so that the Neumann
// row replaced by the pin holds as well (the quadrature defect is the first
// estimate), and the result is normalised to zero at the pin.
ScalarField solve_elliptic(const OperatorCoefficients& co, const Field& rhs, const BoundarySpec& bc,
                           const SchemeConfig& cfg, StepStats* stats = nullptr,
                           const Field* guess = nullptr, EllipticCache* cache = nullptr,
                           long cache_stamp = -1);

// theta1 phi + theta2 (c_xi phi_xi + c_eta phi_eta) - g at the pinned node.
double pin_residual(const ScalarField& f, const BoundarySpec& bc);

// Compatibility defect (integral of rhs plus boundary integral of g) divided
// by the domain area; solve_elliptic subtracts it from rhs. Zero when the
// quadrature weights are not set.
double compatibility_defect(const Field& rhs, const BoundarySpec& bc);

}  // namespace compactflow
