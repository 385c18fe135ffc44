#pragma once

#include <functional>
#include <utility>

#include "compactflow/compact_scheme.hpp"
#include "compactflow/metrics.hpp"

namespace compactflow {

// Velocity and pressure state of the primitive-variable formulation.
struct PrimitiveState {
    ScalarField u, v, p;
    double re = 100.0;
    double time = 0.0;
};

// Streamfunction-vorticity state.
struct PsiOmegaState {
    ScalarField psi, omega;
    double re = 100.0;
    double time = 0.0;
};

// Boundary rules shared by both formulations. All callbacks receive the
// boundary node, its physical position and the time.
struct FlowBoundary {
    using NodeVector = std::function<Vec2(int i, int j, Vec2 x, double tau)>;
    using NodeScalar = std::function<double(int i, int j, Vec2 x, double tau)>;

    // Fluid velocity on the boundary (no-slip walls: the wall velocity).
    NodeVector velocity;
    // d/dtau of that velocity following the boundary node; zero when unset.
    NodeVector node_acceleration;
    // Streamfunction on the boundary (psi-omega only); zero when unset.
    NodeScalar stream;

    // Stationary no-slip walls with a lid moving at `lid_speed` along +x on
    // the top row j = n_eta - 1 (corners included).
    static FlowBoundary cavity(int n_eta, double lid_speed = 1.0);
};

struct FlowConfig {
    double picard_tol = 1e-8;
    int max_picard = 30;
    // Adds -div(u)/dt to the pressure source so that divergence left by the
    // discretisation decays instead of growing.
    bool divergence_damping = true;
    SchemeConfig momentum{Coupling::Krylov, 1e-10, 50,
                          SolverConfig{SolverMethod::BiCGSTAB, 1e-10, 1e-14, 0, Preconditioner::Jacobi}};
    SchemeConfig elliptic{Coupling::Krylov, 1e-10, 50,
                          SolverConfig{SolverMethod::BiCGSTAB, 1e-10, 1e-14, 0, Preconditioner::ILU}};
};

struct FlowStepReport {
    int picard_iterations = 0;
    double picard_update = 0.0;  // final max-norm velocity change
    int linear_iterations = 0;
    double divergence_max = 0.0;
    std::vector<double> picard_history;
};

// Reusable elliptic factors across steps. `stamp` must change whenever the
// grid changes (use the step index on moving grids, a constant on static ones).
struct FlowWorkspace {
    EllipticCache elliptic;
};

// Physical gradient (f_x, f_y) from parametric gradients:
// f_x = (y_eta f_xi - y_xi f_eta)/J, f_y = (x_xi f_eta - x_eta f_xi)/J.
std::pair<Field, Field> physical_gradient(const MetricField& m, const ScalarField& f);
// Physical Laplacian from compact second derivatives (one-sided at walls).
Field physical_laplacian(const MetricField& m, const ScalarField& f);

// Right-hand side of -lap(p) = grad(u):grad(u)^T = u_x^2 + 2 u_y v_x + v_y^2.
// step_primitive adds the divergence damping of FlowConfig on top.
Field pressure_rhs(const ScalarField& u, const ScalarField& v, const MetricField& m);

// n . grad(p) = n . (lap(u)/Re - u_t - (u.grad)u) at every boundary node,
// indexed like a Field (interior entries zero). lap(u) is taken in curl form,
// (-omega_y, omega_x), which equals it for solenoidal u and keeps the wall
// divergence from feeding back into the pressure. u_t is taken at a fixed
// point: the node acceleration of the boundary velocity minus (x_tau . grad) u.
Field pressure_neumann_data(const ScalarField& u, const ScalarField& v, const MetricField& m, double re,
                            const FlowBoundary& bc, double tau);

// u_x + v_y at every node and its max norm.
std::pair<Field, double> divergence(const ScalarField& u, const ScalarField& v, const MetricField& m);

// One Crank-Nicolson step of the primitive equations from m_n to m_np1 with
// Picard iteration on the convection velocity and the pressure. `previous`
// (the state before `s`) enables an extrapolated initial guess. Throws
// IterationError when Picard does not converge.
PrimitiveState step_primitive(const PrimitiveState& s, const MetricField& m_n, const MetricField& m_np1,
                              double dt, const FlowBoundary& bc, const FlowConfig& cfg,
                              FlowStepReport* report = nullptr, const PrimitiveState* previous = nullptr,
                              FlowWorkspace* ws = nullptr, long grid_stamp = -1);

// Pressure consistent with a velocity field (for initial states).
ScalarField solve_pressure(const ScalarField& u, const ScalarField& v, const MetricField& m, double re,
                           const FlowBoundary& bc, double tau, const FlowConfig& cfg);

// Velocity (psi_y, -psi_x) from a closed streamfunction.
std::pair<Field, Field> velocity_from_stream(const ScalarField& psi, const MetricField& m);

// Wall vorticity by the cell-centre relation between each boundary node and
// its inward neighbour. On grids with g11/J = g22/J = 1 and g12 = 0 this is
//   w0 = -w1 + 2/(J0+J1) [ (2/h)(psi_xi0 - psi_xi1)
//                          + (1/2k)(psi_eta0,j-1 + psi_eta1,j-1 - psi_eta0,j+1 - psi_eta1,j+1) ]
// on the xi = xi_min wall; in general the fluxes carry the metric weights
// g11/J, g22/J and g12/J. Corners average their two edge values. Returns a
// copy of omega with boundary entries replaced.
Field wall_vorticity(const ScalarField& psi, const Field& omega, const MetricField& m);

// Restores compact gradients of psi with the wall values of psi_xi and
// psi_eta taken from the boundary velocity.
void close_stream_gradients(ScalarField& psi, const MetricField& m, const FlowBoundary& bc, double tau);

PsiOmegaState step_psiomega(const PsiOmegaState& s, const MetricField& m_n, const MetricField& m_np1,
                            double dt, const FlowBoundary& bc, const FlowConfig& cfg,
                            FlowStepReport* report = nullptr, const PsiOmegaState* previous = nullptr,
                            FlowWorkspace* ws = nullptr, long grid_stamp = -1);

// Bilinear sample of a node field at physical point p (the cell is located by
// inverting the bilinear map of each candidate cell). Throws InvalidArgument
// when p lies outside the grid.
double sample_at(const PhysicalGrid& g, const Field& f, Vec2 p);

}  // namespace compactflow
