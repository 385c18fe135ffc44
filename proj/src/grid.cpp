#include "compactflow/grid.hpp"

#include <cmath>
#include <string>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

ParamSpace::ParamSpace(int n_xi, int n_eta, double xi_min, double xi_max, double eta_min,
                       double eta_max)
    : n_xi_(n_xi), n_eta_(n_eta), xi_min_(xi_min), xi_max_(xi_max), eta_min_(eta_min),
      eta_max_(eta_max) {
    if (n_xi < 5 || n_eta < 5)
        throw StencilSupportError("parametric grid needs at least 5 nodes per direction, got " +
                                  std::to_string(n_xi) + " x " + std::to_string(n_eta));
    if (!(xi_max > xi_min) || !(eta_max > eta_min))
        throw InvalidArgument("parametric bounds must be increasing");
    h_ = (xi_max - xi_min) / (n_xi - 1);
    k_ = (eta_max - eta_min) / (n_eta - 1);
}

std::vector<NodeIndex> boundary_nodes(const ParamSpace& p) {
    const int nx = p.n_xi(), ny = p.n_eta();
    std::vector<NodeIndex> out;
    out.reserve(2 * (nx + ny) - 4);
    for (int i = 0; i < nx - 1; ++i) out.push_back({i, 0});
    for (int j = 0; j < ny - 1; ++j) out.push_back({nx - 1, j});
    for (int i = nx - 1; i > 0; --i) out.push_back({i, ny - 1});
    for (int j = ny - 1; j > 0; --j) out.push_back({0, j});
    return out;
}

PhysicalGrid PhysicalGrid::identity(const ParamSpace& p, double t) {
    PhysicalGrid g(p, t);
    for (int j = 0; j < p.n_eta(); ++j)
        for (int i = 0; i < p.n_xi(); ++i) {
            g.x(i, j) = p.xi(i);
            g.y(i, j) = p.eta(j);
        }
    return g;
}

void check_positive_jacobian(const PhysicalGrid& g) {
    const Field xs = pade_d_xi(g.x, g.param.h());
    const Field xe = pade_d_eta(g.x, g.param.k());
    const Field ys = pade_d_xi(g.y, g.param.h());
    const Field ye = pade_d_eta(g.y, g.param.k());
    for (int j = 0; j < g.param.n_eta(); ++j)
        for (int i = 0; i < g.param.n_xi(); ++i) {
            const double jac = xs(i, j) * ye(i, j) - xe(i, j) * ys(i, j);
            if (!(jac > 0.0)) throw TangledMeshError("non-positive Jacobian", i, j, jac);
        }
}

void GridHistory::push(PhysicalGrid g) {
    if (!grids_.empty()) {
        const PhysicalGrid& last = grids_.back();
        if (!(g.param == last.param))
            throw InvalidArgument("grid history snapshots must share one parametric space");
        const double step = g.time - last.time;
        if (!(step > 0.0)) throw InvalidArgument("grid history times must increase");
        if (grids_.size() >= 2 && std::abs(step - dt_) > 1e-9 * std::max(1.0, std::abs(dt_)))
            throw InvalidArgument("grid history requires a constant time step");
        if (grids_.size() == 1) dt_ = step;
    }
    grids_.push_back(std::move(g));
    while (grids_.size() > capacity_) grids_.pop_front();
}

}  // namespace compactflow
