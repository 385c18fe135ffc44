#pragma once

#include <span>

#include "compactflow/field.hpp"
#include "compactflow/grid.hpp"

namespace compactflow {

enum class MetricMode { Differential, Conservative };

// Transformation metrics of one grid snapshot. All arrays are node-centred
// with the ParamSpace layout.
struct MetricField {
    ParamSpace param;
    double time = 0.0;

    Field x, y;  // node positions of the snapshot
    Field x_xi, x_eta, y_xi, y_eta;
    Field x_xixi, x_xieta, x_etaeta, y_xixi, y_xieta, y_etaeta;
    Field jac, jac_xi, jac_eta;
    Field x_tau, y_tau, j1, j2;

    MetricField() = default;
    explicit MetricField(const ParamSpace& p);

    // Inverse-map gradients: phi_x = (y_eta phi_xi - y_xi phi_eta) / J and
    // phi_y = (x_xi phi_eta - x_eta phi_xi) / J at node n.
    double dx(std::size_t n, double phi_xi, double phi_eta) const {
        return (y_eta[n] * phi_xi - y_xi[n] * phi_eta) / jac[n];
    }
    double dy(std::size_t n, double phi_xi, double phi_eta) const {
        return (x_xi[n] * phi_eta - x_eta[n] * phi_xi) / jac[n];
    }
};

// Spatial metrics from Pade derivatives. x_xieta is the eta-derivative of
// x_xi. J is formed pointwise from the first derivatives, J_xi and J_eta by
// differentiating the J array. Time metrics are zero. Throws
// TangledMeshError if J <= 0 anywhere.
MetricField compute_metrics(const PhysicalGrid& grid);

// Number of snapshots a time derivative of the requested order consumes at
// start-up: order 2 falls back to order 1 while only two grids exist.
int effective_time_order(std::size_t snapshots, int order);

// Backward difference in time of a sequence of fields (oldest first, newest
// last). Uses the last order+1 entries.
Field backward_difference(std::span<const Field* const> levels, double dt, int order);

// Grid velocity and J1 = x_tau y_eta - y_tau x_eta, J2 = x_xi y_tau - y_xi x_tau
// at the newest snapshot. order 1 or 2; see effective_time_order.
void compute_time_metrics(MetricField& m, const GridHistory& history, int order);
MetricField compute_time_metrics(const GridHistory& history, int order);

// Metrics with J, J1, J2 in the symmetric conservative form
//   J  = [(x_xi y)_eta - (x_eta y)_xi + (x y_eta)_xi - (x y_xi)_eta] / 2
// and the analogous tau forms, every outer derivative taken with the same
// Pade / backward-difference operators. J_xi, J_eta follow from the new J.
MetricField conservative_metrics(const GridHistory& history, int order);

// Discrete geometric-conservation residuals at the newest level.
struct GclResidual {
    Field time;       // dJ/dtau - dJ1/dxi - dJ2/deta
    Field spatial_x;  // d(y_eta)/dxi - d(y_xi)/deta
    Field spatial_y;  // -d(x_eta)/dxi + d(x_xi)/deta
    double max_time() const { return time.max_abs(); }
    double max_spatial() const { return std::max(spatial_x.max_abs(), spatial_y.max_abs()); }
};

// levels holds the metric fields oldest first; the newest one supplies J1,
// J2 and the spatial metrics, the older ones only J.
GclResidual gcl_residual(std::span<const MetricField> levels, double dt, int order);

}  // namespace compactflow
