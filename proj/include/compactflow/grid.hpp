#pragma once

#include <deque>
#include <vector>

#include "compactflow/field.hpp"

namespace compactflow {

// Uniform parametric (computational) grid. Node (i, j) sits at
// (xi_min + i h, eta_min + j k).
class ParamSpace {
public:
    ParamSpace() = default;
    ParamSpace(int n_xi, int n_eta, double xi_min, double xi_max, double eta_min, double eta_max);

    static ParamSpace unit_square(int n) { return {n, n, 0.0, 1.0, 0.0, 1.0}; }
    static ParamSpace square(int n, double lo, double hi) { return {n, n, lo, hi, lo, hi}; }

    int n_xi() const { return n_xi_; }
    int n_eta() const { return n_eta_; }
    double h() const { return h_; }
    double k() const { return k_; }
    double xi_min() const { return xi_min_; }
    double xi_max() const { return xi_max_; }
    double eta_min() const { return eta_min_; }
    double eta_max() const { return eta_max_; }
    double xi(int i) const { return xi_min_ + i * h_; }
    double eta(int j) const { return eta_min_ + j * k_; }
    std::size_t size() const { return static_cast<std::size_t>(n_xi_) * n_eta_; }

    bool is_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == n_xi_ - 1 || j == n_eta_ - 1;
    }

    Field make_field(double v = 0.0) const { return Field(n_xi_, n_eta_, v); }

    bool operator==(const ParamSpace&) const = default;

private:
    int n_xi_ = 0;
    int n_eta_ = 0;
    double xi_min_ = 0.0, xi_max_ = 1.0, eta_min_ = 0.0, eta_max_ = 1.0;
    double h_ = 0.0, k_ = 0.0;
};

struct NodeIndex {
    int i = 0;
    int j = 0;
    bool operator==(const NodeIndex&) const = default;
};

// Boundary nodes counterclockwise starting at (0, 0): bottom edge left to
// right, right edge upward, top edge right to left, left edge downward.
std::vector<NodeIndex> boundary_nodes(const ParamSpace& p);

// One time snapshot of the physical mesh.
struct PhysicalGrid {
    ParamSpace param;
    Field x;
    Field y;
    double time = 0.0;

    PhysicalGrid() = default;
    PhysicalGrid(const ParamSpace& p, double t = 0.0)
        : param(p), x(p.make_field()), y(p.make_field()), time(t) {}

    // x = xi, y = eta.
    static PhysicalGrid identity(const ParamSpace& p, double t = 0.0);

    Vec2 node(int i, int j) const { return {x(i, j), y(i, j)}; }
    bool operator==(const PhysicalGrid&) const = default;
};

// Throws TangledMeshError at the first node whose Jacobian (from the
// library's Pade metrics) is not strictly positive.
void check_positive_jacobian(const PhysicalGrid& g);

// Up to three snapshots with a constant time step, oldest first.
class GridHistory {
public:
    explicit GridHistory(std::size_t capacity = 3) : capacity_(capacity) {}

    // Appends a snapshot; drops the oldest beyond capacity. The new snapshot
    // must share the ParamSpace and continue the constant time step.
    void push(PhysicalGrid g);

    std::size_t size() const { return grids_.size(); }
    std::size_t capacity() const { return capacity_; }
    bool empty() const { return grids_.empty(); }
    const PhysicalGrid& newest() const { return grids_.back(); }
    // back(0) is the newest, back(1) the one before it, ...
    const PhysicalGrid& back(std::size_t n) const { return grids_[grids_.size() - 1 - n]; }
    double dt() const { return dt_; }
    void clear() { grids_.clear(); dt_ = 0.0; }

private:
    std::size_t capacity_;
    std::deque<PhysicalGrid> grids_;
    double dt_ = 0.0;
};

}  // namespace compactflow
