#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compactflow/field.hpp"
#include "compactflow/grid.hpp"

namespace compactflow {

// Minimal quaternion for planar rigid motions (rotations about z).
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quaternion rotation_z(double angle);
    static Quaternion pure(Vec2 v) { return {0.0, v.x, v.y, 0.0}; }

    Quaternion operator*(const Quaternion& o) const;
    Quaternion conj() const { return {w, -x, -y, -z}; }
    double norm() const;
    double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
    Quaternion normalized() const;
    // q [0, v] q*, projected back to the plane.
    Vec2 rotate(Vec2 v) const;
};

// Displacement of every boundary node, in boundary_nodes() order.
struct BoundaryDisplacement {
    ParamSpace param;
    std::vector<Vec2> d;

    BoundaryDisplacement() = default;
    explicit BoundaryDisplacement(const ParamSpace& p);
    static BoundaryDisplacement uniform(const ParamSpace& p, Vec2 t);
    // d = target boundary position - base boundary position.
    static BoundaryDisplacement between(const PhysicalGrid& base, const PhysicalGrid& target);

    Vec2& at(std::size_t n) { return d[n]; }
    // Throws InvalidArgument unless d has one entry per boundary node.
    void validate(const ParamSpace& p) const;
};

// Rotation and translation quaternions per boundary node: a node at x moves
// to Q [0, x] Q* + T.
struct RigidMotionSample {
    ParamSpace param;
    std::vector<Quaternion> rotation;
    std::vector<Vec2> translation;

    // The same rotation by `angle` about `centre` followed by `shift` at every node.
    static RigidMotionSample rigid(const ParamSpace& p, double angle, Vec2 centre, Vec2 shift = {});
    // Recovers Q_b from the old position, the new position and a given
    // translation per node. Throws InvalidArgument when |x_new - t| != |x_old|
    // (the node motion is not a rotation about the origin plus t).
    static RigidMotionSample from_positions(const PhysicalGrid& base, const BoundaryDisplacement& bd,
                                            const std::vector<Vec2>& translation);

    Vec2 moved(std::size_t n, Vec2 x) const;
    void validate(const ParamSpace& p) const;
};

struct IdwConfig {
    double a = 3.0;
    double b = 5.0;
    std::vector<double> area_weights;  // empty means 1 per boundary node
    double eta = 5.0;
    std::optional<double> alpha;  // overrides the displacement-spread formula
    std::optional<double> l_def;  // overrides max distance to the centroid
};

// Boolean-sum transfinite interpolation of boundary displacements. The
// univariate projectors blend with normalised arc length along the base grid
// lines, so the base clustering is preserved. Throws TangledMeshError if the
// result has J <= 0.
PhysicalGrid tfi_deform(const PhysicalGrid& base, const BoundaryDisplacement& bd);

// Inverse-distance weighting of boundary displacements to the interior.
PhysicalGrid idw_deform(const PhysicalGrid& base, const BoundaryDisplacement& bd, const IdwConfig& cfg = {});
// Quaternion mode: rotation and translation quaternions are averaged with the
// same weights, the rotation is renormalised (sign-aligned with the first
// boundary quaternion) and applied to the base position.
PhysicalGrid idw_deform(const PhysicalGrid& base, const RigidMotionSample& motion, const IdwConfig& cfg = {});
// General form: `moving` lists the nodes with known displacement (any subset,
// e.g. the inner and outer rings of an O-grid); every other node is
// interpolated. No Jacobian check, since such grids may carry a seam.
PhysicalGrid idw_deform(const PhysicalGrid& base, const std::vector<NodeIndex>& moving,
                        const std::vector<Vec2>& displacement, const IdwConfig& cfg = {});

// Per-node |sin| of the angle between coordinate lines, with Pade tangents.
// Throws DegenerateCellError on a zero-length tangent.
Field skew_quality(const PhysicalGrid& g);
double min_skew_quality(const PhysicalGrid& g);

// Independent uniform perturbation of every node outside `frozen_layers`
// rings by up to fraction * local spacing in x and in y. Deterministic for a
// given seed.
PhysicalGrid randomize_mesh(const PhysicalGrid& base, double fraction, std::uint64_t seed,
                            int frozen_layers = 3);

// O-grid around a circle of the given radius centred at the origin, out to a
// square of half-width `outer`. xi runs clockwise around the circle (the seam
// nodes i = 0 and i = n_theta - 1 coincide), eta runs outward with
// exponential clustering `stretch` towards the circle.
PhysicalGrid o_grid(int n_theta, int n_radial, double radius, double outer, double stretch = 3.0);

enum class MotionCase { Static, PulseDeformTranslate, Wavy, WavyFixed, CavityStretch, CavityBump };

std::string to_string(MotionCase c);
MotionCase motion_case_from_string(const std::string& s);

// Analytic description of a moving grid; grid(tau) evaluates it.
struct MotionPrescription {
    MotionCase kind = MotionCase::Static;
    ParamSpace param;

    // pulse-deform-translate: sides displaced by A(t) sin(pi eta / L) in x,
    // top by 2A(t) sin(0.5 pi xi / L) and bottom by 2A(t) (xi/L)^2 (2 - xi/L)^2
    // in y (L = domain half-width, 1 on [0, 2]^2), A(t) = amp sin(0.5 pi t/T),
    // plus a uniform shift 0.5 v t^2 / T in both directions. Interior by TFI.
    double amplitude = 0.2;
    double period = 1.5;  // T
    double velocity = 0.7;

    // wavy: x = xi + A sin(2 pi w t) (L/N) sin(n pi (eta - eta_min)/L), y alike.
    // wavy-fixed: x = xi + A sin(2 pi w t) sin(n eta), y alike.
    double wave_amplitude = 1.0;
    double omega = 0.25;
    int waves = 4;

    // cavity-stretch: polynomial stretching with amplitude A sin(2 pi t).
    double stretch_amplitude = 15000.0;

    // cavity-bump: bottom wall y = A (e^{a (x-c1)^2} - e^{a (x-c2)^2}) sin(2 pi f t).
    double bump_amplitude = 0.1;
    double bump_frequency = 0.2;
    double bump_c1 = 0.375;
    double bump_c2 = 0.625;
    double bump_exponent = -60.0;

    static MotionPrescription stationary(const ParamSpace& p);
    static MotionPrescription pulse_deform_translate(int n, double period = 1.5);
    static MotionPrescription wavy(int n, int waves);
    static MotionPrescription wavy_fixed(int n, double amplitude = 0.04908738521234052, int waves = 6);
    static MotionPrescription cavity_stretch(int n, double amplitude = 15000.0);
    static MotionPrescription cavity_bump(int n);

    bool moving() const { return kind != MotionCase::Static; }
    // Throws TangledMeshError if the grid at tau is tangled.
    PhysicalGrid grid(double tau) const;
    // Height of the cavity-bump bottom wall at x.
    double bump_height(double x, double tau) const;
};

}  // namespace compactflow
