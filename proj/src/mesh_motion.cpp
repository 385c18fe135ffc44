#include "compactflow/mesh_motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "compactflow/errors.hpp"
#include "compactflow/pade.hpp"

namespace compactflow {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t node_index(const ParamSpace& p, NodeIndex n) {
    return static_cast<std::size_t>(n.j) * p.n_xi() + n.i;
}

// Arc-length fraction of every node along its xi line (s) and eta line (t).
void arc_fractions(const PhysicalGrid& g, Field& s, Field& t) {
    const int nx = g.param.n_xi(), ny = g.param.n_eta();
    s = g.param.make_field();
    t = g.param.make_field();
    for (int j = 0; j < ny; ++j) {
        for (int i = 1; i < nx; ++i)
            s(i, j) = s(i - 1, j) + std::hypot(g.x(i, j) - g.x(i - 1, j), g.y(i, j) - g.y(i - 1, j));
        const double len = s(nx - 1, j);
        if (!(len > 0.0)) throw DegenerateCellError("grid line of zero length");
        for (int i = 0; i < nx; ++i) s(i, j) /= len;
    }
    for (int i = 0; i < nx; ++i) {
        for (int j = 1; j < ny; ++j)
            t(i, j) = t(i, j - 1) + std::hypot(g.x(i, j) - g.x(i, j - 1), g.y(i, j) - g.y(i, j - 1));
        const double len = t(i, ny - 1);
        if (!(len > 0.0)) throw DegenerateCellError("grid line of zero length");
        for (int j = 0; j < ny; ++j) t(i, j) /= len;
    }
}

struct IdwSetup {
    std::vector<Vec2> pos;
    std::vector<double> area;
    double l_def = 0.0;
    double alpha = 0.0;
};

IdwSetup idw_setup(const PhysicalGrid& base, const std::vector<Vec2>& pos,
                   const std::vector<Vec2>& disp, const IdwConfig& cfg) {
    if (!(cfg.a > 0.0) || !(cfg.b > 0.0)) throw InvalidArgument("IDW exponents must be positive");
    const std::size_t nb = pos.size();
    if (nb == 0) throw InvalidArgument("IDW needs at least one boundary node");
    IdwSetup s;
    s.pos = pos;
    s.area = cfg.area_weights.empty() ? std::vector<double>(nb, 1.0) : cfg.area_weights;
    if (s.area.size() != nb) throw InvalidArgument("one area weight per boundary node expected");
    double total = 0.0;
    for (double a : s.area) {
        if (!(a > 0.0)) throw InvalidArgument("IDW area weights must be positive");
        total += a;
    }
    if (cfg.l_def) {
        s.l_def = *cfg.l_def;
    } else {
        Vec2 c;
        for (std::size_t n = 0; n < base.x.size(); ++n) c += Vec2{base.x[n], base.y[n]};
        c = c * (1.0 / base.x.size());
        for (const Vec2& p : pos) s.l_def = std::max(s.l_def, (p - c).norm());
    }
    if (!(s.l_def > 0.0)) throw InvalidArgument("IDW deformation length must be positive");
    if (cfg.alpha) {
        s.alpha = *cfg.alpha;
    } else {
        Vec2 mean;
        for (std::size_t n = 0; n < nb; ++n) mean += disp[n] * (s.area[n] / total);
        double spread = 0.0;
        for (const Vec2& d : disp) spread = std::max(spread, (d - mean).norm());
        s.alpha = cfg.eta / s.l_def * spread;
    }
    return s;
}

// Normalised weights of every boundary node seen from x.
void idw_weights(const IdwSetup& s, const IdwConfig& cfg, Vec2 x, std::vector<double>& w) {
    double sum = 0.0;
    for (std::size_t n = 0; n < s.pos.size(); ++n) {
        const double r = (x - s.pos[n]).norm();
        if (!(r > 0.0)) throw CoincidentNodeError("interior node coincides with a boundary node");
        const double q = s.l_def / r;
        w[n] = s.area[n] * (std::pow(q, cfg.a) + std::pow(s.alpha * q, cfg.b));
        sum += w[n];
    }
    for (double& v : w) v /= sum;
}

std::vector<Vec2> boundary_positions(const PhysicalGrid& g) {
    std::vector<Vec2> out;
    for (const NodeIndex& n : boundary_nodes(g.param)) out.push_back(g.node(n.i, n.j));
    return out;
}

std::vector<bool> boundary_mask(const ParamSpace& p, const std::vector<NodeIndex>& nodes) {
    std::vector<bool> mask(p.size(), false);
    for (const NodeIndex& n : nodes) mask[node_index(p, n)] = true;
    return mask;
}

}  // namespace

// ---- quaternions ----

Quaternion Quaternion::rotation_z(double angle) {
    return {std::cos(0.5 * angle), 0.0, 0.0, std::sin(0.5 * angle)};
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
}

double Quaternion::norm() const { return std::sqrt(dot(*this)); }

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgument("cannot normalise a zero quaternion");
    return {w / n, x / n, y / n, z / n};
}

Vec2 Quaternion::rotate(Vec2 v) const {
    const Quaternion r = (*this) * pure(v) * conj();
    return {r.x, r.y};
}

// ---- boundary data ----

BoundaryDisplacement::BoundaryDisplacement(const ParamSpace& p)
    : param(p), d(boundary_nodes(p).size()) {}

BoundaryDisplacement BoundaryDisplacement::uniform(const ParamSpace& p, Vec2 t) {
    BoundaryDisplacement bd(p);
    std::fill(bd.d.begin(), bd.d.end(), t);
    return bd;
}

BoundaryDisplacement BoundaryDisplacement::between(const PhysicalGrid& base, const PhysicalGrid& target) {
    if (!(base.param == target.param)) throw InvalidArgument("grids live on different parametric spaces");
    BoundaryDisplacement bd(base.param);
    const auto nodes = boundary_nodes(base.param);
    for (std::size_t n = 0; n < nodes.size(); ++n)
        bd.d[n] = target.node(nodes[n].i, nodes[n].j) - base.node(nodes[n].i, nodes[n].j);
    return bd;
}

void BoundaryDisplacement::validate(const ParamSpace& p) const {
    if (!(param == p) || d.size() != boundary_nodes(p).size())
        throw InvalidArgument("boundary displacement must cover every boundary node exactly once");
}

RigidMotionSample RigidMotionSample::rigid(const ParamSpace& p, double angle, Vec2 centre, Vec2 shift) {
    RigidMotionSample m;
    m.param = p;
    const Quaternion q = Quaternion::rotation_z(angle);
    const std::size_t nb = boundary_nodes(p).size();
    m.rotation.assign(nb, q);
    m.translation.assign(nb, centre - q.rotate(centre) + shift);
    return m;
}

RigidMotionSample RigidMotionSample::from_positions(const PhysicalGrid& base, const BoundaryDisplacement& bd,
                                                    const std::vector<Vec2>& translation) {
    bd.validate(base.param);
    const auto nodes = boundary_nodes(base.param);
    if (translation.size() != nodes.size()) throw InvalidArgument("one translation per boundary node expected");
    RigidMotionSample m;
    m.param = base.param;
    m.translation = translation;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        const Vec2 p = base.node(nodes[n].i, nodes[n].j);
        const Vec2 s = p + bd.d[n] - translation[n];
        const double np = p.norm(), ns = s.norm();
        if (std::abs(np - ns) > 1e-12 * std::max(1.0, np))
            throw InvalidArgument("boundary motion is not a rotation plus the given translation");
        const double angle = (np > 0.0) ? std::atan2(p.x * s.y - p.y * s.x, p.x * s.x + p.y * s.y) : 0.0;
        m.rotation.push_back(Quaternion::rotation_z(angle));
    }
    return m;
}

Vec2 RigidMotionSample::moved(std::size_t n, Vec2 x) const { return rotation[n].rotate(x) + translation[n]; }

void RigidMotionSample::validate(const ParamSpace& p) const {
    const std::size_t nb = boundary_nodes(p).size();
    if (!(param == p) || rotation.size() != nb || translation.size() != nb)
        throw InvalidArgument("rigid motion sample must cover every boundary node exactly once");
    for (const Quaternion& q : rotation)
        if (std::abs(q.norm() - 1.0) > 1e-12) throw InvalidArgument("rotation quaternions must be unit");
}

// ---- deformers ----

PhysicalGrid tfi_deform(const PhysicalGrid& base, const BoundaryDisplacement& bd) {
    const ParamSpace& p = base.param;
    bd.validate(p);
    const int nx = p.n_xi(), ny = p.n_eta();
    Field dx = p.make_field(), dy = p.make_field();
    const auto nodes = boundary_nodes(p);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        dx(nodes[n].i, nodes[n].j) = bd.d[n].x;
        dy(nodes[n].i, nodes[n].j) = bd.d[n].y;
    }
    Field s, t;
    arc_fractions(base, s, t);
    PhysicalGrid out = base;
    auto blend = [&](const Field& d, int i, int j) {
        const double a = s(i, j), b = t(i, j);
        const double f1 = (1 - a) * d(0, j) + a * d(nx - 1, j);
        const double f2 = (1 - b) * d(i, 0) + b * d(i, ny - 1);
        const double f12 = (1 - a) * (1 - b) * d(0, 0) + a * (1 - b) * d(nx - 1, 0) +
                           (1 - a) * b * d(0, ny - 1) + a * b * d(nx - 1, ny - 1);
        return f1 + f2 - f12;
    };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (p.is_boundary(i, j)) {
                out.x(i, j) += dx(i, j);
                out.y(i, j) += dy(i, j);
            } else {
                out.x(i, j) += blend(dx, i, j);
                out.y(i, j) += blend(dy, i, j);
            }
        }
    check_positive_jacobian(out);
    return out;
}

PhysicalGrid idw_deform(const PhysicalGrid& base, const std::vector<NodeIndex>& moving,
                        const std::vector<Vec2>& displacement, const IdwConfig& cfg) {
    const ParamSpace& p = base.param;
    if (moving.size() != displacement.size()) throw InvalidArgument("one displacement per moving node expected");
    std::vector<Vec2> pos;
    for (const NodeIndex& n : moving) pos.push_back(base.node(n.i, n.j));
    const IdwSetup s = idw_setup(base, pos, displacement, cfg);
    const std::vector<bool> fixed = boundary_mask(p, moving);
    PhysicalGrid out = base;
    for (std::size_t n = 0; n < moving.size(); ++n) {
        out.x(moving[n].i, moving[n].j) += displacement[n].x;
        out.y(moving[n].i, moving[n].j) += displacement[n].y;
    }
    std::vector<double> w(pos.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (fixed[c]) continue;
        idw_weights(s, cfg, {base.x[c], base.y[c]}, w);
        Vec2 d;
        for (std::size_t n = 0; n < w.size(); ++n) d += displacement[n] * w[n];
        out.x[c] += d.x;
        out.y[c] += d.y;
    }
    return out;
}

PhysicalGrid idw_deform(const PhysicalGrid& base, const BoundaryDisplacement& bd, const IdwConfig& cfg) {
    bd.validate(base.param);
    PhysicalGrid out = idw_deform(base, boundary_nodes(base.param), bd.d, cfg);
    check_positive_jacobian(out);
    return out;
}

PhysicalGrid idw_deform(const PhysicalGrid& base, const RigidMotionSample& motion, const IdwConfig& cfg) {
    const ParamSpace& p = base.param;
    motion.validate(p);
    const auto nodes = boundary_nodes(p);
    const std::vector<Vec2> pos = boundary_positions(base);
    std::vector<Vec2> disp(nodes.size());
    for (std::size_t n = 0; n < nodes.size(); ++n) disp[n] = motion.moved(n, pos[n]) - pos[n];
    const IdwSetup s = idw_setup(base, pos, disp, cfg);

    // q and -q are the same rotation; align signs before averaging
    std::vector<Quaternion> rot = motion.rotation;
    for (Quaternion& q : rot)
        if (q.dot(rot.front()) < 0.0) q = {-q.w, -q.x, -q.y, -q.z};

    const std::vector<bool> fixed = boundary_mask(p, nodes);
    PhysicalGrid out = base;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
        out.x(nodes[n].i, nodes[n].j) = pos[n].x + disp[n].x;
        out.y(nodes[n].i, nodes[n].j) = pos[n].y + disp[n].y;
    }
    std::vector<double> w(nodes.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (fixed[c]) continue;
        const Vec2 x{base.x[c], base.y[c]};
        idw_weights(s, cfg, x, w);
        Quaternion q{0.0, 0.0, 0.0, 0.0};
        Vec2 t;
        for (std::size_t n = 0; n < w.size(); ++n) {
            q.w += w[n] * rot[n].w;
            q.x += w[n] * rot[n].x;
            q.y += w[n] * rot[n].y;
            q.z += w[n] * rot[n].z;
            t += motion.translation[n] * w[n];
        }
        const Vec2 moved = q.normalized().rotate(x) + t;
        out.x[c] = moved.x;
        out.y[c] = moved.y;
    }
    check_positive_jacobian(out);
    return out;
}

// ---- quality and perturbation ----

Field skew_quality(const PhysicalGrid& g) {
    const double h = g.param.h(), k = g.param.k();
    const Field xs = pade_d_xi(g.x, h), xe = pade_d_eta(g.x, k);
    const Field ys = pade_d_xi(g.y, h), ye = pade_d_eta(g.y, k);
    Field q = g.param.make_field();
    for (std::size_t n = 0; n < q.size(); ++n) {
        const double a = std::hypot(xs[n], ys[n]), b = std::hypot(xe[n], ye[n]);
        if (!(a > 0.0) || !(b > 0.0)) throw DegenerateCellError("zero-length grid tangent");
        q[n] = std::abs(xs[n] * ye[n] - xe[n] * ys[n]) / (a * b);
    }
    return q;
}

double min_skew_quality(const PhysicalGrid& g) {
    const Field q = skew_quality(g);
    return *std::min_element(q.data(), q.data() + q.size());
}

PhysicalGrid randomize_mesh(const PhysicalGrid& base, double fraction, std::uint64_t seed, int frozen_layers) {
    if (!(fraction >= 0.0 && fraction < 0.5)) throw InvalidArgument("perturbation fraction must lie in [0, 0.5)");
    if (frozen_layers < 1) throw InvalidArgument("at least one frozen layer is required");
    const ParamSpace& p = base.param;
    const int nx = p.n_xi(), ny = p.n_eta();
    PhysicalGrid out = base;
    if (fraction == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int j = frozen_layers; j < ny - frozen_layers; ++j)
        for (int i = frozen_layers; i < nx - frozen_layers; ++i) {
            const double hx = 0.5 * std::abs(base.x(i + 1, j) - base.x(i - 1, j));
            const double hy = 0.5 * std::abs(base.y(i, j + 1) - base.y(i, j - 1));
            const double rx = u(rng), ry = u(rng);
            out.x(i, j) += fraction * hx * rx;
            out.y(i, j) += fraction * hy * ry;
        }
    check_positive_jacobian(out);
    return out;
}

PhysicalGrid o_grid(int n_theta, int n_radial, double radius, double outer, double stretch) {
    if (!(radius > 0.0) || !(outer > radius)) throw InvalidArgument("O-grid needs 0 < radius < outer");
    const ParamSpace p(n_theta, n_radial, 0.0, 2.0 * kPi, 0.0, 1.0);
    PhysicalGrid g(p);
    for (int j = 0; j < n_radial; ++j) {
        const double e = p.eta(j);
        const double s = stretch > 0.0 ? std::expm1(stretch * e) / std::expm1(stretch) : e;
        for (int i = 0; i < n_theta; ++i) {
            const double th = p.xi(i);
            const Vec2 dir{std::cos(th), -std::sin(th)};
            const double box = outer / std::max(std::abs(dir.x), std::abs(dir.y));
            const Vec2 pt = dir * ((1.0 - s) * radius + s * box);
            g.x(i, j) = pt.x;
            g.y(i, j) = pt.y;
        }
    }
    // exact seam
    for (int j = 0; j < n_radial; ++j) {
        g.x(n_theta - 1, j) = g.x(0, j);
        g.y(n_theta - 1, j) = g.y(0, j);
    }
    return g;
}

// ---- prescribed motions ----

std::string to_string(MotionCase c) {
    switch (c) {
    case MotionCase::Static: return "static";
    case MotionCase::PulseDeformTranslate: return "pulse-deform-translate";
    case MotionCase::Wavy: return "wavy";
    case MotionCase::WavyFixed: return "wavy-fixed-amplitude";
    case MotionCase::CavityStretch: return "cavity-stretch";
    case MotionCase::CavityBump: return "cavity-bottom-bump";
    }
    return "static";
}

MotionCase motion_case_from_string(const std::string& s) {
    for (MotionCase c : {MotionCase::Static, MotionCase::PulseDeformTranslate, MotionCase::Wavy,
                         MotionCase::WavyFixed, MotionCase::CavityStretch, MotionCase::CavityBump})
        if (to_string(c) == s) return c;
    throw InvalidArgument("unknown motion case '" + s + "'");
}

MotionPrescription MotionPrescription::stationary(const ParamSpace& p) {
    MotionPrescription m;
    m.param = p;
    return m;
}

MotionPrescription MotionPrescription::pulse_deform_translate(int n, double period) {
    MotionPrescription m;
    m.kind = MotionCase::PulseDeformTranslate;
    m.param = ParamSpace::square(n, 0.0, 2.0);
    m.period = period;
    return m;
}

MotionPrescription MotionPrescription::wavy(int n, int waves) {
    MotionPrescription m;
    m.kind = MotionCase::Wavy;
    m.param = ParamSpace::square(n, 0.0, kPi);
    m.waves = waves;
    return m;
}

MotionPrescription MotionPrescription::wavy_fixed(int n, double amplitude, int waves) {
    MotionPrescription m;
    m.kind = MotionCase::WavyFixed;
    m.param = ParamSpace::square(n, 0.0, kPi);
    m.wave_amplitude = amplitude;
    m.waves = waves;
    return m;
}

MotionPrescription MotionPrescription::cavity_stretch(int n, double amplitude) {
    MotionPrescription m;
    m.kind = MotionCase::CavityStretch;
    m.param = ParamSpace::unit_square(n);
    m.stretch_amplitude = amplitude;
    return m;
}

MotionPrescription MotionPrescription::cavity_bump(int n) {
    MotionPrescription m;
    m.kind = MotionCase::CavityBump;
    m.param = ParamSpace::unit_square(n);
    return m;
}

double MotionPrescription::bump_height(double x, double tau) const {
    const double a = bump_exponent;
    return bump_amplitude *
           (std::exp(a * (x - bump_c1) * (x - bump_c1)) - std::exp(a * (x - bump_c2) * (x - bump_c2))) *
           std::sin(2.0 * kPi * bump_frequency * tau);
}

PhysicalGrid MotionPrescription::grid(double tau) const {
    const ParamSpace& p = param;
    const double x0 = p.xi_min(), lx = p.xi_max() - p.xi_min();
    const double y0 = p.eta_min(), ly = p.eta_max() - p.eta_min();
    PhysicalGrid g = PhysicalGrid::identity(p, tau);
    switch (kind) {
    case MotionCase::Static:
        return g;
    case MotionCase::PulseDeformTranslate: {
        const double amp = amplitude * std::sin(0.5 * kPi * tau / period);
        const double shift = 0.5 * velocity * tau * tau / period;
        const double half = 0.5 * lx;  // 1 on the reference [0, 2] domain
        BoundaryDisplacement bd(p);
        const auto nodes = boundary_nodes(p);
        for (std::size_t n = 0; n < nodes.size(); ++n) {
            const int i = nodes[n].i, j = nodes[n].j;
            const double s = (p.xi(i) - x0) / half, e = (p.eta(j) - y0) / half;
            Vec2 d{shift, shift};
            if (i == 0 || i == p.n_xi() - 1) d.x += amp * std::sin(kPi * e);
            if (j == p.n_eta() - 1) d.y += 2.0 * amp * std::sin(0.5 * kPi * s);
            if (j == 0) d.y += 2.0 * amp * s * s * (2.0 - s) * (2.0 - s);
            bd.d[n] = d;
        }
        PhysicalGrid out = tfi_deform(g, bd);
        out.time = tau;
        return out;
    }
    case MotionCase::Wavy:
    case MotionCase::WavyFixed: {
        const double st = wave_amplitude * std::sin(2.0 * kPi * omega * tau);
        const double n = waves;
        for (int j = 0; j < p.n_eta(); ++j)
            for (int i = 0; i < p.n_xi(); ++i) {
                const double s = p.xi(i), e = p.eta(j);
                if (kind == MotionCase::Wavy) {
                    g.x(i, j) = s + st * (lx / (p.n_xi() - 1)) * std::sin(n * kPi * (e - y0) / ly);
                    g.y(i, j) = e + st * (ly / (p.n_eta() - 1)) * std::sin(n * kPi * (s - x0) / lx);
                } else {
                    g.x(i, j) = s + st * std::sin(n * e);
                    g.y(i, j) = e + st * std::sin(n * s);
                }
            }
        break;
    }
    case MotionCase::CavityStretch: {
        const double st = stretch_amplitude * std::sin(2.0 * kPi * tau);
        for (int j = 0; j < p.n_eta(); ++j)
            for (int i = 0; i < p.n_xi(); ++i) {
                const double s = (p.xi(i) - x0) / lx, e = (p.eta(j) - y0) / ly;
                const auto bump = [](double r) { return std::pow(r, 6) * (r - 0.5) * std::pow(1.0 - r, 6); };
                g.x(i, j) = s + st * bump(s) * e * (1.0 - e);
                g.y(i, j) = e + st * bump(e) * s * (1.0 - s);
            }
        break;
    }
    case MotionCase::CavityBump: {
        BoundaryDisplacement bd(p);
        const auto nodes = boundary_nodes(p);
        for (std::size_t n = 0; n < nodes.size(); ++n)
            if (nodes[n].j == 0) bd.d[n] = {0.0, bump_height(p.xi(nodes[n].i), tau)};
        PhysicalGrid out = tfi_deform(g, bd);
        out.time = tau;
        return out;
    }
    }
    check_positive_jacobian(g);
    return g;
}

}  // namespace compactflow
