#include "compactflow/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <tuple>

#include "compactflow/compact_scheme.hpp"
#include "compactflow/errors.hpp"
#include "compactflow/flow.hpp"
#include "compactflow/mesh_motion.hpp"

namespace compactflow {

namespace {

constexpr double kPi = std::numbers::pi;

using GridMaker = std::function<PhysicalGrid(long level)>;

// Grid snapshots level 0, 1, 2, ... at tau = level dt with their metrics. A
// moving sequence is pre-seeded with the levels before 0, so the grid
// velocity has its full order from the first step.
class GridSequence {
public:
    GridSequence(GridMaker make, bool moving, MetricMode mode, int order)
        : make_(std::move(make)), moving_(moving), mode_(mode), order_(order) {
        if (!moving_) {
            grid_ = make_(0);
            cur_ = compute_metrics(grid_);
            return;
        }
        for (long l = -order_; l <= 0; ++l) history_.push(make_(l));
        refresh();
    }

    // Moves to the next level; previous() is then the level before.
    void advance() {
        ++level_;
        if (!moving_) return;
        prev_ = std::move(cur_);
        history_.push(make_(level_));
        refresh();
    }

    const MetricField& current() const { return cur_; }
    const MetricField& previous() const { return moving_ ? prev_ : cur_; }
    const PhysicalGrid& grid() const { return moving_ ? history_.newest() : grid_; }
    bool moving() const { return moving_; }
    long level() const { return level_; }

private:
    void refresh() {
        cur_ = mode_ == MetricMode::Conservative ? conservative_metrics(history_, order_)
                                                 : compute_time_metrics(history_, order_);
    }

    GridMaker make_;
    bool moving_;
    MetricMode mode_;
    int order_;
    long level_ = 0;
    GridHistory history_{3};
    PhysicalGrid grid_;
    MetricField prev_, cur_;
};

// Node velocity and acceleration of an analytic motion by fourth-order
// central differences in tau (the grids at tau +- d, +- 2d are cached).
class NodeKinematics {
public:
    explicit NodeKinematics(std::function<PhysicalGrid(double)> grid_at, double delta = 1e-3)
        : grid_at_(std::move(grid_at)), d_(delta) {}

    Vec2 velocity(int i, int j, double tau) {
        fill(tau);
        auto comp = [&](const Field PhysicalGrid::*f) {
            const double a = (g_[0].*f)(i, j), b = (g_[1].*f)(i, j), c = (g_[3].*f)(i, j), e = (g_[4].*f)(i, j);
            return (a - 8.0 * b + 8.0 * c - e) / (12.0 * d_);
        };
        return {comp(&PhysicalGrid::x), comp(&PhysicalGrid::y)};
    }

    Vec2 acceleration(int i, int j, double tau) {
        fill(tau);
        auto comp = [&](const Field PhysicalGrid::*f) {
            const double a = (g_[0].*f)(i, j), b = (g_[1].*f)(i, j), m = (g_[2].*f)(i, j),
                         c = (g_[3].*f)(i, j), e = (g_[4].*f)(i, j);
            return (-a + 16.0 * b - 30.0 * m + 16.0 * c - e) / (12.0 * d_ * d_);
        };
        return {comp(&PhysicalGrid::x), comp(&PhysicalGrid::y)};
    }

private:
    void fill(double tau) {
        if (tau == tau_) return;
        for (int s = -2; s <= 2; ++s) g_[s + 2] = grid_at_(tau + s * d_);
        tau_ = tau;
    }

    std::function<PhysicalGrid(double)> grid_at_;
    double d_;
    double tau_ = std::numeric_limits<double>::quiet_NaN();
    PhysicalGrid g_[5];
};

std::uint64_t mix_seed(std::uint64_t seed, long level) {
    // splitmix64 finaliser over the seed and the level
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(level + 16);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Field sample_nodes(const PhysicalGrid& g, const std::function<double(Vec2)>& f) {
    Field out = g.param.make_field();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = f({g.x[n], g.y[n]});
    return out;
}

Field minus_mean(Field f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    s /= static_cast<double>(f.size());
    for (double& v : f.values()) v -= s;
    return f;
}

bool is_report_step(const CaseConfig& c, int k, double dt, double* time) {
    const std::vector<double> times = c.report_times.empty() ? std::vector<double>{c.t_end} : c.report_times;
    for (double t : times)
        if (std::lround(t / dt) == k) {
            *time = t;
            return true;
        }
    return false;
}

FlowConfig flow_config(const CaseConfig& c) {
    FlowConfig f;
    f.picard_tol = c.picard_tol;
    f.max_picard = c.max_picard;
    f.momentum.linear.rel_tol = c.linear_tol;
    f.elliptic.linear.rel_tol = c.linear_tol;
    return f;
}

struct StepTally {
    long picard = 0;
    int picard_max = 0;
    double div_max = 0.0;
    int steps = 0;

    void add(const FlowStepReport& r) {
        picard += r.picard_iterations;
        picard_max = std::max(picard_max, r.picard_iterations);
        div_max = std::max(div_max, r.divergence_max);
        ++steps;
    }
    void finish(RunReport& rep) const {
        rep.picard_mean = steps ? static_cast<double>(picard) / steps : 0.0;
        rep.picard_max = picard_max;
        rep.div_max = div_max;
    }
};

RunReport start_report(const CaseConfig& c) {
    RunReport rep;
    rep.case_name = to_string(c.kind);
    rep.grid = c.grid;
    rep.dt = c.effective_dt();
    rep.steps = c.steps();
    return rep;
}

RunReport run_pulse(const CaseConfig& c) {
    RunReport rep = start_report(c);
    const double dt = rep.dt;
    const ParamSpace p = ParamSpace::square(c.grid, 0.0, 2.0);
    const PulseParams pp{c.diffusion, c.velocity, c.pulse_width, c.centre};

    GridMaker make;
    if (c.kind == CaseTag::PulseDeform) {
        MotionPrescription mp = MotionPrescription::pulse_deform_translate(c.grid, c.period);
        mp.amplitude = c.amplitude;
        mp.velocity = c.translation;
        make = [mp, dt](long l) { return mp.grid(l * dt); };
    } else {
        const PhysicalGrid base = PhysicalGrid::identity(p);
        make = [base, dt, c](long l) {
            PhysicalGrid g = randomize_mesh(base, c.random_fraction, mix_seed(c.seed, l), c.frozen_layers);
            g.time = l * dt;
            return g;
        };
    }
    GridSequence seq(make, c.moving, c.metric_mode, c.time_order);
    auto exact = [&](double t) { return sample_nodes(seq.grid(), [&](Vec2 x) { return exact_pulse(pp, x, t); }); };

    ScalarField phi = pade_gradients(ScalarField(p, exact(0.0)));
    OperatorCoefficients co_n = transformed_coefficients(seq.current(), c.diffusion, c.velocity);
    SchemeConfig sc;
    sc.linear.rel_tol = c.linear_tol;
    const Field zero = p.make_field();
    for (int k = 1; k <= rep.steps; ++k) {
        seq.advance();
        const double t = k * dt;
        OperatorCoefficients co_np1 = transformed_coefficients(seq.current(), c.diffusion, c.velocity);
        const Field ex = exact(t);
        const BoundarySpec bc = BoundarySpec::dirichlet(p, ex);
        phi = cn_step(co_n, co_np1, phi, zero, zero, dt, bc, sc, nullptr, &phi.phi);
        co_n = std::move(co_np1);
        double rt = 0.0;
        if (is_report_step(c, k, dt, &rt)) rep.errors.push_back({rt, "phi", error_norms(phi.phi, ex)});
        if (k == rep.steps) {
            rep.final_grid = seq.grid();
            rep.fields = {{"phi", phi.phi}, {"exact", ex}};
        }
    }
    return rep;
}

// Freestream and decaying-vortex runs of the primitive solver.
RunReport run_primitive_exact(const CaseConfig& c) {
    RunReport rep = start_report(c);
    const double dt = rep.dt;
    const bool taylor = c.kind == CaseTag::Taylor;
    MotionPrescription mp = taylor ? MotionPrescription::wavy_fixed(c.grid, c.wave_amplitude, c.waves)
                                   : MotionPrescription::wavy(c.grid, c.waves);
    mp.wave_amplitude = c.wave_amplitude;
    mp.omega = c.omega;
    const ParamSpace p = mp.param;
    GridSequence seq([mp, dt](long l) { return mp.grid(l * dt); }, c.moving, c.metric_mode, c.time_order);

    const int nv = c.taylor_n;
    const double re = c.re;
    const Vec2 stream = c.velocity;
    auto exact = [&](Vec2 x, double t) {
        return taylor ? exact_taylor(nv, re, x, t) : TaylorValue{stream.x, stream.y, 0.0};
    };

    FlowBoundary bc;
    bc.velocity = [exact](int, int, Vec2 x, double t) {
        const TaylorValue e = exact(x, t);
        return Vec2{e.u, e.v};
    };
    if (taylor) {
        auto kin = std::make_shared<NodeKinematics>([mp](double t) { return mp.grid(t); });
        const bool moving = c.moving;
        bc.node_acceleration = [kin, nv, re, moving](int i, int j, Vec2 x, double t) {
            // d/dtau of the exact velocity following the node: u_t + x_tau . grad(u)
            const double e = std::exp(-2.0 * nv * nv * t / re);
            const double cx = std::cos(nv * x.x), sx = std::sin(nv * x.x);
            const double cy = std::cos(nv * x.y), sy = std::sin(nv * x.y);
            const double k = -2.0 * nv * nv / re;
            Vec2 acc{-cx * sy * e * k, sx * cy * e * k};
            if (moving) {
                const Vec2 w = kin->velocity(i, j, t);
                acc.x += w.x * nv * sx * sy * e - w.y * nv * cx * cy * e;
                acc.y += w.x * nv * cx * cy * e - w.y * nv * sx * sy * e;
            }
            return acc;
        };
    }

    const PhysicalGrid& g0 = seq.grid();
    Field u0 = sample_nodes(g0, [&](Vec2 x) { return exact(x, 0.0).u; });
    Field v0 = sample_nodes(g0, [&](Vec2 x) { return exact(x, 0.0).v; });
    const FlowConfig fc = flow_config(c);
    PrimitiveState s{pade_gradients(ScalarField(p, u0)), pade_gradients(ScalarField(p, v0)), ScalarField(p), re, 0.0};
    s.p = taylor ? pade_gradients(ScalarField(p, sample_nodes(g0, [&](Vec2 x) { return exact(x, 0.0).p; })))
                 : solve_pressure(s.u, s.v, seq.current(), re, bc, 0.0, fc);
    PrimitiveState prev;
    FlowWorkspace ws;
    StepTally tally;
    for (int k = 1; k <= rep.steps; ++k) {
        seq.advance();
        FlowStepReport r;
        PrimitiveState next = step_primitive(s, seq.previous(), seq.current(), dt, bc, fc, &r,
                                             k > 1 ? &prev : nullptr, &ws, seq.moving() ? k : 0);
        tally.add(r);
        prev = std::move(s);
        s = std::move(next);
        double rt = 0.0;
        if (is_report_step(c, k, dt, &rt) || k == rep.steps) {
            const PhysicalGrid& g = seq.grid();
            const Field ue = sample_nodes(g, [&](Vec2 x) { return exact(x, s.time).u; });
            const Field ve = sample_nodes(g, [&](Vec2 x) { return exact(x, s.time).v; });
            const Field pe = sample_nodes(g, [&](Vec2 x) { return exact(x, s.time).p; });
            if (is_report_step(c, k, dt, &rt)) {
                rep.errors.push_back({rt, "u", error_norms(s.u.phi, ue)});
                rep.errors.push_back({rt, "v", error_norms(s.v.phi, ve)});
                // pressure is defined up to a constant: compare deviations from the mean
                rep.errors.push_back({rt, "p", error_norms(minus_mean(s.p.phi), minus_mean(pe))});
            }
            if (k == rep.steps) {
                rep.final_grid = g;
                rep.fields = {{"u", s.u.phi}, {"v", s.v.phi}, {"p", s.p.phi},
                              {"u_exact", ue}, {"v_exact", ve}, {"p_exact", pe}};
                rep.steady_change = std::max(max_abs_diff(s.u.phi, prev.u.phi), max_abs_diff(s.v.phi, prev.v.phi)) / dt;
            }
        }
    }
    tally.finish(rep);
    return rep;
}

// Integral of exp(a (s - c)^2) over [0, x] for a < 0.
double gauss_integral(double a, double c, double x) {
    const double r = std::sqrt(-a);
    return 0.5 * std::sqrt(kPi) / r * (std::erf(r * (x - c)) + std::erf(r * c));
}

RunReport run_cavity(const CaseConfig& c) {
    RunReport rep = start_report(c);
    const double dt = rep.dt;
    const int n = c.grid;
    const bool deform = c.kind == CaseTag::CavityDeform;
    MotionPrescription mp = deform ? MotionPrescription::cavity_bump(n)
                                   : MotionPrescription::cavity_stretch(n, c.stretch_amplitude);
    mp.bump_amplitude = c.bump_amplitude;
    mp.bump_frequency = c.bump_frequency;
    const ParamSpace p = mp.param;
    GridSequence seq([mp, dt](long l) { return mp.grid(l * dt); }, c.moving, c.metric_mode, c.time_order);

    FlowBoundary bc = FlowBoundary::cavity(n);
    if (c.moving) {
        // walls move with their nodes (only the bump wall does); the lid slides
        auto kin = std::make_shared<NodeKinematics>([mp](double t) { return mp.grid(t); });
        bc.velocity = [kin, n](int i, int j, Vec2, double t) {
            return j == n - 1 ? Vec2{1.0, 0.0} : kin->velocity(i, j, t);
        };
        bc.node_acceleration = [kin, n](int i, int j, Vec2, double t) {
            return j == n - 1 ? Vec2{} : kin->acceleration(i, j, t);
        };
        if (deform) {
            // psi_x = -v along the bottom, with v = y_tau of the bump wall
            bc.stream = [mp, n](int i, int j, Vec2, double t) {
                if (j != 0 || i == 0 || i == n - 1) return 0.0;
                const double x = mp.param.xi(i), w = 2.0 * kPi * mp.bump_frequency;
                const double a = mp.bump_exponent;
                const double area = gauss_integral(a, mp.bump_c1, x) - gauss_integral(a, mp.bump_c2, x);
                return -mp.bump_amplitude * w * std::cos(w * t) * area;
            };
        }
    }

    const FlowConfig fc = flow_config(c);
    FlowWorkspace ws;
    StepTally tally;
    const bool psi = c.formulation == "psi-omega";
    PrimitiveState ps{ScalarField(p), ScalarField(p), ScalarField(p), c.re, 0.0}, pprev;
    PsiOmegaState ws_state{ScalarField(p), ScalarField(p), c.re, 0.0}, wprev;
    Field u_old = p.make_field(), v_old = p.make_field();
    for (int k = 1; k <= rep.steps; ++k) {
        seq.advance();
        FlowStepReport r;
        const long stamp = seq.moving() ? k : 0;
        Field u, v;
        if (psi) {
            PsiOmegaState next = step_psiomega(ws_state, seq.previous(), seq.current(), dt, bc, fc, &r,
                                               k > 1 ? &wprev : nullptr, &ws, stamp);
            wprev = std::move(ws_state);
            ws_state = std::move(next);
            std::tie(u, v) = velocity_from_stream(ws_state.psi, seq.current());
        } else {
            PrimitiveState next = step_primitive(ps, seq.previous(), seq.current(), dt, bc, fc, &r,
                                                 k > 1 ? &pprev : nullptr, &ws, stamp);
            pprev = std::move(ps);
            ps = std::move(next);
            u = ps.u.phi;
            v = ps.v.phi;
        }
        tally.add(r);
        if (deform) {
            const PhysicalGrid& g = seq.grid();
            rep.monitor.push_back({k * dt, sample_at(g, u, c.monitor), sample_at(g, v, c.monitor)});
        }
        if (k == rep.steps) {
            rep.final_grid = seq.grid();
            rep.steady_change = std::max(max_abs_diff(u, u_old), max_abs_diff(v, v_old)) / dt;
            rep.fields = {{"u", u}, {"v", v}};
            if (psi) {
                rep.fields.push_back({"psi", ws_state.psi.phi});
                rep.fields.push_back({"omega", ws_state.omega.phi});
            } else {
                rep.fields.push_back({"p", ps.p.phi});
            }
        }
        u_old = std::move(u);
        v_old = std::move(v);
    }
    tally.finish(rep);
    return rep;
}

double sample_line(const RunReport& run, const std::string& name, Vec2 x) {
    return sample_at(run.final_grid, run.field(name), x);
}

}  // namespace

NormTriple error_norms(const Field& error) {
    NormTriple t;
    if (error.empty()) return t;
    double s1 = 0.0, s2 = 0.0;
    for (double e : error.values()) {
        const double a = std::abs(e);
        s1 += a;
        s2 += a * a;
        t.linf = std::max(t.linf, a);
    }
    const double n = static_cast<double>(error.size());
    t.l1 = s1 / n;
    t.l2 = std::sqrt(s2 / n);
    return t;
}

NormTriple error_norms(const Field& numeric, const Field& exact) {
    if (!numeric.same_shape(exact)) throw InvalidArgument("error_norms: fields differ in shape");
    Field e(numeric.nx(), numeric.ny());
    for (std::size_t n = 0; n < e.size(); ++n) e[n] = numeric[n] - exact[n];
    return error_norms(e);
}

double observed_order(double e_coarse, double e_fine, double ratio) {
    if (!(e_coarse > 0.0) || !(e_fine > 0.0)) throw InvalidArgument("observed_order needs positive errors");
    if (!(ratio > 1.0)) throw InvalidArgument("observed_order needs a refinement ratio above 1");
    return std::log(e_coarse / e_fine) / std::log(ratio);
}

double exact_pulse(const PulseParams& p, Vec2 x, double t) {
    const double s = 1.0 + 4.0 * p.width * p.diffusion * t;
    const double dx = x.x - p.centre.x - p.velocity.x * t;
    const double dy = x.y - p.centre.y - p.velocity.y * t;
    return std::exp(-p.width * (dx * dx + dy * dy) / s) / s;
}

TaylorValue exact_taylor(int n, double re, Vec2 x, double t) {
    const double e = std::exp(-2.0 * n * n * t / re);
    return {-std::cos(n * x.x) * std::sin(n * x.y) * e, std::sin(n * x.x) * std::cos(n * x.y) * e,
            -0.25 * (std::cos(2.0 * n * x.x) + std::cos(2.0 * n * x.y)) * e * e};
}

const Field& RunReport::field(const std::string& name) const {
    for (const NamedField& f : fields)
        if (f.name == name) return f.values;
    throw InvalidArgument("run report has no field '" + name + "'");
}

const ErrorSample& RunReport::error(const std::string& quantity, double time) const {
    for (const ErrorSample& e : errors)
        if (e.quantity == quantity && std::abs(e.time - time) < 1e-9) return e;
    throw InvalidArgument("run report has no '" + quantity + "' error at that time");
}

bool RunReport::same_results(const RunReport& o) const {
    return case_name == o.case_name && grid == o.grid && dt == o.dt && steps == o.steps && errors == o.errors &&
           monitor == o.monitor && picard_mean == o.picard_mean && picard_max == o.picard_max &&
           div_max == o.div_max && steady_change == o.steady_change && final_grid == o.final_grid &&
           fields == o.fields;
}

RunReport run_case(const CaseConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep;
    switch (cfg.kind) {
    case CaseTag::PulseDeform:
    case CaseTag::PulseRandom: rep = run_pulse(cfg); break;
    case CaseTag::Freestream:
    case CaseTag::Taylor: rep = run_primitive_exact(cfg); break;
    case CaseTag::Cavity:
    case CaseTag::CavityDeform: rep = run_cavity(cfg); break;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_report_csv({rep}, (std::filesystem::path(cfg.out_dir) / "report.csv").string());
        if (cfg.export_fields)
            export_field(rep.final_grid, rep.fields, (std::filesystem::path(cfg.out_dir) / "fields.txt").string());
    }
    return rep;
}

std::vector<OrderRow> sweep_orders(const std::vector<RunReport>& runs) {
    std::vector<OrderRow> rows;
    for (std::size_t f = 1; f < runs.size(); ++f) {
        const RunReport& a = runs[f - 1];
        const RunReport& b = runs[f];
        double ratio;
        if (a.grid != b.grid) ratio = static_cast<double>(b.grid - 1) / (a.grid - 1);
        else if (a.dt != b.dt) ratio = a.dt / b.dt;
        else throw InvalidArgument("sweep runs must differ in grid or time step");
        for (const ErrorSample& eb : b.errors)
            for (const ErrorSample& ea : a.errors) {
                if (ea.quantity != eb.quantity || std::abs(ea.time - eb.time) > 1e-9) continue;
                auto order = [&](double ec, double ef) {
                    return ec > 0.0 && ef > 0.0 ? observed_order(ec, ef, ratio)
                                                : std::numeric_limits<double>::quiet_NaN();
                };
                rows.push_back({eb.quantity, eb.time, f - 1, f, ratio,
                                {order(ea.norms.l1, eb.norms.l1), order(ea.norms.l2, eb.norms.l2),
                                 order(ea.norms.linf, eb.norms.linf)}});
            }
    }
    return rows;
}

std::pair<double, double> centreline_deviation(const RunReport& run, const CentrelineReference& ref) {
    double du = 0.0, dv = 0.0;
    for (auto [y, u] : ref.u) du = std::max(du, std::abs(sample_line(run, "u", {0.5, y}) - u));
    for (auto [x, v] : ref.v) dv = std::max(dv, std::abs(sample_line(run, "v", {x, 0.5}) - v));
    return {du, dv};
}

std::pair<double, double> centreline_difference(const RunReport& a, const RunReport& b, int n) {
    if (n < 2) throw InvalidArgument("centreline_difference needs at least two points");
    double du = 0.0, dv = 0.0;
    for (int k = 0; k < n; ++k) {
        const double s = static_cast<double>(k) / (n - 1);
        du = std::max(du, std::abs(sample_line(a, "u", {0.5, s}) - sample_line(b, "u", {0.5, s})));
        dv = std::max(dv, std::abs(sample_line(a, "v", {s, 0.5}) - sample_line(b, "v", {s, 0.5})));
    }
    return {du, dv};
}

double periodicity_deviation(const std::vector<MonitorSample>& series, double period) {
    if (series.size() < 3) throw InvalidArgument("monitor series is too short");
    const double step = series[1].time - series[0].time;
    const auto lag = static_cast<std::size_t>(std::lround(period / step));
    if (lag < 1 || 2 * lag > series.size()) throw InvalidArgument("monitor series is shorter than two periods");
    const std::size_t first = series.size() - lag;
    double worst = 0.0;
    for (double MonitorSample::*comp : {&MonitorSample::u, &MonitorSample::v}) {
        double lo = series[first].*comp, hi = lo, dev = 0.0;
        for (std::size_t k = first; k < series.size(); ++k) {
            lo = std::min(lo, series[k].*comp);
            hi = std::max(hi, series[k].*comp);
            dev = std::max(dev, std::abs(series[k].*comp - series[k - lag].*comp));
        }
        worst = std::max(worst, hi > lo ? dev / (hi - lo) : (dev > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    return worst;
}

}  // namespace compactflow
