#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "compactflow/field.hpp"
#include "compactflow/grid.hpp"
#include "compactflow/metrics.hpp"

namespace compactflow {

enum class CaseTag { PulseDeform, PulseRandom, Freestream, Taylor, Cavity, CavityDeform };

std::string to_string(CaseTag c);
// Throws InvalidArgument for an unknown tag.
CaseTag case_tag_from_string(const std::string& s);

struct NormTriple {
    double l1 = 0.0, l2 = 0.0, linf = 0.0;
    bool operator==(const NormTriple&) const = default;
};

// L1 = sum|e|/N, L2 = sqrt(sum e^2/N), Linf = max|e| over all N nodes.
NormTriple error_norms(const Field& numeric, const Field& exact);
NormTriple error_norms(const Field& error);

// log(e_coarse/e_fine)/log(ratio). Throws InvalidArgument unless both errors
// are positive and ratio > 1.
double observed_order(double e_coarse, double e_fine, double ratio);

struct PulseParams {
    double diffusion = 0.01;
    Vec2 velocity{0.8, 0.8};
    double width = 100.0;  // a_p in exp(-a_p r^2)
    Vec2 centre{0.5, 0.5};
};

// Gaussian pulse of unit height convected with constant velocity and spread
// by constant diffusion:
//   exp(-a_p |x - x_c - c t|^2 / (1 + 4 a_p D t)) / (1 + 4 a_p D t).
double exact_pulse(const PulseParams& p, Vec2 x, double t);

struct TaylorValue {
    double u = 0.0, v = 0.0, p = 0.0;
};
// Decaying vortex array: u = -cos(Nx) sin(Ny) e^{-2N^2t/Re},
// v = sin(Nx) cos(Ny) e^{-2N^2t/Re}, p = -(cos 2Nx + cos 2Ny) e^{-4N^2t/Re}/4.
TaylorValue exact_taylor(int n, double re, Vec2 x, double t);

// Parameters of one benchmark run. Defaults depend on the case; start from
// CaseConfig::defaults and adjust.
struct CaseConfig {
    CaseTag kind = CaseTag::PulseDeform;
    int grid = 21;                     // nodes per direction
    double dt = 0.01;
    bool dt_from_grid = false;         // dt = h^2 (the spatial sweeps)
    double t_end = 0.5;
    std::vector<double> report_times;  // empty: t_end only

    double re = 100.0;
    double diffusion = 0.01;
    Vec2 velocity{0.8, 0.8};
    double pulse_width = 100.0;
    Vec2 centre{0.5, 0.5};
    int taylor_n = 3;

    bool moving = true;          // false: the same case on its static base grid
    double amplitude = 0.2;      // pulse-deform side displacement
    double period = 1.5;         // pulse-deform T
    double translation = 0.7;    // pulse-deform translational velocity scale
    int waves = 4;
    double wave_amplitude = 1.0;
    double omega = 0.25;
    double stretch_amplitude = 15000.0;
    double bump_amplitude = 0.1;
    double bump_frequency = 0.2;
    double random_fraction = 0.2;
    int frozen_layers = 3;

    MetricMode metric_mode = MetricMode::Differential;
    int time_order = 2;
    std::string formulation = "primitive";  // or "psi-omega" (cavities)
    double picard_tol = 1e-8;
    int max_picard = 30;
    double linear_tol = 1e-10;

    Vec2 monitor{2.0 / 16.0, 13.0 / 16.0};
    std::string out_dir;
    std::uint64_t seed = 1;
    bool export_fields = false;

    static CaseConfig defaults(CaseTag kind);

    // Grid spacing of the base parametric grid and the step actually taken
    // (dt_from_grid resolved, then shrunk so that t_end is a whole number of steps).
    double spacing() const;
    double effective_dt() const;
    int steps() const;

    // Throws InvalidArgument on nonpositive sizes, unknown formulation,
    // report times that are not step times, and the like.
    void validate() const;

    bool operator==(const CaseConfig&) const = default;
};

// Strict JSON: a single object whose "case" key selects the defaults; any
// unknown key throws InvalidArgument.
CaseConfig parse_config(const std::string& json_text);
CaseConfig load_config(const std::string& path);
std::string serialize_config(const CaseConfig& cfg);
// key=value with a JSON value (bare words are read as strings).
CaseConfig apply_override(const CaseConfig& cfg, const std::string& assignment);
// All assignments in order, validated once at the end so that related keys
// (t_end and report_times, say) can change together.
CaseConfig apply_overrides(const CaseConfig& cfg, const std::vector<std::string>& assignments);

struct ErrorSample {
    double time = 0.0;
    std::string quantity;  // phi, u, v, p
    NormTriple norms;
    bool operator==(const ErrorSample&) const = default;
};

struct MonitorSample {
    double time = 0.0;
    double u = 0.0, v = 0.0;
    bool operator==(const MonitorSample&) const = default;
};

struct NamedField {
    std::string name;
    Field values;
    bool operator==(const NamedField&) const = default;
};

struct RunReport {
    std::string case_name;
    int grid = 0;
    double dt = 0.0;
    int steps = 0;
    std::vector<ErrorSample> errors;
    std::vector<MonitorSample> monitor;  // cavity-deform only
    double picard_mean = 0.0;
    int picard_max = 0;
    double div_max = 0.0;       // largest per-step divergence (flow cases)
    double steady_change = 0.0; // max |u^{n+1} - u^n| / dt over the last step
    double seconds = 0.0;       // wall clock; excluded from comparisons
    PhysicalGrid final_grid;
    std::vector<NamedField> fields;  // final state

    const Field& field(const std::string& name) const;
    const ErrorSample& error(const std::string& quantity, double time) const;

    // Everything except the timing.
    bool same_results(const RunReport& o) const;
};

// Builds the grid sequence, steps the matching solver to t_end and evaluates
// the exact solution where one exists. With cfg.out_dir set, writes
// report.csv (and final fields when export_fields) there.
RunReport run_case(const CaseConfig& cfg);

// Orders between consecutive reports of a sweep; see write_report_csv.
struct OrderRow {
    std::string quantity;
    double time = 0.0;
    std::size_t coarse = 0, fine = 0;  // report indices
    double ratio = 0.0;
    NormTriple order;
};
// Consecutive pairs: ratio (n_f - 1)/(n_c - 1) when the grids differ, else
// dt_c/dt_f. Throws InvalidArgument if a pair changes neither.
std::vector<OrderRow> sweep_orders(const std::vector<RunReport>& runs);

// report.csv: case, grid, dt, time, l1, l2, linf, order_l1, order_l2,
// order_linf, picard_iters_mean, div_max, seconds. One row per error sample;
// the order columns hold the order from the previous run of the sweep to
// this one (empty for the first). Non-pulse cases name the quantity in the
// case column, e.g. taylor.u.
std::string report_csv(const std::vector<RunReport>& runs);
void write_report_csv(const std::vector<RunReport>& runs, const std::string& path);

// Line 1 "nx ny t" (sizes of g.x), then "x y f1 f2 ..." per node with xi fastest, all
// numbers with 17 significant digits. Throws Error on I/O failure and
// InvalidArgument on shape mismatch.
void export_field(const PhysicalGrid& g, const std::vector<NamedField>& fields, const std::string& path);

struct FieldFile {
    int nx = 0, ny = 0;
    double time = 0.0;
    Field x, y;
    std::vector<Field> fields;
};
FieldFile read_field(const std::string& path);

// Published centreline data: u along x = 0.5 as (y, u) and v along y = 0.5
// as (x, v). CSV with columns line, s, value where line is u or v.
struct CentrelineReference {
    std::vector<std::pair<double, double>> u, v;
};
CentrelineReference load_centreline_reference(const std::string& path);

// Max deviation of the final cavity centrelines of `run` from the reference
// points (bilinear sampling), as {u, v}.
std::pair<double, double> centreline_deviation(const RunReport& run, const CentrelineReference& ref);
// Max difference between two cavity runs sampled on n points along each
// centreline, as {u, v}.
std::pair<double, double> centreline_difference(const RunReport& a, const RunReport& b, int n = 129);

// Relative deviation between successive periods of the monitor signal:
// max over u and v of max|s(t) - s(t - period)| over the last period,
// divided by the range of s over that period.
double periodicity_deviation(const std::vector<MonitorSample>& series, double period);

}  // namespace compactflow
