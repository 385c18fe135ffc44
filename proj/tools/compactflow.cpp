#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "compactflow/bench.hpp"
#include "compactflow/errors.hpp"
#include "compactflow/properties.hpp"

using namespace compactflow;

namespace {

CaseConfig configured(const std::string& path, const std::vector<std::string>& overrides) {
    return apply_overrides(load_config(path), overrides);
}

void summarize(const RunReport& r) {
    std::printf("%s grid %d dt %.6g steps %d picard %.2f/%d div %.3e %.1fs\n", r.case_name.c_str(), r.grid, r.dt,
                r.steps, r.picard_mean, r.picard_max, r.div_max, r.seconds);
    for (const ErrorSample& e : r.errors)
        std::printf("  t=%g %s l1 %.4e l2 %.4e linf %.4e\n", e.time, e.quantity.c_str(), e.norms.l1, e.norms.l2,
                    e.norms.linf);
}

int run_cmd(const std::string& config, const std::string& out, const std::vector<std::string>& overrides) {
    CaseConfig cfg = configured(config, overrides);
    if (!out.empty()) cfg.out_dir = out;
    if (cfg.out_dir.empty()) cfg.out_dir = ".";
    summarize(run_case(cfg));
    return 0;
}

int sweep_cmd(const std::string& config, const std::string& out, const std::vector<std::string>& overrides,
              const std::vector<int>& grids, const std::vector<double>& dts) {
    const CaseConfig base = configured(config, overrides);
    if (grids.empty() == dts.empty()) throw InvalidArgument("sweep needs exactly one of --grids and --dts");
    const std::string dir = out.empty() ? (base.out_dir.empty() ? "." : base.out_dir) : out;

    const std::size_t count = grids.empty() ? dts.size() : grids.size();
    std::vector<RunReport> runs;
    for (std::size_t k = 0; k < count; ++k) {
        CaseConfig cfg = base;
        if (!grids.empty()) {
            cfg.grid = grids[k];
        } else {
            cfg.dt = dts[k];
            cfg.dt_from_grid = false;
        }
        cfg.out_dir = cfg.export_fields ? (std::filesystem::path(dir) / ("run" + std::to_string(k))).string() : "";
        cfg.validate();
        runs.push_back(run_case(cfg));
        summarize(runs.back());
    }
    std::filesystem::create_directories(dir);
    write_report_csv(runs, (std::filesystem::path(dir) / "report.csv").string());
    for (const OrderRow& o : sweep_orders(runs))
        std::printf("order %s t=%g run %zu->%zu ratio %g: l1 %.3f l2 %.3f linf %.3f\n", o.quantity.c_str(), o.time,
                    o.coarse, o.fine, o.ratio, o.order.l1, o.order.l2, o.order.linf);
    return 0;
}

int verify_cmd() {
    bool ok = true;
    for (const PropertyResult& r : run_property_suite()) {
        std::printf("%s  %-48s %.3e (tol %.0e)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.value,
                    r.tolerance);
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compact-scheme flow solver benchmarks"};
    app.require_subcommand(1);

    std::string config, out;
    std::vector<std::string> overrides;
    std::vector<int> grids;
    std::vector<double> dts;

    CLI::App* run = app.add_subcommand("run", "Run one case and write report.csv");
    run->add_option("--config", config, "JSON case file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory (default: config out_dir, else .)");
    run->add_option("--override", overrides, "key=value applied after the file")->allow_extra_args(false);

    CLI::App* sweep = app.add_subcommand("sweep", "Run a grid or step sweep and report observed orders");
    sweep->add_option("--config", config, "JSON case file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "Output directory");
    sweep->add_option("--override", overrides, "key=value applied after the file")->allow_extra_args(false);
    sweep->add_option("--grids", grids, "Grid sizes, e.g. 21,41,81")->delimiter(',');
    sweep->add_option("--dts", dts, "Time steps, e.g. 0.05,0.025,0.0125")->delimiter(',');

    app.add_subcommand("verify", "Run the exactness and consistency property suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_cmd(config, out, overrides);
        if (*sweep) return sweep_cmd(config, out, overrides, grids, dts);
        return verify_cmd();
    } catch (const std::exception& e) {
        std::cerr << "compactflow: " << e.what() << '\n';
        return 2;
    }
}
