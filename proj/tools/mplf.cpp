// mplf: command-line front end for the multiphase load-flow toolkit.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mplf/io.hpp"
#include "mplf/mplf.hpp"

namespace {

using namespace mplf;
using io::json;

enum class Format { json, csv };

struct RunConfig {
    std::string subcommand;
    std::string network_path;
    std::string injections_path;
    std::string base_injections_path;
    double tol_step = 1e-10;
    double tol_residual = 1e-8;
    double tol_kappa = 1e-3;
    int max_iter = 1000;
    int theorem = 2;
    std::string kind = "fot";
    double kappa_min = -1.5;
    double kappa_max = 1.5;
    int points = 61;
    double base_kappa = 1.0;
    int jobs = 1;
    int scan_points = default_scan_points;
    std::string output_path;
    std::string summary_path;
    std::string format;
};

int log_level() {
    const char* env = std::getenv("MPLF_LOG");
    if (!env) return 1;
    const std::string v = env;
    if (v == "0" || v == "quiet" || v == "error") return 0;
    if (v == "2" || v == "debug") return 2;
    return 1;
}

void log(int level, const std::string& msg) {
    if (level <= log_level()) std::cerr << "mplf: " << msg << '\n';
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.output_path.empty() || cfg.output_path == "-") {
        std::cout << text;
    } else {
        io::write_file(cfg.output_path, text);
        log(1, "wrote " + cfg.output_path);
    }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

CertificateKind theorem_kind(int theorem) { return theorem == 1 ? CertificateKind::radius_scan : CertificateKind::closed_form; }

FixedPointOptions solver_options(const RunConfig& cfg) {
    FixedPointOptions o;
    o.tol_step = cfg.tol_step;
    o.tol_residual = cfg.tol_residual;
    o.max_iter = cfg.max_iter;
    return o;
}

// Base point: the zero-load profile, or the solved base injections when supplied.
BasePoint make_base(const RunConfig& cfg, const NetworkModel& model, const ZeroLoadProfile& w) {
    if (cfg.base_injections_path.empty()) return BasePoint::zero_load(model, w);
    const InjectionSet s_hat = io::load_injections(model, cfg.base_injections_path);
    const SolveResult r = solve_fixed_point(model, w, s_hat, std::nullopt, solver_options(cfg));
    if (!r.converged) throw NonConvergenceError("base injections: residual tolerance not met", r.v, r.step_norms);
    log(2, "base solved in " + std::to_string(r.iterations) + " iterations");
    return {r.v, s_hat};
}

int run_solve(const RunConfig& cfg, const NetworkModel& model, const ZeroLoadProfile& w, const InjectionSet& s) {
    const SolveResult r = solve_fixed_point(model, w, s, std::nullopt, solver_options(cfg));
    log(1, "solve: " + std::to_string(r.iterations) + " iterations, residual " + io::detail::fmt(r.residual_inf));
    if (cfg.format == "csv") {
        std::string out = "bus,phase,re,im,abs\n";
        for (Index k = 0; k < r.v.size(); ++k) {
            const PhaseEntry& e = model.index().phases()[static_cast<std::size_t>(k)];
            out += e.bus + "," + to_char(e.phase) + "," + io::detail::fmt(r.v(k).real()) + "," +
                   io::detail::fmt(r.v(k).imag()) + "," + io::detail::fmt(std::abs(r.v(k))) + "\n";
        }
        emit(cfg, out);
    } else {
        emit(cfg, dump(io::to_json(model, r)));
    }
    return r.converged ? 0 : 1;
}

int run_certify(const RunConfig& cfg, const NetworkModel& model, const ZeroLoadProfile& w, const InjectionSet& s) {
    const BasePoint base = make_base(cfg, model, w);
    const Certificate c = certify(theorem_kind(cfg.theorem), model, w, base, s, cfg.scan_points);
    emit(cfg, dump(io::to_json(model, c)));
    log(1, std::string("certificate ") + (c.satisfied ? "satisfied" : "not satisfied"));
    return c.satisfied ? 0 : 2;
}

int run_linearize(const RunConfig& cfg, const NetworkModel& model, const ZeroLoadProfile& w, const InjectionSet& s) {
    const LinearKind kind = cfg.kind == "fpl" ? LinearKind::fpl : LinearKind::fot;
    BasePoint base;
    if (s.is_zero()) {
        base = BasePoint::zero_load(model, w);
    } else {
        const SolveResult r = solve_fixed_point(model, w, s, std::nullopt, solver_options(cfg));
        if (!r.converged) throw NonConvergenceError("linearization base: residual tolerance not met", r.v, r.step_norms);
        base = {r.v, s};
    }
    json out = io::to_json(linearize(kind, model, w, base));
    json x_labels = json::array();
    for (const PhaseEntry& e : model.index().phases()) x_labels.push_back(e.bus + "." + to_char(e.phase));
    json d_labels = json::array();
    for (const DeltaEntry& e : model.index().deltas()) d_labels.push_back(e.bus + "." + to_string(e.pair));
    out["phases"] = x_labels;
    out["deltas"] = d_labels;
    emit(cfg, dump(out));
    return 0;
}

json interval_summary(const NetworkModel& model, const ZeroLoadProfile& w, const InjectionSet& s, const RunConfig& cfg) {
    IntervalOptions iopts;
    iopts.tol_kappa = cfg.tol_kappa;
    iopts.scan_points = cfg.scan_points;
    json out = json::object();
    for (CertificateKind kind : {CertificateKind::radius_scan, CertificateKind::closed_form}) {
        json entry;
        entry["zero_load"] = io::to_json(feasible_interval(model, w, BasePoint::zero_load(model, w), s, kind, iopts));
        if (cfg.base_kappa != 0.0) {
            try {
                entry["recentered"] =
                    io::to_json(recentered_interval(model, w, s, cfg.base_kappa, kind, iopts, solver_options(cfg)).interval);
            } catch (const NonConvergenceError& e) {
                entry["recentered"] = nullptr;
                entry["recentered_error"] = e.what();
            }
        }
        out[to_string(kind)] = entry;
    }
    return out;
}

int run_sweep(const RunConfig& cfg, const NetworkModel& model, const ZeroLoadProfile& w, const InjectionSet& s) {
    SweepOptions opts;
    opts.kind = theorem_kind(cfg.theorem);
    opts.scan_points = cfg.scan_points;
    opts.jobs = cfg.jobs;
    opts.fixed_point = solver_options(cfg);
    const ContinuationResult r = linear_error_sweep(model, w, s, cfg.base_kappa, kappa_grid(cfg.kappa_min, cfg.kappa_max, cfg.points), opts);
    std::size_t failed = 0;
    for (const auto& sol : r.solutions) failed += sol ? 0 : 1;
    log(1, "sweep: " + std::to_string(r.kappas.size()) + " points, " + std::to_string(failed) + " without a solution");
    if (cfg.format == "json") {
        json rows = json::array();
        for (std::size_t k = 0; k < r.kappas.size(); ++k) {
            rows.push_back({{"kappa", r.kappas[k]},
                            {"cert_pass", r.certificates[k].satisfied},
                            {"solver", to_string(r.solver_used[k])},
                            {"fot_err", r.fot_errors[k] ? json(*r.fot_errors[k]) : json(nullptr)},
                            {"fpl_err", r.fpl_errors[k] ? json(*r.fpl_errors[k]) : json(nullptr)},
                            {"failure", r.failures[k]}});
        }
        emit(cfg, dump({{"base_kappa", r.base_kappa}, {"rows", rows}}));
    } else {
        emit(cfg, io::sweep_csv(r));
    }
    std::string summary = cfg.summary_path;
    if (summary.empty() && !cfg.output_path.empty() && cfg.output_path != "-") summary = cfg.output_path + ".intervals.json";
    if (!summary.empty()) {
        io::write_file(summary, dump(interval_summary(model, w, s, cfg)));
        log(1, "wrote " + summary);
    }
    return 0;
}

int run(const RunConfig& cfg) {
    const NetworkModel model = io::load_network(cfg.network_path);
    const ZeroLoadProfile w = zero_load_voltage(model);
    const InjectionSet s = cfg.injections_path.empty() ? InjectionSet::zero(model) : io::load_injections(model, cfg.injections_path);
    log(2, "network: " + std::to_string(model.phase_count()) + " PQ phases, " + std::to_string(model.delta_count()) +
               " delta connections");
    if (cfg.subcommand == "solve") return run_solve(cfg, model, w, s);
    if (cfg.subcommand == "certify") return run_certify(cfg, model, w, s);
    if (cfg.subcommand == "linearize") return run_linearize(cfg, model, w, s);
    return run_sweep(cfg, model, w, s);
}

void common_options(CLI::App* sub, RunConfig& cfg, bool needs_injections) {
    sub->add_option("-n,--network", cfg.network_path, "Network JSON")->required()->check(CLI::ExistingFile);
    auto* inj = sub->add_option("-s,--injections", cfg.injections_path, "Injection JSON")->check(CLI::ExistingFile);
    if (needs_injections) inj->required();
    sub->add_option("-o,--output", cfg.output_path, "Output file (stdout when omitted)");
    sub->add_option("--tol-step", cfg.tol_step, "Fixed-point step tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--tol-residual", cfg.tol_residual, "Power-balance residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--max-iter", cfg.max_iter, "Fixed-point iteration limit")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiphase load flow: solve, certify, linearize and sweep"};
    app.require_subcommand(1);
    RunConfig cfg;

    CLI::App* solve = app.add_subcommand("solve", "Solve the load flow by fixed-point iteration");
    common_options(solve, cfg, true);
    solve->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    CLI::App* cert = app.add_subcommand("certify", "Check existence and uniqueness conditions");
    common_options(cert, cfg, true);
    cert->add_option("--theorem", cfg.theorem, "1: radius scan, 2: closed form")->check(CLI::IsMember({1, 2}));
    cert->add_option("-b,--base-injections", cfg.base_injections_path, "Base injections (zero load when omitted)")
        ->check(CLI::ExistingFile);
    cert->add_option("--scan-points", cfg.scan_points, "Radius grid size")->check(CLI::PositiveNumber);

    CLI::App* lin = app.add_subcommand("linearize", "Build a linear load-flow model around the solved injections");
    common_options(lin, cfg, false);
    lin->add_option("--kind", cfg.kind, "fot or fpl")->check(CLI::IsMember({"fot", "fpl"}));

    CLI::App* sweep = app.add_subcommand("sweep", "Scale injections by kappa; certify and compare linear models");
    common_options(sweep, cfg, true);
    sweep->add_option("--kappa-min", cfg.kappa_min, "Smallest kappa");
    sweep->add_option("--kappa-max", cfg.kappa_max, "Largest kappa");
    sweep->add_option("--points", cfg.points, "Grid points")->check(CLI::PositiveNumber);
    sweep->add_option("--base-kappa", cfg.base_kappa, "Linearization and recentering base");
    sweep->add_option("--theorem", cfg.theorem, "Certificate reported in cert_pass")->check(CLI::IsMember({1, 2}));
    sweep->add_option("--scan-points", cfg.scan_points, "Radius grid size")->check(CLI::PositiveNumber);
    sweep->add_option("--tol-kappa", cfg.tol_kappa, "Interval endpoint tolerance")->check(CLI::PositiveNumber);
    sweep->add_option("--jobs", cfg.jobs, "Concurrent grid segments")->check(CLI::PositiveNumber);
    sweep->add_option("--summary", cfg.summary_path, "Interval summary JSON (default: <output>.intervals.json)");
    sweep->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.kappa_min > cfg.kappa_max) {
        std::cerr << "mplf: --kappa-min must not exceed --kappa-max\n";
        return 1;
    }

    try {
        return run(cfg);
    } catch (const NonConvergenceError& e) {
        std::cerr << "mplf: no convergence: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "mplf: " << e.what() << '\n';
    }
    return 1;
}
