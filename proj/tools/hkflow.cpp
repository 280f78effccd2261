// hkflow: command-line front end of the hybrid Kuramoto workbench.
//
// Exit codes: 0 success, 1 audit or oracle failure, 2 configuration error, 3 runtime fault.

#include "hkflow/classifier.hpp"
#include "hkflow/config.hpp"
#include "hkflow/equilibria.hpp"
#include "hkflow/errors.hpp"
#include "hkflow/integrator.hpp"
#include "hkflow/io.hpp"
#include "hkflow/limit_system.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace hkflow;

namespace {

enum Exit : int { ok = 0, check_failed = 1, config_error = 2, runtime_fault = 3 };

struct Globals {
    std::string out;
    unsigned threads = 0;
    std::optional<std::uint64_t> seed;
};

fs::path output_dir(const Globals& g, const std::string& fallback)
{
    fs::path dir = g.out.empty() ? fs::path(fallback) : fs::path(g.out);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

template <class F>
void write_stream(const fs::path& path, F&& fill)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fill(out);
}

// "a,b,c" or "lo:hi:count" (inclusive, evenly spaced).
std::vector<double> parse_grid(const std::string& spec)
{
    std::vector<double> out;
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.empty()) throw ConfigError("grid '" + spec + "': cannot parse '" + s + "'");
        return x;
    };
    if (spec.find(':') != std::string::npos) {
        const auto a = spec.find(':');
        const auto b = spec.find(':', a + 1);
        if (b == std::string::npos) throw ConfigError("grid '" + spec + "': expected lo:hi:count");
        const double lo = to_double(spec.substr(0, a));
        const double hi = to_double(spec.substr(a + 1, b - a - 1));
        const double count = to_double(spec.substr(b + 1));
        if (!(count >= 1.0) || count != static_cast<double>(static_cast<long>(count)))
            throw ConfigError("grid '" + spec + "': count must be a positive integer");
        const auto n = static_cast<std::size_t>(count);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
        return out;
    }
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const auto comma = std::min(spec.find(',', pos), spec.size());
        out.push_back(to_double(spec.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

int cmd_simulate(const Globals& g, const std::string& config_path)
{
    const RunConfig cfg = load_run_config(config_path);
    IntegratorConfig integ = cfg.integrator;
    if (g.seed) integ.seed = *g.seed;
    const PreparedRun run = prepare_run(cfg.ensemble, cfg.initial, integ.seed);
    const Trajectory traj = integrate(run.ensemble, run.initial, integ);
    const fs::path dir = output_dir(g, cfg.outputs.dir);

    if (cfg.outputs.emit_trajectory)
        write_stream(dir / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, traj); });
    write_file(dir / "diagnostics.json", diagnostics_json(traj).dump(2) + "\n");

    Json meta;
    meta["config"] = config_path;
    meta["ensemble"] = ensemble_to_json(run.ensemble);
    meta["frame_drift"] = run.drift;
    meta["method"] = method_name(integ.method);
    meta["dt"] = integ.dt;
    meta["T"] = integ.T;
    meta["sample_every"] = integ.sample_every;
    meta["seed"] = integ.seed;
    meta["wall_seconds"] = traj.wall_seconds;
    write_file(dir / "metadata.json", meta.dump(2) + "\n");

    if (cfg.outputs.emit_plots) {
        write_stream(dir / "plot_R.csv", [&](std::ostream& o) { write_order_parameter_csv(o, traj); });
        write_stream(dir / "plot_diameter.csv", [&](std::ostream& o) { write_diameter_csv(o, traj); });
        write_stream(dir / "plot_frequency.csv", [&](std::ostream& o) { write_frequency_csv(o, traj); });
    }

    std::cout << "simulated N=" << run.ensemble.size() << " to t=" << traj.end_time() << " (" << traj.samples.size()
              << " samples) -> " << dir.string() << "\n";
    if (traj.fault) {
        std::cerr << "integration fault: " << traj.fault->message << "\n";
        return runtime_fault;
    }
    return ok;
}

std::size_t default_oracle_grid(std::size_t n_osc)
{
    switch (n_osc) {
    case 1: return 3;
    case 2: return 720;
    case 3: return 180;
    default: return 60;
    }
}

int cmd_equilibria(const Globals& g, const std::string& config_path, bool brute_force, std::size_t grid)
{
    const Ensemble raw = load_ensemble(config_path);
    const auto [ens, drift] = normalize_frame(raw);
    const EquilibriumSet set = enumerate_equilibria(ens);

    Json report = equilibria_json(set);
    report["ensemble"] = ensemble_to_json(ens);
    report["frame_drift"] = drift;

    std::printf("%zu equilibrium class(es)%s\n", set.classes.size(),
                set.degenerate_family ? " plus a degenerate r = 0 family" : "");
    std::printf("%4s  %-20s  %-12s  %s\n", "#", "r", "residual", "sigma");
    for (std::size_t i = 0; i < set.classes.size(); ++i) {
        const auto& c = set.classes[i];
        std::string sigma;
        for (int s : c.sigma) sigma += s > 0 ? '+' : '-';
        std::printf("%4zu  %-20.17g  %-12.3e  %s%s\n", i, c.r, c.residual, sigma.c_str(),
                    c.degenerate ? "  (degenerate)" : "");
    }
    if (!set.note.empty()) std::printf("note: %s\n", set.note.c_str());

    int code = ok;
    if (brute_force) {
        if (ens.size() > 4) throw ParameterError("--brute-force is limited to N <= 4");
        const std::size_t k = grid > 0 ? grid : default_oracle_grid(ens.size());
        const auto oracle = brute_force_equilibria(ens, k);
        const auto cmp = compare_with_oracle(set, oracle);
        report["oracle"] = oracle_json(oracle, cmp);
        report["oracle"]["grid_per_axis"] = k;
        std::printf("oracle: %zu configuration(s), matched %zu, max Delta error %.3e -> %s\n", cmp.oracle,
                    cmp.matched, cmp.max_delta_error, cmp.agree ? "agree" : "MISMATCH");
        if (!cmp.agree) code = check_failed;
    }
    write_file(output_dir(g, "out") / "equilibria.json", report.dump(2) + "\n");
    return code;
}

int cmd_classify(const Globals& g, const std::string& trajectory_path, const std::string& config_path)
{
    const RunConfig cfg = load_run_config(config_path);
    const auto [ens, drift] = normalize_frame(cfg.ensemble);
    std::ifstream in(trajectory_path, std::ios::binary);
    if (!in) throw ConfigError(trajectory_path + ": cannot open file");
    const Trajectory traj = [&] {
        try {
            return read_trajectory_csv(in, ens, cfg.integrator);
        } catch (const ConfigError& err) {
            throw ConfigError(trajectory_path + ":" + std::to_string(err.line()) + ":" +
                                  std::to_string(err.column()) + ": " + err.what(),
                              err.line(), err.column());
        }
    }();
    std::optional<EquilibriumSet> set;
    if (ens.size() <= 20) set = enumerate_equilibria(ens);
    const auto report = classify(traj, cfg.tolerances, set ? &*set : nullptr);

    Json j = classification_json(report);
    Json autonomy = Json::array();
    for (std::size_t k = 0; k < ens.size(); ++k) autonomy.push_back(autonomy_json(autonomy_audit(traj, k, cfg.tolerances)));
    j["autonomy"] = std::move(autonomy);
    write_file(output_dir(g, cfg.outputs.dir) / "classification.json", j.dump(2) + "\n");

    std::printf("PSS %s  FPLS %s  PLS %s  FSS %s  OPSS %s\n", verdict_name(report.pss.verdict).data(),
                verdict_name(report.fpls.verdict).data(), verdict_name(report.pls.verdict).data(),
                verdict_name(report.fss.verdict).data(), verdict_name(report.opss.verdict).data());
    return ok;
}

int cmd_audit(const Globals& g, const std::string& suite_path)
{
    AuditSuite suite = load_audit_suite(suite_path);
    if (g.seed) suite.integrator.seed = *g.seed;
    const AuditReport report = equivalence_audit(suite, g.threads);
    write_file(output_dir(g, "out") / "audit.json", audit_json(report).dump(2) + "\n");

    std::printf("%zu case(s), %zu flag(s), %.1f s\n", report.cases.size(), report.flags.size(), report.wall_seconds);
    std::printf("%6s", "");
    for (auto name : kTheoremStateNames) std::printf("%6s", name.data());
    std::printf("\n");
    for (std::size_t a = 0; a < 4; ++a) {
        std::printf("%6s", kTheoremStateNames[a].data());
        for (std::size_t b = 0; b < 4; ++b) std::printf("%6zu", report.agreement[a][b]);
        std::printf("\n");
    }
    for (auto id : report.flags) std::printf("flagged case %zu\n", id);
    return report.flags.empty() ? ok : check_failed;
}

int cmd_poincare(const Globals& g, const LimitParams& p, const std::string& grid_spec, const PoincareOptions& opt)
{
    p.validate();
    const auto grid = parse_grid(grid_spec);
    if (!(p.lamR >= std::abs(p.omega)))
        throw ParameterError("drift regime: lamR < |omega|, the return map has no section anchor");
    const auto results = poincare_sweep(p, grid, opt, g.threads);
    write_stream(output_dir(g, "out") / "poincare.csv", [&](std::ostream& o) { write_poincare_csv(o, results); });
    std::size_t crossed = 0;
    for (const auto& r : results) crossed += r.crossed ? 1 : 0;
    std::printf("%zu of %zu orbit(s) returned to the section\n", crossed, results.size());
    return ok;
}

int cmd_sweep(const Globals& g, const std::string& config_path, const std::string& grid_spec)
{
    const RunConfig cfg = load_run_config(config_path);
    const auto grid = parse_grid(grid_spec);
    IntegratorConfig integ = cfg.integrator;
    if (g.seed) integ.seed = *g.seed;
    const PreparedRun run = prepare_run(cfg.ensemble, cfg.initial, integ.seed);

    std::vector<std::string> rows(grid.size());
    std::vector<int> faults(grid.size(), 0);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            const Ensemble ens = run.ensemble.with_coupling(grid[i]);
            const Trajectory traj = integrate(ens, run.initial, integ);
            const auto opss = detect_opss(traj, cfg.tolerances);
            const auto fss = detect_fss(traj, cfg.tolerances);
            rows[i] = format_double(grid[i]) + "," + format_double(opss.R_star) + "," +
                      std::string(verdict_name(fss.verdict)) + "\n";
            faults[i] = traj.fault ? 1 : 0;
        }
    };
    unsigned threads = g.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : g.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(grid.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    write_stream(output_dir(g, cfg.outputs.dir) / "sweep.csv", [&](std::ostream& o) {
        o << "lambda,R_tail,FSS_verdict\n";
        for (const auto& r : rows) o << r;
    });
    std::printf("swept %zu coupling value(s)\n", grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (faults[i]) return runtime_fault;
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hkflow: hybrid Kuramoto synchronization workbench"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--threads", g.threads, "Worker threads for batch commands (0 = all cores)");
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Seed overriding the config seed");

    std::string config_path, trajectory_path, suite_path, grid_spec;
    bool brute_force = false;
    std::size_t oracle_grid = 0;

    auto* simulate = app.add_subcommand("simulate", "Integrate a run config");
    simulate->add_option("config", config_path, "Run config JSON")->required();

    auto* equilibria = app.add_subcommand("equilibria", "Enumerate equilibrium classes");
    equilibria->add_option("config", config_path, "Run config or ensemble JSON")->required();
    equilibria->add_flag("--brute-force", brute_force, "Cross-check with the grid + Newton oracle (N <= 4)");
    equilibria->add_option("--grid", oracle_grid, "Oracle grid points per axis (default depends on N)");

    auto* classify_cmd = app.add_subcommand("classify", "Classify a stored trajectory");
    classify_cmd->add_option("trajectory", trajectory_path, "Trajectory CSV")->required();
    classify_cmd->add_option("config", config_path, "Run config JSON used to produce it")->required();

    auto* audit = app.add_subcommand("audit", "Run the equivalence audit on a suite");
    audit->add_option("suite", suite_path, "Suite JSON")->required();

    LimitParams lp;
    PoincareOptions popt;
    auto* poincare = app.add_subcommand("poincare", "Return-map sweep of the limit system");
    poincare->add_option("--m", lp.m, "Inertia")->required();
    poincare->add_option("--d", lp.d, "Damping")->required();
    poincare->add_option("--omega", lp.omega, "Natural frequency")->required();
    poincare->add_option("--lamR", lp.lamR, "lambda R*")->required();
    poincare->add_option("--Theta", lp.Theta_star, "Theta*");
    poincare->add_option("--v0-grid", grid_spec, "v0 values: a,b,c or lo:hi:count")->required();
    poincare->add_option("--dt", popt.dt, "RK4 step");
    poincare->add_option("--horizon", popt.horizon, "Time budget per orbit");

    auto* sweep = app.add_subcommand("sweep", "Tail order parameter over a coupling grid");
    sweep->add_option("config", config_path, "Run config JSON")->required();
    sweep->add_option("--lambda-grid", grid_spec, "lambda values: a,b,c or lo:hi:count")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : config_error;
    }
    if (*seed_opt) g.seed = seed;

    try {
        if (*simulate) return cmd_simulate(g, config_path);
        if (*equilibria) return cmd_equilibria(g, config_path, brute_force, oracle_grid);
        if (*classify_cmd) return cmd_classify(g, trajectory_path, config_path);
        if (*audit) return cmd_audit(g, suite_path);
        if (*poincare) return cmd_poincare(g, lp, grid_spec, popt);
        if (*sweep) return cmd_sweep(g, config_path, grid_spec);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return config_error;
    } catch (const ParameterError& err) {
        std::cerr << "parameter error: " << err.what() << "\n";
        return config_error;
    } catch (const IntegrationError& err) {
        std::cerr << "integration fault: " << err.what() << "\n";
        return runtime_fault;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return runtime_fault;
    }
    return config_error;
}
