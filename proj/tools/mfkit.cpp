// Command-line front end: micro / macro / converge / scheme-compare /
// metrics-check, each reading an ExperimentConfig JSON and writing artifacts
// plus a manifest into --out. Exit codes: 0 ok, 2 assertion failure, 1 error.

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mfk/harness.hpp"
#include "mfk/io.hpp"

namespace {

using namespace mfk;

int run_command(const std::string& name, ExperimentConfig config) {
    ensure_dir(config.output_dir);
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;

    if (name == "micro") {
        PaperExperimentReport rep = run_paper_experiment(config);
        for (const MicroRunSummary& s : rep.runs) {
            std::printf("N=%d: t_final=%.1f clusters=%zu mass_drift=%.2e min_w=%.3e\n", s.n,
                        s.t_final, s.final_clusters.size(), s.mass_drift_max, s.min_weight);
            for (const Cluster& c : s.final_clusters)
                std::printf("  cluster center=%.4f mass=%.4f count=%d\n", c.center, c.mass,
                            c.count);
        }
        std::printf("count_ok=%d positions_ok=%d identical=%d\n", rep.cluster_count_ok,
                    rep.cluster_positions_ok, rep.counts_identical);
        ok = rep.pass;
    } else if (name == "macro") {
        MacroRunReport rep = run_macro_experiment(config);
        std::printf("k=%d dt=%.3e Sbar=%.2f mass_drift=%.2e min_cell=%.2e support_ok=%d\n",
                    rep.refinement, rep.dt, rep.source_bound, rep.mass_drift_max,
                    rep.min_cell_mass, rep.support_ok);
        ok = rep.pass;
    } else if (name == "converge") {
        ConvergenceTable table = run_convergence_study(config);
        std::printf("rows=%zu slope_bl=%.2f slope_w1=%.2f monotone=%d chain=%d\n",
                    table.rows.size(), table.slope_bl, table.slope_w1, table.monotone_ok,
                    table.chain_ok);
        ok = table.pass;
    } else if (name == "scheme-compare") {
        SchemeComparisonReport rep = run_scheme_comparison(config);
        for (const auto& e : rep.entries)
            std::printf("dt=%g: S step1 exact=%d nonneg=%d | Stilde step1 exact=%d tv2=%.6f "
                        "center2=%.6f atoms2=%d\n",
                        e.dt, e.s_step1_exact, e.s_nonnegative_two_steps, e.stilde_step1_exact,
                        e.stilde_tv2, e.stilde_center2, e.stilde_atoms_step2);
        ok = rep.pass;
    } else if (name == "metrics-check") {
        MetricCheckReport rep = check_metric_inequalities(config.metric_pairs,
                                                          config.metric_radius,
                                                          config.metric_max_p, config.seed);
        nlohmann::json j;
        j["pairs"] = rep.pairs;
        j["max_violation"] = rep.max_violation;
        j["worst_pair_seed"] = rep.worst_pair_seed;
        j["pass"] = rep.pass;
        std::ofstream f(config.output_dir + "/metrics_report.json");
        f << j.dump(2) << "\n";
        std::printf("pairs=%d max_violation=%.3e pass=%d\n", rep.pairs, rep.max_violation,
                    rep.pass);
        ok = rep.pass;
    }

    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(config, name, wall, ok, config.output_dir);
    return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weighted collective dynamics: particle system, limit PDE, and metrics"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "ExperimentConfig JSON file");
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
    };
    add_common(app.add_subcommand("micro", "particle runs, clusters, conservation summary"));
    add_common(app.add_subcommand("macro", "grid solver run with diagnostics"));
    add_common(app.add_subcommand("converge", "empirical-vs-limit distance table over N"));
    add_common(app.add_subcommand("scheme-compare", "two-Dirac comparison of both schemes"));
    add_common(app.add_subcommand("metrics-check", "random-pair metric inequality audit"));

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig config;
        if (!config_path.empty()) config = ExperimentConfig::from_json_file(config_path);
        if (!out_dir.empty()) config.output_dir = out_dir;
        std::string name = app.get_subcommands().front()->get_name();
        return run_command(name, config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
