#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mfk/kernels.hpp"
#include "mfk/macroscheme.hpp"
#include "mfk/measures.hpp"
#include "mfk/metrics.hpp"
#include "mfk/micro.hpp"

namespace mfk {

struct ExperimentConfig {
    std::string preset = "m1_paper";  // m1_paper | appendixB | custom
    std::vector<int> n_list{20, 50, 100};
    int grid_cells = 400;
    int refinement = 0;  // k; 0 = derive from dt * S_bar <= refinement_margin
    double refinement_margin = 0.5;
    double horizon = 1.0;  // T for macro / convergence runs
    double beta = 100.0;
    double kernel_radius = 0.2;
    std::string mass_convention = "N";  // N | unit
    std::uint64_t seed = 2024;
    std::string output_dir = "out";
    std::vector<double> sample_times;  // empty = four uniform times in (0, T]
    double dt_micro = 1e-3;

    // two-Gaussian initial density parameters (see m1_initial_density)
    double density_exponent = 15.0;

    // long cluster run: fine steps through the stiff transient, coarser
    // afterwards (collapse rates decay algebraically), stop when positions
    // settle
    double cluster_horizon = 4000.0;
    std::vector<std::pair<double, double>> cluster_schedule{
        {0.0, 2e-3}, {20.0, 0.05}, {150.0, 0.25}};
    // stop-speed v freezes pair gaps near sqrt(v / kappa) with kappa the
    // pair's mass fraction times (pi/R)^2; 2e-7 keeps the lightest observed
    // satellite pairs below the 1e-3 cluster threshold
    double early_stop_speed = 2e-7;

    // macro grid domain
    double domain_left = -0.05;
    double domain_right = 1.05;

    // scheme comparison step sizes
    std::vector<double> comparison_dts{0.1, 0.01};

    // metrics check
    int metric_pairs = 100;
    double metric_radius = 1.0;
    int metric_max_p = 3;

    void validate() const;
    std::string to_json() const;
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
};

// The two-bump initial density of the clustering experiment; the exponent is
// configurable because reproducing the published cluster locations pins it
// (see README). normalizer() integrates it over [0,1].
std::function<double(double)> m1_initial_density(double exponent);
double density_normalizer(const std::function<double(double)>& f, double left, double right);

// x_i = i/N, m_i = integral of mu0 over ((i-1)/N, i/N] by 64-point composite
// midpoint, rescaled so the weights sum exactly to M.
ParticleState initial_state_from_density(int n, double total_mass,
                                         const std::function<double(double)>& f);

struct PresetParts {
    InteractionKernel kernel;
    SourceKernel source;
    std::function<double(double)> density;
};
PresetParts build_m1_preset(const ExperimentConfig& config);

struct Cluster {
    double center = 0.0;  // weighted
    double mass = 0.0;
    int count = 0;
    double lo = 0.0, hi = 0.0;
};
// maximal groups of particles within gap_tol of their sorted neighbor
std::vector<Cluster> detect_clusters(const ParticleState& state, double gap_tol = 1e-3);

struct MicroRunSummary {
    int n = 0;
    double total_mass = 0.0;
    double dt = 0.0;
    double horizon_requested = 0.0;
    double t_final = 0.0;
    double mass_drift_max = 0.0;
    double min_weight = 0.0;
    double max_weight_ratio_vs_bound = 0.0;  // max_i m_i(t) / (m_i(0) e^{S t})
    double source_bound = 0.0;               // sampled S-bar on the run's support ball
    std::vector<Cluster> final_clusters;
};

struct PaperExperimentReport {
    std::vector<MicroRunSummary> runs;
    bool cluster_count_ok = false;      // == 4 for every N
    bool cluster_positions_ok = false;  // within +-0.03 of the published spots
    bool counts_identical = false;
    std::vector<double> reference_centers{0.07, 0.33, 0.66, 0.90};
    double center_tolerance = 0.03;
    bool pass = false;
};

PaperExperimentReport run_paper_experiment(const ExperimentConfig& config);

struct ConvergenceRow {
    int n = 0;
    double t = 0.0;
    std::string metric;  // BL | W1 | W2
    double distance = 0.0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    double slope_bl = 0.0;  // worst (largest) fitted log-log slope over t
    double slope_w1 = 0.0;
    double stability_c = 0.0;  // fitted C with D_t <= e^{Ct} D_0
    bool monotone_ok = false;  // D(N_max) < D(N_min) at every t for BL and W1
    bool slope_ok = false;
    bool chain_ok = false;  // rho <= W1 <= max(1,R_T) rho and W2 vs W1 rowwise
    bool pass = false;
};

ConvergenceTable run_convergence_study(const ExperimentConfig& config);

struct MacroRunReport {
    int refinement = 0;
    double dt = 0.0;
    double source_bound = 0.0;
    double support_radius_bound = 0.0;  // R_T
    double mass_drift_max = 0.0;
    double min_cell_mass = 0.0;
    bool support_ok = false;  // inside B(0, R_T) at every sample
    bool pass = false;
};

// Solves the nonlocal transport PDE on the grid for the configured preset,
// emitting per-sample CSVs and a diagnostics JSON.
MacroRunReport run_macro_experiment(const ExperimentConfig& config);

struct SchemeComparisonReport {
    struct Entry {
        double dt = 0.0;
        bool s_step1_exact = false;        // scheme S first step matches closed form
        bool s_nonnegative_two_steps = false;
        bool stilde_step1_exact = false;   // atoms of the dispersive scheme, 1e-12
        double stilde_tv1 = 0.0, stilde_center1 = 0.0, stilde_mass1 = 0.0;
        double stilde_tv2 = 0.0, stilde_center2 = 0.0;
        int stilde_atoms_step2 = 0;        // expected 2(n+1) = 6
        int s_atoms_step2 = 0;             // expected 2
    };
    std::vector<Entry> entries;
    bool pass = false;
};

SchemeComparisonReport run_scheme_comparison(const ExperimentConfig& config);

struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::string name;
};
// smooth compactly supported bumps covering [0,1] and subintervals
std::vector<TestFunction> builtin_test_functions();

struct WeakFormReport {
    double residual = 0.0;        // at the trajectory's native sampling interval
    double residual_coarse = 0.0; // at twice the interval
    double observed_order = 0.0;  // log2(residual_coarse / residual)
    double sample_interval = 0.0;
    bool pass = false;  // residual_coarse <= tolerance_constant * interval^2
    static constexpr double tolerance_constant = 100.0;
};

// Central-difference residual of the measure-valued weak form along a micro
// trajectory sampled at uniform intervals.
WeakFormReport weak_form_residual(const Trajectory& traj, const InteractionKernel& kernel,
                                  const SourceKernel& source,
                                  const std::vector<TestFunction>& test_functions);

// artifact helpers
void ensure_dir(const std::string& path);
void write_manifest(const ExperimentConfig& config, const std::string& command,
                    double wall_seconds, bool ok, const std::string& out_dir);

}  // namespace mfk
