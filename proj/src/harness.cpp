#include "mfk/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "mfk/io.hpp"

namespace mfk {

using nlohmann::json;

namespace {

json config_to_json_obj(const ExperimentConfig& c) {
    json j;
    j["preset"] = c.preset;
    j["N_list"] = c.n_list;
    j["grid_cells"] = c.grid_cells;
    j["refinement"] = c.refinement;
    j["refinement_margin"] = c.refinement_margin;
    j["horizon"] = c.horizon;
    j["beta"] = c.beta;
    j["kernel_radius"] = c.kernel_radius;
    j["mass_convention"] = c.mass_convention;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["sample_times"] = c.sample_times;
    j["dt_micro"] = c.dt_micro;
    j["density_exponent"] = c.density_exponent;
    j["cluster_horizon"] = c.cluster_horizon;
    {
        json sched = json::array();
        for (const auto& [t, dt] : c.cluster_schedule) sched.push_back({t, dt});
        j["cluster_schedule"] = sched;
    }
    j["early_stop_speed"] = c.early_stop_speed;
    j["domain_left"] = c.domain_left;
    j["domain_right"] = c.domain_right;
    j["comparison_dts"] = c.comparison_dts;
    j["metric_pairs"] = c.metric_pairs;
    j["metric_radius"] = c.metric_radius;
    j["metric_max_p"] = c.metric_max_p;
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (preset != "m1_paper" && preset != "appendixB" && preset != "custom")
        throw std::invalid_argument("config: unknown preset '" + preset + "'");
    if (n_list.empty()) throw std::invalid_argument("config: N_list is empty");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw std::invalid_argument("config: N_list must be strictly increasing");
    if (grid_cells < 1) throw std::invalid_argument("config: grid_cells must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("config: horizon must be > 0");
    if (!(dt_micro > 0.0)) throw std::invalid_argument("config: dt_micro must be > 0");
    if (!(kernel_radius > 0.0)) throw std::invalid_argument("config: kernel_radius must be > 0");
    if (mass_convention != "N" && mass_convention != "unit")
        throw std::invalid_argument("config: mass_convention must be 'N' or 'unit'");
    if (domain_right <= domain_left)
        throw std::invalid_argument("config: empty grid domain");
    for (double t : sample_times)
        if (t < 0.0 || t > horizon)
            throw std::invalid_argument("config: sample time outside [0, T]");
}

std::string ExperimentConfig::to_json() const {
    return config_to_json_obj(*this).dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    maybe(j, "preset", c.preset);
    maybe(j, "N_list", c.n_list);
    maybe(j, "grid_cells", c.grid_cells);
    maybe(j, "refinement", c.refinement);
    maybe(j, "refinement_margin", c.refinement_margin);
    maybe(j, "horizon", c.horizon);
    maybe(j, "beta", c.beta);
    maybe(j, "kernel_radius", c.kernel_radius);
    maybe(j, "mass_convention", c.mass_convention);
    maybe(j, "seed", c.seed);
    maybe(j, "output_dir", c.output_dir);
    maybe(j, "sample_times", c.sample_times);
    maybe(j, "dt_micro", c.dt_micro);
    maybe(j, "density_exponent", c.density_exponent);
    maybe(j, "cluster_horizon", c.cluster_horizon);
    if (j.contains("cluster_schedule")) {
        c.cluster_schedule.clear();
        for (const auto& row : j.at("cluster_schedule"))
            c.cluster_schedule.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
    maybe(j, "early_stop_speed", c.early_stop_speed);
    maybe(j, "domain_left", c.domain_left);
    maybe(j, "domain_right", c.domain_right);
    maybe(j, "comparison_dts", c.comparison_dts);
    maybe(j, "metric_pairs", c.metric_pairs);
    maybe(j, "metric_radius", c.metric_radius);
    maybe(j, "metric_max_p", c.metric_max_p);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::function<double(double)> m1_initial_density(double exponent) {
    const double a1 = 3.5 / std::sqrt(0.4 * 3.14159265358979323846);
    const double a2 = 1.0 / std::sqrt(0.4 * 3.14159265358979323846);
    return [=](double x) {
        if (x < 0.0 || x > 1.0) return 0.0;
        double u = x - 0.25, v = x - 0.90;
        return a1 * std::exp(-exponent * u * u) + a2 * std::exp(-exponent * v * v);
    };
}

double density_normalizer(const std::function<double(double)>& f, double left, double right) {
    // composite midpoint, fine enough for the smooth densities used here
    const int n = 20000;
    const double h = (right - left) / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += f(left + (i + 0.5) * h);
    return acc * h;
}

ParticleState initial_state_from_density(int n, double total_mass,
                                         const std::function<double(double)>& f) {
    if (n < 1) throw std::invalid_argument("initial_state_from_density: n must be >= 1");
    ParticleState s;
    s.dim = 1;
    s.positions.resize(static_cast<std::size_t>(n));
    s.weights.resize(static_cast<std::size_t>(n));
    constexpr int quad = 64;
    for (int i = 0; i < n; ++i) {
        s.positions[static_cast<std::size_t>(i)] = static_cast<double>(i + 1) / n;
        double a = static_cast<double>(i) / n;
        double h = 1.0 / (n * static_cast<double>(quad));
        double acc = 0.0;
        for (int q = 0; q < quad; ++q) acc += f(a + (q + 0.5) * h);
        s.weights[static_cast<std::size_t>(i)] = acc * h;
    }
    double sum = s.weight_sum();
    if (!(sum > 0.0))
        throw std::runtime_error("initial_state_from_density: density mass is zero");
    for (double& w : s.weights) w *= total_mass / sum;
    s.total_mass = total_mass;
    return s;
}

PresetParts build_m1_preset(const ExperimentConfig& config) {
    PresetParts p;
    p.kernel = kernel_sin2(config.kernel_radius);
    p.source = source_m1(p.kernel, config.beta);
    p.density = m1_initial_density(config.density_exponent);
    return p;
}

std::vector<Cluster> detect_clusters(const ParticleState& state, double gap_tol) {
    if (state.dim != 1) throw std::invalid_argument("detect_clusters: 1-d states only");
    const int n = state.count();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return state.x(a) < state.x(b); });
    std::vector<Cluster> out;
    int i = 0;
    while (i < n) {
        Cluster c;
        c.lo = state.x(order[static_cast<std::size_t>(i)]);
        double wx = 0.0;
        int j = i;
        double prev = c.lo;
        while (j < n) {
            double xj = state.x(order[static_cast<std::size_t>(j)]);
            if (j > i && xj - prev > gap_tol) break;
            double w = state.weights[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
            c.mass += w;
            wx += w * xj;
            c.hi = xj;
            prev = xj;
            ++j;
        }
        c.count = j - i;
        c.center = wx / c.mass;
        out.push_back(c);
        i = j;
    }
    return out;
}

namespace {

MicroRunSummary summarize_run(const Trajectory& traj, const SourceKernel& source,
                              const ExperimentConfig& config, double horizon) {
    MicroRunSummary s;
    const ParticleState& first = traj.front();
    s.n = first.count();
    s.total_mass = first.total_mass;
    s.dt = config.dt_micro;
    s.horizon_requested = horizon;
    s.t_final = traj.back().time;

    double ball = 0.0;
    for (const ParticleState& st : traj.states)
        for (double x : st.positions) ball = std::max(ball, std::abs(x));
    s.source_bound = sample_source_bound(source, ball, 200000, config.seed);

    s.min_weight = std::numeric_limits<double>::infinity();
    s.mass_drift_max = 0.0;
    s.max_weight_ratio_vs_bound = 0.0;
    for (const ParticleState& st : traj.states) {
        s.mass_drift_max = std::max(s.mass_drift_max,
                                    std::abs(st.weight_sum() - st.total_mass));
        for (int i = 0; i < st.count(); ++i) {
            double w = st.weights[static_cast<std::size_t>(i)];
            s.min_weight = std::min(s.min_weight, w);
            // log-space ratio against m_i(0) e^{S t}; the exponent overflows a
            // double for long horizons
            double logratio = std::log(w) -
                              std::log(first.weights[static_cast<std::size_t>(i)]) -
                              s.source_bound * (st.time - first.time);
            s.max_weight_ratio_vs_bound =
                std::max(s.max_weight_ratio_vs_bound, std::exp(logratio));
        }
    }
    s.final_clusters = detect_clusters(traj.back());
    return s;
}

void write_summary_json(const MicroRunSummary& s, const std::string& path) {
    json j;
    j["N"] = s.n;
    j["M"] = s.total_mass;
    j["dt"] = s.dt;
    j["T"] = s.horizon_requested;
    j["t_final"] = s.t_final;
    j["mass_drift_max"] = s.mass_drift_max;
    j["min_weight"] = s.min_weight;
    j["max_weight_ratio_vs_bound"] = s.max_weight_ratio_vs_bound;
    j["source_bound"] = s.source_bound;
    json cl = json::array();
    for (const Cluster& c : s.final_clusters)
        cl.push_back({{"center", c.center}, {"mass", c.mass}, {"count", c.count}});
    j["clusters"] = cl;
    std::ofstream f(path);
    f << j.dump(2) << "\n";
}

int pick_refinement(const ExperimentConfig& config, const SourceKernel& source,
                    double domain_radius) {
    if (config.refinement > 0) return config.refinement;
    double sbar = sample_source_bound(source, domain_radius, 200000, config.seed);
    double target = config.refinement_margin;  // dt * S_bar <= target
    int k = 1;
    while (config.horizon / std::pow(2.0, k) * sbar > target && k < 30) ++k;
    return k;
}

std::vector<double> default_sample_times(const ExperimentConfig& config) {
    if (!config.sample_times.empty()) return config.sample_times;
    std::vector<double> t;
    for (int i = 1; i <= 4; ++i) t.push_back(config.horizon * i / 4.0);
    return t;
}

}  // namespace

PaperExperimentReport run_paper_experiment(const ExperimentConfig& config) {
    config.validate();
    PresetParts parts = build_m1_preset(config);
    ensure_dir(config.output_dir);

    PaperExperimentReport rep;
    rep.cluster_count_ok = true;
    rep.cluster_positions_ok = true;

    // long runs to the clustered steady state
    for (int n : config.n_list) {
        double mass = config.mass_convention == "N" ? static_cast<double>(n) : 1.0;
        ParticleState init = initial_state_from_density(n, mass, parts.density);
        MicroConfig mc;
        mc.kernel = parts.kernel;
        mc.source = parts.source;
        mc.dt = config.dt_micro;
        mc.horizon = config.cluster_horizon;
        mc.dt_schedule = config.cluster_schedule;
        mc.early_stop_speed = config.early_stop_speed;
        mc.early_stop_window = 5.0;
        // keep output size sane: a few hundred sampled states
        double dt0 = config.cluster_schedule.empty() ? config.dt_micro
                                                     : config.cluster_schedule.front().second;
        int stride = std::max(1, static_cast<int>(config.cluster_horizon / dt0 / 400));
        Trajectory traj = integrate_micro(mc, init, stride);
        MicroRunSummary s = summarize_run(traj, parts.source, config, config.cluster_horizon);
        write_trajectory_csv(traj, config.output_dir + "/trajectory_N" + std::to_string(n) + ".csv");
        write_summary_json(s, config.output_dir + "/summary_N" + std::to_string(n) + ".json");

        // position-vs-time svg
        std::vector<SvgSeries> series;
        for (int i = 0; i < n; ++i) {
            SvgSeries sr;
            for (const ParticleState& st : traj.states) {
                sr.x.push_back(st.time);
                sr.y.push_back(st.x(i));
            }
            series.push_back(std::move(sr));
        }
        write_svg_plot(series, "positions, N=" + std::to_string(n),
                       config.output_dir + "/positions_N" + std::to_string(n) + ".svg");

        if (s.final_clusters.size() != 4) rep.cluster_count_ok = false;
        for (std::size_t c = 0; c < s.final_clusters.size() && c < 4; ++c) {
            if (s.final_clusters.size() == 4 &&
                std::abs(s.final_clusters[c].center - rep.reference_centers[c]) >
                    rep.center_tolerance)
                rep.cluster_positions_ok = false;
        }
        rep.runs.push_back(std::move(s));
    }
    rep.counts_identical = true;
    for (const MicroRunSummary& s : rep.runs)
        if (s.final_clusters.size() != rep.runs.front().final_clusters.size())
            rep.counts_identical = false;

    // overlay: counting measure (p=41) of the largest-N run vs the grid
    // density at four sample times over the configured horizon
    {
        int n = config.n_list.back();
        double mass = config.mass_convention == "N" ? static_cast<double>(n) : 1.0;
        ParticleState init = initial_state_from_density(n, mass, parts.density);
        MicroConfig mc;
        mc.kernel = parts.kernel;
        mc.source = parts.source;
        mc.dt = config.dt_micro;
        mc.horizon = config.horizon;
        Trajectory traj = integrate_micro(mc, init, 1);

        SchemeConfig sc;
        sc.kernel = parts.kernel;
        sc.source = parts.source;
        sc.velocity = VelocityModel::convolution;
        sc.domain_left = config.domain_left;
        sc.domain_right = config.domain_right;
        sc.grid_cells = config.grid_cells;
        sc.horizon = config.horizon;
        double radius = std::max(std::abs(config.domain_left), std::abs(config.domain_right));
        sc.refinement = pick_refinement(config, parts.source, radius);
        GridMeasure mu0 = grid_from_density(parts.density, 1.0, config.domain_left,
                                            config.domain_right, config.grid_cells);
        std::vector<double> times = default_sample_times(config);
        std::vector<SchemeSample> samples = run_scheme(sc, mu0, times);

        std::ofstream overlay(config.output_dir + "/overlay.csv");
        overlay << "t,x,micro_counting_density,macro_density\n";
        for (const SchemeSample& smp : samples) {
            // micro state nearest to the sample time
            const ParticleState* best = &traj.states.front();
            for (const ParticleState& st : traj.states)
                if (std::abs(st.time - smp.t) < std::abs(best->time - smp.t)) best = &st;
            GridMeasure counting = counting_measure(*best, 41);
            for (int j = 0; j < config.grid_cells; ++j) {
                double x = smp.measure.cell_center(j);
                int bin = std::min(40, static_cast<int>(x * 41));
                double micro_density = x >= 0.0 && x <= 1.0 ? counting.density(bin) : 0.0;
                overlay << format_double(smp.t) << "," << format_double(x) << ","
                        << format_double(micro_density) << ","
                        << format_double(smp.measure.density(j)) << "\n";
            }
            SvgSeries micro_s, macro_s;
            micro_s.step = true;
            micro_s.color = "#1f6fb5";
            for (int b = 0; b < 41; ++b) {
                micro_s.x.push_back(counting.cell_left(b));
                micro_s.y.push_back(counting.density(b));
            }
            macro_s.color = "#c23b22";
            for (int j = 0; j < config.grid_cells; ++j) {
                macro_s.x.push_back(smp.measure.cell_center(j));
                macro_s.y.push_back(smp.measure.density(j));
            }
            write_svg_plot({micro_s, macro_s},
                           "micro counting vs macro density, t=" + format_double(smp.t),
                           config.output_dir + "/overlay_t" + std::to_string(smp.t) + ".svg");
        }
    }

    rep.pass = rep.cluster_count_ok && rep.cluster_positions_ok && rep.counts_identical;
    return rep;
}

ConvergenceTable run_convergence_study(const ExperimentConfig& config) {
    config.validate();
    PresetParts parts = build_m1_preset(config);
    ensure_dir(config.output_dir);

    std::vector<double> times = default_sample_times(config);
    if (times.empty() || times.front() != 0.0) times.insert(times.begin(), 0.0);

    // macro reference
    SchemeConfig sc;
    sc.kernel = parts.kernel;
    sc.source = parts.source;
    sc.velocity = VelocityModel::convolution;
    sc.domain_left = config.domain_left;
    sc.domain_right = config.domain_right;
    sc.grid_cells = config.grid_cells;
    sc.horizon = config.horizon;
    double radius = std::max(std::abs(config.domain_left), std::abs(config.domain_right));
    sc.refinement = pick_refinement(config, parts.source, radius);
    GridMeasure mu0 = grid_from_density(parts.density, 1.0, config.domain_left,
                                        config.domain_right, config.grid_cells);
    std::vector<SchemeSample> ref = run_scheme(sc, mu0, times);

    double r_t = support_bound_radius(parts.kernel, radius, config.horizon);
    double c_rt = std::max(1.0, r_t);

    ConvergenceTable table;
    table.monotone_ok = true;
    table.chain_ok = true;

    struct Key {
        int n;
        std::size_t ti;
    };
    std::vector<std::vector<double>> bl(config.n_list.size(), std::vector<double>(times.size()));
    std::vector<std::vector<double>> w1 = bl, w2 = bl;

    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        int n = config.n_list[ni];
        double mass = config.mass_convention == "N" ? static_cast<double>(n) : 1.0;
        ParticleState init = initial_state_from_density(n, mass, parts.density);
        MicroConfig mc;
        mc.kernel = parts.kernel;
        mc.source = parts.source;
        mc.dt = config.dt_micro;
        mc.horizon = config.horizon;
        Trajectory traj = integrate_micro(mc, init, 1);

        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            const ParticleState* best = &traj.states.front();
            for (const ParticleState& st : traj.states)
                if (std::abs(st.time - times[ti]) < std::abs(best->time - times[ti]))
                    best = &st;
            AtomicMeasure emp = empirical_measure(*best);
            AtomicMeasure refm = atomic_from_grid(ref[ti].measure);
            bl[ni][ti] = bounded_lipschitz(emp, refm).value;
            w1[ni][ti] = wasserstein_p_1d(emp, refm, 1);
            w2[ni][ti] = wasserstein_p_1d(emp, refm, 2);
            table.rows.push_back({n, times[ti], "BL", bl[ni][ti]});
            table.rows.push_back({n, times[ti], "W1", w1[ni][ti]});
            table.rows.push_back({n, times[ti], "W2", w2[ni][ti]});
        }
    }

    // assertions
    auto fit_slope = [&](const std::vector<std::vector<double>>& d, std::size_t ti) {
        // least squares log d vs log N
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        double m = static_cast<double>(config.n_list.size());
        for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
            double X = std::log(static_cast<double>(config.n_list[ni]));
            double Y = std::log(std::max(d[ni][ti], 1e-300));
            sx += X; sy += Y; sxx += X * X; sxy += X * Y;
        }
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };

    table.slope_bl = -std::numeric_limits<double>::infinity();
    table.slope_w1 = -std::numeric_limits<double>::infinity();
    double cfit = 0.0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        if (bl.back()[ti] >= bl.front()[ti]) table.monotone_ok = false;
        if (w1.back()[ti] >= w1.front()[ti]) table.monotone_ok = false;
        table.slope_bl = std::max(table.slope_bl, fit_slope(bl, ti));
        table.slope_w1 = std::max(table.slope_w1, fit_slope(w1, ti));
        for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
            double rho = bl[ni][ti], W1 = w1[ni][ti], W2 = w2[ni][ti];
            if (rho > W1 + 1e-10) table.chain_ok = false;
            if (W1 > c_rt * rho + 1e-10) table.chain_ok = false;
            if (W2 > std::sqrt(2.0 * r_t) * std::sqrt(W1) + 1e-10) table.chain_ok = false;
            if (times[ti] > 0.0 && bl[ni][0] > 0.0)
                cfit = std::max(cfit, std::log(rho / bl[ni][0]) / times[ti]);
        }
    }
    table.stability_c = cfit;
    table.slope_ok = table.slope_bl <= -0.3 && table.slope_w1 <= -0.3;
    table.pass = table.monotone_ok && table.slope_ok && table.chain_ok;

    // emit
    std::ofstream csv(config.output_dir + "/convergence.csv");
    csv << "N,t,metric,distance\n";
    for (const ConvergenceRow& r : table.rows)
        csv << r.n << "," << format_double(r.t) << "," << r.metric << ","
            << format_double(r.distance) << "\n";
    json j;
    j["slope_bl"] = table.slope_bl;
    j["slope_w1"] = table.slope_w1;
    j["stability_c"] = table.stability_c;
    j["monotone_ok"] = table.monotone_ok;
    j["slope_ok"] = table.slope_ok;
    j["chain_ok"] = table.chain_ok;
    j["pass"] = table.pass;
    j["R_T"] = r_t;
    std::ofstream jf(config.output_dir + "/convergence.json");
    jf << j.dump(2) << "\n";
    return table;
}

MacroRunReport run_macro_experiment(const ExperimentConfig& config) {
    config.validate();
    PresetParts parts = build_m1_preset(config);
    ensure_dir(config.output_dir);

    SchemeConfig sc;
    sc.kernel = parts.kernel;
    sc.source = parts.source;
    sc.velocity = VelocityModel::convolution;
    sc.domain_left = config.domain_left;
    sc.domain_right = config.domain_right;
    sc.grid_cells = config.grid_cells;
    sc.horizon = config.horizon;
    double radius = std::max(std::abs(config.domain_left), std::abs(config.domain_right));
    sc.refinement = pick_refinement(config, parts.source, radius);

    MacroRunReport rep;
    rep.refinement = sc.refinement;
    rep.dt = sc.dt();
    rep.source_bound = sample_source_bound(parts.source, radius, 200000, config.seed);
    rep.support_radius_bound = support_bound_radius(parts.kernel, radius, config.horizon);

    GridMeasure mu0 = grid_from_density(parts.density, 1.0, config.domain_left,
                                        config.domain_right, config.grid_cells);
    std::vector<double> times = default_sample_times(config);
    if (times.front() != 0.0) times.insert(times.begin(), 0.0);
    std::vector<SchemeDiagnostics> diag;
    std::vector<SchemeSample> samples = run_scheme(sc, mu0, times, &diag);

    rep.mass_drift_max = 0.0;
    rep.min_cell_mass = std::numeric_limits<double>::infinity();
    rep.support_ok = true;
    std::vector<TimedGrid> timed;
    for (const SchemeSample& s : samples) timed.push_back({s.t, &s.measure});
    write_grid_samples_csv(timed, config.output_dir + "/macro_samples.csv");
    json jd = json::array();
    for (const SchemeDiagnostics& d : diag) {
        rep.mass_drift_max = std::max(rep.mass_drift_max, std::abs(d.mass - 1.0));
        rep.min_cell_mass = std::min(rep.min_cell_mass, d.min_mass);
        if (std::max(std::abs(d.support_left), std::abs(d.support_right)) >
            rep.support_radius_bound + 1e-12)
            rep.support_ok = false;
        jd.push_back({{"t", d.t},
                      {"mass", d.mass},
                      {"min_mass", d.min_mass},
                      {"support_left", d.support_left},
                      {"support_right", d.support_right},
                      {"tv", d.tv}});
    }
    {
        json j;
        j["refinement"] = rep.refinement;
        j["dt"] = rep.dt;
        j["source_bound"] = rep.source_bound;
        j["R_T"] = rep.support_radius_bound;
        j["samples"] = jd;
        std::ofstream f(config.output_dir + "/macro_diagnostics.json");
        f << j.dump(2) << "\n";
    }
    // density snapshots svg
    std::vector<SvgSeries> series;
    const char* colors[] = {"#888888", "#1f6fb5", "#2d9b4f", "#c28122", "#7b3fb5"};
    for (std::size_t s = 0; s < samples.size(); ++s) {
        SvgSeries sr;
        sr.color = colors[s % 5];
        for (int j = 0; j < samples[s].measure.cells(); ++j) {
            sr.x.push_back(samples[s].measure.cell_center(j));
            sr.y.push_back(samples[s].measure.density(j));
        }
        series.push_back(std::move(sr));
    }
    write_svg_plot(series, "macro density over time", config.output_dir + "/macro_density.svg");

    rep.pass = rep.mass_drift_max <= 1e-10 && rep.min_cell_mass >= 0.0 && rep.support_ok;
    return rep;
}

SchemeComparisonReport run_scheme_comparison(const ExperimentConfig& config) {
    ensure_dir(config.output_dir);
    SchemeComparisonReport rep;
    rep.pass = true;

    std::ofstream atoms_csv(config.output_dir + "/scheme_atoms.csv");
    atoms_csv << "scheme,dt,step,position,weight\n";

    for (double dtv : config.comparison_dts) {
        SchemeConfig sc;
        sc.source = source_linear_appendix_b();
        sc.velocity = VelocityModel::appendix_b;
        sc.horizon = 2.0 * dtv;  // two steps
        sc.refinement = 1;
        sc.transport_substeps = 4;

        AtomicMeasure mu0;
        mu0.append1d(1.0, 0.5);
        mu0.append1d(-1.0, 0.5);

        SchemeComparisonReport::Entry e;
        e.dt = dtv;

        // scheme S
        AtomicMeasure s1 = scheme_S_step_atomic(mu0, sc);
        AtomicMeasure s2 = scheme_S_step_atomic(s1, sc);
        {
            AtomicMeasure expect;
            expect.append1d(-1.0 - dtv, 0.5 * (1.0 - dtv));
            expect.append1d(1.0 + dtv, 0.5 * (1.0 + dtv));
            e.s_step1_exact = measure_equal(s1, expect, 1e-12);
            e.s_nonnegative_two_steps = true;
            for (double w : s1.weights)
                if (w < 0.0) e.s_nonnegative_two_steps = false;
            for (double w : s2.weights)
                if (w < 0.0) e.s_nonnegative_two_steps = false;
            e.s_atoms_step2 = static_cast<int>(s2.size());
        }

        // scheme S-tilde
        AtomicMeasure t1 = scheme_Stilde_step_atomic(mu0, sc);
        AtomicMeasure t2 = scheme_Stilde_step_atomic(t1, sc);
        {
            AtomicMeasure expect;
            expect.append1d(1.0 + dtv, 0.5);
            expect.append1d(1.0, 0.5 * dtv);
            expect.append1d(-1.0, -0.5 * dtv);
            expect.append1d(-1.0 - dtv, 0.5);
            e.stilde_step1_exact = measure_equal(t1, expect, 1e-12);
            e.stilde_mass1 = t1.total_mass();
            e.stilde_tv1 = t1.total_variation();
            double c1 = 0.0;
            for (std::size_t i = 0; i < t1.size(); ++i) c1 += t1.weights[i] * t1.x(i);
            e.stilde_center1 = c1;
            e.stilde_tv2 = t2.total_variation();
            double c2 = 0.0;
            for (std::size_t i = 0; i < t2.size(); ++i) c2 += t2.weights[i] * t2.x(i);
            e.stilde_center2 = c2;
            e.stilde_atoms_step2 = static_cast<int>(t2.size());
        }

        auto dump = [&](const char* scheme, int step, const AtomicMeasure& m) {
            for (std::size_t i = 0; i < m.size(); ++i)
                atoms_csv << scheme << "," << format_double(dtv) << "," << step << ","
                          << format_double(m.x(i)) << "," << format_double(m.weights[i]) << "\n";
        };
        dump("S", 1, s1);
        dump("S", 2, s2);
        dump("Stilde", 1, t1);
        dump("Stilde", 2, t2);

        bool ok = e.s_step1_exact && e.s_nonnegative_two_steps && e.stilde_step1_exact &&
                  std::abs(e.stilde_mass1 - 1.0) <= 1e-12 &&
                  std::abs(e.stilde_tv1 - (1.0 + dtv)) <= 1e-12 &&
                  std::abs(e.stilde_center1 - dtv) <= 1e-12 &&
                  std::abs(e.stilde_tv2 - (1.0 + 2.0 * (dtv + dtv * dtv))) <= 1e-12 &&
                  std::abs(e.stilde_center2 - (2.0 * dtv + 3.0 * dtv * dtv)) <= 1e-12 &&
                  e.stilde_atoms_step2 == 6 && e.s_atoms_step2 == 2;
        if (!ok) rep.pass = false;
        rep.entries.push_back(e);
    }
    return rep;
}

std::vector<TestFunction> builtin_test_functions() {
    // smooth bumps exp(1 - 1/(1-s^2)) on (lo, hi); C-infinity with compact
    // support, so the central-difference residual keeps its full order when
    // particles cross the support edge
    auto make = [](double lo, double hi) {
        double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
        TestFunction tf;
        tf.name = "bump(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
        tf.f = [c, r](double x) {
            double s = (x - c) / r;
            double d = 1.0 - s * s;
            if (d <= 0.0) return 0.0;
            return std::exp(1.0 - 1.0 / d);
        };
        tf.df = [c, r](double x) {
            double s = (x - c) / r;
            double d = 1.0 - s * s;
            if (d <= 0.0) return 0.0;
            return std::exp(1.0 - 1.0 / d) * (-2.0 * s / (d * d)) / r;
        };
        return tf;
    };
    return {make(-0.1, 1.1), make(0.0, 0.55), make(0.4, 1.05), make(0.1, 0.5),
            make(0.55, 1.0)};
}

WeakFormReport weak_form_residual(const Trajectory& traj, const InteractionKernel& kernel,
                                  const SourceKernel& source,
                                  const std::vector<TestFunction>& test_functions) {
    if (traj.states.size() < 5)
        throw std::invalid_argument("weak_form_residual: need at least 5 samples");
    const std::size_t m = traj.states.size();
    const double h = traj.states[1].time - traj.states[0].time;
    for (std::size_t s = 1; s < m; ++s) {
        double dt = traj.states[s].time - traj.states[s - 1].time;
        if (std::abs(dt - h) > 1e-9 * std::max(1.0, h))
            throw std::invalid_argument("weak_form_residual: samples not uniform in time");
    }

    WeakFormReport rep;
    rep.sample_interval = h;

    // F[b][s] = int f_b dmu_t, G[b][s] = weak-form right side
    std::vector<std::vector<double>> F(test_functions.size(), std::vector<double>(m));
    std::vector<std::vector<double>> G = F;
    for (std::size_t s = 0; s < m; ++s) {
        const ParticleState& st = traj.states[s];
        std::vector<double> xdot = position_rhs(st, kernel);
        std::vector<double> mdot = source.m1 ? weight_rhs_m1_factored(st, source)
                                             : weight_rhs_naive(st, source);
        for (std::size_t b = 0; b < test_functions.size(); ++b) {
            const TestFunction& tf = test_functions[b];
            double acc_f = 0.0, acc_rhs = 0.0;
            for (int i = 0; i < st.count(); ++i) {
                double xi = st.x(i);
                double wi = st.weights[static_cast<std::size_t>(i)];
                acc_f += wi * tf.f(xi);
                acc_rhs += wi * tf.df(xi) * xdot[static_cast<std::size_t>(i)] +
                           mdot[static_cast<std::size_t>(i)] * tf.f(xi);
            }
            F[b][s] = acc_f / st.total_mass;
            G[b][s] = acc_rhs / st.total_mass;
        }
    }

    auto residual_at_stride = [&](std::size_t stride) {
        double worst = 0.0;
        for (std::size_t b = 0; b < test_functions.size(); ++b) {
            for (std::size_t s = stride; s + stride < m; s += stride) {
                double dF = (F[b][s + stride] - F[b][s - stride]) / (2.0 * h * stride);
                worst = std::max(worst, std::abs(dF - G[b][s]));
            }
        }
        return worst;
    };

    rep.residual = residual_at_stride(1);
    rep.residual_coarse = residual_at_stride(2);
    rep.observed_order = std::log2(rep.residual_coarse / rep.residual);
    double hc = 2.0 * h;
    rep.pass = rep.residual_coarse <= WeakFormReport::tolerance_constant * hc * hc;
    return rep;
}

void ensure_dir(const std::string& path) {
    std::filesystem::create_directories(path);
}

void write_manifest(const ExperimentConfig& config, const std::string& command,
                    double wall_seconds, bool ok, const std::string& out_dir) {
    json j;
    j["command"] = command;
    j["config"] = config_to_json_obj(config);
    j["wall_seconds"] = wall_seconds;
    j["ok"] = ok;
    j["version"] = "0.1.0";
#ifdef __VERSION__
    j["compiler"] = __VERSION__;
#endif
    std::ofstream f(out_dir + "/manifest.json");
    f << j.dump(2) << "\n";
}

}  // namespace mfk
