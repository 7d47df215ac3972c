#include "mfk/macroscheme.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mfk {

namespace {

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

double convolution_velocity(std::span<const double> pos, std::span<const double> w, double x,
                            const InteractionKernel& kernel) {
    // V[mu](x) = sum w_i phi(y_i - x); the y-x orientation is the one under
    // which the weighted empirical measure solves the transport equation.
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double delta = pos[i] - x;
        acc += w[i] * kernel.eval1d(delta);
    }
    return acc;
}

struct FrozenField {
    // either a direct evaluator (atoms, appendix-b) or a sampled table with
    // linear interpolation (grid convolution)
    const SchemeConfig* config = nullptr;
    double mass = 0.0;
    std::vector<double> atoms_pos, atoms_w;  // convolution over atoms
    std::vector<double> table;               // values at cell centers
    double left = 0.0, h = 0.0;
    bool use_table = false;

    double operator()(double x) const {
        if (config->velocity == VelocityModel::appendix_b) return mass * clamp_unit(x);
        if (use_table) {
            double u = (x - left) / h - 0.5;
            if (u <= 0.0) return table.front();
            if (u >= static_cast<double>(table.size() - 1)) return table.back();
            std::size_t j = static_cast<std::size_t>(u);
            double t = u - static_cast<double>(j);
            return table[j] * (1.0 - t) + table[j + 1] * t;
        }
        return convolution_velocity(atoms_pos, atoms_w, x, config->kernel);
    }
};

double flow_rk2(const FrozenField& field, double x, double total_time, int substeps) {
    double h = total_time / substeps;
    for (int s = 0; s < substeps; ++s) {
        double k1 = field(x);
        double k2 = field(x + h * k1);
        x += 0.5 * h * (k1 + k2);
    }
    return x;
}

void check_cost(std::size_t n, int q, const char* context) {
    double cost = 1.0;
    for (int t = 0; t < q + 1; ++t) cost *= static_cast<double>(n);
    if (cost > 1e9)
        throw std::invalid_argument(std::string(context) +
                                    ": q-fold sum too large (n^(q+1) > 1e9)");
}

}  // namespace

double velocity_eval(const AtomicMeasure& mu, double x, const SchemeConfig& config) {
    if (config.velocity == VelocityModel::appendix_b) return mu.total_mass() * clamp_unit(x);
    if (mu.dim != 1) throw std::invalid_argument("velocity_eval: 1-d measures only");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
        acc += mu.weights[i] * config.kernel.eval1d(mu.x(i) - x);
    return acc;
}

double velocity_eval(const GridMeasure& mu, double x, const SchemeConfig& config) {
    if (config.velocity == VelocityModel::appendix_b) return mu.total_mass() * clamp_unit(x);
    double acc = 0.0;
    for (int j = 0; j < mu.cells(); ++j) {
        if (mu.mass[j] == 0.0) continue;
        acc += mu.mass[j] * config.kernel.eval1d(mu.cell_center(j) - x);
    }
    return acc;
}

std::vector<double> source_rates_naive(std::span<const double> pos, std::span<const double> w,
                                       const SourceKernel& source) {
    const std::size_t n = w.size();
    const int q = source.arity;
    check_cost(n, q, "source_rates_naive");
    std::vector<double> lam(n, 0.0);
    std::vector<double> args(static_cast<std::size_t>(q + 1));
    std::vector<std::size_t> idx(static_cast<std::size_t>(q), 0);
    for (std::size_t i = 0; i < n; ++i) {
        args[0] = pos[i];
        double acc = 0.0;
        std::fill(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            double wprod = 1.0;
            for (int t = 0; t < q; ++t) {
                wprod *= w[idx[static_cast<std::size_t>(t)]];
                args[static_cast<std::size_t>(t) + 1] = pos[idx[static_cast<std::size_t>(t)]];
            }
            acc += wprod * source.eval(args);
            int t = q - 1;
            while (t >= 0 && ++idx[static_cast<std::size_t>(t)] == n)
                idx[static_cast<std::size_t>(t--)] = 0;
            if (t < 0) break;
        }
        lam[i] = acc;
    }
    return lam;
}

std::vector<double> source_rates(std::span<const double> pos, std::span<const double> w,
                                 const SourceKernel& source) {
    const std::size_t n = w.size();
    if (!source.m1) return source_rates_naive(pos, w, source);
    // factored M1: Lambda(x) = beta sum_j w_j <(A(x)+A(y_j))/2, dir(x-y_j)>
    // with A(x) = sum_k w_k phi(y_k - x); two O(n^2) passes instead of O(n^3).
    const InteractionKernel& phi = *source.m1->phi;
    const double beta = source.m1->beta;
    std::vector<double> a(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += w[k] * phi.eval1d(pos[k] - pos[i]);
        a[i] = acc;
    }
    std::vector<double> lam(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += w[j] * 0.5 * (a[i] + a[j]) * direction_smoother1d(pos[i] - pos[j]);
        lam[i] = beta * acc;
    }
    return lam;
}

AtomicMeasure source_eval(const AtomicMeasure& mu, const SourceKernel& source) {
    mu.validate("source_eval");
    if (mu.dim != 1) throw std::invalid_argument("source_eval: 1-d measures only");
    std::vector<double> pos(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) pos[i] = mu.x(i);
    std::vector<double> lam = source_rates(pos, mu.weights, source);
    AtomicMeasure h;
    h.dim = 1;
    for (std::size_t i = 0; i < mu.size(); ++i)
        h.append1d(mu.x(i), mu.weights[i] * lam[i]);
    return h;
}

GridMeasure source_eval(const GridMeasure& mu, const SourceKernel& source) {
    std::vector<double> pos(static_cast<std::size_t>(mu.cells()));
    for (int j = 0; j < mu.cells(); ++j) pos[static_cast<std::size_t>(j)] = mu.cell_center(j);
    std::vector<double> lam = source_rates(pos, mu.mass, source);
    GridMeasure h;
    h.left = mu.left;
    h.right = mu.right;
    h.mass.resize(mu.mass.size());
    for (std::size_t j = 0; j < mu.mass.size(); ++j) h.mass[j] = mu.mass[j] * lam[j];
    h.probability = false;
    return h;
}

GridMeasure scheme_S_step(const GridMeasure& mu, const SchemeConfig& config) {
    const int g = mu.cells();
    const double dt = config.dt();
    std::vector<double> pos(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) pos[static_cast<std::size_t>(j)] = mu.cell_center(j);

    // frozen velocity (pre-source measure)
    FrozenField field;
    field.config = &config;
    field.mass = mu.total_mass();
    field.left = mu.left;
    field.h = mu.cell_width();
    if (config.velocity == VelocityModel::convolution) {
        field.use_table = true;
        field.table.resize(static_cast<std::size_t>(g));
        for (int j = 0; j < g; ++j)
            field.table[static_cast<std::size_t>(j)] = velocity_eval(mu, pos[static_cast<std::size_t>(j)], config);
    }

    // source half-step
    std::vector<double> lam = source_rates(pos, mu.mass, config.source);
    GridMeasure out;
    out.left = mu.left;
    out.right = mu.right;
    out.mass.assign(static_cast<std::size_t>(g), 0.0);
    std::vector<double> staged(static_cast<std::size_t>(g));
    for (int j = 0; j < g; ++j) {
        double m2 = mu.mass[static_cast<std::size_t>(j)] *
                    (1.0 + dt * lam[static_cast<std::size_t>(j)]);
        if (m2 < 0.0)
            throw std::runtime_error(
                "scheme_S_step: negative mass after source half-step at cell " +
                std::to_string(j) + " (dt * S-bar exceeds 1)");
        staged[static_cast<std::size_t>(j)] = m2;
    }

    // transport half-step: push cell centers, deposit linearly between the
    // two bracketing cell centers (boundary half-cells collapse to the edge
    // cell, which keeps mass and positivity)
    const double h = mu.cell_width();
    for (int j = 0; j < g; ++j) {
        double m2 = staged[static_cast<std::size_t>(j)];
        if (m2 == 0.0) continue;
        double x = flow_rk2(field, pos[static_cast<std::size_t>(j)], dt,
                            config.transport_substeps);
        if (x < mu.left || x > mu.right)
            throw std::runtime_error(
                "scheme_S_step: characteristic left the grid domain at x=" +
                std::to_string(x) + "; enlarge the domain toward the R_T bound");
        double u = (x - mu.left) / h - 0.5;
        if (u <= 0.0) {
            out.mass[0] += m2;
        } else if (u >= static_cast<double>(g - 1)) {
            out.mass[static_cast<std::size_t>(g - 1)] += m2;
        } else {
            auto j0 = static_cast<std::size_t>(u);
            double t = u - static_cast<double>(j0);
            out.mass[j0] += m2 * (1.0 - t);
            out.mass[j0 + 1] += m2 * t;
        }
    }
    out.probability = mu.probability;
    return out;
}

AtomicMeasure scheme_S_step_atomic(const AtomicMeasure& mu, const SchemeConfig& config) {
    mu.validate("scheme_S_step_atomic");
    const double dt = config.dt();
    std::vector<double> pos(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) pos[i] = mu.x(i);

    FrozenField field;
    field.config = &config;
    field.mass = mu.total_mass();
    field.atoms_pos = pos;
    field.atoms_w = mu.weights;

    std::vector<double> lam = source_rates(pos, mu.weights, config.source);
    AtomicMeasure out;
    out.dim = 1;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double w2 = mu.weights[i] * (1.0 + dt * lam[i]);
        if (mu.weights[i] >= 0.0 && w2 < 0.0)
            throw std::runtime_error(
                "scheme_S_step_atomic: negative weight after source half-step (dt * S-bar "
                "exceeds 1)");
        double x = flow_rk2(field, pos[i], dt, config.transport_substeps);
        out.append1d(x, w2);
    }
    return out.canonical();
}

AtomicMeasure scheme_Stilde_step_atomic(const AtomicMeasure& mu, const SchemeConfig& config) {
    mu.validate("scheme_Stilde_step_atomic");
    const double dt = config.dt();
    std::vector<double> pos(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) pos[i] = mu.x(i);

    FrozenField field;
    field.config = &config;
    field.mass = mu.total_mass();
    field.atoms_pos = pos;
    field.atoms_w = mu.weights;

    std::vector<double> lam = source_rates(pos, mu.weights, config.source);
    AtomicMeasure out;
    out.dim = 1;
    // transported measure
    for (std::size_t i = 0; i < mu.size(); ++i)
        out.append1d(flow_rk2(field, pos[i], dt, config.transport_substeps), mu.weights[i]);
    // plus dt * h[mu] left at the pre-transport positions: the dispersive
    // atom-splitting that breaks positivity
    for (std::size_t i = 0; i < mu.size(); ++i)
        out.append1d(pos[i], dt * mu.weights[i] * lam[i]);
    return out.canonical();
}

std::vector<SchemeSample> run_scheme(const SchemeConfig& config, const GridMeasure& mu0,
                                     std::span<const double> sample_times,
                                     std::vector<SchemeDiagnostics>* diagnostics) {
    double lo = 0.0, hi = 0.0;
    if (mu0.support(lo, hi)) {
        if (lo < config.domain_left || hi > config.domain_right)
            throw std::invalid_argument("run_scheme: mu0 support outside the grid domain");
    }
    mu0.validate_probability(1e-10, "run_scheme(mu0)");
    const double dt = config.dt();
    const long nsteps = 1L << config.refinement;

    std::vector<long> snap(sample_times.size());
    for (std::size_t s = 0; s < sample_times.size(); ++s) {
        long idx = std::lround(sample_times[s] / dt);
        if (idx < 0 || idx > nsteps)
            throw std::invalid_argument("run_scheme: sample time outside [0, T]");
        snap[s] = idx;
    }

    auto emit = [&](double t, const GridMeasure& m, std::vector<SchemeSample>& outv) {
        m.validate_probability(1e-10, "run_scheme(sample)");
        outv.push_back({t, m});
        if (diagnostics) {
            SchemeDiagnostics d;
            d.t = t;
            d.mass = m.total_mass();
            d.min_mass = m.min_mass();
            m.support(d.support_left, d.support_right);
            d.tv = m.total_variation();
            diagnostics->push_back(d);
        }
    };

    std::vector<SchemeSample> out;
    GridMeasure cur = mu0;
    for (std::size_t s = 0; s < snap.size(); ++s)
        if (snap[s] == 0) emit(0.0, cur, out);
    for (long step = 1; step <= nsteps; ++step) {
        cur = scheme_S_step(cur, config);
        for (std::size_t s = 0; s < snap.size(); ++s)
            if (snap[s] == step) emit(static_cast<double>(step) * dt, cur, out);
    }
    return out;
}

double support_bound_radius(const InteractionKernel& kernel, double r0, double horizon) {
    double generic;
    const double lphi = kernel.lipschitz_constant;
    const double phi0 = kernel.phi0_norm();
    if (lphi > 0.0) {
        generic = std::exp(2.0 * lphi * horizon) * (phi0 / (2.0 * lphi) + r0) -
                  phi0 / (2.0 * lphi);
    } else {
        generic = r0 + phi0 * horizon;
    }
    if (std::isfinite(kernel.sup_norm))
        return std::min(generic, r0 + kernel.sup_norm * horizon);
    return generic;
}

}  // namespace mfk
