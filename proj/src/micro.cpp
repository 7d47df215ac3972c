#include "mfk/micro.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mfk {

namespace {

// shared RHS evaluation into preallocated buffers
struct RhsWork {
    std::vector<double> xdot;  // N*d
    std::vector<double> mdot;  // N
    std::vector<double> buf;   // scratch d-vectors
};

void eval_position_rhs(const double* x, const double* m, int n, int d, double M,
                       const InteractionKernel& kernel, double* out, double* scratch) {
    if (kernel.tag == KernelTag::sin2 && d == 1) {
        // inlined 1-d sin^2 kernel; this pairwise loop dominates every run
        const double radius = kernel.support_radius;
        const double freq = 3.14159265358979323846 / radius;
        for (int i = 0; i < n; ++i) {
            const double xi = x[i];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                double delta = x[j] - xi;
                double a = std::abs(delta);
                if (a == 0.0 || a > radius) continue;
                double s = std::sin(freq * a);
                acc += m[j] * std::copysign(s * s, delta);
            }
            out[i] = acc / M;
        }
        return;
    }
    for (int i = 0; i < n; ++i) {
        double* acc = out + static_cast<std::ptrdiff_t>(i) * d;
        for (int k = 0; k < d; ++k) acc[k] = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < d; ++k)
                scratch[k] = x[static_cast<std::ptrdiff_t>(j) * d + k] -
                             x[static_cast<std::ptrdiff_t>(i) * d + k];
            kernel.eval({scratch, static_cast<std::size_t>(d)},
                        {scratch + d, static_cast<std::size_t>(d)});
            for (int k = 0; k < d; ++k) acc[k] += m[j] * scratch[d + k];
        }
        for (int k = 0; k < d; ++k) acc[k] /= M;
    }
}

void eval_weight_rhs_m1(const double* x, const double* m, int n, int d, double M,
                        const SourceKernel& source, const double* a /*N*d, = xdot*/,
                        double* out, double* scratch) {
    const double beta = source.m1->beta;
    if (d == 1) {
        for (int i = 0; i < n; ++i) {
            const double xi = x[i], ai = a[i];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                double delta = xi - x[j];
                if (delta == 0.0) continue;
                acc += m[j] * 0.5 * (ai + a[j]) * std::copysign(std::atan(std::abs(delta)), delta);
            }
            out[i] = beta / M * m[i] * acc;
        }
        return;
    }
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < d; ++k)
                scratch[k] = x[static_cast<std::ptrdiff_t>(i) * d + k] -
                             x[static_cast<std::ptrdiff_t>(j) * d + k];
            direction_smoother({scratch, static_cast<std::size_t>(d)},
                               {scratch + d, static_cast<std::size_t>(d)});
            double dot = 0.0;
            for (int k = 0; k < d; ++k)
                dot += 0.5 *
                       (a[static_cast<std::ptrdiff_t>(i) * d + k] +
                        a[static_cast<std::ptrdiff_t>(j) * d + k]) *
                       scratch[d + k];
            acc += m[j] * dot;
        }
        out[i] = beta / M * m[i] * acc;
    }
}

void eval_weight_rhs_naive(const double* x, const double* m, int n, int d, double M,
                           const SourceKernel& source, double* out) {
    const int q = source.arity;
    std::vector<double> args(static_cast<std::size_t>(q + 1) * d);
    std::vector<int> idx(q, 0);
    const double mq = std::pow(M, q);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) args[k] = x[static_cast<std::ptrdiff_t>(i) * d + k];
        double acc = 0.0;
        std::fill(idx.begin(), idx.end(), 0);
        while (true) {
            double wprod = 1.0;
            for (int t = 0; t < q; ++t) {
                int j = idx[t];
                wprod *= m[j];
                for (int k = 0; k < d; ++k)
                    args[static_cast<std::size_t>(t + 1) * d + k] =
                        x[static_cast<std::ptrdiff_t>(j) * d + k];
            }
            acc += wprod * source.eval(args);
            int t = q - 1;
            while (t >= 0 && ++idx[t] == n) idx[t--] = 0;
            if (t < 0) break;
        }
        out[i] = m[i] * acc / mq;
    }
}

struct StepBuffers {
    std::vector<double> k1x, k2x, k3x, k4x;
    std::vector<double> k1m, k2m, k3m, k4m;
    std::vector<double> tx, tm, scratch;
};

void eval_rhs(const ParticleState& proto, const double* x, const double* m,
              const MicroConfig& cfg, double* xdot, double* mdot, double* scratch) {
    const int n = proto.count(), d = proto.dim;
    const double M = proto.total_mass;
    eval_position_rhs(x, m, n, d, M, cfg.kernel, xdot, scratch);
    if (cfg.source.m1 && cfg.prefer_factored_m1) {
        eval_weight_rhs_m1(x, m, n, d, M, cfg.source, xdot, mdot, scratch);
    } else {
        eval_weight_rhs_naive(x, m, n, d, M, cfg.source, mdot);
    }
}

}  // namespace

std::vector<double> position_rhs(const ParticleState& state, const InteractionKernel& kernel) {
    state.validate("position_rhs");
    std::vector<double> out(state.positions.size());
    std::vector<double> scratch(2 * state.dim);
    eval_position_rhs(state.positions.data(), state.weights.data(), state.count(), state.dim,
                      state.total_mass, kernel, out.data(), scratch.data());
    return out;
}

std::vector<double> weight_rhs_naive(const ParticleState& state, const SourceKernel& source) {
    state.validate("weight_rhs_naive");
    const int n = state.count();
    double cost = 1.0;
    for (int t = 0; t < source.arity + 1; ++t) cost *= n;
    if (cost > 1e9)
        throw std::invalid_argument("weight_rhs_naive: N^(q+1) exceeds 1e9, use a factored path");
    std::vector<double> out(static_cast<std::size_t>(n));
    eval_weight_rhs_naive(state.positions.data(), state.weights.data(), n, state.dim,
                          state.total_mass, source, out.data());
    return out;
}

std::vector<double> weight_rhs_m1_factored(const ParticleState& state,
                                           const SourceKernel& source) {
    state.validate("weight_rhs_m1_factored");
    if (!source.m1)
        throw std::invalid_argument("weight_rhs_m1_factored: source is not the M1 kernel");
    std::vector<double> a(state.positions.size());
    std::vector<double> scratch(2 * state.dim);
    eval_position_rhs(state.positions.data(), state.weights.data(), state.count(), state.dim,
                      state.total_mass, *source.m1->phi, a.data(), scratch.data());
    std::vector<double> out(static_cast<std::size_t>(state.count()));
    eval_weight_rhs_m1(state.positions.data(), state.weights.data(), state.count(), state.dim,
                       state.total_mass, source, a.data(), out.data(), scratch.data());
    return out;
}

Trajectory integrate_micro(const MicroConfig& config, const ParticleState& initial,
                           int sample_stride) {
    initial.validate("integrate_micro");
    if (sample_stride < 1) throw std::invalid_argument("integrate_micro: bad sample stride");
    if (!(config.dt > 0.0) || !(config.horizon >= 0.0))
        throw std::invalid_argument("integrate_micro: dt and horizon must be positive");
    for (int i = 0; i < initial.count(); ++i)
        if (initial.weights[i] <= 0.0)
            throw std::invalid_argument("integrate_micro: initial weights must be positive");
    double sum0 = initial.weight_sum();
    if (std::abs(sum0 - initial.total_mass) > 1e-9 * initial.total_mass)
        throw std::invalid_argument("integrate_micro: initial weights do not sum to M");

    const int n = initial.count(), d = initial.dim;
    const std::size_t nx = initial.positions.size();
    StepBuffers b;
    b.k1x.resize(nx); b.k2x.resize(nx); b.k3x.resize(nx); b.k4x.resize(nx);
    b.k1m.resize(n);  b.k2m.resize(n);  b.k3m.resize(n);  b.k4m.resize(n);
    b.tx.resize(nx);  b.tm.resize(n);   b.scratch.resize(2 * d);

    ParticleState cur = initial;
    Trajectory traj;
    traj.states.push_back(cur);

    auto check_weights = [&](double t) {
        for (int i = 0; i < n; ++i) {
            if (!(cur.weights[i] > 0.0)) {
                char msg[160];
                std::snprintf(msg, sizeof msg,
                              "integrate_micro: weight %d reached %.3e at t=%.6f "
                              "(dt too large for the positivity-preserving flow)",
                              i, cur.weights[i], t);
                throw std::runtime_error(msg);
            }
        }
    };

    auto do_step = [&](double dt) {
        const double* x = cur.positions.data();
        const double* m = cur.weights.data();
        if (config.integrator == Integrator::euler) {
            eval_rhs(cur, x, m, config, b.k1x.data(), b.k1m.data(), b.scratch.data());
            for (std::size_t i = 0; i < nx; ++i) cur.positions[i] += dt * b.k1x[i];
            for (int i = 0; i < n; ++i) cur.weights[i] += dt * b.k1m[i];
        } else {
            eval_rhs(cur, x, m, config, b.k1x.data(), b.k1m.data(), b.scratch.data());
            for (std::size_t i = 0; i < nx; ++i) b.tx[i] = x[i] + 0.5 * dt * b.k1x[i];
            for (int i = 0; i < n; ++i) b.tm[i] = m[i] + 0.5 * dt * b.k1m[i];
            eval_rhs(cur, b.tx.data(), b.tm.data(), config, b.k2x.data(), b.k2m.data(),
                     b.scratch.data());
            for (std::size_t i = 0; i < nx; ++i) b.tx[i] = x[i] + 0.5 * dt * b.k2x[i];
            for (int i = 0; i < n; ++i) b.tm[i] = m[i] + 0.5 * dt * b.k2m[i];
            eval_rhs(cur, b.tx.data(), b.tm.data(), config, b.k3x.data(), b.k3m.data(),
                     b.scratch.data());
            for (std::size_t i = 0; i < nx; ++i) b.tx[i] = x[i] + dt * b.k3x[i];
            for (int i = 0; i < n; ++i) b.tm[i] = m[i] + dt * b.k3m[i];
            eval_rhs(cur, b.tx.data(), b.tm.data(), config, b.k4x.data(), b.k4m.data(),
                     b.scratch.data());
            for (std::size_t i = 0; i < nx; ++i)
                cur.positions[i] += dt / 6.0 * (b.k1x[i] + 2 * b.k2x[i] + 2 * b.k3x[i] + b.k4x[i]);
            for (int i = 0; i < n; ++i)
                cur.weights[i] += dt / 6.0 * (b.k1m[i] + 2 * b.k2m[i] + 2 * b.k3m[i] + b.k4m[i]);
        }
        cur.time += dt;
    };

    auto dt_at = [&](double t) {
        if (!config.dt_schedule.empty()) {
            double dt = config.dt_schedule.front().second;
            for (const auto& [start, step] : config.dt_schedule)
                if (t >= start - 1e-12) dt = step;
            return dt;
        }
        if (config.late_dt > 0.0 && t >= config.late_start) return config.late_dt;
        return config.dt;
    };

    std::vector<double> window_ref = cur.positions;
    double window_t0 = cur.time;
    long step_index = 0;
    double t_end = initial.time + config.horizon;
    while (cur.time < t_end - 1e-12) {
        double dt = std::min(dt_at(cur.time), t_end - cur.time);
        do_step(dt);
        check_weights(cur.time);
        ++step_index;
        if (step_index % sample_stride == 0) traj.states.push_back(cur);
        if (config.early_stop_speed > 0.0 &&
            cur.time - window_t0 >= config.early_stop_window - 1e-12) {
            double dmax = 0.0;
            for (std::size_t i = 0; i < nx; ++i)
                dmax = std::max(dmax, std::abs(cur.positions[i] - window_ref[i]));
            double speed = dmax / (cur.time - window_t0);
            window_ref = cur.positions;
            window_t0 = cur.time;
            if (speed < config.early_stop_speed) break;
        }
    }
    if (traj.states.back().time != cur.time) traj.states.push_back(cur);
    return traj;
}

IndistReport indistinguishability_check(const MicroConfig& config, const ParticleState& base,
                                        std::span<const int> group,
                                        std::span<const double> group_weights, double tol) {
    if (group.size() != group_weights.size())
        throw std::invalid_argument("indistinguishability_check: group size mismatch");
    ParticleState alt = base;
    double sum_base = 0.0, sum_alt = 0.0;
    for (std::size_t t = 0; t < group.size(); ++t) {
        sum_base += base.weights[group[t]];
        sum_alt += group_weights[t];
        alt.weights[group[t]] = group_weights[t];
    }
    if (std::abs(sum_base - sum_alt) > 1e-12 * std::max(1.0, std::abs(sum_base)))
        throw std::invalid_argument("indistinguishability_check: group sums differ");
    // group must be co-located
    for (std::size_t t = 1; t < group.size(); ++t)
        for (int k = 0; k < base.dim; ++k)
            if (base.positions[static_cast<std::size_t>(group[t]) * base.dim + k] !=
                base.positions[static_cast<std::size_t>(group[0]) * base.dim + k])
                throw std::invalid_argument(
                    "indistinguishability_check: group is not co-located");

    Trajectory ta = integrate_micro(config, base);
    Trajectory tb = integrate_micro(config, alt);
    const ParticleState& fa = ta.back();
    const ParticleState& fb = tb.back();

    IndistReport rep;
    for (std::size_t i = 0; i < fa.positions.size(); ++i)
        rep.max_position_gap =
            std::max(rep.max_position_gap, std::abs(fa.positions[i] - fb.positions[i]));
    double ga = 0.0, gb = 0.0;
    std::vector<bool> in_group(static_cast<std::size_t>(base.count()), false);
    for (int g : group) in_group[static_cast<std::size_t>(g)] = true;
    for (int i = 0; i < base.count(); ++i) {
        if (in_group[static_cast<std::size_t>(i)]) {
            ga += fa.weights[static_cast<std::size_t>(i)];
            gb += fb.weights[static_cast<std::size_t>(i)];
        } else {
            rep.outside_gap = std::max(
                rep.outside_gap, std::abs(fa.weights[static_cast<std::size_t>(i)] -
                                          fb.weights[static_cast<std::size_t>(i)]));
        }
    }
    rep.group_sum_gap = std::abs(ga - gb);
    rep.pass = rep.max_position_gap <= tol && rep.group_sum_gap <= tol &&
               rep.outside_gap <= tol;
    return rep;
}

bool permutation_check(const MicroConfig& config, const ParticleState& base,
                       std::span<const int> permutation, double tol) {
    ParticleState perm = base;
    const int n = base.count(), d = base.dim;
    for (int i = 0; i < n; ++i) {
        int pi = permutation[static_cast<std::size_t>(i)];
        perm.weights[static_cast<std::size_t>(i)] = base.weights[static_cast<std::size_t>(pi)];
        for (int k = 0; k < d; ++k)
            perm.positions[static_cast<std::size_t>(i) * d + k] =
                base.positions[static_cast<std::size_t>(pi) * d + k];
    }
    Trajectory ta = integrate_micro(config, base);
    Trajectory tb = integrate_micro(config, perm);
    const ParticleState& fa = ta.back();
    const ParticleState& fb = tb.back();
    for (int i = 0; i < n; ++i) {
        int pi = permutation[static_cast<std::size_t>(i)];
        if (std::abs(fb.weights[static_cast<std::size_t>(i)] -
                     fa.weights[static_cast<std::size_t>(pi)]) > tol)
            return false;
        for (int k = 0; k < d; ++k)
            if (std::abs(fb.positions[static_cast<std::size_t>(i) * d + k] -
                         fa.positions[static_cast<std::size_t>(pi) * d + k]) > tol)
                return false;
    }
    return true;
}

}  // namespace mfk
