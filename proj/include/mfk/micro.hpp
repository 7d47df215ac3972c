#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfk/kernels.hpp"
#include "mfk/measures.hpp"

namespace mfk {

enum class Integrator { euler, rk4 };

struct MicroConfig {
    InteractionKernel kernel;
    SourceKernel source;
    double dt = 1e-3;
    double horizon = 1.0;
    Integrator integrator = Integrator::rk4;
    bool prefer_factored_m1 = true;  // use the O(N^2) path when source is M1
    // when > 0: stop once max position change per unit time drops below this,
    // checked every `early_stop_window` time units
    double early_stop_speed = 0.0;
    double early_stop_window = 1.0;
    // optional second phase with a larger step once the fast transient is over
    double late_dt = 0.0;      // 0 = single-phase
    double late_start = 0.0;   // time at which late_dt takes over
    // full schedule (start_time, dt), sorted by start; overrides dt/late_dt
    // when non-empty. Long clustering runs step finely only through the stiff
    // transient.
    std::vector<std::pair<double, double>> dt_schedule;
};

struct Trajectory {
    std::vector<ParticleState> states;  // strictly increasing in time
    const ParticleState& front() const { return states.front(); }
    const ParticleState& back() const { return states.back(); }
};

// row i = (1/M) sum_j m_j phi(x_j - x_i); returned flat N*d
std::vector<double> position_rhs(const ParticleState& state, const InteractionKernel& kernel);

// exact (q+1)-fold nested sum: dm_i = m_i (1/M^q) sum m_{j1}..m_{jq} S(x_i, x_j1..x_jq).
// Rejects N^{q+1} > 1e9.
std::vector<double> weight_rhs_naive(const ParticleState& state, const SourceKernel& source);

// algebraically equal to the naive sum for the M1 kernel, O(N^2) by factoring
// the k-sum through A_i = (1/M) sum_k m_k phi(x_k - x_i)
std::vector<double> weight_rhs_m1_factored(const ParticleState& state,
                                           const SourceKernel& source);

// fixed-step integration to the horizon; samples every `sample_stride` steps
// (always including the initial and final states). Throws if any weight
// becomes nonpositive, naming the time and particle.
Trajectory integrate_micro(const MicroConfig& config, const ParticleState& initial,
                           int sample_stride = 1);

struct IndistReport {
    double max_position_gap = 0.0;   // across the two runs, all agents
    double group_sum_gap = 0.0;      // |sum_J m - sum_J p| at final time
    double outside_gap = 0.0;        // weights outside J
    bool pass = false;
};

// Def-style merge/split check: run `base` against a copy whose group-J weights
// are replaced by `group_weights` (same group sum, group co-located).
IndistReport indistinguishability_check(const MicroConfig& config, const ParticleState& base,
                                        std::span<const int> group,
                                        std::span<const double> group_weights,
                                        double tol = 1e-8);

// relabeling check: integrating permuted initial data permutes the trajectory
bool permutation_check(const MicroConfig& config, const ParticleState& base,
                       std::span<const int> permutation, double tol = 1e-8);

}  // namespace mfk
