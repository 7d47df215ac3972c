#pragma once

#include <span>
#include <vector>

#include "mfk/kernels.hpp"
#include "mfk/measures.hpp"

namespace mfk {

// Velocity field family for the transport half-step. Convolution is the
// standard V[mu](x) = int phi(y-x) dmu(y); the direct field reproduces the
// two-Dirac counterexample where V[mu](x) = mu(R) v(x) with v(x) = x clamped
// to [-1,1].
enum class VelocityModel { convolution, appendix_b };

struct SchemeConfig {
    InteractionKernel kernel;  // used by the convolution model
    SourceKernel source;
    VelocityModel velocity = VelocityModel::convolution;
    double domain_left = 0.0;
    double domain_right = 1.0;
    int grid_cells = 100;
    int refinement = 6;         // k; dt = horizon / 2^k
    double horizon = 1.0;       // T
    int transport_substeps = 4;

    double dt() const { return horizon / static_cast<double>(1 << refinement); }
};

// V[mu](x) for the frozen measure
double velocity_eval(const AtomicMeasure& mu, double x, const SchemeConfig& config);
double velocity_eval(const GridMeasure& mu, double x, const SchemeConfig& config);

// Lambda(x_i) = q-fold sum of S(x_i, ...) against the measure's atoms/cells;
// h[mu] has the same support with weights w_i * Lambda(x_i).
std::vector<double> source_rates(std::span<const double> pos, std::span<const double> w,
                                 const SourceKernel& source);
std::vector<double> source_rates_naive(std::span<const double> pos, std::span<const double> w,
                                       const SourceKernel& source);

AtomicMeasure source_eval(const AtomicMeasure& mu, const SourceKernel& source);
GridMeasure source_eval(const GridMeasure& mu, const SourceKernel& source);

// One full step of the operator-splitting scheme S: source half-step
// mass <- mass (1 + dt Lambda), then push cell centers along the field frozen
// at the pre-source measure and deposit linearly (cloud-in-cell).
GridMeasure scheme_S_step(const GridMeasure& mu, const SchemeConfig& config);

// Atomic specialization; exact for Dirac data since h[mu] shares mu's atoms.
AtomicMeasure scheme_S_step_atomic(const AtomicMeasure& mu, const SchemeConfig& config);

// The unsplit scheme from the counterexample: transport the measure, then add
// dt h[mu] at the pre-transport positions. Loses positivity by design.
AtomicMeasure scheme_Stilde_step_atomic(const AtomicMeasure& mu, const SchemeConfig& config);

struct SchemeSample {
    double t = 0.0;
    GridMeasure measure;
};

struct SchemeDiagnostics {
    double t = 0.0;
    double mass = 0.0;
    double min_mass = 0.0;
    double support_left = 0.0;
    double support_right = 0.0;
    double tv = 0.0;
};

// Runs 2^k steps of scheme S from mu0, sampling at the requested times
// (snapped to step multiples). Every sample is validated as a probability
// measure.
std::vector<SchemeSample> run_scheme(const SchemeConfig& config, const GridMeasure& mu0,
                                     std::span<const double> sample_times,
                                     std::vector<SchemeDiagnostics>* diagnostics = nullptr);

// A-priori support radius after time T starting from B(0, r0): the generic
// Lipschitz-growth bound, improved to r0 + sup|phi| T when the kernel is
// globally bounded.
double support_bound_radius(const InteractionKernel& kernel, double r0, double horizon);

}  // namespace mfk
