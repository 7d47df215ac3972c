#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace mfk {

// Interaction function phi: R^d -> R^d with Lipschitz metadata. sup_norm and
// support_radius are set when the preset knows them (the sin^2 kernel is
// globally bounded by 1 with compact support); they tighten the a-priori
// support growth bound used by the macro solver. Presets also carry a tag so
// the O(N^2) inner loops can inline the kernel instead of going through
// std::function.
enum class KernelTag { generic, sin2 };

struct InteractionKernel {
    int dim = 1;
    std::function<void(std::span<const double>, std::span<double>)> eval;
    double lipschitz_constant = 0.0;
    std::vector<double> phi_at_zero;
    double sup_norm = std::numeric_limits<double>::infinity();
    double support_radius = std::numeric_limits<double>::infinity();
    KernelTag tag = KernelTag::generic;

    double eval1d(double delta) const {
        double out = 0.0;
        eval(std::span<const double>(&delta, 1), std::span<double>(&out, 1));
        return out;
    }
    double phi0_norm() const;
};

struct M1Params {
    double beta = 0.0;
    std::shared_ptr<const InteractionKernel> phi;
};

// q-ary source kernel S: (R^d)^{q+1} -> R. The skew pair (i,j) marks the two
// argument slots whose swap negates S; that is what makes h[mu] mass-free.
// `bound` is valid for arguments inside B(0, bound_radius).
struct SourceKernel {
    int arity = 1;  // q
    int dim = 1;
    std::function<double(std::span<const double>)> eval;  // (q+1)*dim packed args
    double bound = 0.0;
    double bound_radius = std::numeric_limits<double>::infinity();
    double lipschitz_constant = 0.0;
    std::pair<int, int> skew_pair{0, 1};
    std::optional<M1Params> m1;  // set by the m1 preset; enables factored paths

    double eval_packed(std::span<const double> args) const { return eval(args); }
};

// dir(delta) = arctan(|delta|) delta/|delta|, dir(0) = 0.
void direction_smoother(std::span<const double> delta, std::span<double> out);
inline double direction_smoother1d(double delta) {
    return delta == 0.0 ? 0.0 : std::copysign(std::atan(std::abs(delta)), delta);
}

// phi_R(delta) = (delta/|delta|) sin^2(pi |delta| / R) for |delta| <= R, else 0.
InteractionKernel kernel_sin2(double radius, int dim = 1);

// Model M1, q = 2: S(x,y,z) = beta <(phi(z-x)+phi(z-y))/2, dir(x-y)>.
SourceKernel source_m1(const InteractionKernel& phi, double beta);

// q = 1, d = 1: S(x,y) = x - y. Drives the two-Dirac scheme counterexample.
SourceKernel source_linear_appendix_b();

struct SkewReport {
    double max_defect = 0.0;
    int samples = 0;
    bool pass = false;
};

// Samples random argument tuples in B(0, ball_radius)^{q+1} and swaps the skew
// pair; passes iff max |S(..) + S(swapped)| <= 1e-12.
SkewReport validate_skew(const SourceKernel& s, int samples, double ball_radius,
                         std::uint64_t seed);

// max |S| over sampled tuples in the ball; the per-run stand-in for S-bar when
// the kernel (like M1) is only bounded on compact sets.
double sample_source_bound(const SourceKernel& s, double radius, int samples,
                           std::uint64_t seed);

// max sampled |phi(u)-phi(v)|/|u-v| over random pairs in B(0, radius).
double sample_lipschitz(const InteractionKernel& k, double radius, int samples,
                        std::uint64_t seed);

// max sampled |S(a)-S(b)| / sum_i |a_i-b_i| over tuple pairs in the ball.
double sample_source_lipschitz(const SourceKernel& s, double radius, int samples,
                               std::uint64_t seed);

}  // namespace mfk
