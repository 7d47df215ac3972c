#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "mfk/measures.hpp"

namespace mfk {

enum class DistanceMethod { quantile, dual_lp };

struct DistanceReport {
    double value = 0.0;
    DistanceMethod method = DistanceMethod::dual_lp;
    // dual witness: (support point, f value); f is 1-Lipschitz with |f| <= box
    std::optional<std::vector<std::pair<double, double>>> certificate;
};

// Exact W_p between 1-d probability measures via merged quantile functions.
double wasserstein_p_1d(const AtomicMeasure& mu, const AtomicMeasure& nu, int p);

// Bounded-Lipschitz (flat) distance between signed 1-d measures: the dual LP
// over the union support, solved exactly; report carries the witness f.
DistanceReport bounded_lipschitz(const AtomicMeasure& mu, const AtomicMeasure& nu);

// Generalized W^{a,b}_1: box |f| <= a, slope |f'| <= b. bounded_lipschitz is
// (a,b) = (1,1); a may be +inf, which recovers plain W_1 duality for measures
// of equal mass.
DistanceReport generalized_w1(const AtomicMeasure& mu, const AtomicMeasure& nu, double box,
                              double slope);

enum class MetricKind { W1, Wp, BL };

double distance_between_grid(const GridMeasure& mu, const AtomicMeasure& nu, MetricKind which,
                             int p = 2);
double distance_between_grid(const GridMeasure& mu, const GridMeasure& nu, MetricKind which,
                             int p = 2);

struct MetricCheckReport {
    int pairs = 0;
    double max_violation = 0.0;  // positive = some inequality failed by this much
    double max_slack = 0.0;      // tightest margin observed (diagnostic)
    std::uint64_t worst_pair_seed = 0;
    bool pass = false;
};

// Random compactly supported probability pairs in B(0, radius); checks
// rho <= W1 <= max(1,R) rho, monotonicity W_m <= W_p (m <= p <= max_p), and
// W_p <= (2R)^{(p-1)/p} W1^{1/p}.
MetricCheckReport check_metric_inequalities(int pairs, double radius, int max_p,
                                            std::uint64_t seed);

namespace detail {
// Maximize sum_i c_i f_i subject to |f_i| <= box and |f_{i+1} - f_i| <=
// slope * (x_{i+1} - x_i) on sorted distinct positions x. Exact; O(n^2) worst
// case. Returns optimum and the maximizing f.
double chain_lp_max(const std::vector<double>& x, const std::vector<double>& c, double box,
                    double slope, std::vector<double>* witness);
}  // namespace detail

}  // namespace mfk
