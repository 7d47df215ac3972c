#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfk {

// Finite signed combination of Dirac masses in R^d. Positions are stored
// row-major (size() * dim). Weights may be negative (signed measures show up
// as source terms and scheme iterates); probability measures are the special
// case total_mass == 1 with nonnegative weights.
struct AtomicMeasure {
    int dim = 1;
    std::vector<double> positions;
    std::vector<double> weights;

    static constexpr double merge_tol = 1e-9;

    std::size_t size() const { return weights.size(); }
    std::span<const double> position(std::size_t i) const {
        return {positions.data() + static_cast<std::ptrdiff_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
    // 1-d accessor, used by everything downstream of the macro solver
    double x(std::size_t i) const { return positions[i * static_cast<std::size_t>(dim)]; }

    double total_mass() const;
    double total_variation() const;
    bool is_probability(double tol = 1e-9) const;

    void append(std::span<const double> pos, double w);
    void append1d(double pos, double w);

    // Sorts atoms, merges groups of positions closer than `tol` (absolute,
    // per coordinate) and drops atoms whose merged weight is exactly zero.
    AtomicMeasure canonical(double tol = merge_tol) const;

    void validate(const std::string& context) const;  // throws on NaN/Inf
};

AtomicMeasure dirac(double position, double weight = 1.0);
bool measure_equal(const AtomicMeasure& a, const AtomicMeasure& b, double tol = 1e-9);

// Mass vector on G uniform cells of [left, right]. Cell masses are stored,
// not densities; density(j) = mass[j] * cells / (right - left). Signed
// content is allowed (h[mu] lives here too); `probability` marks vectors
// produced by the probability-preserving constructors/steps.
struct GridMeasure {
    double left = 0.0;
    double right = 1.0;
    std::vector<double> mass;
    bool probability = false;

    int cells() const { return static_cast<int>(mass.size()); }
    double cell_width() const { return (right - left) / cells(); }
    double cell_left(int j) const { return left + j * cell_width(); }
    double cell_right(int j) const { return left + (j + 1) * cell_width(); }
    double cell_center(int j) const { return left + (j + 0.5) * cell_width(); }

    double total_mass() const;
    double total_variation() const;
    double min_mass() const;
    double density(int j) const { return mass[j] * cells() / (right - left); }

    // [support_left, support_right] hull of cells with |mass| > 0; returns
    // false when every cell is empty.
    bool support(double& lo, double& hi) const;

    void validate_probability(double tol = 1e-12, const std::string& context = {}) const;
};

struct ParticleState {
    int dim = 1;
    std::vector<double> positions;  // N * dim, row-major
    std::vector<double> weights;    // N
    double total_mass = 0.0;        // M; the dynamics conserves sum(weights) == M
    double time = 0.0;

    int count() const { return static_cast<int>(weights.size()); }
    std::span<const double> position(int i) const {
        return {positions.data() + static_cast<std::ptrdiff_t>(i) * dim,
                static_cast<std::size_t>(dim)};
    }
    double x(int i) const { return positions[static_cast<std::size_t>(i) * dim]; }
    double weight_sum() const;

    void validate(const std::string& context) const;
};

// (1/M) sum_i m_i delta_{x_i}; canonical form (co-located atoms merged).
AtomicMeasure empirical_measure(const ParticleState& state);

// Piecewise-constant counting measure on [0,1): bin j collects the weight of
// particles in [(j-1)/p, j/p), normalized by M; x == 1 goes to the last bin.
// 1-d states only; positions outside [0,1] are an error naming the particle.
GridMeasure counting_measure(const ParticleState& state, int bins);

// Cell masses from midpoint-rule integrals of f/normalizer, renormalized to
// sum exactly 1. f must be >= 0 on the domain.
GridMeasure grid_from_density(const std::function<double(double)>& f, double normalizer,
                              double left, double right, int cells);

// One atom per cell with nonzero mass, placed at the cell midpoint.
AtomicMeasure atomic_from_grid(const GridMeasure& g);

}  // namespace mfk
