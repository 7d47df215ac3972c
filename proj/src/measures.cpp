#include "mfk/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mfk {

namespace {

double stable_sum(std::span<const double> v) {
    // Kahan compensation; cell/atom counts get large enough that plain
    // accumulation would eat into the 1e-12 mass budgets.
    double s = 0.0, c = 0.0;
    for (double x : v) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

}  // namespace

double AtomicMeasure::total_mass() const {
    return stable_sum(weights);
}

double AtomicMeasure::total_variation() const {
    double s = 0.0;
    for (double w : weights) s += std::abs(w);
    return s;
}

bool AtomicMeasure::is_probability(double tol) const {
    if (std::abs(total_mass() - 1.0) > tol) return false;
    for (double w : weights)
        if (w < -tol) return false;
    return true;
}

void AtomicMeasure::append(std::span<const double> pos, double w) {
    if (static_cast<int>(pos.size()) != dim)
        throw std::invalid_argument("AtomicMeasure::append: position dimension mismatch");
    positions.insert(positions.end(), pos.begin(), pos.end());
    weights.push_back(w);
}

void AtomicMeasure::append1d(double pos, double w) {
    append(std::span<const double>(&pos, 1), w);
}

void AtomicMeasure::validate(const std::string& context) const {
    if (positions.size() != weights.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument(context + ": position/weight size mismatch");
    for (double p : positions)
        if (!std::isfinite(p)) throw std::invalid_argument(context + ": non-finite position");
    for (double w : weights)
        if (!std::isfinite(w)) throw std::invalid_argument(context + ": non-finite weight");
}

AtomicMeasure AtomicMeasure::canonical(double tol) const {
    validate("canonical");
    const std::size_t n = size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (int k = 0; k < dim; ++k) {
            double pa = positions[a * dim + k], pb = positions[b * dim + k];
            if (pa != pb) return pa < pb;
        }
        return false;
    });

    AtomicMeasure out;
    out.dim = dim;
    std::size_t i = 0;
    while (i < n) {
        // group atoms whose coordinates all lie within tol of the group head
        std::size_t j = i + 1;
        const double* head = positions.data() + order[i] * dim;
        double wsum = weights[order[i]];
        std::vector<double> psum(head, head + dim);
        std::size_t cnt = 1;
        while (j < n) {
            const double* p = positions.data() + order[j] * dim;
            bool close = true;
            for (int k = 0; k < dim; ++k)
                if (std::abs(p[k] - head[k]) > tol) { close = false; break; }
            if (!close) break;
            wsum += weights[order[j]];
            for (int k = 0; k < dim; ++k) psum[k] += p[k];
            ++cnt;
            ++j;
        }
        if (wsum != 0.0) {
            for (int k = 0; k < dim; ++k) psum[k] /= static_cast<double>(cnt);
            out.append(psum, wsum);
        }
        i = j;
    }
    return out;
}

AtomicMeasure dirac(double position, double weight) {
    AtomicMeasure m;
    m.append1d(position, weight);
    return m;
}

bool measure_equal(const AtomicMeasure& a, const AtomicMeasure& b, double tol) {
    if (a.dim != b.dim) return false;
    AtomicMeasure ca = a.canonical(), cb = b.canonical();
    if (ca.size() != cb.size()) return false;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (std::abs(ca.weights[i] - cb.weights[i]) > tol) return false;
        for (int k = 0; k < ca.dim; ++k)
            if (std::abs(ca.positions[i * ca.dim + k] - cb.positions[i * cb.dim + k]) > tol)
                return false;
    }
    return true;
}

double GridMeasure::total_mass() const {
    return stable_sum(mass);
}

double GridMeasure::total_variation() const {
    double s = 0.0;
    for (double m : mass) s += std::abs(m);
    return s;
}

double GridMeasure::min_mass() const {
    double lo = mass.empty() ? 0.0 : mass[0];
    for (double m : mass) lo = std::min(lo, m);
    return lo;
}

bool GridMeasure::support(double& lo, double& hi) const {
    int first = -1, last = -1;
    for (int j = 0; j < cells(); ++j) {
        if (mass[j] != 0.0) {
            if (first < 0) first = j;
            last = j;
        }
    }
    if (first < 0) return false;
    lo = cell_left(first);
    hi = cell_right(last);
    return true;
}

void GridMeasure::validate_probability(double tol, const std::string& context) const {
    double drift = std::abs(total_mass() - 1.0);
    if (drift > tol)
        throw std::runtime_error(context + ": grid mass deviates from 1 by " +
                                 std::to_string(drift));
    for (int j = 0; j < cells(); ++j)
        if (mass[j] < 0.0)
            throw std::runtime_error(context + ": negative cell mass at cell " +
                                     std::to_string(j));
}

double ParticleState::weight_sum() const {
    return stable_sum(weights);
}

void ParticleState::validate(const std::string& context) const {
    if (positions.size() != weights.size() * static_cast<std::size_t>(dim))
        throw std::invalid_argument(context + ": position/weight size mismatch");
    if (!(total_mass > 0.0) || !std::isfinite(total_mass))
        throw std::invalid_argument(context + ": total mass must be positive");
    for (double p : positions)
        if (!std::isfinite(p)) throw std::invalid_argument(context + ": non-finite position");
    for (double w : weights)
        if (!std::isfinite(w)) throw std::invalid_argument(context + ": non-finite weight");
}

AtomicMeasure empirical_measure(const ParticleState& state) {
    state.validate("empirical_measure");
    if (state.count() < 1) throw std::invalid_argument("empirical_measure: empty state");
    AtomicMeasure m;
    m.dim = state.dim;
    m.positions = state.positions;
    m.weights.resize(state.weights.size());
    for (std::size_t i = 0; i < state.weights.size(); ++i)
        m.weights[i] = state.weights[i] / state.total_mass;
    return m.canonical();
}

GridMeasure counting_measure(const ParticleState& state, int bins) {
    state.validate("counting_measure");
    if (state.dim != 1) throw std::invalid_argument("counting_measure: 1-d states only");
    if (bins < 1) throw std::invalid_argument("counting_measure: bins must be >= 1");
    GridMeasure g;
    g.left = 0.0;
    g.right = 1.0;
    g.mass.assign(bins, 0.0);
    for (int i = 0; i < state.count(); ++i) {
        double xi = state.x(i);
        if (xi < 0.0 || xi > 1.0)
            throw std::runtime_error("counting_measure: particle " + std::to_string(i) +
                                     " at x=" + std::to_string(xi) + " outside [0,1]");
        int j = (xi >= 1.0) ? bins - 1 : static_cast<int>(xi * bins);
        g.mass[j] += state.weights[i] / state.total_mass;
    }
    g.probability = true;
    return g;
}

GridMeasure grid_from_density(const std::function<double(double)>& f, double normalizer,
                              double left, double right, int cells) {
    if (cells < 1) throw std::invalid_argument("grid_from_density: cells must be >= 1");
    if (!(normalizer > 0.0)) throw std::invalid_argument("grid_from_density: normalizer <= 0");
    GridMeasure g;
    g.left = left;
    g.right = right;
    g.mass.assign(cells, 0.0);
    const double h = (right - left) / cells;
    constexpr int quad = 16;  // composite midpoint points per cell
    for (int j = 0; j < cells; ++j) {
        double acc = 0.0;
        for (int q = 0; q < quad; ++q) {
            double xq = left + j * h + (q + 0.5) * h / quad;
            double v = f(xq);
            if (v < 0.0)
                throw std::runtime_error("grid_from_density: f < 0 at x=" + std::to_string(xq));
            acc += v;
        }
        g.mass[j] = acc * h / (quad * normalizer);
    }
    double total = g.total_mass();
    if (!(total > 0.0)) throw std::runtime_error("grid_from_density: density integrates to zero");
    for (double& m : g.mass) m /= total;
    g.probability = true;
    return g;
}

AtomicMeasure atomic_from_grid(const GridMeasure& g) {
    AtomicMeasure m;
    m.dim = 1;
    for (int j = 0; j < g.cells(); ++j)
        if (g.mass[j] != 0.0) m.append1d(g.cell_center(j), g.mass[j]);
    return m;
}

}  // namespace mfk
