#include "mfk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace mfk {

namespace {

struct SortedAtoms {
    std::vector<double> x, w;
};

SortedAtoms sorted_1d(const AtomicMeasure& m, const char* context) {
    if (m.dim != 1) throw std::invalid_argument(std::string(context) + ": 1-d measures only");
    m.validate(context);
    SortedAtoms s;
    const std::size_t n = m.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.x(a) < m.x(b); });
    s.x.reserve(n);
    s.w.reserve(n);
    for (std::size_t i : order) {
        s.x.push_back(m.x(i));
        s.w.push_back(m.weights[i]);
    }
    return s;
}

void require_probability(const AtomicMeasure& m, const char* context) {
    if (!m.is_probability(1e-9))
        throw std::invalid_argument(std::string(context) +
                                    ": input must be a probability measure");
}

// Concave piecewise-linear function on [xs.front(), xs.back()], values vs at
// breakpoints, linear in between. Invariant: xs strictly increasing.
struct ConcavePwl {
    std::vector<double> xs, vs;

    double eval(double x) const {
        if (x <= xs.front()) return vs.front();
        if (x >= xs.back()) return vs.back();
        auto it = std::upper_bound(xs.begin(), xs.end(), x);
        std::size_t j = static_cast<std::size_t>(it - xs.begin());
        double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
        return vs[j - 1] * (1.0 - t) + vs[j] * t;
    }

    // argmax interval [lo, hi] and the max value
    void argmax(double& lo, double& hi, double& best) const {
        best = *std::max_element(vs.begin(), vs.end());
        double tol = 1e-14 * std::max(1.0, std::abs(best));
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (vs[i] >= best - tol) {
                lo = std::min(lo, xs[i]);
                hi = std::max(hi, xs[i]);
            }
        }
    }

    // sliding-window max over radius r >= 0: out(x) = max_{|u-x|<=r} f(u),
    // defined on the r-enlarged domain. Concavity is preserved: the rising
    // part shifts left, the falling part shifts right, flat top in between.
    void window_max(double r) {
        if (r == 0.0) return;
        double lo, hi, best;
        argmax(lo, hi, best);
        std::vector<double> nx, nv;
        nx.reserve(xs.size() + 2);
        nv.reserve(xs.size() + 2);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] < lo) {
                nx.push_back(xs[i] - r);
                nv.push_back(vs[i]);
            }
        }
        nx.push_back(lo - r);
        nv.push_back(best);
        nx.push_back(hi + r);
        nv.push_back(best);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] > hi) {
                nx.push_back(xs[i] + r);
                nv.push_back(vs[i]);
            }
        }
        xs = std::move(nx);
        vs = std::move(nv);
    }

    void add_linear(double c) {
        for (std::size_t i = 0; i < xs.size(); ++i) vs[i] += c * xs[i];
    }

    void clamp_domain(double lo, double hi) {
        double vlo = eval(lo), vhi = eval(hi);
        std::vector<double> nx{lo}, nv{vlo};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] > lo && xs[i] < hi) {
                nx.push_back(xs[i]);
                nv.push_back(vs[i]);
            }
        }
        nx.push_back(hi);
        nv.push_back(vhi);
        xs = std::move(nx);
        vs = std::move(nv);
    }
};

// union support of mu - nu: sorted positions with net coefficients, exact
// position collisions merged
void union_support(const SortedAtoms& a, const SortedAtoms& b, std::vector<double>& x,
                   std::vector<double>& c) {
    std::size_t i = 0, j = 0;
    x.clear();
    c.clear();
    auto push = [&](double pos, double coef) {
        if (!x.empty() && pos == x.back()) {
            c.back() += coef;
        } else {
            x.push_back(pos);
            c.push_back(coef);
        }
    };
    while (i < a.x.size() || j < b.x.size()) {
        bool takea = j >= b.x.size() || (i < a.x.size() && a.x[i] <= b.x[j]);
        if (takea) {
            push(a.x[i], a.w[i]);
            ++i;
        } else {
            push(b.x[j], -b.w[j]);
            ++j;
        }
    }
}

}  // namespace

namespace detail {

double chain_lp_max(const std::vector<double>& x, const std::vector<double>& c, double box,
                    double slope, std::vector<double>* witness) {
    const std::size_t n = x.size();
    if (n == 0) return 0.0;
    if (!std::isfinite(box)) {
        // |f| unbounded: only valid when total coefficient cancels (equal
        // masses); pin f_1 = 0, the optimum is invariant under constant shift.
        box = 0.0;
        for (std::size_t i = 1; i < n; ++i) box += slope * (x[i] - x[i - 1]);
        box = std::max(box, 1.0);
    }
    ConcavePwl f;
    f.xs = {-box, box};
    f.vs = {-c[0] * box, c[0] * box};
    std::vector<std::pair<double, double>> args(n);
    {
        double lo, hi, best;
        f.argmax(lo, hi, best);
        args[0] = {lo, hi};
    }
    for (std::size_t i = 1; i < n; ++i) {
        double d = slope * (x[i] - x[i - 1]);
        f.window_max(d);
        f.clamp_domain(-box, box);
        f.add_linear(c[i]);
        double lo, hi, best;
        f.argmax(lo, hi, best);
        args[i] = {lo, hi};
    }
    double lo, hi, best;
    f.argmax(lo, hi, best);
    if (witness) {
        witness->assign(n, 0.0);
        double fn = 0.5 * (args[n - 1].first + args[n - 1].second);
        (*witness)[n - 1] = fn;
        for (std::size_t i = n - 1; i-- > 0;) {
            double d = slope * (x[i + 1] - x[i]);
            double next = (*witness)[i + 1];
            double v = std::clamp(next, args[i].first, args[i].second);
            (*witness)[i] = std::clamp(v, next - d, next + d);
        }
    }
    return best;
}

}  // namespace detail

double wasserstein_p_1d(const AtomicMeasure& mu, const AtomicMeasure& nu, int p) {
    if (p < 1) throw std::invalid_argument("wasserstein_p_1d: p must be >= 1");
    require_probability(mu, "wasserstein_p_1d");
    require_probability(nu, "wasserstein_p_1d");
    SortedAtoms a = sorted_1d(mu, "wasserstein_p_1d");
    SortedAtoms b = sorted_1d(nu, "wasserstein_p_1d");

    // walk the merged quantile functions: between consecutive cumulative-mass
    // levels both inverse CDFs are constant
    std::vector<double> ca(a.w.size()), cb(b.w.size());
    std::partial_sum(a.w.begin(), a.w.end(), ca.begin());
    std::partial_sum(b.w.begin(), b.w.end(), cb.begin());
    double acc = 0.0;
    double u = 0.0;
    std::size_t i = 0, j = 0;
    while (i < ca.size() && j < cb.size()) {
        double level = std::min(ca[i], cb[j]);
        if (level > u) {
            acc += (level - u) * std::pow(std::abs(a.x[i] - b.x[j]), p);
            u = level;
        }
        if (ca[i] <= level + 1e-15) ++i;
        if (j < cb.size() && cb[j] <= level + 1e-15) ++j;
    }
    return std::pow(acc, 1.0 / p);
}

DistanceReport generalized_w1(const AtomicMeasure& mu, const AtomicMeasure& nu, double box,
                              double slope) {
    SortedAtoms a = sorted_1d(mu, "generalized_w1");
    SortedAtoms b = sorted_1d(nu, "generalized_w1");
    std::vector<double> x, c;
    union_support(a, b, x, c);
    DistanceReport rep;
    rep.method = DistanceMethod::dual_lp;
    if (x.empty()) {
        rep.value = 0.0;
        return rep;
    }
    std::vector<double> f;
    rep.value = detail::chain_lp_max(x, c, box, slope, &f);
    std::vector<std::pair<double, double>> cert(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) cert[i] = {x[i], f[i]};
    rep.certificate = std::move(cert);
    // the witness must reproduce the optimum; guards the DP bookkeeping
    double check = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) check += c[i] * f[i];
    if (std::abs(check - rep.value) > 1e-9 * std::max(1.0, std::abs(rep.value)))
        throw std::runtime_error("generalized_w1: dual witness mismatch");
    return rep;
}

DistanceReport bounded_lipschitz(const AtomicMeasure& mu, const AtomicMeasure& nu) {
    return generalized_w1(mu, nu, 1.0, 1.0);
}

double distance_between_grid(const GridMeasure& mu, const AtomicMeasure& nu, MetricKind which,
                             int p) {
    AtomicMeasure a = atomic_from_grid(mu);
    switch (which) {
        case MetricKind::W1: return wasserstein_p_1d(a, nu, 1);
        case MetricKind::Wp: return wasserstein_p_1d(a, nu, p);
        case MetricKind::BL: return bounded_lipschitz(a, nu).value;
    }
    throw std::logic_error("distance_between_grid: bad metric kind");
}

double distance_between_grid(const GridMeasure& mu, const GridMeasure& nu, MetricKind which,
                             int p) {
    return distance_between_grid(mu, atomic_from_grid(nu), which, p);
}

MetricCheckReport check_metric_inequalities(int pairs, double radius, int max_p,
                                            std::uint64_t seed) {
    MetricCheckReport rep;
    rep.pairs = pairs;
    double worst = -std::numeric_limits<double>::infinity();
    for (int t = 0; t < pairs; ++t) {
        std::uint64_t pair_seed = seed + static_cast<std::uint64_t>(t);
        std::mt19937_64 rng(pair_seed);
        std::uniform_int_distribution<int> nd(1, 8);
        std::uniform_real_distribution<double> xd(-radius, radius);
        std::uniform_real_distribution<double> wd(0.05, 1.0);
        auto gen = [&]() {
            AtomicMeasure m;
            int n = nd(rng);
            double tot = 0.0;
            for (int i = 0; i < n; ++i) {
                double w = wd(rng);
                m.append1d(xd(rng), w);
                tot += w;
            }
            for (double& w : m.weights) w /= tot;
            return m;
        };
        AtomicMeasure mu = gen(), nu = gen();
        double rho = bounded_lipschitz(mu, nu).value;
        std::vector<double> wp(max_p + 1, 0.0);
        for (int p = 1; p <= max_p; ++p) wp[p] = wasserstein_p_1d(mu, nu, p);
        double cr = std::max(1.0, radius);

        double viol = -std::numeric_limits<double>::infinity();
        auto check_le = [&](double lhs, double rhs) {
            viol = std::max(viol, lhs - rhs);
        };
        check_le(rho, wp[1]);
        check_le(wp[1], cr * rho);
        for (int p = 1; p < max_p; ++p) check_le(wp[p], wp[p + 1]);
        for (int p = 2; p <= max_p; ++p)
            check_le(wp[p], std::pow(2.0 * radius, double(p - 1) / p) * std::pow(wp[1], 1.0 / p));
        if (viol > worst) {
            worst = viol;
            rep.worst_pair_seed = pair_seed;
        }
    }
    rep.max_violation = std::max(0.0, worst);
    rep.max_slack = worst;
    rep.pass = worst <= 1e-10;
    return rep;
}

}  // namespace mfk
