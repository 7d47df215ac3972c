#include "mfk/kernels.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mfk {

namespace {

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

constexpr double pi = 3.14159265358979323846;

}  // namespace

double InteractionKernel::phi0_norm() const {
    return norm(phi_at_zero);
}

double sample_source_lipschitz(const SourceKernel& s, double radius, int samples,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    const int n = (s.arity + 1) * s.dim;
    std::vector<double> a(n), b(n);
    double best = 0.0;
    for (int t = 0; t < samples; ++t) {
        for (int i = 0; i < n; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
        }
        // sum of per-slot euclidean distances, matching the hypothesis form
        double dist = 0.0;
        for (int slot = 0; slot <= s.arity; ++slot) {
            double d2 = 0.0;
            for (int k = 0; k < s.dim; ++k) {
                double d = a[slot * s.dim + k] - b[slot * s.dim + k];
                d2 += d * d;
            }
            dist += std::sqrt(d2);
        }
        if (dist < 1e-12) continue;
        best = std::max(best, std::abs(s.eval(a) - s.eval(b)) / dist);
    }
    return best;
}

void direction_smoother(std::span<const double> delta, std::span<double> out) {
    double r = norm(delta);
    if (r == 0.0) {
        for (double& o : out) o = 0.0;
        return;
    }
    double scale = std::atan(r) / r;
    for (std::size_t k = 0; k < delta.size(); ++k) out[k] = scale * delta[k];
}

InteractionKernel kernel_sin2(double radius, int dim) {
    if (!(radius > 0.0)) throw std::invalid_argument("kernel_sin2: radius must be > 0");
    InteractionKernel k;
    k.dim = dim;
    k.phi_at_zero.assign(dim, 0.0);
    k.sup_norm = 1.0;
    k.support_radius = radius;
    k.tag = KernelTag::sin2;
    k.eval = [radius](std::span<const double> delta, std::span<double> out) {
        double r = norm(delta);
        if (r == 0.0 || r > radius) {
            for (double& o : out) o = 0.0;
            return;
        }
        double s = std::sin(pi * r / radius);
        double scale = s * s / r;
        for (std::size_t i = 0; i < delta.size(); ++i) out[i] = scale * delta[i];
    };
    if (dim == 1) {
        // |d/dr sin^2(pi r/R)| = (pi/R)|sin(2 pi r/R)| peaks at pi/R
        k.lipschitz_constant = pi / radius;
    } else {
        k.lipschitz_constant = 1.05 * sample_lipschitz(k, 2.0 * radius, 20000, 0x5eedULL);
    }
    return k;
}

SourceKernel source_m1(const InteractionKernel& phi, double beta) {
    SourceKernel s;
    s.arity = 2;
    s.dim = phi.dim;
    s.skew_pair = {0, 1};
    auto phi_ptr = std::make_shared<const InteractionKernel>(phi);
    s.m1 = M1Params{beta, phi_ptr};
    const int d = phi.dim;
    s.eval = [phi_ptr, beta, d](std::span<const double> args) {
        // args = (x, y, z), each of length d
        std::vector<double> buf(4 * d);
        double* dzx = buf.data();
        double* dzy = buf.data() + d;
        double* pout = buf.data() + 2 * d;
        double* dxy = buf.data() + 3 * d;
        for (int k = 0; k < d; ++k) {
            dzx[k] = args[2 * d + k] - args[k];
            dzy[k] = args[2 * d + k] - args[d + k];
            dxy[k] = args[k] - args[d + k];
        }
        std::vector<double> pa(d), pb(d);
        phi_ptr->eval({dzx, static_cast<std::size_t>(d)}, pa);
        phi_ptr->eval({dzy, static_cast<std::size_t>(d)}, pb);
        direction_smoother({dxy, static_cast<std::size_t>(d)}, {pout, static_cast<std::size_t>(d)});
        double dot = 0.0;
        for (int k = 0; k < d; ++k) dot += 0.5 * (pa[k] + pb[k]) * pout[k];
        return beta * dot;
    };
    // metadata on B(0,2): sampled Lipschitz quotient with headroom
    s.lipschitz_constant = 1.05 * sample_source_lipschitz(s, 2.0, 20000, 0x11aaULL);
    s.bound_radius = std::numeric_limits<double>::infinity();
    if (std::isfinite(phi.sup_norm)) {
        // |S| <= |beta| sup|phi| arctan(|x-y|) <= |beta| sup|phi| pi/2 globally
        s.bound = std::abs(beta) * phi.sup_norm * (pi / 2.0);
    }
    return s;
}

SourceKernel source_linear_appendix_b() {
    SourceKernel s;
    s.arity = 1;
    s.dim = 1;
    s.skew_pair = {0, 1};
    s.eval = [](std::span<const double> args) { return args[0] - args[1]; };
    s.lipschitz_constant = 1.0;
    s.bound = std::numeric_limits<double>::infinity();
    s.bound_radius = std::numeric_limits<double>::infinity();
    return s;
}

SkewReport validate_skew(const SourceKernel& s, int samples, double ball_radius,
                         std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("validate_skew: samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-ball_radius, ball_radius);
    const int n = (s.arity + 1) * s.dim;
    std::vector<double> args(n), swapped(n);
    SkewReport rep;
    rep.samples = samples;
    auto [i, j] = s.skew_pair;
    for (int t = 0; t < samples; ++t) {
        for (double& a : args) a = u(rng);
        swapped = args;
        for (int k = 0; k < s.dim; ++k)
            std::swap(swapped[i * s.dim + k], swapped[j * s.dim + k]);
        double defect = std::abs(s.eval(args) + s.eval(swapped));
        rep.max_defect = std::max(rep.max_defect, defect);
    }
    rep.pass = rep.max_defect <= 1e-12;
    return rep;
}

double sample_source_bound(const SourceKernel& s, double radius, int samples,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    const int n = (s.arity + 1) * s.dim;
    std::vector<double> args(n);
    double best = 0.0;
    for (int t = 0; t < samples; ++t) {
        for (double& a : args) a = u(rng);
        best = std::max(best, std::abs(s.eval(args)));
    }
    return best;
}

double sample_lipschitz(const InteractionKernel& k, double radius, int samples,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    std::vector<double> a(k.dim), b(k.dim), fa(k.dim), fb(k.dim);
    double best = 0.0;
    for (int t = 0; t < samples; ++t) {
        for (int i = 0; i < k.dim; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
        }
        double dist = 0.0;
        for (int i = 0; i < k.dim; ++i) dist += (a[i] - b[i]) * (a[i] - b[i]);
        dist = std::sqrt(dist);
        if (dist < 1e-12) continue;
        k.eval(a, fa);
        k.eval(b, fb);
        double df = 0.0;
        for (int i = 0; i < k.dim; ++i) df += (fa[i] - fb[i]) * (fa[i] - fb[i]);
        best = std::max(best, std::sqrt(df) / dist);
    }
    return best;
}

}  // namespace mfk
