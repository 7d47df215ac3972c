#include <cmath>
#include <random>

#include "doctest.h"
#include "mfk/kernels.hpp"

using namespace mfk;

TEST_CASE("sin^2 interaction kernel") {
    InteractionKernel k = kernel_sin2(0.2);
    // midpoint of the support: sin^2(pi/2) = 1
    CHECK(k.eval1d(0.1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(k.eval1d(0.0) == 0.0);
    CHECK(k.eval1d(0.25) == 0.0);
    CHECK(k.eval1d(-0.25) == 0.0);
    CHECK(k.support_radius == doctest::Approx(0.2));
    CHECK(k.sup_norm == doctest::Approx(1.0));

    SUBCASE("odd") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (int i = 0; i < 1000; ++i) {
            double d = u(rng);
            CHECK(k.eval1d(-d) == doctest::Approx(-k.eval1d(d)).epsilon(1e-14));
        }
    }
    SUBCASE("sampled Lipschitz quotient stays below the reported constant") {
        double q = sample_lipschitz(k, 0.5, 20000, 7);
        CHECK(q <= k.lipschitz_constant * (1.0 + 1e-9));
        CHECK(q == doctest::Approx(k.lipschitz_constant).epsilon(0.05));
    }
}

TEST_CASE("direction smoother") {
    CHECK(direction_smoother1d(0.0) == 0.0);
    CHECK(direction_smoother1d(1.0) == doctest::Approx(std::atan(1.0)));
    CHECK(direction_smoother1d(-2.0) == doctest::Approx(-std::atan(2.0)));
}

TEST_CASE("M1 source kernel") {
    InteractionKernel phi = kernel_sin2(0.2);
    SourceKernel s = source_m1(phi, 100.0);
    REQUIRE(s.arity == 2);
    REQUIRE(s.m1.has_value());

    SUBCASE("diagonal vanishes") {
        double args[3] = {0.4, 0.4, 0.55};
        CHECK(s.eval({args, 3}) == 0.0);
    }
    SUBCASE("matches the explicit formula") {
        double x = 0.3, y = 0.42, z = 0.35;
        double args[3] = {x, y, z};
        double expect = 100.0 * 0.5 * (phi.eval1d(z - x) + phi.eval1d(z - y)) *
                        direction_smoother1d(x - y);
        CHECK(s.eval({args, 3}) == doctest::Approx(expect).epsilon(1e-15));
    }
    SUBCASE("skew-symmetric on random triples, exact") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            double x = u(rng), y = u(rng), z = u(rng);
            double a[3] = {x, y, z}, b[3] = {y, x, z};
            worst = std::max(worst, std::abs(s.eval({a, 3}) + s.eval({b, 3})));
        }
        CHECK(worst <= 1e-15);
    }
    SUBCASE("beta = 0 kills the kernel") {
        SourceKernel z = source_m1(phi, 0.0);
        double args[3] = {0.1, 0.7, 0.3};
        CHECK(z.eval({args, 3}) == 0.0);
    }
    SUBCASE("sampled Lipschitz quotient below reported constant on B(0,2)") {
        double q = sample_source_lipschitz(s, 2.0, 5000, 99);
        CHECK(std::isfinite(q));
        CHECK(q <= s.lipschitz_constant * (1.0 + 1e-9));
    }
}

TEST_CASE("linear two-body kernel") {
    SourceKernel s = source_linear_appendix_b();
    double a[2] = {1.0, -1.0};
    CHECK(s.eval({a, 2}) == doctest::Approx(2.0));
    double b[2] = {0.7, 0.7};
    CHECK(s.eval({b, 2}) == 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 200; ++i) {
        double x = u(rng), y = u(rng);
        double f[2] = {x, y}, g[2] = {y, x};
        CHECK(s.eval({f, 2}) == doctest::Approx(-s.eval({g, 2})).epsilon(1e-15));
    }
}

TEST_CASE("skew validator") {
    InteractionKernel phi = kernel_sin2(0.2);
    CHECK(validate_skew(source_m1(phi, 100.0), 1000, 1.0, 17).pass);
    CHECK(validate_skew(source_linear_appendix_b(), 1000, 3.0, 17).pass);

    SourceKernel broken = source_linear_appendix_b();
    broken.eval = [](std::span<const double> args) { return args[0] + args[1]; };
    SkewReport rep = validate_skew(broken, 1000, 1.0, 17);
    CHECK(!rep.pass);
    CHECK(rep.max_defect > 0.1);
}

TEST_CASE("sampled source bound") {
    // |x - y| on [-r, r]^2 approaches 2r
    double b = sample_source_bound(source_linear_appendix_b(), 1.5, 100000, 3);
    CHECK(b <= 3.0);
    CHECK(b > 2.9);
}
