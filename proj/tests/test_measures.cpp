#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "mfk/measures.hpp"

using namespace mfk;

namespace {

ParticleState state1d(std::vector<double> x, std::vector<double> m, double mass) {
    ParticleState s;
    s.dim = 1;
    s.positions = std::move(x);
    s.weights = std::move(m);
    s.total_mass = mass;
    return s;
}

}  // namespace

TEST_CASE("empirical measure normalizes by total mass") {
    auto s = state1d({0.3}, {2.0}, 2.0);
    AtomicMeasure m = empirical_measure(s);
    REQUIRE(m.size() == 1);
    CHECK(m.x(0) == doctest::Approx(0.3));
    CHECK(m.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("empirical measure of the two-Dirac state") {
    auto s = state1d({1.0, -1.0}, {1.0, 1.0}, 2.0);
    AtomicMeasure m = empirical_measure(s);
    REQUIRE(m.size() == 2);
    // canonical order sorts by position
    CHECK(m.x(0) == doctest::Approx(-1.0));
    CHECK(m.weights[0] == doctest::Approx(0.5));
    CHECK(m.weights[1] == doctest::Approx(0.5));
    CHECK(m.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("empirical measure merges co-located particles") {
    auto s = state1d({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}, 6.0);
    AtomicMeasure m = empirical_measure(s);
    REQUIRE(m.size() == 1);
    CHECK(m.x(0) == doctest::Approx(0.0));
    CHECK(m.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("empirical measure rejects bad states") {
    auto s = state1d({0.0}, {1.0}, -1.0);
    CHECK_THROWS(empirical_measure(s));
    auto nanstate = state1d({std::nan("")}, {1.0}, 1.0);
    CHECK_THROWS(empirical_measure(nanstate));
}

TEST_CASE("counting measure bins and conserves mass") {
    SUBCASE("41 bins, generic state") {
        auto s = state1d({0.1, 0.4, 0.97, 0.5}, {1.0, 2.0, 0.5, 0.5}, 4.0);
        GridMeasure g = counting_measure(s, 41);
        REQUIRE(g.cells() == 41);
        CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g.probability);
    }
    SUBCASE("single bin holds everything") {
        auto s = state1d({0.2, 0.8}, {1.0, 3.0}, 4.0);
        GridMeasure g = counting_measure(s, 1);
        CHECK(g.mass[0] == doctest::Approx(1.0));
    }
    SUBCASE("symmetric two-bin split") {
        auto s = state1d({0.1, 0.9}, {1.0, 1.0}, 2.0);
        GridMeasure g = counting_measure(s, 2);
        CHECK(g.mass[0] == doctest::Approx(0.5));
        CHECK(g.mass[1] == doctest::Approx(0.5));
    }
    SUBCASE("right endpoint lands in the last bin") {
        auto s = state1d({1.0}, {1.0}, 1.0);
        GridMeasure g = counting_measure(s, 10);
        CHECK(g.mass[9] == doctest::Approx(1.0));
    }
    SUBCASE("out-of-domain particle names the index") {
        auto s = state1d({0.5, 1.25}, {1.0, 1.0}, 2.0);
        try {
            counting_measure(s, 4);
            FAIL("expected a throw");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("particle 1") != std::string::npos);
        }
    }
}

TEST_CASE("grid_from_density basics") {
    SUBCASE("flat density splits evenly") {
        GridMeasure g = grid_from_density([](double) { return 1.0; }, 1.0, 0.0, 1.0, 4);
        for (int j = 0; j < 4; ++j) CHECK(g.mass[j] == doctest::Approx(0.25).epsilon(1e-13));
    }
    SUBCASE("two-bump density: cell near 0.25 beats cell near 0.90") {
        auto f = [](double x) {
            return 3.5 / std::sqrt(0.4 * M_PI) * std::exp(-15.0 * (x - 0.25) * (x - 0.25)) +
                   1.0 / std::sqrt(0.4 * M_PI) * std::exp(-15.0 * (x - 0.90) * (x - 0.90));
        };
        GridMeasure g = grid_from_density(f, 1.0, 0.0, 1.0, 400);
        CHECK(g.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
        int j25 = static_cast<int>(0.25 * 400), j90 = static_cast<int>(0.90 * 400);
        CHECK(g.mass[j25] > g.mass[j90]);
    }
    SUBCASE("concentrated density fills one cell") {
        auto f = [](double x) { return (x > 0.4 && x < 0.45) ? 1.0 : 0.0; };
        GridMeasure g = grid_from_density(f, 1.0, 0.0, 1.0, 20);
        CHECK(g.mass[8] == doctest::Approx(1.0));
    }
    SUBCASE("negative density is an error") {
        CHECK_THROWS(grid_from_density([](double x) { return x - 0.5; }, 1.0, 0.0, 1.0, 4));
    }
}

TEST_CASE("atomic_from_grid") {
    SUBCASE("two cells become midpoint atoms") {
        GridMeasure g;
        g.left = 0.0;
        g.right = 1.0;
        g.mass = {0.5, 0.5};
        AtomicMeasure m = atomic_from_grid(g);
        REQUIRE(m.size() == 2);
        CHECK(m.x(0) == doctest::Approx(0.25));
        CHECK(m.x(1) == doctest::Approx(0.75));
        CHECK(m.weights[0] == doctest::Approx(0.5));
    }
    SUBCASE("empty grid gives empty measure") {
        GridMeasure g;
        g.mass = {0.0, 0.0, 0.0};
        CHECK(atomic_from_grid(g).size() == 0);
    }
    SUBCASE("counting -> atomic round trip conserves mass") {
        auto s = state1d({0.11, 0.52, 0.52, 0.93}, {1.0, 0.25, 0.5, 2.0}, 3.75);
        AtomicMeasure m = atomic_from_grid(counting_measure(s, 17));
        CHECK(m.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("canonicalization merges, drops zeros, and is idempotent") {
    AtomicMeasure m;
    m.append1d(0.5, 1.0);
    m.append1d(0.5, -1.0);          // cancels, dropped
    m.append1d(0.2, 0.25);
    m.append1d(0.2 + 1e-12, 0.25);  // within merge tolerance
    m.append1d(0.9, 0.5);
    AtomicMeasure c = m.canonical();
    REQUIRE(c.size() == 2);
    CHECK(c.weights[0] == doctest::Approx(0.5));
    CHECK(c.x(0) == doctest::Approx(0.2));
    CHECK(measure_equal(c, c.canonical(), 1e-15));

    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> xd(-1.0, 1.0), wd(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        AtomicMeasure r;
        for (int i = 0; i < 20; ++i) {
            double x = xd(rng);
            r.append1d(x, wd(rng));
            if (i % 3 == 0) r.append1d(x, wd(rng));  // exact duplicates
        }
        AtomicMeasure c1 = r.canonical();
        AtomicMeasure c2 = c1.canonical();
        CHECK(measure_equal(c1, c2, 1e-15));
        CHECK(c1.total_mass() == doctest::Approx(r.total_mass()).epsilon(1e-12));
    }
}

TEST_CASE("total variation and probability flags") {
    AtomicMeasure m;
    m.append1d(0.0, 0.5);
    m.append1d(1.0, -0.25);
    CHECK(m.total_mass() == doctest::Approx(0.25));
    CHECK(m.total_variation() == doctest::Approx(0.75));
    CHECK(!m.is_probability());

    GridMeasure g;
    g.mass = {0.25, 0.75};
    g.probability = true;
    CHECK_NOTHROW(g.validate_probability(1e-12, "test"));
    g.mass = {0.5, 0.6};
    CHECK_THROWS(g.validate_probability(1e-12, "test"));
    g.mass = {1.1, -0.1};
    CHECK_THROWS(g.validate_probability(1e-12, "test"));
}

TEST_CASE("grid support hull") {
    GridMeasure g;
    g.left = 0.0;
    g.right = 1.0;
    g.mass = {0.0, 0.5, 0.5, 0.0};
    double lo = 0, hi = 0;
    REQUIRE(g.support(lo, hi));
    CHECK(lo == doctest::Approx(0.25));
    CHECK(hi == doctest::Approx(0.75));
    g.mass = {0.0, 0.0, 0.0, 0.0};
    CHECK(!g.support(lo, hi));
}
