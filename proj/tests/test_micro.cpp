#include <cmath>
#include <random>

#include "doctest.h"
#include "mfk/harness.hpp"
#include "mfk/micro.hpp"

using namespace mfk;

namespace {

ParticleState state1d(std::vector<double> x, std::vector<double> m) {
    ParticleState s;
    s.dim = 1;
    s.positions = std::move(x);
    s.weights = std::move(m);
    s.total_mass = 0.0;
    for (double w : s.weights) s.total_mass += w;
    return s;
}

ParticleState random_state(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> xd(0.0, 1.0), wd(0.2, 1.5);
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        x[i] = xd(rng);
        w[i] = wd(rng);
    }
    return state1d(std::move(x), std::move(w));
}

MicroConfig m1_config(double dt, double horizon) {
    MicroConfig c;
    c.kernel = kernel_sin2(0.2);
    c.source = source_m1(c.kernel, 100.0);
    c.dt = dt;
    c.horizon = horizon;
    return c;
}

// independent O(N^2) / O(N^{q+1}) re-evaluations with plain loops, kept apart
// from the implementation on purpose
std::vector<double> position_rhs_oracle(const ParticleState& s, const InteractionKernel& k) {
    std::vector<double> out(s.weights.size(), 0.0);
    for (int i = 0; i < s.count(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < s.count(); ++j) acc += s.weights[j] * k.eval1d(s.x(j) - s.x(i));
        out[i] = acc / s.total_mass;
    }
    return out;
}

}  // namespace

TEST_CASE("position rhs") {
    InteractionKernel k = kernel_sin2(0.2);
    SUBCASE("single particle does not move") {
        auto s = state1d({0.37}, {2.0});
        auto v = position_rhs(s, k);
        CHECK(v[0] == 0.0);
    }
    SUBCASE("two symmetric particles have opposite velocities") {
        auto s = state1d({-0.05, 0.05}, {1.0, 1.0});
        auto v = position_rhs(s, k);
        CHECK(v[0] == doctest::Approx(-v[1]).epsilon(1e-15));
        CHECK(v[1] < 0.0);  // attracted toward each other
    }
    SUBCASE("random states match the duplicate-loop oracle") {
        std::mt19937_64 rng(77);
        for (int t = 0; t < 10; ++t) {
            ParticleState s = random_state(rng, 3 + t);
            auto v = position_rhs(s, k);
            auto w = position_rhs_oracle(s, k);
            for (std::size_t i = 0; i < v.size(); ++i)
                CHECK(v[i] == doctest::Approx(w[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("naive weight rhs") {
    SUBCASE("single particle is stationary in weight") {
        auto s = state1d({0.4}, {3.0});
        auto r = weight_rhs_naive(s, source_linear_appendix_b());
        CHECK(r[0] == 0.0);
    }
    SUBCASE("two-Dirac linear-source rates by hand") {
        // dm_1 = m_1 (1/M) sum_j m_j (x_1 - x_j) = 1 * (1/2) * (0 + 2) = 1
        auto s = state1d({1.0, -1.0}, {1.0, 1.0});
        auto r = weight_rhs_naive(s, source_linear_appendix_b());
        CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(r[1] == doctest::Approx(-1.0).epsilon(1e-15));
    }
    SUBCASE("rates sum to zero for random positive states") {
        std::mt19937_64 rng(3);
        InteractionKernel k = kernel_sin2(0.2);
        SourceKernel s2 = source_m1(k, 100.0);
        for (int t = 0; t < 10; ++t) {
            ParticleState s = random_state(rng, 12);
            auto r = weight_rhs_naive(s, s2);
            double tot = 0.0, scale = 0.0;
            for (double v : r) {
                tot += v;
                scale += std::abs(v);
            }
            CHECK(std::abs(tot) <= 1e-13 * std::max(1.0, scale));
        }
    }
    SUBCASE("cost guard rejects huge naive sums") {
        std::mt19937_64 rng(4);
        ParticleState big = random_state(rng, 1001);  // 1001^3 > 1e9
        InteractionKernel k = kernel_sin2(0.2);
        CHECK_THROWS(weight_rhs_naive(big, source_m1(k, 1.0)));
    }
}

TEST_CASE("factored M1 rhs equals the naive triple loop") {
    std::mt19937_64 rng(8);
    InteractionKernel k = kernel_sin2(0.2);
    SourceKernel src = source_m1(k, 100.0);
    for (int n : {5, 17, 50}) {
        ParticleState s = random_state(rng, n);
        auto fac = weight_rhs_m1_factored(s, src);
        auto naive = weight_rhs_naive(s, src);
        for (int i = 0; i < n; ++i) {
            double scale = std::max(1e-30, std::abs(naive[i]));
            CHECK(std::abs(fac[i] - naive[i]) / scale <= 1e-12);
        }
    }
    SUBCASE("co-located particles have zero weight rates") {
        auto s = state1d({0.5, 0.5, 0.5}, {1.0, 2.0, 0.5});
        auto r = weight_rhs_m1_factored(s, src);
        for (double v : r) CHECK(v == 0.0);
    }
    SUBCASE("beta = 0 gives a zero vector") {
        SourceKernel z = source_m1(k, 0.0);
        ParticleState s = random_state(rng, 9);
        for (double v : weight_rhs_m1_factored(s, z)) CHECK(v == 0.0);
    }
    SUBCASE("non-M1 source is rejected") {
        ParticleState s = random_state(rng, 4);
        CHECK_THROWS(weight_rhs_m1_factored(s, source_linear_appendix_b()));
    }
}

TEST_CASE("integration basics") {
    SUBCASE("single particle is fully stationary") {
        MicroConfig c = m1_config(1e-2, 0.5);
        auto s = state1d({0.42}, {1.0});
        Trajectory t = integrate_micro(c, s);
        CHECK(t.back().x(0) == doctest::Approx(0.42));
        CHECK(t.back().weights[0] == doctest::Approx(1.0));
    }
    SUBCASE("mass conservation and growth bound on a short clustered run") {
        MicroConfig c = m1_config(1e-3, 1.0);
        auto parts = build_m1_preset(ExperimentConfig{});
        ParticleState init = initial_state_from_density(20, 20.0, parts.density);
        Trajectory t = integrate_micro(c, init, 10);
        double ball = 0.0;
        for (const auto& st : t.states)
            for (double x : st.positions) ball = std::max(ball, std::abs(x));
        double sbar = sample_source_bound(c.source, ball, 100000, 5);
        for (const auto& st : t.states) {
            CHECK(std::abs(st.weight_sum() - 20.0) <= 1e-8 * 20.0);
            for (int i = 0; i < st.count(); ++i) {
                CHECK(st.weights[i] > 0.0);
                double logratio = std::log(st.weights[i]) - std::log(init.weights[i]) -
                                  sbar * st.time;
                CHECK(logratio <= std::log1p(1e-6));
            }
        }
    }
    SUBCASE("rk4 self-convergence order at least 3.5") {
        auto parts = build_m1_preset(ExperimentConfig{});
        ParticleState init = initial_state_from_density(10, 10.0, parts.density);
        auto run_dt = [&](double dt) {
            MicroConfig c = m1_config(dt, 0.25);
            return integrate_micro(c, init, 1 << 20).back();  // final only
        };
        ParticleState a = run_dt(4e-3), b = run_dt(2e-3), c2 = run_dt(1e-3);
        double e1 = 0.0, e2 = 0.0;
        for (std::size_t i = 0; i < a.positions.size(); ++i) {
            e1 = std::max(e1, std::abs(a.positions[i] - b.positions[i]));
            e2 = std::max(e2, std::abs(b.positions[i] - c2.positions[i]));
        }
        double order = std::log2(e1 / e2);
        CHECK(order >= 3.5);
    }
    SUBCASE("euler matches one hand-computed forward step") {
        MicroConfig c = m1_config(0.1, 0.1);
        c.integrator = Integrator::euler;
        c.source = source_linear_appendix_b();
        auto s = state1d({1.0, -1.0}, {1.0, 1.0});
        Trajectory t = integrate_micro(c, s);
        // dx_i = 0 (particles beyond kernel support), dm = (1, -1)
        CHECK(t.back().x(0) == doctest::Approx(1.0));
        CHECK(t.back().weights[0] == doctest::Approx(1.1));
        CHECK(t.back().weights[1] == doctest::Approx(0.9));
    }
    SUBCASE("weight crossing zero raises an error naming the particle") {
        MicroConfig c = m1_config(2.0, 6.0);  // dt far too large
        c.source = source_linear_appendix_b();
        c.integrator = Integrator::euler;
        auto s = state1d({1.0, -1.0}, {1.0, 1.0});
        try {
            integrate_micro(c, s);
            FAIL("expected a throw");
        } catch (const std::runtime_error& e) {
            std::string msg = e.what();
            CHECK(msg.find("weight") != std::string::npos);
            CHECK(msg.find("t=") != std::string::npos);
        }
    }
}

TEST_CASE("translation equivariance for the translation-invariant kernel") {
    std::mt19937_64 rng(21);
    ParticleState s = random_state(rng, 8);
    MicroConfig c = m1_config(1e-2, 0.5);
    Trajectory base = integrate_micro(c, s);
    ParticleState shifted = s;
    for (double& x : shifted.positions) x += 3.25;
    Trajectory moved = integrate_micro(c, shifted);
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        CHECK(moved.back().positions[i] ==
              doctest::Approx(base.back().positions[i] + 3.25).epsilon(1e-10));
    for (std::size_t i = 0; i < s.weights.size(); ++i)
        CHECK(moved.back().weights[i] ==
              doctest::Approx(base.back().weights[i]).epsilon(1e-12));
}

TEST_CASE("indistinguishability") {
    MicroConfig c = m1_config(1e-2, 0.5);
    SUBCASE("merge/split of a co-located pair") {
        auto base = state1d({0.3, 0.3, 0.5, 0.7}, {1.0, 1.0, 0.8, 1.2});
        int group[] = {0, 1};
        double alt[] = {1.5, 0.5};
        IndistReport rep = indistinguishability_check(c, base, group, alt);
        CHECK(rep.pass);
        CHECK(rep.max_position_gap <= 1e-8);
    }
    SUBCASE("everything co-located behaves as one stationary agent") {
        auto base = state1d({0.4, 0.4, 0.4}, {1.0, 0.5, 1.5});
        int group[] = {0, 1, 2};
        double alt[] = {2.0, 0.5, 0.5};
        IndistReport rep = indistinguishability_check(c, base, group, alt);
        CHECK(rep.pass);
        Trajectory t = integrate_micro(c, base);
        for (int i = 0; i < 3; ++i) CHECK(t.back().x(i) == doctest::Approx(0.4));
    }
    SUBCASE("relabeling permutes the trajectory") {
        auto base = state1d({0.1, 0.35, 0.6, 0.85}, {0.5, 1.5, 1.0, 1.0});
        int perm[] = {2, 0, 3, 1};
        CHECK(permutation_check(c, base, perm));
    }
    SUBCASE("group sum mismatch is rejected") {
        auto base = state1d({0.3, 0.3}, {1.0, 1.0});
        int group[] = {0, 1};
        double alt[] = {1.5, 1.0};
        CHECK_THROWS(indistinguishability_check(c, base, group, alt));
    }
}

TEST_CASE("early stop freezes a settled configuration") {
    // two particles far outside the kernel support and beta=0: nothing moves,
    // stop after the first window
    MicroConfig c = m1_config(1e-2, 50.0);
    c.source = source_m1(c.kernel, 0.0);
    c.early_stop_speed = 1e-12;
    c.early_stop_window = 0.5;
    auto s = state1d({0.0, 10.0}, {1.0, 1.0});
    Trajectory t = integrate_micro(c, s);
    CHECK(t.back().time < 1.0);
}
