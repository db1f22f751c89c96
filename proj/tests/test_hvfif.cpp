#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hvfif/eval.hpp"
#include "hvfif/hvfif.hpp"
#include "hvfif/rng.hpp"

using namespace hvfif;

namespace {

ExtendedDataSet worked_data() {
    // first abscissa read as 0 (the source table's leading 1 is inconsistent
    // with the strictly increasing 0.25..1 tail)
    return {{0.0, 0.25, 0.5, 0.75, 1.0}, {20.0, 30.0, 10.0, 50.0, 40.0}, {2.0, 3.0, 1.0, 5.0, 4.0}};
}

std::vector<FactorQuad> const_quads(std::vector<double> s, std::vector<double> st,
                                    std::vector<double> sp, std::vector<double> stp) {
    std::vector<FactorQuad> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        out.push_back({FactorExpr::constant(s[i]), FactorExpr::constant(sp[i]),
                       FactorExpr::constant(st[i]), FactorExpr::constant(stp[i])});
    }
    return out;
}

std::vector<FactorQuad> uniform_const_quads(int n, double c) {
    return const_quads(std::vector<double>(n, c), std::vector<double>(n, c),
                       std::vector<double>(n, c), std::vector<double>(n, c));
}

std::vector<FactorQuad> example_a_quads() {
    return const_quads({0.3, 0.85, 0.8, 0.5}, {0.0, 0.0, 0.0, 0.0}, {0.8, 0.6, 0.4, 0.5},
                       {0.19, 0.37, 0.48, 0.43});
}

} // namespace

TEST_CASE("build on the worked example yields S = 0.99") {
    const auto h = build_univariate(worked_data(), example_a_quads());
    CHECK(h.contraction.S == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(h.contraction.c_L == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(h.flags.contractive);
    CHECK(h.flags.factor_sups_ok);
    CHECK(h.flags.endpoint_residual <= 1e-9);
}

TEST_CASE("all-zero factors degenerate to the chord offsets") {
    const auto h = build_univariate(worked_data(), uniform_const_quads(4, 0.0));
    // q_i(x) = h_i(L_i(x)): spot check across intervals and points
    for (int i = 0; i < 4; ++i) {
        for (double x : {0.0, 0.3, 0.77, 1.0}) {
            const double u = h.map_apply(i, x);
            CHECK(h.q(i, x) == doctest::Approx(h.h(i, u)).epsilon(1e-14));
            CHECK(h.qt(i, x) == doctest::Approx(h.ht(i, u)).epsilon(1e-14));
        }
    }
}

TEST_CASE("S >= 1 is rejected with the offending interval") {
    auto quads = example_a_quads();
    quads[0].s_prime = FactorExpr::constant(0.9);
    quads[0].s_tilde_prime = FactorExpr::constant(0.2);
    CHECK_THROWS_WITH_AS(build_univariate(worked_data(), quads),
                         doctest::Contains("S >= 1 at interval 1"), Error);
}

TEST_CASE("factor sup >= 1 is rejected in strict mode, flagged otherwise") {
    auto quads = example_a_quads();
    quads[1].s = FactorExpr::parse("1.5*x");   // sup over [0.25, 0.5] = 0.75 < 1: fine
    CHECK_NOTHROW(build_univariate(worked_data(), quads));
    quads[1].s = FactorExpr::constant(1.0);
    CHECK_THROWS_WITH_AS(build_univariate(worked_data(), quads),
                         doctest::Contains("factor sup >= 1 at interval 2"), Error);

    BuildOptions opts;
    opts.strict = false;
    const auto h = build_univariate(worked_data(), quads, opts);
    CHECK_FALSE(h.flags.factor_sups_ok);
}

TEST_CASE("factor count mismatch is a build error") {
    auto quads = example_a_quads();
    quads.pop_back();
    CHECK_THROWS_WITH_AS(build_univariate(worked_data(), quads),
                         doctest::Contains("expected 4 factor quadruples, found 3"), Error);
}

TEST_CASE("non-increasing abscissae are rejected") {
    auto d = worked_data();
    d.x[2] = d.x[1];
    CHECK_THROWS_WITH_AS(build_univariate(d, example_a_quads()),
                         doctest::Contains("strictly increasing"), Error);
}

TEST_CASE("contraction report: theta_max arithmetic") {
    SUBCASE("zero factors, L_Q = 100 gives theta_max = 0.0075") {
        // chords composed with L_i have slope Delta y_i on uniform [0,1] with n=4
        ExtendedDataSet d{{0.0, 0.25, 0.5, 0.75, 1.0},
                          {0.0, 60.0, 60.0, 60.0, 60.0},
                          {0.0, 40.0, 40.0, 40.0, 40.0}};
        const auto h = build_univariate(d, uniform_const_quads(4, 0.0));
        CHECK(h.contraction.L_S == doctest::Approx(0.0));
        CHECK(h.contraction.L_Q == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(h.contraction.theta_max == doctest::Approx(0.0075).epsilon(1e-9));
        CHECK(h.contraction.c_at_half_theta < 1.0);
    }
    SUBCASE("flat data and zero factors hit the +inf sentinel") {
        ExtendedDataSet d{{0.0, 0.25, 0.5, 0.75, 1.0},
                          {5.0, 5.0, 5.0, 5.0, 5.0},
                          {1.0, 1.0, 1.0, 1.0, 1.0}};
        const auto h = build_univariate(d, uniform_const_quads(4, 0.0));
        CHECK(std::isinf(h.contraction.theta_max));
        CHECK(h.contraction.c_at_half_theta == doctest::Approx(0.25));
    }
    SUBCASE("theta_max positive whenever S < 1") {
        const auto h = build_univariate(worked_data(), example_a_quads());
        CHECK(h.contraction.theta_max > 0.0);
        CHECK(h.contraction.c_at_half_theta < 1.0);
    }
}

TEST_CASE("rhs_recursion endpoint and degenerate identities") {
    const auto h = build_univariate(worked_data(), example_a_quads());
    SUBCASE("left endpoint of I_1") {
        const auto [v1, v2] = h.rhs_recursion(0, h.node_x(0), h.node_f1(0), h.node_f2(0));
        CHECK(v1 == doctest::Approx(h.node_f1(0)).epsilon(1e-12));
        CHECK(v2 == doctest::Approx(h.node_f2(0)).epsilon(1e-12));
    }
    SUBCASE("all factors zero reduce to the chords") {
        const auto hz = build_univariate(worked_data(), uniform_const_quads(4, 0.0));
        for (int i = 0; i < 4; ++i) {
            const auto [v1, v2] = hz.rhs_recursion(i, 0.37, 123.0, -55.0);
            CHECK(v1 == doctest::Approx(hz.h(i, hz.map_apply(i, 0.37))).epsilon(1e-13));
            CHECK(v2 == doctest::Approx(hz.ht(i, hz.map_apply(i, 0.37))).epsilon(1e-13));
        }
    }
    SUBCASE("kernel agrees with the direct q-form expansion") {
        Rng rng(7u);
        for (int trial = 0; trial < 200; ++trial) {
            const int i = static_cast<int>(rng.next_u64() % 4);
            const double xi = rng.uniform(0.0, 1.0);
            const double a = rng.uniform(-60.0, 60.0);
            const double b = rng.uniform(-60.0, 60.0);
            const auto [v1, v2] = h.rhs_recursion(i, xi, a, b);
            const auto& f = h.factors[static_cast<std::size_t>(i)];
            const double u = h.map_apply(i, xi);
            const double w1 = f.s(u) * a + f.s_prime(u) * b + h.q(i, xi);
            const double w2 = f.s_tilde(u) * a + f.s_tilde_prime(u) * b + h.qt(i, xi);
            CHECK(v1 == doctest::Approx(w1).epsilon(1e-12));
            CHECK(v2 == doctest::Approx(w2).epsilon(1e-12));
        }
    }
    SUBCASE("out-of-range interval index") {
        CHECK_THROWS_WITH_AS(h.rhs_recursion(4, 0.5, 0.0, 0.0), doctest::Contains("out of range"),
                             Error);
    }
}

TEST_CASE("endpoint matching holds for reversed orientation too") {
    BuildOptions opts;
    opts.orientation = {Orientation::forward, Orientation::reversed, Orientation::forward,
                        Orientation::reversed};
    const auto h = build_univariate(worked_data(), example_a_quads(), opts);
    CHECK(h.flags.endpoint_residual <= 1e-9);
    // reversed map sends x_0 to the right end of I_2
    CHECK(h.map_apply(1, h.node_x(0)) == doctest::Approx(h.node_x(2)));
    const auto [v1, v2] = h.rhs_recursion(1, h.node_x(0), h.node_f1(0), h.node_f2(0));
    CHECK(v1 == doctest::Approx(h.node_f1(2)).epsilon(1e-12));
    CHECK(v2 == doctest::Approx(h.node_f2(2)).epsilon(1e-12));
}

TEST_CASE("discretized operator contracts by S in the pair l1 norm") {
    const auto h = build_univariate(worked_data(), example_a_quads());
    const double S = h.contraction.S;
    const int grid_n = 1025;
    std::vector<double> grid(grid_n);
    for (int k = 0; k < grid_n; ++k) grid[k] = static_cast<double>(k) / (grid_n - 1);

    auto interp = [&](const std::vector<double>& v, double x) {
        const double t = x * (grid_n - 1);
        const int k = std::min(static_cast<int>(t), grid_n - 2);
        const double w = t - k;
        return v[static_cast<std::size_t>(k)] * (1.0 - w) + v[static_cast<std::size_t>(k) + 1] * w;
    };
    auto apply_T = [&](const std::vector<double>& a1, const std::vector<double>& a2,
                       std::vector<double>& o1, std::vector<double>& o2) {
        for (int k = 0; k < grid_n; ++k) {
            const double x = grid[static_cast<std::size_t>(k)];
            const int i = h.interval_of(x);
            const double xi = std::clamp(h.map_inverse(i, x), 0.0, 1.0);
            const auto [v1, v2] = h.rhs_recursion(i, xi, interp(a1, xi), interp(a2, xi));
            o1[static_cast<std::size_t>(k)] = v1;
            o2[static_cast<std::size_t>(k)] = v2;
        }
    };

    Rng rng(314159u);
    for (int pair = 0; pair < 50; ++pair) {
        std::vector<double> h1(grid_n), h2(grid_n), g1(grid_n), g2(grid_n);
        for (int k = 0; k < grid_n; ++k) {
            h1[static_cast<std::size_t>(k)] = rng.uniform(0.0, 60.0);
            h2[static_cast<std::size_t>(k)] = rng.uniform(0.0, 6.0);
            g1[static_cast<std::size_t>(k)] = rng.uniform(0.0, 60.0);
            g2[static_cast<std::size_t>(k)] = rng.uniform(0.0, 6.0);
        }
        // both functions must interpolate the extended data
        for (int i = 0; i <= 4; ++i) {
            const int k = static_cast<int>(std::lround(h.node_x(i) * (grid_n - 1)));
            h1[static_cast<std::size_t>(k)] = h.node_f1(i);
            h2[static_cast<std::size_t>(k)] = h.node_f2(i);
            g1[static_cast<std::size_t>(k)] = h.node_f1(i);
            g2[static_cast<std::size_t>(k)] = h.node_f2(i);
        }
        std::vector<double> t1(grid_n), t2(grid_n), u1(grid_n), u2(grid_n);
        apply_T(h1, h2, t1, t2);
        apply_T(g1, g2, u1, u2);
        double lhs = 0.0, rhs = 0.0;
        for (int k = 0; k < grid_n; ++k) {
            lhs = std::max(lhs, std::fabs(t1[static_cast<std::size_t>(k)] - u1[static_cast<std::size_t>(k)]) +
                                    std::fabs(t2[static_cast<std::size_t>(k)] - u2[static_cast<std::size_t>(k)]));
            rhs = std::max(rhs, std::fabs(h1[static_cast<std::size_t>(k)] - g1[static_cast<std::size_t>(k)]) +
                                    std::fabs(h2[static_cast<std::size_t>(k)] - g2[static_cast<std::size_t>(k)]));
        }
        CHECK(lhs <= S * rhs + 1e-9);
    }
}

TEST_CASE("reported S never decreases when a factor sup grows") {
    Rng rng(99u);
    for (int trial = 0; trial < 20; ++trial) {
        const double base = rng.uniform(0.05, 0.4);
        const double bigger = base + rng.uniform(0.01, 0.5 - base);
        auto qa = uniform_const_quads(4, base);
        auto qb = uniform_const_quads(4, base);
        qb[trial % 4].s = FactorExpr::constant(bigger);
        BuildOptions opts;
        opts.strict = false;
        const auto ha = build_univariate(worked_data(), qa, opts);
        const auto hb = build_univariate(worked_data(), qb, opts);
        CHECK(hb.contraction.S >= ha.contraction.S - 1e-15);
    }
}
