#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hvfif/bivariate.hpp"

using namespace hvfif;

namespace {

GridDataSet sample_grid() {
    GridDataSet g;
    g.x = {0.0, 0.25, 0.5, 0.75, 1.0};
    g.y = {0.0, 0.25, 0.5, 0.75, 1.0};
    g.z = {{0, 12, 4, 20, 16},
           {12, 28, 8, 32, 24},
           {4, 8, 2, 16, 10},
           {20, 32, 16, 40, 30},
           {16, 24, 10, 30, 22}};
    g.t = g.z;
    for (auto& row : g.t)
        for (auto& v : row) v *= 0.8;
    return g;
}

std::vector<FactorQuad> const_cells(int count, double c) {
    std::vector<FactorQuad> out;
    for (int k = 0; k < count; ++k)
        out.push_back({FactorExpr::constant(c), FactorExpr::constant(c), FactorExpr::constant(c),
                       FactorExpr::constant(c)});
    return out;
}

const SurfacePoint* find_point(const SurfaceSamples& ss, double x, double y) {
    for (const auto& p : ss.points)
        if (std::fabs(p.x - x) <= 1e-12 && std::fabs(p.y - y) <= 1e-12) return &p;
    return nullptr;
}

} // namespace

TEST_CASE("build: contraction constant and validation") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    CHECK(h.S_bar == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(h.flags.contractive);
    CHECK(h.flags.sign_condition);
    CHECK(h.flags.corner_residual <= 1e-9);

    CHECK_THROWS_WITH_AS(build_bivariate(sample_grid(), const_cells(15, 0.2)),
                         doctest::Contains("expected 16 cell factor quadruples, found 15"), Error);
    CHECK_THROWS_WITH_AS(build_bivariate(sample_grid(), const_cells(16, 0.55)),
                         doctest::Contains("S_bar >= 1"), Error);

    auto g = sample_grid();
    g.x[2] = 0.45;
    CHECK_THROWS_WITH_AS(build_bivariate(g, const_cells(16, 0.2)),
                         doctest::Contains("non-uniform"), Error);
}

TEST_CASE("a negative factor pair only clears the sign flag") {
    auto cells = const_cells(16, 0.2);
    cells[5].s = FactorExpr::constant(0.5);
    cells[5].s_prime = FactorExpr::constant(-0.5);
    const auto h = build_bivariate(sample_grid(), cells);
    CHECK_FALSE(h.flags.sign_condition);
    CHECK(h.flags.contractive);
}

TEST_CASE("zero factors: the fixed point is the piecewise-bilinear interpolant") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.0));
    const auto ss = subdivide_surface(h, 1);
    CHECK(ss.points.size() == 289);   // (4*4 + 1)^2
    // a cell-center value equals the mean of the 4 cell corners
    const auto* center = find_point(ss, 0.125, 0.125);
    REQUIRE(center != nullptr);
    CHECK(center->f1 == doctest::Approx((0.0 + 12.0 + 12.0 + 28.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("grid nodes stay fixed at any depth") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    const auto ss = subdivide_surface(h, 2);
    const auto& g = h.data;
    for (int j = 0; j <= 4; ++j) {
        for (int i = 0; i <= 4; ++i) {
            const auto* p = find_point(ss, g.x[static_cast<std::size_t>(i)],
                                       g.y[static_cast<std::size_t>(j)]);
            REQUIRE(p != nullptr);
            CHECK(std::fabs(p->f1 - g.z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) <=
                  1e-9);
            CHECK(std::fabs(p->f2 - g.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) <=
                  1e-9);
        }
    }
}

TEST_CASE("nested refinement reproduces the coarse values exactly") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    const auto coarse = subdivide_surface(h, 1);
    const auto fine = subdivide_surface(h, 2);
    for (const auto& p : coarse.points) {
        const auto* q = find_point(fine, p.x, p.y);
        REQUIRE(q != nullptr);
        CHECK(std::fabs(q->f1 - p.f1) <= 1e-12);
        CHECK(std::fabs(q->f2 - p.f2) <= 1e-12);
    }
}

TEST_CASE("samples satisfy the bivariate recursion (self-consistency)") {
    // only the corner conditions are pinned by the construction, so interior
    // cell-edge points can receive different values from neighboring cells;
    // each stored sample must be reproduced by at least one generating cell
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    const auto prev = subdivide_surface(h, 1);
    const auto next = subdivide_surface(h, 2);
    for (std::size_t k = 0; k < next.points.size(); k += 11) {
        const auto& q = next.points[k];
        bool reproduced = false;
        for (int j = 0; j < 4 && !reproduced; ++j) {
            for (int i = 0; i < 4 && !reproduced; ++i) {
                const double xi = h.xmaps[static_cast<std::size_t>(i)].inverse(q.x);
                const double eta = h.ymaps[static_cast<std::size_t>(j)].inverse(q.y);
                if (xi < -1e-9 || xi > 1.0 + 1e-9 || eta < -1e-9 || eta > 1.0 + 1e-9) continue;
                const auto* p = find_point(prev, std::clamp(xi, 0.0, 1.0), std::clamp(eta, 0.0, 1.0));
                if (p == nullptr) continue;
                const auto [v1, v2] = h.rhs_recursion(i, j, p->x, p->y, p->f1, p->f2);
                if (std::fabs(q.f1 - v1) <= 1e-12 && std::fabs(q.f2 - v2) <= 1e-12)
                    reproduced = true;
            }
        }
        CHECK(reproduced);
    }
}

TEST_CASE("the point-count guard rejects oversized subdivisions") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    CHECK_THROWS_WITH_AS(subdivide_surface(h, 6), doctest::Contains("guard"), Error);
}

TEST_CASE("boundary slice interpolates the edge data") {
    const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
    const auto ss = subdivide_surface(h, 2);
    // restriction to y = y_0: every sample on the edge must interpolate the
    // edge nodes; check the nodes directly
    for (int i = 0; i <= 4; ++i) {
        const auto* p = find_point(ss, h.data.x[static_cast<std::size_t>(i)], 0.0);
        REQUIRE(p != nullptr);
        CHECK(std::fabs(p->f1 - h.data.z[0][static_cast<std::size_t>(i)]) <= 1e-9);
    }
}

TEST_CASE("surface dimension bound arithmetic") {
    SUBCASE("constant 0.2 factors collapse the bounds at 1 + log_4 6.4") {
        const auto h = build_bivariate(sample_grid(), const_cells(16, 0.2));
        const auto rep = dimension_bounds_surface(h);
        CHECK(rep.lambda_low == doctest::Approx(6.4).epsilon(1e-9));
        CHECK(rep.lambda_up == doctest::Approx(6.4).epsilon(1e-9));
        CHECK(rep.dim_case == DimensionCase::a);
        CHECK(rep.bound_low == doctest::Approx(1.0 + std::log(6.4) / std::log(4.0)).epsilon(1e-12));
        CHECK(rep.bound_low == doctest::Approx(2.3390).epsilon(1e-4));
        CHECK(rep.hypothesis.all());
    }
    SUBCASE("constant 0.05 factors fall in the degenerate case") {
        const auto h = build_bivariate(sample_grid(), const_cells(16, 0.05));
        const auto rep = dimension_bounds_surface(h);
        CHECK(rep.lambda_up == doctest::Approx(1.6).epsilon(1e-9));
        CHECK(rep.dim_case == DimensionCase::b);
        CHECK(rep.bound_low == doctest::Approx(2.0));
        CHECK(rep.bound_up == doctest::Approx(2.0));
    }
    SUBCASE("zero factors: lambda = 0 <= n, dimension 2") {
        const auto h = build_bivariate(sample_grid(), const_cells(16, 0.0));
        const auto rep = dimension_bounds_surface(h);
        CHECK(rep.dim_case == DimensionCase::b);
        CHECK(rep.bound_up == doctest::Approx(2.0));
    }
    SUBCASE("lambda monotone in the factor sups") {
        const auto ha = build_bivariate(sample_grid(), const_cells(16, 0.1));
        auto cells = const_cells(16, 0.1);
        cells[3].s_tilde = FactorExpr::constant(0.3);
        const auto hc = build_bivariate(sample_grid(), cells);
        const auto ra = dimension_bounds_surface(ha);
        const auto rc = dimension_bounds_surface(hc);
        CHECK(rc.lambda_up >= ra.lambda_up - 1e-12);
        CHECK(ra.lambda_low <= ra.lambda_up);
    }
}

TEST_CASE("surface estimator on synthetic and bilinear data") {
    SUBCASE("exact power law N = eps^-2.5") {
        std::vector<std::pair<double, double>> pts;
        for (int k = 2; k <= 5; ++k) {
            const double eps = std::pow(4.0, -k);
            pts.emplace_back(-std::log(eps), std::log(std::pow(eps, -2.5)));
        }
        CHECK(loglog_regression(pts).slope == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("bilinear surface has dimension 2") {
        const auto h = build_bivariate(sample_grid(), const_cells(16, 0.0));
        const auto ss = subdivide_surface(h, 3);
        const auto dim = estimate_dimension_surface(ss, h.data.domain_x(), h.data.domain_y(), 4,
                                                    {1, 2, 3});
        CHECK(dim.slope >= 1.85);
        CHECK(dim.slope <= 2.15);
    }
}

TEST_CASE("rectangular grids build but are excluded from the square-grid dimension bounds") {
    GridDataSet g;
    g.x = {0.0, 0.25, 0.5, 0.75, 1.0};          // 4 cells
    g.y = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};     // 3 cells
    g.z.assign(4, std::vector<double>(5, 0.0));
    g.t.assign(4, std::vector<double>(5, 0.0));
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 5; ++i) {
            g.z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = i * 2.0 + j * 3.0 + ((i * j) % 3);
            g.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                0.8 * g.z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        }
    const auto h = build_bivariate(g, const_cells(12, 0.2));
    CHECK(h.nx() == 4);
    CHECK(h.ny() == 3);
    CHECK(h.flags.corner_residual <= 1e-9);
    const auto ss = subdivide_surface(h, 1);
    CHECK(ss.points.size() == static_cast<std::size_t>((4 * 4 + 1) * (3 * 3 + 1)));
    const auto rep = dimension_bounds_surface(h);
    CHECK_FALSE(rep.hypothesis.square_grid);
    CHECK(rep.dim_case == DimensionCase::inconclusive);
}

TEST_CASE("bivariate expressions may use both variables") {
    std::vector<FactorQuad> cells;
    for (int k = 0; k < 16; ++k)
        cells.push_back({FactorExpr::parse("0.2*sin(x + y)"), FactorExpr::parse("0.2"),
                         FactorExpr::parse("0.1*cos(x)"), FactorExpr::parse("0.1")});
    const auto h = build_bivariate(sample_grid(), cells);
    CHECK(h.S_bar < 1.0);
    const auto ss = subdivide_surface(h, 1);
    CHECK(ss.points.size() == 289);
}
