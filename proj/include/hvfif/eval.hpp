#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/error.hpp"
#include "hvfif/hvfif.hpp"

namespace hvfif {

// Anything evaluable by the two samplers: the built Hvfif, or a remapped
// system derived from one for the stability experiments.
template <typename S>
concept CurveSystem = requires(const S& s, int i, double x) {
    { s.interval_count() } -> std::convertible_to<int>;
    { s.domain() } -> std::convertible_to<Interval>;
    { s.node_x(i) } -> std::convertible_to<double>;
    { s.node_f1(i) } -> std::convertible_to<double>;
    { s.node_f2(i) } -> std::convertible_to<double>;
    { s.map_apply(i, x) } -> std::convertible_to<double>;
    { s.map_inverse(i, x) } -> std::convertible_to<double>;
    { s.interval_of(x) } -> std::convertible_to<int>;
    { s.rhs_recursion(i, x, x, x) } -> std::convertible_to<std::pair<double, double>>;
};

enum class EvalMethod { subdivision, rb_iteration };

struct SamplePoint {
    double x;
    double f1;
    double f2;
};

struct SampleSet {
    std::vector<SamplePoint> points;   // sorted by x, covers [x_0, x_n]
    EvalMethod method = EvalMethod::subdivision;
    int depth_or_iters = 0;
    double residual = 0.0;             // rb only: sup change in the last sweep

    double f1_range() const {
        double lo = points.front().f1, hi = lo;
        for (const auto& p : points) { lo = std::min(lo, p.f1); hi = std::max(hi, p.f1); }
        return hi - lo;
    }
};

namespace detail {

inline constexpr double kDedupeTol = 1e-14;

inline void sort_dedupe(std::vector<SamplePoint>& pts) {
    std::sort(pts.begin(), pts.end(),
              [](const SamplePoint& a, const SamplePoint& b) { return a.x < b.x; });
    std::vector<SamplePoint> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        if (!out.empty() && std::fabs(p.x - out.back().x) < kDedupeTol) continue;
        out.push_back(p);
    }
    pts = std::move(out);
}

} // namespace detail

// Exact attractor sampling: the node set is on the graph, and every image
// under the IFS maps stays on it, so depth m produces exact values on an
// ever finer mesh (n^{m+1} + 1 points for uniform nodes).
template <CurveSystem S>
SampleSet subdivide(const S& sys, int depth) {
    const int n = sys.interval_count();
    if (depth < 0) throw Error("subdivision depth must be >= 0");
    if (static_cast<double>(depth) * std::log2(static_cast<double>(n)) > 24.0)
        throw Error("point-count guard exceeded: depth * log2(n) must be <= 24");

    std::vector<SamplePoint> pts;
    for (int i = 0; i <= n; ++i) pts.push_back({sys.node_x(i), sys.node_f1(i), sys.node_f2(i)});

    for (int level = 0; level < depth; ++level) {
        std::vector<SamplePoint> next;
        next.reserve(pts.size() * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            for (const auto& p : pts) {
                const auto [v1, v2] = sys.rhs_recursion(i, p.x, p.f1, p.f2);
                next.push_back({sys.map_apply(i, p.x), v1, v2});
            }
        }
        detail::sort_dedupe(next);
        pts = std::move(next);
    }

    SampleSet out;
    out.points = std::move(pts);
    out.method = EvalMethod::subdivision;
    out.depth_or_iters = depth;
    return out;
}

// Grid for the operator iteration: uniform points plus every node.
template <CurveSystem S>
std::vector<double> make_rb_grid(const S& sys, int grid_size) {
    const int n = sys.interval_count();
    if (grid_size < 2 * n + 1)
        throw Error("rb grid_size must be >= 2n+1 = " + std::to_string(2 * n + 1));
    const Interval I = sys.domain();
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(grid_size) + static_cast<std::size_t>(n) + 1);
    for (int i = 0; i < grid_size; ++i)
        grid.push_back(I.lo + I.width() * i / (grid_size - 1));
    for (int i = 0; i <= n; ++i) grid.push_back(sys.node_x(i));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::fabs(a - b) < detail::kDedupeTol; }),
               grid.end());
    grid.front() = I.lo;
    grid.back() = I.hi;
    return grid;
}

// Read-Bajraktarevic fixed point iteration on a discrete grid. Each sweep
// evaluates (Th)(x) = F_i(L_i^{-1}(x), h(L_i^{-1}(x))) with h read by linear
// interpolation between grid neighbors. When the grid is closed under the
// pullbacks (e.g. 4^k + 1 uniform points over 4 uniform nodes) the sweep is
// interpolation-free and convergence is exact after one pass per level.
template <CurveSystem S>
SampleSet rb_iterate_on_grid(const S& sys, const std::vector<double>& grid, int max_iters,
                             double tol) {
    const int n = sys.interval_count();
    const std::size_t m = grid.size();

    std::vector<double> f1(m), f2(m), g1(m), g2(m);
    // h^0: piecewise-linear interpolant of the extended data
    for (std::size_t k = 0; k < m; ++k) {
        const double x = grid[k];
        const int i = sys.interval_of(x);
        const double xl = sys.node_x(i), xr = sys.node_x(i + 1);
        const double t = (x - xl) / (xr - xl);
        f1[k] = sys.node_f1(i) * (1.0 - t) + sys.node_f1(i + 1) * t;
        f2[k] = sys.node_f2(i) * (1.0 - t) + sys.node_f2(i + 1) * t;
    }

    auto interp = [&](double x, double& v1, double& v2) {
        auto it = std::lower_bound(grid.begin(), grid.end(), x);
        if (it == grid.begin()) { v1 = f1.front(); v2 = f2.front(); return; }
        if (it == grid.end()) { v1 = f1.back(); v2 = f2.back(); return; }
        const std::size_t k = static_cast<std::size_t>(it - grid.begin());
        const double xr = grid[k], xl = grid[k - 1];
        const double t = (x - xl) / (xr - xl);
        v1 = f1[k - 1] * (1.0 - t) + f1[k] * t;
        v2 = f2[k - 1] * (1.0 - t) + f2[k] * t;
    };

    const Interval I = sys.domain();
    double residual = std::numeric_limits<double>::infinity();
    int iters = 0;
    while (iters < max_iters) {
        ++iters;
        residual = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double x = grid[k];
            const int i = sys.interval_of(x);
            double xi = sys.map_inverse(i, x);
            xi = std::clamp(xi, I.lo, I.hi);
            double h1, h2;
            interp(xi, h1, h2);
            const auto [v1, v2] = sys.rhs_recursion(i, xi, h1, h2);
            g1[k] = v1;
            g2[k] = v2;
            residual = std::max(residual, std::max(std::fabs(v1 - f1[k]), std::fabs(v2 - f2[k])));
        }
        f1.swap(g1);
        f2.swap(g2);
        if (residual <= tol) break;
        (void)n;
    }

    SampleSet out;
    out.points.reserve(m);
    for (std::size_t k = 0; k < m; ++k) out.points.push_back({grid[k], f1[k], f2[k]});
    out.method = EvalMethod::rb_iteration;
    out.depth_or_iters = iters;
    out.residual = residual;   // non-convergence is reported, not fatal
    return out;
}

template <CurveSystem S>
SampleSet rb_iterate(const S& sys, int grid_size, int max_iters, double tol) {
    return rb_iterate_on_grid(sys, make_rb_grid(sys, grid_size), max_iters, tol);
}

// Post-hoc check that the attractor stayed inside the kappa envelope. If a
// sample escaped, the envelope is rebuilt once from the observed sample box
// (inflated 10%) and the contraction constants are refreshed against it.
inline void verify_envelope(Hvfif& h, const SampleSet& samples) {
    auto inside = [&](const ContractionReport& r) {
        for (const auto& p : samples.points) {
            if (!r.envelope_y.contains(p.f1) || !r.envelope_z.contains(p.f2)) return false;
        }
        return true;
    };
    if (inside(h.contraction)) {
        h.flags.envelope_ok = true;
        return;
    }
    double ylo = samples.points.front().f1, yhi = ylo;
    double zlo = samples.points.front().f2, zhi = zlo;
    for (const auto& p : samples.points) {
        ylo = std::min(ylo, p.f1); yhi = std::max(yhi, p.f1);
        zlo = std::min(zlo, p.f2); zhi = std::max(zhi, p.f2);
    }
    h.contraction = contraction_report_with_envelope(
        h.data, h.maps, h.factors, h.q_exprs, h.qt_exprs,
        inflate(Interval{ylo, yhi}, 0.10), inflate(Interval{zlo, zhi}, 0.10));
    h.flags.envelope_ok = inside(h.contraction);
}

struct PointValue {
    double f1;
    double f2;
    double err_bound;
};

// Pointwise query: peel `depth` address digits of x, seed with the baseline
// line values at the pullback point, then replay the recursion forward.
template <typename S>
PointValue evaluate_at(const S& sys, double x, int depth) {
    const Interval I = sys.domain();
    if (!(x >= I.lo && x <= I.hi)) throw Error("x outside the interpolation domain");
    std::vector<int> address;
    std::vector<double> preimages;
    double cur = x;
    for (int d = 0; d < depth; ++d) {
        const int i = sys.interval_of(cur);
        cur = std::clamp(sys.map_inverse(i, cur), I.lo, I.hi);
        address.push_back(i);
        preimages.push_back(cur);
    }
    auto [v1, v2] = sys.baseline(cur);
    for (int d = depth - 1; d >= 0; --d) {
        const auto [w1, w2] =
            sys.rhs_recursion(address[static_cast<std::size_t>(d)],
                              preimages[static_cast<std::size_t>(d)], v1, v2);
        v1 = w1;
        v2 = w2;
    }
    const double sbar = sys.contraction_S();
    const double kprime = sys.data_diameter_l1();
    return {v1, v2, std::pow(sbar, depth) * kprime};
}

} // namespace hvfif
