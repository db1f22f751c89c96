#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/analysis.hpp"
#include "hvfif/data.hpp"
#include "hvfif/error.hpp"
#include "hvfif/expr.hpp"
#include "hvfif/interval.hpp"

namespace hvfif {

// Uniform rectangular grid (x_i, y_j) with surface values z_ij and hidden
// values t_ij, both stored row-major as z[j][i].
struct GridDataSet {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::vector<double>> z;
    std::vector<std::vector<double>> t;

    int nx() const { return static_cast<int>(x.size()) - 1; }
    int ny() const { return static_cast<int>(y.size()) - 1; }
    bool square() const { return nx() == ny(); }
    Interval domain_x() const { return Interval{x.front(), x.back()}; }
    Interval domain_y() const { return Interval{y.front(), y.back()}; }

    void validate() const {
        if (x.size() < 3 || y.size() < 3) throw Error("grid needs at least 3 nodes per axis");
        auto check_axis = [](const std::vector<double>& v, const char* name) {
            const double step = (v.back() - v.front()) / static_cast<double>(v.size() - 1);
            for (std::size_t i = 1; i < v.size(); ++i) {
                if (!(v[i - 1] < v[i]))
                    throw Error(std::string(name) + " nodes must be strictly increasing");
                if (std::fabs((v[i] - v[i - 1]) - step) > 1e-9 * std::fabs(step))
                    throw Error(std::string("non-uniform grid: ") + name + " spacing varies");
            }
        };
        check_axis(x, "x");
        check_axis(y, "y");
        if (z.size() != y.size() || t.size() != y.size())
            throw Error("z and t must have one row per y node");
        for (const auto& row : z)
            if (row.size() != x.size()) throw Error("z rows must have one entry per x node");
        for (const auto& row : t)
            if (row.size() != x.size()) throw Error("t rows must have one entry per x node");
    }

    Interval z_range() const {
        double lo = z[0][0], hi = lo;
        for (const auto& row : z)
            for (double v : row) { lo = std::min(lo, v); hi = std::max(hi, v); }
        return Interval{lo, hi};
    }
    Interval t_range() const {
        double lo = t[0][0], hi = lo;
        for (const auto& row : t)
            for (double v : row) { lo = std::min(lo, v); hi = std::max(hi, v); }
        return Interval{lo, hi};
    }
};

struct SurfacePoint {
    double x;
    double y;
    double f1;
    double f2;
};

struct SurfaceSamples {
    std::vector<SurfacePoint> points;   // sorted by (y, x)
    EvalMethod method = EvalMethod::subdivision;
    int depth = 0;

    double f1_range() const {
        double lo = points.front().f1, hi = lo;
        for (const auto& p : points) { lo = std::min(lo, p.f1); hi = std::max(hi, p.f1); }
        return hi - lo;
    }
};

struct BivariateFlags {
    bool factor_sups_ok = true;
    bool contractive = true;        // S_bar < 1
    bool sign_condition = true;     // s_ij s'_ij >= 0 and s~_ij s~'_ij >= 0 on E_ij
    double corner_residual = 0.0;
};

// The constructed bivariate bundle: cell maps, per-cell factor quadruples,
// bilinear baselines, and the contraction constant S_bar.
class Hvbfif {
public:
    GridDataSet data;
    std::vector<IntervalMap> xmaps;     // i in [0, nx)
    std::vector<IntervalMap> ymaps;     // j in [0, ny)
    std::vector<FactorQuad> cells;      // index i + nx * j
    double S_bar = 0.0;
    BivariateFlags flags;

    int nx() const { return static_cast<int>(xmaps.size()); }
    int ny() const { return static_cast<int>(ymaps.size()); }
    const FactorQuad& cell(int i, int j) const {
        return cells[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx()) *
                                                       static_cast<std::size_t>(j)];
    }
    Rect cell_domain(int i, int j) const {
        return Rect{xmaps[static_cast<std::size_t>(i)].target(),
                    ymaps[static_cast<std::size_t>(j)].target()};
    }

    // bilinear interpolant of the four corner z-values of E
    double gbar(double x, double y) const {
        return bilinear(data.x.front(), data.x.back(), data.y.front(), data.y.back(),
                        data.z.front().front(), data.z.front().back(), data.z.back().front(),
                        data.z.back().back(), x, y);
    }
    double gbarp(double x, double y) const {
        return bilinear(data.x.front(), data.x.back(), data.y.front(), data.y.back(),
                        data.t.front().front(), data.t.front().back(), data.t.back().front(),
                        data.t.back().back(), x, y);
    }
    // bilinear interpolant of the four corners of E_ij, arguments inside E_ij
    double hb(int i, int j, double u, double v) const {
        const auto gi = static_cast<std::size_t>(i);
        const auto gj = static_cast<std::size_t>(j);
        return bilinear(data.x[gi], data.x[gi + 1], data.y[gj], data.y[gj + 1], data.z[gj][gi],
                        data.z[gj][gi + 1], data.z[gj + 1][gi], data.z[gj + 1][gi + 1], u, v);
    }
    double hbt(int i, int j, double u, double v) const {
        const auto gi = static_cast<std::size_t>(i);
        const auto gj = static_cast<std::size_t>(j);
        return bilinear(data.x[gi], data.x[gi + 1], data.y[gj], data.y[gj + 1], data.t[gj][gi],
                        data.t[gj][gi + 1], data.t[gj + 1][gi], data.t[gj + 1][gi + 1], u, v);
    }

    // the bivariate kernel: value pair at (L_{x_i}(xi), L_{y_j}(eta))
    std::pair<double, double> rhs_recursion(int i, int j, double xi, double eta, double f1,
                                            double f2) const {
        if (i < 0 || i >= nx() || j < 0 || j >= ny())
            throw Error("cell index out of range");
        const auto& f = cell(i, j);
        const double u = xmaps[static_cast<std::size_t>(i)].apply(xi);
        const double v = ymaps[static_cast<std::size_t>(j)].apply(eta);
        const double s = f.s(u, v);
        const double sp = f.s_prime(u, v);
        const double st = f.s_tilde(u, v);
        const double stp = f.s_tilde_prime(u, v);
        const double gx = gbar(xi, eta);
        const double gpx = gbarp(xi, eta);
        return {s * (f1 - gx) + sp * (f2 - gpx) + hb(i, j, u, v),
                st * (f1 - gx) + stp * (f2 - gpx) + hbt(i, j, u, v)};
    }

    double q(int i, int j, double xi, double eta) const {
        const auto& f = cell(i, j);
        const double u = xmaps[static_cast<std::size_t>(i)].apply(xi);
        const double v = ymaps[static_cast<std::size_t>(j)].apply(eta);
        return -f.s(u, v) * gbar(xi, eta) - f.s_prime(u, v) * gbarp(xi, eta) + hb(i, j, u, v);
    }
    double qt(int i, int j, double xi, double eta) const {
        const auto& f = cell(i, j);
        const double u = xmaps[static_cast<std::size_t>(i)].apply(xi);
        const double v = ymaps[static_cast<std::size_t>(j)].apply(eta);
        return -f.s_tilde(u, v) * gbar(xi, eta) - f.s_tilde_prime(u, v) * gbarp(xi, eta) +
               hbt(i, j, u, v);
    }

private:
    static double bilinear(double x0, double x1, double y0, double y1, double v00, double v10,
                           double v01, double v11, double x, double y) {
        const double tx = (x - x0) / (x1 - x0);
        const double ux = (x1 - x) / (x1 - x0);
        const double ty = (y - y0) / (y1 - y0);
        const double uy = (y1 - y) / (y1 - y0);
        return uy * (ux * v00 + tx * v10) + ty * (ux * v01 + tx * v11);
    }
};

inline Hvbfif build_bivariate(GridDataSet data, std::vector<FactorQuad> cells,
                              BuildOptions opts = {}) {
    data.validate();
    const int nx = data.nx();
    const int ny = data.ny();
    if (static_cast<int>(cells.size()) != nx * ny)
        throw Error("expected " + std::to_string(nx * ny) + " cell factor quadruples, found " +
                    std::to_string(cells.size()));

    Hvbfif h;
    h.data = std::move(data);
    h.cells = std::move(cells);
    for (int i = 0; i < nx; ++i) {
        IntervalMap m;
        m.x0 = h.data.x.front();
        m.xn = h.data.x.back();
        m.xl = h.data.x[static_cast<std::size_t>(i)];
        m.xr = h.data.x[static_cast<std::size_t>(i) + 1];
        h.xmaps.push_back(m);
    }
    for (int j = 0; j < ny; ++j) {
        IntervalMap m;
        m.x0 = h.data.y.front();
        m.xn = h.data.y.back();
        m.xl = h.data.y[static_cast<std::size_t>(j)];
        m.xr = h.data.y[static_cast<std::size_t>(j) + 1];
        h.ymaps.push_back(m);
    }

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto& f = h.cell(i, j);
            const Rect Eij = h.cell_domain(i, j);
            const double c1 = sup_abs_bound(f.s, Eij) + sup_abs_bound(f.s_tilde, Eij);
            const double c2 = sup_abs_bound(f.s_prime, Eij) + sup_abs_bound(f.s_tilde_prime, Eij);
            h.S_bar = std::max(h.S_bar, std::max(c1, c2));
            for (const FactorExpr* e : {&f.s, &f.s_prime, &f.s_tilde, &f.s_tilde_prime}) {
                if (sup_abs_bound(*e, Eij) >= 1.0) {
                    h.flags.factor_sups_ok = false;
                    if (opts.strict)
                        throw Error("factor sup >= 1 at cell (" + std::to_string(i + 1) + ", " +
                                    std::to_string(j + 1) + ")");
                }
            }
            // the sign condition is recorded, not enforced
            auto product_ok = [&](const FactorExpr& a, const FactorExpr& b) {
                const FactorExpr prod = a * b;
                const double wx = Eij.x.width() / detail::kSplits2d;
                const double wy = Eij.y.width() / detail::kSplits2d;
                for (int cx = 0; cx < detail::kSplits2d; ++cx) {
                    for (int cy = 0; cy < detail::kSplits2d; ++cy) {
                        const Interval ix{Eij.x.lo + cx * wx, Eij.x.lo + (cx + 1) * wx};
                        const Interval iy{Eij.y.lo + cy * wy, Eij.y.lo + (cy + 1) * wy};
                        if (prod.range(ix, iy).lo < -1e-12) return false;
                    }
                }
                return true;
            };
            if (!product_ok(f.s, f.s_prime) || !product_ok(f.s_tilde, f.s_tilde_prime))
                h.flags.sign_condition = false;
        }
    }
    h.flags.contractive = h.S_bar < 1.0;
    if (!h.flags.contractive && opts.strict)
        throw Error("S_bar >= 1 (" + std::to_string(h.S_bar) + ")");

    // corner matching at all four corners of E, every cell
    double resid = 0.0;
    const int cx[4] = {0, nx, 0, nx};
    const int cy[4] = {0, 0, ny, ny};
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            for (int c = 0; c < 4; ++c) {
                const double xa = h.data.x[static_cast<std::size_t>(cx[c])];
                const double yb = h.data.y[static_cast<std::size_t>(cy[c])];
                const double za = h.data.z[static_cast<std::size_t>(cy[c])]
                                          [static_cast<std::size_t>(cx[c])];
                const double ta = h.data.t[static_cast<std::size_t>(cy[c])]
                                          [static_cast<std::size_t>(cx[c])];
                const auto [v1, v2] = h.rhs_recursion(i, j, xa, yb, za, ta);
                const int ai = cx[c] == 0 ? i : i + 1;
                const int bj = cy[c] == 0 ? j : j + 1;
                resid = std::max(resid, std::fabs(v1 - h.data.z[static_cast<std::size_t>(bj)]
                                                                [static_cast<std::size_t>(ai)]));
                resid = std::max(resid, std::fabs(v2 - h.data.t[static_cast<std::size_t>(bj)]
                                                                [static_cast<std::size_t>(ai)]));
            }
        }
    }
    h.flags.corner_residual = resid;
    if (resid > 1e-9)
        throw Error("corner matching failed (residual " + std::to_string(resid) + ")");
    return h;
}

// Hutchinson iteration on the corner set, evaluated bottom-up on the level
// lattice. Points hit by several cell maps (interior cell edges) take the
// value of their greedy address, with boundary points assigned to the left
// cell; node values are corner-pinned, which makes depth m values reappear
// verbatim at depth m + 1.
inline SurfaceSamples subdivide_surface(const Hvbfif& h, int depth) {
    const int nx = h.nx();
    const int ny = h.ny();
    if (depth < 0) throw Error("subdivision depth must be >= 0");
    double projected = static_cast<double>((nx + 1) * (ny + 1));
    for (int d = 0; d < depth; ++d) projected *= static_cast<double>(nx) * static_cast<double>(ny);
    if (projected > static_cast<double>(1 << 24))
        throw Error("point-count guard exceeded: (n^2)^depth too large");

    const double x0 = h.data.x.front(), wx = h.data.x.back() - x0;
    const double y0 = h.data.y.front(), wy = h.data.y.back() - y0;

    // level 0: the grid nodes themselves
    long long Nx = nx, Ny = ny;
    std::vector<double> v1, v2;
    v1.reserve(static_cast<std::size_t>((Nx + 1) * (Ny + 1)));
    v2.reserve(v1.capacity());
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            v1.push_back(h.data.z[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
            v2.push_back(h.data.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
        }
    }

    // boundary lattice points belong to the left cell, index 0 to the first
    auto cell_of = [](long long a, long long lattice, int cells) {
        if (a <= 0) return 0;
        return static_cast<int>((a * cells - 1) / lattice);
    };

    for (int level = 1; level <= depth; ++level) {
        const long long Mx = Nx * nx, My = Ny * ny;
        std::vector<double> w1(static_cast<std::size_t>((Mx + 1) * (My + 1)));
        std::vector<double> w2(w1.size());
        for (long long b = 0; b <= My; ++b) {
            const int j = cell_of(b, My, ny);
            const long long bp = b - static_cast<long long>(j) * Ny;
            const double eta = y0 + wy * static_cast<double>(bp) / static_cast<double>(Ny);
            for (long long a = 0; a <= Mx; ++a) {
                const int i = cell_of(a, Mx, nx);
                const long long ap = a - static_cast<long long>(i) * Nx;
                const double xi = x0 + wx * static_cast<double>(ap) / static_cast<double>(Nx);
                const auto parent = static_cast<std::size_t>(bp * (Nx + 1) + ap);
                const auto [r1, r2] = h.rhs_recursion(i, j, xi, eta, v1[parent], v2[parent]);
                w1[static_cast<std::size_t>(b * (Mx + 1) + a)] = r1;
                w2[static_cast<std::size_t>(b * (Mx + 1) + a)] = r2;
            }
        }
        v1 = std::move(w1);
        v2 = std::move(w2);
        Nx = Mx;
        Ny = My;
    }

    SurfaceSamples out;
    out.points.reserve(v1.size());
    for (long long b = 0; b <= Ny; ++b) {
        const double py = y0 + wy * static_cast<double>(b) / static_cast<double>(Ny);
        for (long long a = 0; a <= Nx; ++a) {
            const double px = x0 + wx * static_cast<double>(a) / static_cast<double>(Nx);
            out.points.push_back({px, py, v1[static_cast<std::size_t>(b * (Nx + 1) + a)],
                                  v2[static_cast<std::size_t>(b * (Nx + 1) + a)]});
        }
    }
    out.method = EvalMethod::subdivision;
    out.depth = depth;
    return out;
}

// ---------------------------------------------------------------------------
// closed-form surface dimension bounds

struct SliceHypothesis {
    bool square_grid = false;
    bool sign_condition = false;
    bool triple_found = false;
    bool along_x_slice = false;     // true: P_{0 x_alpha}, false: P_{0 y_beta}
    int slice = -1;
    int i1 = -1, i2 = -1, i3 = -1;
    double H = 0.0;
    double h = 0.0;

    bool all() const { return square_grid && sign_condition && triple_found; }
};

struct BivariateDimensionReport {
    double lambda_low = 0.0;
    double lambda_up = 0.0;
    double bound_low = std::numeric_limits<double>::quiet_NaN();
    double bound_up = std::numeric_limits<double>::quiet_NaN();
    DimensionCase dim_case = DimensionCase::inconclusive;
    SliceHypothesis hypothesis;
    EmpiricalDimension empirical;
};

namespace detail {

// triple search within one slice: coordinates c, surface values zv, hidden tv
inline bool slice_triple(const std::vector<double>& c, const std::vector<double>& zv,
                         const std::vector<double>& tv, int& i1, int& i2, int& i3, double& H,
                         double& h) {
    const int m = static_cast<int>(c.size());
    double zscale = 0.0, tscale = 0.0;
    for (double v : zv) zscale = std::max(zscale, std::fabs(v));
    for (double v : tv) tscale = std::max(tscale, std::fabs(v));
    const double ztol = 1e-12 * std::max(1.0, zscale);
    const double ttol = 1e-12 * std::max(1.0, tscale);
    for (int a = 0; a < m; ++a) {
        for (int b = a + 1; b < m; ++b) {
            for (int d = b + 1; d < m; ++d) {
                const double Hd = point_line_vertical_distance(c[a], zv[a], c[b], zv[b], c[d], zv[d]);
                if (Hd <= ztol) continue;
                const bool mono = (zv[a] - zv[b]) * (tv[a] - tv[b]) > 0.0 &&
                                  (zv[a] - zv[d]) * (tv[a] - tv[d]) > 0.0 &&
                                  (zv[b] - zv[d]) * (tv[b] - tv[d]) > 0.0;
                if (!mono) continue;
                const double hd = point_line_vertical_distance(c[a], tv[a], c[b], tv[b], c[d], tv[d]);
                if (hd <= ttol) continue;
                i1 = a; i2 = b; i3 = d; H = Hd; h = hd;
                return true;
            }
        }
    }
    return false;
}

} // namespace detail

inline BivariateDimensionReport dimension_bounds_surface(const Hvbfif& hb) {
    BivariateDimensionReport r;
    const int nx = hb.nx();
    const int ny = hb.ny();

    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const auto& f = hb.cell(i, j);
            const Rect Eij = hb.cell_domain(i, j);
            const double wlo = std::min(inf_abs_bound(f.s, Eij), inf_abs_bound(f.s_prime, Eij));
            const double wup = std::max(sup_abs_bound(f.s, Eij), sup_abs_bound(f.s_prime, Eij));
            const double tlo =
                std::min(inf_abs_bound(f.s_tilde, Eij), inf_abs_bound(f.s_tilde_prime, Eij));
            const double tup =
                std::max(sup_abs_bound(f.s_tilde, Eij), sup_abs_bound(f.s_tilde_prime, Eij));
            r.lambda_low += wlo + tlo;
            r.lambda_up += wup + tup;
        }
    }

    r.hypothesis.square_grid = hb.data.square();
    r.hypothesis.sign_condition = hb.flags.sign_condition;

    if (r.hypothesis.square_grid) {
        const int n = nx;
        // x-slices first, then y-slices
        for (int alpha = 0; alpha <= n && !r.hypothesis.triple_found; ++alpha) {
            std::vector<double> zv, tv;
            for (int j = 0; j <= n; ++j) {
                zv.push_back(hb.data.z[static_cast<std::size_t>(j)][static_cast<std::size_t>(alpha)]);
                tv.push_back(hb.data.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(alpha)]);
            }
            if (detail::slice_triple(hb.data.y, zv, tv, r.hypothesis.i1, r.hypothesis.i2,
                                     r.hypothesis.i3, r.hypothesis.H, r.hypothesis.h)) {
                r.hypothesis.triple_found = true;
                r.hypothesis.along_x_slice = true;
                r.hypothesis.slice = alpha;
            }
        }
        for (int beta = 0; beta <= n && !r.hypothesis.triple_found; ++beta) {
            std::vector<double> zv(hb.data.z[static_cast<std::size_t>(beta)]);
            std::vector<double> tv(hb.data.t[static_cast<std::size_t>(beta)]);
            if (detail::slice_triple(hb.data.x, zv, tv, r.hypothesis.i1, r.hypothesis.i2,
                                     r.hypothesis.i3, r.hypothesis.H, r.hypothesis.h)) {
                r.hypothesis.triple_found = true;
                r.hypothesis.along_x_slice = false;
                r.hypothesis.slice = beta;
            }
        }

        const double n_d = static_cast<double>(n);
        if (r.lambda_low > n_d) {
            r.dim_case = DimensionCase::a;
            r.bound_low = 1.0 + std::log(r.lambda_low) / std::log(n_d);
            r.bound_up = std::min(3.0, 1.0 + std::log(r.lambda_up) / std::log(n_d));
        } else if (r.lambda_up <= n_d) {
            // degenerate case, non-strict inequality by convention
            r.dim_case = DimensionCase::b;
            r.bound_low = 2.0;
            r.bound_up = 2.0;
        }
    }
    return r;
}

// N(eps) over eps x eps cells using the range of f1, then the same log-log
// fit as the curve estimator (coarsest scale k = 1 excluded).
inline EmpiricalDimension estimate_dimension_surface(const SurfaceSamples& samples, Interval Ix,
                                                     Interval Iy, int n,
                                                     const std::vector<int>& scales) {
    if (std::fabs(Ix.width() - Iy.width()) > 1e-9 * Ix.width())
        throw Error("surface estimator requires a square domain");
    EmpiricalDimension out;
    std::vector<std::pair<double, double>> pts;
    for (int k : scales) {
        if (k < 1) throw Error("scale exponents must be >= 1");
        const double eps = Ix.width() * std::pow(static_cast<double>(n), -k);
        const long long ncells = std::llround(Ix.width() / eps);

        std::vector<double> cmin(static_cast<std::size_t>(ncells * ncells),
                                 std::numeric_limits<double>::infinity());
        std::vector<double> cmax(static_cast<std::size_t>(ncells * ncells),
                                 -std::numeric_limits<double>::infinity());
        std::vector<long long> ccount(static_cast<std::size_t>(ncells * ncells), 0);
        for (const auto& p : samples.points) {
            detail::for_each_column((p.x - Ix.lo) / eps, ncells, [&](long long cx) {
                detail::for_each_column((p.y - Iy.lo) / eps, ncells, [&](long long cy) {
                    const auto key = static_cast<std::size_t>(cy * ncells + cx);
                    cmin[key] = std::min(cmin[key], p.f1);
                    cmax[key] = std::max(cmax[key], p.f1);
                    ++ccount[key];
                });
            });
        }
        long long total = 0;
        for (long long c = 0; c < ncells * ncells; ++c) {
            const auto key = static_cast<std::size_t>(c);
            if (ccount[key] < 8)
                throw Error("undersampled cell " + std::to_string(c) + " (" +
                            std::to_string(ccount[key]) + " samples)");
            total += static_cast<long long>(std::floor(cmax[key] / eps)) -
                     static_cast<long long>(std::floor(cmin[key] / eps)) + 1;
        }
        out.records.push_back({eps, total});
        if (k == 1) continue;
        out.scales_used.push_back(k);
        pts.emplace_back(-std::log(eps), std::log(static_cast<double>(total)));
    }
    if (pts.size() < 2) throw Error("too few scales after excluding k = 1");
    const auto reg = loglog_regression(pts);
    out.slope = reg.slope;
    out.stderr_ = reg.stderr_;
    return out;
}

} // namespace hvfif
