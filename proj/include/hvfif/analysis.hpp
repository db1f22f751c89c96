#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/error.hpp"
#include "hvfif/eval.hpp"
#include "hvfif/hvfif.hpp"

namespace hvfif {

// ---------------------------------------------------------------------------
// box counting

struct BoxCountRecord {
    double epsilon = 0.0;
    long long count = 0;
};

namespace detail {

// Column assignment with closed boundaries: a sample sitting on a mesh line
// feeds the columns on both sides, which is what makes the count match the
// mesh-cube definition for graphs touching cell corners.
template <typename Fn>
void for_each_column(double t, long long ncols, Fn&& add) {
    const double r = std::round(t);
    if (std::fabs(t - r) <= 1e-9) {
        const long long k = static_cast<long long>(r);
        if (k - 1 >= 0 && k - 1 < ncols) add(k - 1);
        if (k >= 0 && k < ncols) add(k);
    } else {
        const long long k = static_cast<long long>(std::floor(t));
        if (k >= 0 && k < ncols) add(k);
    }
}

} // namespace detail

// Column method: per mesh column, floor(max f1 / eps) - floor(min f1 / eps) + 1,
// summed. Mesh origin at (x_0, 0).
inline BoxCountRecord box_count(const SampleSet& samples, double epsilon) {
    if (samples.points.size() < 2) throw Error("box_count needs samples");
    const double x0 = samples.points.front().x;
    const double width = samples.points.back().x - x0;
    const double ncols_d = width / epsilon;
    const long long ncols = static_cast<long long>(std::llround(ncols_d));
    if (ncols < 1 || std::fabs(ncols_d - static_cast<double>(ncols)) > 1e-9 * ncols_d)
        throw Error("misaligned epsilon: " + std::to_string(epsilon) +
                    " does not divide the x-range");

    std::vector<double> cmin(static_cast<std::size_t>(ncols),
                             std::numeric_limits<double>::infinity());
    std::vector<double> cmax(static_cast<std::size_t>(ncols),
                             -std::numeric_limits<double>::infinity());
    std::vector<long long> ccount(static_cast<std::size_t>(ncols), 0);

    for (const auto& p : samples.points) {
        const double t = (p.x - x0) / epsilon;
        detail::for_each_column(t, ncols, [&](long long c) {
            const auto k = static_cast<std::size_t>(c);
            cmin[k] = std::min(cmin[k], p.f1);
            cmax[k] = std::max(cmax[k], p.f1);
            ++ccount[k];
        });
    }

    long long total = 0;
    for (long long c = 0; c < ncols; ++c) {
        const auto k = static_cast<std::size_t>(c);
        if (ccount[k] < 8)
            throw Error("undersampled column " + std::to_string(c) + " (" +
                        std::to_string(ccount[k]) + " samples)");
        total += static_cast<long long>(std::floor(cmax[k] / epsilon)) -
                 static_cast<long long>(std::floor(cmin[k] / epsilon)) + 1;
    }
    return {epsilon, total};
}

// ---------------------------------------------------------------------------
// log-log regression

struct Regression {
    double slope = 0.0;
    double stderr_ = 0.0;
};

inline Regression loglog_regression(const std::vector<std::pair<double, double>>& pts) {
    const std::size_t m = pts.size();
    if (m < 2) throw Error("regression needs at least two points");
    double sx = 0.0, sy = 0.0;
    for (const auto& [x, y] : pts) { sx += x; sy += y; }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) throw Error("regression abscissae are degenerate");
    Regression r;
    r.slope = sxy / sxx;
    if (m > 2) {
        double ss = 0.0;
        for (const auto& [x, y] : pts) {
            const double res = y - my - r.slope * (x - mx);
            ss += res * res;
        }
        r.stderr_ = std::sqrt(ss / static_cast<double>(m - 2) / sxx);
    }
    return r;
}

struct EmpiricalDimension {
    std::vector<BoxCountRecord> records;   // every requested scale
    std::vector<int> scales_used;          // after dropping k = 1
    double slope = 0.0;
    double stderr_ = 0.0;
};

// N(eps) across the node-aligned scales eps_k = |I| n^-k, fitted with the
// coarsest scale k = 1 excluded.
inline EmpiricalDimension estimate_dimension_from_samples(const SampleSet& samples, Interval I,
                                                          int n, const std::vector<int>& scales) {
    if (scales.size() < 4) throw Error("at least 4 scales are required");
    EmpiricalDimension out;
    std::vector<std::pair<double, double>> pts;
    for (int k : scales) {
        if (k < 1) throw Error("scale exponents must be >= 1");
        const double eps = I.width() * std::pow(static_cast<double>(n), -k);
        const auto rec = box_count(samples, eps);
        out.records.push_back(rec);
        if (k == 1) continue;
        out.scales_used.push_back(k);
        pts.emplace_back(-std::log(eps), std::log(static_cast<double>(rec.count)));
    }
    if (pts.size() < 2) throw Error("too few scales after excluding k = 1");
    const auto reg = loglog_regression(pts);
    out.slope = reg.slope;
    out.stderr_ = reg.stderr_;
    return out;
}

inline EmpiricalDimension estimate_dimension(const Hvfif& h, const std::vector<int>& scales) {
    int kmax = 1;
    for (int k : scales) kmax = std::max(kmax, k);
    const auto samples = subdivide(h, kmax + 2);
    return estimate_dimension_from_samples(samples, h.domain(), h.interval_count(), scales);
}

// ---------------------------------------------------------------------------
// closed-form dimension bounds from the factor envelopes

struct HypothesisCheck {
    bool uniform_nodes = false;
    bool sign_condition = false;     // s_i s'_i >= 0 and s~_i s~'_i >= 0 on I
    bool triple_found = false;
    int alpha1 = -1, alpha2 = -1, alpha3 = -1;
    bool y_noncollinear = false;
    bool z_noncollinear = false;
    bool yz_comonotone = false;
    double H = 0.0;                  // y-axis vertical distance of the middle point
    double h = 0.0;                  // z-axis analogue

    bool all() const { return uniform_nodes && sign_condition && triple_found; }
};

enum class DimensionCase { a, b, inconclusive };

struct DimensionReport {
    double lambda_low = 0.0;
    double lambda_up = 0.0;
    double bound_low = std::numeric_limits<double>::quiet_NaN();
    double bound_up = std::numeric_limits<double>::quiet_NaN();
    DimensionCase dim_case = DimensionCase::inconclusive;
    HypothesisCheck hypothesis;
    EmpiricalDimension empirical;    // filled by callers that also sample
    std::vector<double> omega_low, omega_up, omega_tilde_low, omega_tilde_up;
};

namespace detail {

inline bool product_nonnegative_on(const FactorExpr& a, const FactorExpr& b, Interval I) {
    const FactorExpr prod = a * b;
    const double w = I.width() / kSplits1d;
    for (int i = 0; i < kSplits1d; ++i) {
        const Interval cell{I.lo + i * w, (i == kSplits1d - 1) ? I.hi : I.lo + (i + 1) * w};
        if (prod.range(cell).lo < -1e-12) return false;
    }
    return true;
}

inline double point_line_vertical_distance(double x1, double v1, double x2, double v2, double x3,
                                           double v3) {
    // distance along the ordinate from (x2, v2) to the chord (x1,v1)-(x3,v3)
    const double t = (x2 - x1) / (x3 - x1);
    return std::fabs(v2 - (v1 + t * (v3 - v1)));
}

} // namespace detail

inline DimensionReport dimension_bounds(const Hvfif& hv) {
    DimensionReport r;
    const int n = hv.interval_count();
    const Interval I = hv.domain();

    for (int i = 0; i < n; ++i) {
        const auto& f = hv.factors[static_cast<std::size_t>(i)];
        r.omega_up.push_back(std::max(sup_abs_bound(f.s, I), sup_abs_bound(f.s_prime, I)));
        r.omega_low.push_back(std::min(inf_abs_bound(f.s, I), inf_abs_bound(f.s_prime, I)));
        r.omega_tilde_up.push_back(
            std::max(sup_abs_bound(f.s_tilde, I), sup_abs_bound(f.s_tilde_prime, I)));
        r.omega_tilde_low.push_back(
            std::min(inf_abs_bound(f.s_tilde, I), inf_abs_bound(f.s_tilde_prime, I)));
        r.lambda_low += r.omega_low.back() + r.omega_tilde_low.back();
        r.lambda_up += r.omega_up.back() + r.omega_tilde_up.back();
    }

    if (r.lambda_low > 1.0) {
        r.dim_case = DimensionCase::a;
        r.bound_low = 1.0 + std::log(r.lambda_low) / std::log(static_cast<double>(n));
        r.bound_up =
            std::min(2.0, 1.0 + std::log(r.lambda_up) / std::log(static_cast<double>(n)));
    } else if (r.lambda_up < 1.0) {
        r.dim_case = DimensionCase::b;
        r.bound_low = 1.0;
        r.bound_up = 1.0;
    }

    auto& hc = r.hypothesis;
    hc.uniform_nodes = true;
    for (int i = 0; i <= n; ++i) {
        const double uniform_x = I.lo + I.width() * i / n;
        if (std::fabs(hv.node_x(i) - uniform_x) > 1e-9 * I.width()) hc.uniform_nodes = false;
    }

    hc.sign_condition = true;
    for (int i = 0; i < n; ++i) {
        const auto& f = hv.factors[static_cast<std::size_t>(i)];
        if (!detail::product_nonnegative_on(f.s, f.s_prime, I) ||
            !detail::product_nonnegative_on(f.s_tilde, f.s_tilde_prime, I))
            hc.sign_condition = false;
    }

    const auto& xs = hv.data.x;
    const auto& ys = hv.data.y;
    const auto& zs = hv.data.z;
    const double ytol = 1e-12 * std::max(1.0, hv.data.y_box().width());
    const double ztol = 1e-12 * std::max(1.0, hv.data.z_box().width());
    for (int a = 0; a <= n && !hc.triple_found; ++a) {
        for (int b = a + 1; b <= n && !hc.triple_found; ++b) {
            for (int c = b + 1; c <= n && !hc.triple_found; ++c) {
                const double Hd = detail::point_line_vertical_distance(xs[a], ys[a], xs[b], ys[b],
                                                                       xs[c], ys[c]);
                if (Hd <= ytol) continue;
                hc.y_noncollinear = true;
                const bool mono = (ys[a] - ys[b]) * (zs[a] - zs[b]) > 0.0 &&
                                  (ys[a] - ys[c]) * (zs[a] - zs[c]) > 0.0 &&
                                  (ys[b] - ys[c]) * (zs[b] - zs[c]) > 0.0;
                if (!mono) continue;
                hc.yz_comonotone = true;
                const double hd = detail::point_line_vertical_distance(xs[a], zs[a], xs[b], zs[b],
                                                                       xs[c], zs[c]);
                if (hd <= ztol) continue;
                hc.z_noncollinear = true;
                hc.triple_found = true;
                hc.alpha1 = a;
                hc.alpha2 = b;
                hc.alpha3 = c;
                hc.H = Hd;
                hc.h = hd;
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Hoelder smoothness constants

enum class SmoothnessCase { delta_lt_1, delta_eq_1, delta_gt_1 };

// All Lipschitz data is normalized to the unit domain (x rescaled by |I|,
// subinterval lengths replaced by their fraction of |I|); on [0, 1] this
// changes nothing.
struct SmoothnessConstants {
    std::vector<double> M_k;
    std::vector<double> Mt_k;
    double M = 0.0;
    double delta = 0.0;
    double D = 0.0;
    SmoothnessCase smoothness_case = SmoothnessCase::delta_lt_1;
    double L1 = 0.0, tau1 = 1.0;
    double L2 = 0.0, tau2 = 1.0;
    double alpha = 0.5;              // only meaningful when delta == 1
    double sup_f1 = 0.0, sup_f2 = 0.0;
    double omega = 0.0, omega_tilde = 0.0;
    double L_q = 0.0, L_qt = 0.0;    // max_k of the normalized chord constants
    double hypothesis_threshold = 0.0;   // |I_min| / (2 |I_max|)
    bool hypothesis_ok = false;
};

inline SmoothnessConstants smoothness_constants(const Hvfif& hv, const SampleSet& samples) {
    SmoothnessConstants sc;
    const int n = hv.interval_count();
    const Interval I = hv.domain();
    const double W = I.width();

    double imin = std::numeric_limits<double>::infinity(), imax = 0.0;
    for (int i = 0; i < n; ++i) {
        const double len = hv.node_x(i + 1) - hv.node_x(i);
        imin = std::min(imin, len);
        imax = std::max(imax, len);
    }
    sc.hypothesis_threshold = imin / (2.0 * imax);

    for (int i = 0; i < n; ++i) {
        const auto& f = hv.factors[static_cast<std::size_t>(i)];
        sc.omega = std::max(sc.omega,
                            std::max(sup_abs_bound(f.s, I), sup_abs_bound(f.s_prime, I)));
        sc.omega_tilde =
            std::max(sc.omega_tilde,
                     std::max(sup_abs_bound(f.s_tilde, I), sup_abs_bound(f.s_tilde_prime, I)));
    }
    sc.hypothesis_ok = std::max(sc.omega, sc.omega_tilde) < sc.hypothesis_threshold;
    if (!sc.hypothesis_ok)
        throw Error("smoothness hypothesis violated: max(omega, omega~) = " +
                    std::to_string(std::max(sc.omega, sc.omega_tilde)) + " >= " +
                    std::to_string(sc.hypothesis_threshold));

    double m1 = 0.0, m2 = 0.0;
    for (const auto& p : samples.points) {
        m1 = std::max(m1, std::fabs(p.f1));
        m2 = std::max(m2, std::fabs(p.f2));
    }
    sc.sup_f1 = 1.05 * m1;   // subdivision values are exact; 5% covers
    sc.sup_f2 = 1.05 * m2;   // inter-sample excursions

    double lmin = imin / W, lmax = imax / W;
    for (int i = 0; i < n; ++i) {
        const auto& f = hv.factors[static_cast<std::size_t>(i)];
        const double lk = (hv.node_x(i + 1) - hv.node_x(i)) / W;
        const double Ls = W * lipschitz_bound(f.s, I);
        const double Lsp = W * lipschitz_bound(f.s_prime, I);
        const double Lq = W * lipschitz_bound(hv.q_exprs[static_cast<std::size_t>(i)], I);
        const double Lqt = W * lipschitz_bound(hv.qt_exprs[static_cast<std::size_t>(i)], I);
        sc.M_k.push_back(Ls * sc.sup_f1 + Lsp * sc.sup_f2 + Lq / lk);
        sc.Mt_k.push_back(Lsp * sc.sup_f1 + Ls * sc.sup_f2 + Lq / lk);
        sc.M = std::max(sc.M, std::max(sc.M_k.back(), sc.Mt_k.back()));
        sc.L_q = std::max(sc.L_q, Lq);
        sc.L_qt = std::max(sc.L_qt, Lqt);

        const double wbar = std::max(sup_abs_bound(f.s, I), sup_abs_bound(f.s_prime, I));
        const double wtil =
            std::max(sup_abs_bound(f.s_tilde, I), sup_abs_bound(f.s_tilde_prime, I));
        sc.delta = std::max(sc.delta, 2.0 * std::max(wbar, wtil) / lk);
    }

    sc.D = std::max(sc.M, 2.0 * (sc.sup_f1 + sc.sup_f2) / (lmin * lmin));

    if (std::fabs(sc.delta - 1.0) <= 1e-12) {
        sc.smoothness_case = SmoothnessCase::delta_eq_1;
        sc.alpha = 0.5;
        sc.L1 = sc.D * (1.0 + 1.0 / (sc.alpha * std::exp(1.0) * std::fabs(std::log(lmax))));
        sc.tau1 = 1.0 - sc.alpha;
    } else if (sc.delta < 1.0) {
        sc.smoothness_case = SmoothnessCase::delta_lt_1;
        sc.L1 = sc.D / (1.0 - sc.delta);
        sc.tau1 = 1.0;
    } else {
        sc.smoothness_case = SmoothnessCase::delta_gt_1;
        sc.L1 = sc.D / (sc.delta - 1.0);
        const double tau = 1.0 + std::log(sc.delta) / std::log(lmax);
        sc.tau1 = std::min(1.0, std::max(tau, 1e-12));
    }
    // the induction majorants are symmetric in (f1, f2), so the hidden
    // component inherits the same constants
    sc.L2 = sc.L1;
    sc.tau2 = sc.tau1;
    return sc;
}

// ---------------------------------------------------------------------------
// empirical Hoelder exponent via oscillation scaling

struct HolderEstimate {
    double tau = 1.0;
    double stderr_ = 0.0;
    bool degenerate = false;
    std::vector<std::pair<double, double>> log_points;   // (log w, log max-osc)
};

inline HolderEstimate empirical_holder(const SampleSet& samples, int j_min = 2, int j_max = 0) {
    HolderEstimate out;
    if (samples.points.size() < 64) throw Error("empirical_holder needs dense samples");
    const double x0 = samples.points.front().x;
    const double W = samples.points.back().x - x0;
    if (samples.f1_range() == 0.0) {
        out.degenerate = true;
        out.tau = 1.0;
        return out;
    }
    if (j_max <= 0) {
        j_max = static_cast<int>(
            std::floor(std::log2(static_cast<double>(samples.points.size()) / 8.0)));
        j_max = std::min(j_max, 12);
    }
    if (j_max < j_min + 2) throw Error("too few dyadic scales for the oscillation fit");

    for (int j = j_min; j <= j_max; ++j) {
        const long long nwin = 1LL << j;
        const double w = W / static_cast<double>(nwin);
        std::vector<double> wmin(static_cast<std::size_t>(nwin),
                                 std::numeric_limits<double>::infinity());
        std::vector<double> wmax(static_cast<std::size_t>(nwin),
                                 -std::numeric_limits<double>::infinity());
        for (const auto& p : samples.points) {
            const double t = (p.x - x0) / w;
            detail::for_each_column(t, nwin, [&](long long c) {
                const auto k = static_cast<std::size_t>(c);
                wmin[k] = std::min(wmin[k], p.f1);
                wmax[k] = std::max(wmax[k], p.f1);
            });
        }
        double osc = 0.0;
        for (long long c = 0; c < nwin; ++c) {
            const auto k = static_cast<std::size_t>(c);
            if (wmax[k] >= wmin[k]) osc = std::max(osc, wmax[k] - wmin[k]);
        }
        if (osc <= 0.0) {
            out.degenerate = true;
            continue;
        }
        out.log_points.emplace_back(std::log(w), std::log(osc));
    }
    if (out.log_points.size() < 2) {
        out.degenerate = true;
        out.tau = 1.0;
        return out;
    }
    const auto reg = loglog_regression(out.log_points);
    out.tau = reg.slope;
    out.stderr_ = reg.stderr_;
    return out;
}

// ---------------------------------------------------------------------------
// Perron-Frobenius closed form vs. power iteration

// Spectral radius of diag(d) * C with C the all-ones matrix, by plain power
// iteration on the explicitly assembled matrix.
inline double power_iteration_spectral_radius(const std::vector<double>& d, int max_iters = 500,
                                              double tol = 1e-14) {
    const std::size_t n = d.size();
    if (n == 0) throw Error("empty matrix");
    std::vector<std::vector<double>> A(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A[i][j] = d[i];

    std::vector<double> v(n, 1.0), w(n, 0.0);
    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += A[i][j] * v[j];
            w[i] = s;
            norm = std::max(norm, std::fabs(s));
        }
        if (norm == 0.0) return 0.0;
        const double prev = lambda;
        // Rayleigh-style estimate from the dominant component
        std::size_t imax = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::fabs(w[i]) > std::fabs(w[imax])) imax = i;
        lambda = w[imax] / v[imax];
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
        if (it > 0 && std::fabs(lambda - prev) <= tol * std::max(1.0, std::fabs(lambda))) break;
    }
    return lambda;
}

} // namespace hvfif
