#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/data.hpp"
#include "hvfif/error.hpp"
#include "hvfif/expr.hpp"
#include "hvfif/interval.hpp"

namespace hvfif {

// Constants and certificate for the contraction metric rho_theta:
// theta < (1 - c_L) / (L_S kappa + L_Q), c(theta) = max{c_L + theta (L_S kappa + L_Q), S}.
struct ContractionReport {
    double S = 0.0;
    double c_L = 0.0;
    double L_S = 0.0;
    double kappa = 0.0;
    double L_Q = 0.0;
    double theta_max = 0.0;         // +inf sentinel when L_S kappa + L_Q == 0
    double c_at_half_theta = 0.0;   // c(theta) at theta = theta_max / 2
    bool contractive = false;       // S < 1

    struct PerInterval {
        double col_sum_1 = 0.0;     // sup|s_i| + sup|s~_i| over I_i
        double col_sum_2 = 0.0;     // sup|s'_i| + sup|s~'_i| over I_i
        double L_S_i = 0.0;
        double L_q_i = 0.0;
        double L_qt_i = 0.0;
    };
    std::vector<PerInterval> per_interval;

    // envelope used for kappa: data (y, z) bounding box inflated 10%
    Interval envelope_y;
    Interval envelope_z;
};

struct ValidationFlags {
    bool factor_sups_ok = true;   // every sup_abs_bound < 1 on its I_i
    bool contractive = true;      // S < 1
    double endpoint_residual = 0.0;
    bool envelope_ok = true;      // attractor samples stayed inside the kappa box
};

struct BuildOptions {
    // When false, S >= 1 and factor-sup >= 1 become recorded flags instead of
    // errors; evaluation proceeds (the fixed point can still be well defined
    // pointwise even when the sup certificate fails).
    bool strict = true;
    std::vector<Orientation> orientation;   // empty = all forward
    double envelope_inflation = 0.10;
};

// The constructed univariate IFS bundle.
class Hvfif {
public:
    ExtendedDataSet data;
    std::vector<IntervalMap> maps;      // index i in [0, n)
    std::vector<FactorQuad> factors;
    std::vector<FactorExpr> q_exprs;    // assembled q_i over I, for bound work
    std::vector<FactorExpr> qt_exprs;
    ContractionReport contraction;
    ValidationFlags flags;

    int interval_count() const { return static_cast<int>(maps.size()); }
    Interval domain() const { return data.domain(); }

    double node_x(int i) const { return data.x[static_cast<std::size_t>(i)]; }
    double node_f1(int i) const { return data.y[static_cast<std::size_t>(i)]; }
    double node_f2(int i) const { return data.z[static_cast<std::size_t>(i)]; }

    double map_apply(int i, double x) const { return maps[static_cast<std::size_t>(i)].apply(x); }
    double map_inverse(int i, double v) const {
        return maps[static_cast<std::size_t>(i)].inverse(v);
    }

    // global Lagrange lines through the data endpoints
    double g(double x) const {
        const double x0 = data.x.front(), xn = data.x.back();
        return (x - x0) / (xn - x0) * data.y.back() + (x - xn) / (x0 - xn) * data.y.front();
    }
    double gp(double x) const {
        const double x0 = data.x.front(), xn = data.x.back();
        return (x - x0) / (xn - x0) * data.z.back() + (x - xn) / (x0 - xn) * data.z.front();
    }

    // per-interval chords, arguments live in I_i
    double h(int i, double u) const {
        const auto k = static_cast<std::size_t>(i);
        const double xl = data.x[k], xr = data.x[k + 1];
        return (u - xl) / (xr - xl) * data.y[k + 1] + (u - xr) / (xl - xr) * data.y[k];
    }
    double ht(int i, double u) const {
        const auto k = static_cast<std::size_t>(i);
        const double xl = data.x[k], xr = data.x[k + 1];
        return (u - xl) / (xr - xl) * data.z[k + 1] + (u - xr) / (xl - xr) * data.z[k];
    }

    double q(int i, double xi) const {
        const auto& f = factors[static_cast<std::size_t>(i)];
        const double u = map_apply(i, xi);
        return -f.s(u) * g(xi) - f.s_prime(u) * gp(xi) + h(i, u);
    }
    double qt(int i, double xi) const {
        const auto& f = factors[static_cast<std::size_t>(i)];
        const double u = map_apply(i, xi);
        return -f.s_tilde(u) * g(xi) - f.s_tilde_prime(u) * gp(xi) + ht(i, u);
    }

    // The shared evaluation kernel: (F_i^1, F_i^2) at (xi, f1, f2), i.e. the
    // value pair the attractor takes at x = L_i(xi).
    std::pair<double, double> rhs_recursion(int i, double xi, double f1, double f2) const {
        if (i < 0 || i >= interval_count())
            throw Error("interval index out of range: " + std::to_string(i));
        const auto& f = factors[static_cast<std::size_t>(i)];
        const double u = map_apply(i, xi);
        const double gx = g(xi);
        const double gpx = gp(xi);
        const double s = f.s(u);
        const double sp = f.s_prime(u);
        const double st = f.s_tilde(u);
        const double stp = f.s_tilde_prime(u);
        return {s * (f1 - gx) + sp * (f2 - gpx) + h(i, u),
                st * (f1 - gx) + stp * (f2 - gpx) + ht(i, u)};
    }

    std::pair<double, double> baseline(double x) const { return {g(x), gp(x)}; }

    // index of the interval containing x; boundary nodes belong to the left
    // interval, x_0 to the first
    int interval_of(double x) const {
        const int n = interval_count();
        if (x <= data.x.front()) return 0;
        const auto it = std::lower_bound(data.x.begin(), data.x.end(), x);
        const int i = static_cast<int>(it - data.x.begin()) - 1;
        return std::clamp(i, 0, n - 1);
    }

    double contraction_S() const { return contraction.S; }

    // l1 diameter of the raw data (y, z) box, the kappa' of pointwise queries
    double data_diameter_l1() const {
        return data.y_box().width() + data.z_box().width();
    }
};

namespace detail {

inline FactorExpr chord_expr(double xl, double xr, double vl, double vr) {
    const double b = (vr - vl) / (xr - xl);
    return FactorExpr::affine_x(vl - b * xl, b);
}

inline FactorExpr assemble_q_expr(const ExtendedDataSet& d, const IntervalMap& m,
                                  const FactorExpr& s, const FactorExpr& sp,
                                  const FactorExpr& h_line) {
    const FactorExpr L = m.as_expr();
    const FactorExpr g_line =
        chord_expr(d.x.front(), d.x.back(), d.y.front(), d.y.back());
    const FactorExpr gp_line =
        chord_expr(d.x.front(), d.x.back(), d.z.front(), d.z.back());
    return h_line.substitute_x(L) - s.substitute_x(L) * g_line - sp.substitute_x(L) * gp_line;
}

} // namespace detail

inline Interval inflate(Interval b, double inflation) {
    const double pad = 0.5 * inflation * b.width();
    return Interval{b.lo - pad, b.hi + pad};
}

inline ContractionReport contraction_report_with_envelope(
    const ExtendedDataSet& data, const std::vector<IntervalMap>& maps,
    const std::vector<FactorQuad>& factors, const std::vector<FactorExpr>& q_exprs,
    const std::vector<FactorExpr>& qt_exprs, Interval envelope_y, Interval envelope_z) {
    ContractionReport r;
    const int n = static_cast<int>(maps.size());
    const Interval I = data.domain();

    r.envelope_y = envelope_y;
    r.envelope_z = envelope_z;
    r.kappa = std::max(std::fabs(r.envelope_y.lo), std::fabs(r.envelope_y.hi)) +
              std::max(std::fabs(r.envelope_z.lo), std::fabs(r.envelope_z.hi));

    r.per_interval.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const auto& f = factors[static_cast<std::size_t>(i)];
        const Interval Ii = maps[static_cast<std::size_t>(i)].target();
        const double cl = maps[static_cast<std::size_t>(i)].ratio();
        auto& pi = r.per_interval[static_cast<std::size_t>(i)];
        pi.col_sum_1 = sup_abs_bound(f.s, Ii) + sup_abs_bound(f.s_tilde, Ii);
        pi.col_sum_2 = sup_abs_bound(f.s_prime, Ii) + sup_abs_bound(f.s_tilde_prime, Ii);
        pi.L_S_i = std::max(
            (lipschitz_bound(f.s, Ii) + lipschitz_bound(f.s_tilde, Ii)) * cl,
            (lipschitz_bound(f.s_prime, Ii) + lipschitz_bound(f.s_tilde_prime, Ii)) * cl);
        pi.L_q_i = lipschitz_bound(q_exprs[static_cast<std::size_t>(i)], I);
        pi.L_qt_i = lipschitz_bound(qt_exprs[static_cast<std::size_t>(i)], I);

        r.S = std::max(r.S, std::max(pi.col_sum_1, pi.col_sum_2));
        r.c_L = std::max(r.c_L, cl);
        r.L_S = std::max(r.L_S, pi.L_S_i);
        r.L_Q = std::max(r.L_Q, pi.L_q_i + pi.L_qt_i);
    }

    const double denom = r.L_S * r.kappa + r.L_Q;
    if (denom > 0.0) {
        r.theta_max = (1.0 - r.c_L) / denom;
        r.c_at_half_theta = std::max(r.c_L + 0.5 * r.theta_max * denom, r.S);
    } else {
        r.theta_max = std::numeric_limits<double>::infinity();
        r.c_at_half_theta = std::max(r.c_L, r.S);
    }
    r.contractive = r.S < 1.0;
    return r;
}

inline ContractionReport contraction_report_for(const ExtendedDataSet& data,
                                                const std::vector<IntervalMap>& maps,
                                                const std::vector<FactorQuad>& factors,
                                                const std::vector<FactorExpr>& q_exprs,
                                                const std::vector<FactorExpr>& qt_exprs,
                                                double inflation) {
    return contraction_report_with_envelope(data, maps, factors, q_exprs, qt_exprs,
                                            inflate(data.y_box(), inflation),
                                            inflate(data.z_box(), inflation));
}

inline Hvfif build_univariate(ExtendedDataSet data, std::vector<FactorQuad> factors,
                              BuildOptions opts = {}) {
    data.validate();
    const int n = data.interval_count();
    if (static_cast<int>(factors.size()) != n)
        throw Error("expected " + std::to_string(n) + " factor quadruples, found " +
                    std::to_string(factors.size()));
    if (!opts.orientation.empty() && static_cast<int>(opts.orientation.size()) != n)
        throw Error("orientation list must have one entry per interval");

    Hvfif h;
    h.data = std::move(data);
    h.factors = std::move(factors);

    for (int i = 0; i < n; ++i) {
        IntervalMap m;
        m.x0 = h.data.x.front();
        m.xn = h.data.x.back();
        m.xl = h.data.x[static_cast<std::size_t>(i)];
        m.xr = h.data.x[static_cast<std::size_t>(i) + 1];
        m.orient = opts.orientation.empty() ? Orientation::forward
                                            : opts.orientation[static_cast<std::size_t>(i)];
        h.maps.push_back(m);
    }

    // factor admissibility: |s| < 1 on I_i, and none may use variable y
    for (int i = 0; i < n; ++i) {
        const auto& f = h.factors[static_cast<std::size_t>(i)];
        const Interval Ii = h.maps[static_cast<std::size_t>(i)].target();
        for (const FactorExpr* e : {&f.s, &f.s_prime, &f.s_tilde, &f.s_tilde_prime}) {
            if (e->uses_y())
                throw Error("dimension mismatch: univariate factor at interval " +
                            std::to_string(i + 1) + " uses variable y");
            if (sup_abs_bound(*e, Ii) >= 1.0) {
                h.flags.factor_sups_ok = false;
                if (opts.strict)
                    throw Error("factor sup >= 1 at interval " + std::to_string(i + 1));
            }
        }
    }

    for (int i = 0; i < n; ++i) {
        const auto& f = h.factors[static_cast<std::size_t>(i)];
        const auto& m = h.maps[static_cast<std::size_t>(i)];
        const double xl = h.data.x[static_cast<std::size_t>(i)];
        const double xr = h.data.x[static_cast<std::size_t>(i) + 1];
        const FactorExpr h_line = detail::chord_expr(
            xl, xr, h.data.y[static_cast<std::size_t>(i)], h.data.y[static_cast<std::size_t>(i) + 1]);
        const FactorExpr ht_line = detail::chord_expr(
            xl, xr, h.data.z[static_cast<std::size_t>(i)], h.data.z[static_cast<std::size_t>(i) + 1]);
        h.q_exprs.push_back(detail::assemble_q_expr(h.data, m, f.s, f.s_prime, h_line));
        h.qt_exprs.push_back(
            detail::assemble_q_expr(h.data, m, f.s_tilde, f.s_tilde_prime, ht_line));
    }

    h.contraction = contraction_report_for(h.data, h.maps, h.factors, h.q_exprs, h.qt_exprs,
                                           opts.envelope_inflation);
    h.flags.contractive = h.contraction.contractive;
    if (!h.flags.contractive && opts.strict) {
        int bad = 0;
        for (int i = 0; i < n; ++i) {
            const auto& pi = h.contraction.per_interval[static_cast<std::size_t>(i)];
            if (std::max(pi.col_sum_1, pi.col_sum_2) >= 1.0) { bad = i; break; }
        }
        throw Error("S >= 1 at interval " + std::to_string(bad + 1));
    }

    // endpoint matching F_i(x_alpha, y_alpha) = y_a at both corners, both rows
    double resid = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int alpha : {0, n}) {
            const double xa = h.node_x(alpha);
            const auto [v1, v2] = h.rhs_recursion(i, xa, h.node_f1(alpha), h.node_f2(alpha));
            const double target = h.map_apply(i, xa);
            const int a = std::fabs(target - h.node_x(i)) <= std::fabs(target - h.node_x(i + 1))
                              ? i
                              : i + 1;
            resid = std::max(resid, std::fabs(v1 - h.node_f1(a)));
            resid = std::max(resid, std::fabs(v2 - h.node_f2(a)));
        }
    }
    h.flags.endpoint_residual = resid;
    if (resid > 1e-9)
        throw Error("endpoint matching failed (residual " + std::to_string(resid) + ")");

    return h;
}

// Recompute the certificate on an existing bundle.
inline ContractionReport contraction_report(const Hvfif& h, double inflation = 0.10) {
    return contraction_report_for(h.data, h.maps, h.factors, h.q_exprs, h.qt_exprs, inflation);
}

} // namespace hvfif
