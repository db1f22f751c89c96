#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hvfif/analysis.hpp"
#include "hvfif/eval.hpp"
#include "hvfif/hvfif.hpp"
#include "hvfif/rng.hpp"

namespace hvfif {

enum class Perturb { x, y, z, all };

inline const char* to_string(Perturb p) {
    switch (p) {
        case Perturb::x: return "x";
        case Perturb::y: return "y";
        case Perturb::z: return "z";
        case Perturb::all: return "all";
    }
    return "?";
}

struct StabilityReport {
    Perturb which = Perturb::y;
    double max_dx = 0.0, max_dy = 0.0, max_dz = 0.0;
    double omega = 0.0, omega_tilde = 0.0;
    double bound = 0.0;
    double measured_sup_diff = 0.0;
    bool satisfied = false;
    bool hypothesis_ok = false;       // omega + omega~ < 1 and the mesh condition
    double mesh_ratio_limit = 0.0;    // |I_min| / (2 |I_max|)
};

// Closed-form perturbation bounds. The abscissa bound needs the smoothness
// constants; the ordinate bounds only need the omegas.
inline double stability_bound(Perturb which, const SmoothnessConstants& sc, double max_dx,
                              double max_dy, double max_dz) {
    const double w = sc.omega, wt = sc.omega_tilde;
    if (!(w + wt < 1.0))
        throw Error("stability bound requires omega + omega~ < 1, got " + std::to_string(w + wt));
    if (!(std::max(w, wt) < sc.hypothesis_threshold))
        throw Error("stability bound requires max(omega, omega~) < |I_min| / (2 |I_max|)");
    const double denom = 1.0 - w - wt;
    const double tau = std::max(sc.tau1, sc.tau2);
    switch (which) {
        case Perturb::x:
            return ((1.0 - wt) * sc.L1 + w * sc.L2 + (1.0 - wt) * sc.L_q + w * sc.L_qt) / denom *
                   std::pow(max_dx, tau);
        case Perturb::y:
            return (1.0 + 2.0 * w - wt) / denom * max_dy;
        case Perturb::z:
            return (1.0 + 2.0 * w - wt) / denom * max_dz;
        case Perturb::all:
            return (((1.0 - wt) * (sc.L1 + sc.L_q) + w * (sc.L2 + sc.L_qt)) * std::pow(max_dx, tau) +
                    (1.0 + 2.0 * w - wt) * (max_dy + max_dz)) /
                   denom;
    }
    throw Error("unknown perturbation kind");
}

// Perturbed data set drawn uniformly from [-magnitude, magnitude] per node.
// Abscissa endpoints stay fixed and the interior keeps its ordering.
inline ExtendedDataSet perturb_data(const ExtendedDataSet& base, Perturb which, double magnitude,
                                    Rng& rng) {
    ExtendedDataSet out = base;
    const std::size_t n = base.x.size();
    if (which == Perturb::x || which == Perturb::all) {
        for (std::size_t i = 1; i + 1 < n; ++i) out.x[i] = base.x[i] + rng.uniform(-magnitude, magnitude);
        for (std::size_t i = 1; i < n; ++i) {
            if (!(out.x[i - 1] < out.x[i]))
                throw Error("x perturbation magnitude breaks the node ordering");
        }
    }
    if (which == Perturb::y || which == Perturb::all) {
        for (std::size_t i = 0; i < n; ++i) out.y[i] = base.y[i] + rng.uniform(-magnitude, magnitude);
    }
    if (which == Perturb::z || which == Perturb::all) {
        for (std::size_t i = 0; i < n; ++i) out.z[i] = base.z[i] + rng.uniform(-magnitude, magnitude);
    }
    return out;
}

// The remapped system used by abscissa-perturbation experiments. Maps are the
// affine similarities onto the starred mesh (R o L_i); factors are composed
// with R^{-1}, which cancels against the starred maps so the kernel reads
// them at the base locations. Offsets come in two flavors:
//   composed_q: q*_i = q_i o R^{-1}, the fully remapped system;
//   rebuilt_q:  chord-line offsets rebuilt from the starred data.
class StarredSystem {
public:
    enum class OffsetMode { composed_q, rebuilt_q };

    StarredSystem(const Hvfif& base, ExtendedDataSet starred, OffsetMode mode)
        : base_(&base), data_(std::move(starred)), mode_(mode) {
        data_.validate();
        if (data_.x.size() != base.data.x.size())
            throw Error("starred data must keep the node count");
        if (data_.x.front() != base.data.x.front() || data_.x.back() != base.data.x.back())
            throw Error("abscissa perturbations must keep the endpoints");
        const int n = data_.interval_count();
        for (int i = 0; i < n; ++i) {
            IntervalMap m;
            m.x0 = data_.x.front();
            m.xn = data_.x.back();
            m.xl = data_.x[static_cast<std::size_t>(i)];
            m.xr = data_.x[static_cast<std::size_t>(i) + 1];
            m.orient = base.maps[static_cast<std::size_t>(i)].orient;
            maps_.push_back(m);
        }
    }

    int interval_count() const { return static_cast<int>(maps_.size()); }
    Interval domain() const { return data_.domain(); }
    double node_x(int i) const { return data_.x[static_cast<std::size_t>(i)]; }
    double node_f1(int i) const { return data_.y[static_cast<std::size_t>(i)]; }
    double node_f2(int i) const { return data_.z[static_cast<std::size_t>(i)]; }
    double map_apply(int i, double x) const { return maps_[static_cast<std::size_t>(i)].apply(x); }
    double map_inverse(int i, double v) const {
        return maps_[static_cast<std::size_t>(i)].inverse(v);
    }

    int interval_of(double x) const {
        const int n = interval_count();
        if (x <= data_.x.front()) return 0;
        const auto it = std::lower_bound(data_.x.begin(), data_.x.end(), x);
        const int i = static_cast<int>(it - data_.x.begin()) - 1;
        return std::clamp(i, 0, n - 1);
    }

    // R^{-1} : I -> I, starred mesh back to the base mesh, piecewise affine
    double remap_inverse(double u) const {
        const int i = interval_of(u);
        const auto k = static_cast<std::size_t>(i);
        const double sl = data_.x[k], sr = data_.x[k + 1];
        const double bl = base_->data.x[k], br = base_->data.x[k + 1];
        return (u - sl) / (sr - sl) * br + (sr - u) / (sr - sl) * bl;
    }

    std::pair<double, double> rhs_recursion(int i, double xi, double f1, double f2) const {
        // s*_i(L*_i(xi)) = s_i(L_i(xi)): composition cancels the remap
        const auto& f = base_->factors[static_cast<std::size_t>(i)];
        const double ub = base_->map_apply(i, xi);
        const double s = f.s(ub);
        const double sp = f.s_prime(ub);
        const double st = f.s_tilde(ub);
        const double stp = f.s_tilde_prime(ub);
        if (mode_ == OffsetMode::composed_q) {
            const double xb = remap_inverse(xi);
            return {s * f1 + sp * f2 + base_->q(i, xb), st * f1 + stp * f2 + base_->qt(i, xb)};
        }
        const double gx = g(xi);
        const double gpx = gp(xi);
        const double u = map_apply(i, xi);
        return {s * (f1 - gx) + sp * (f2 - gpx) + h(i, u),
                st * (f1 - gx) + stp * (f2 - gpx) + ht(i, u)};
    }

    std::pair<double, double> baseline(double x) const {
        if (mode_ == OffsetMode::composed_q) return base_->baseline(remap_inverse(x));
        return {g(x), gp(x)};
    }

    double contraction_S() const { return base_->contraction_S(); }
    double data_diameter_l1() const { return data_.y_box().width() + data_.z_box().width(); }

private:
    double g(double x) const {
        const double x0 = data_.x.front(), xn = data_.x.back();
        return (x - x0) / (xn - x0) * data_.y.back() + (x - xn) / (x0 - xn) * data_.y.front();
    }
    double gp(double x) const {
        const double x0 = data_.x.front(), xn = data_.x.back();
        return (x - x0) / (xn - x0) * data_.z.back() + (x - xn) / (x0 - xn) * data_.z.front();
    }
    double h(int i, double u) const {
        const auto k = static_cast<std::size_t>(i);
        const double xl = data_.x[k], xr = data_.x[k + 1];
        return (u - xl) / (xr - xl) * data_.y[k + 1] + (u - xr) / (xl - xr) * data_.y[k];
    }
    double ht(int i, double u) const {
        const auto k = static_cast<std::size_t>(i);
        const double xl = data_.x[k], xr = data_.x[k + 1];
        return (u - xl) / (xr - xl) * data_.z[k + 1] + (u - xr) / (xl - xr) * data_.z[k];
    }

    const Hvfif* base_;
    ExtendedDataSet data_;
    std::vector<IntervalMap> maps_;
    StarredSystem::OffsetMode mode_;
};

struct ExperimentParams {
    int subdivision_depth = 6;   // used when the meshes coincide
    int grid_size = 4097;        // rb grid when they do not
    int max_iters = 2000;
    double tol = 1e-9;
};

// Build base and starred systems, evaluate both on a common dense abscissa
// set, and compare the measured sup difference against the closed form.
inline StabilityReport stability_experiment(const Hvfif& base, const SmoothnessConstants& sc,
                                            const ExtendedDataSet& starred, Perturb which,
                                            ExperimentParams ep = {}) {
    StabilityReport rep;
    rep.which = which;
    rep.omega = sc.omega;
    rep.omega_tilde = sc.omega_tilde;
    rep.mesh_ratio_limit = sc.hypothesis_threshold;
    rep.hypothesis_ok =
        sc.omega + sc.omega_tilde < 1.0 && std::max(sc.omega, sc.omega_tilde) < sc.hypothesis_threshold;

    for (std::size_t i = 0; i < base.data.x.size(); ++i) {
        rep.max_dx = std::max(rep.max_dx, std::fabs(base.data.x[i] - starred.x[i]));
        rep.max_dy = std::max(rep.max_dy, std::fabs(base.data.y[i] - starred.y[i]));
        rep.max_dz = std::max(rep.max_dz, std::fabs(base.data.z[i] - starred.z[i]));
    }
    rep.bound = stability_bound(which, sc, rep.max_dx, rep.max_dy, rep.max_dz);

    const bool same_mesh = rep.max_dx == 0.0;
    double sup = 0.0;
    if (same_mesh) {
        // identical maps, identical abscissae: compare subdivision meshes
        BuildOptions opts;
        opts.strict = false;
        const auto star = build_univariate(starred, base.factors, opts);
        const auto a = subdivide(base, ep.subdivision_depth);
        const auto b = subdivide(star, ep.subdivision_depth);
        if (a.points.size() != b.points.size())
            throw Error("sample meshes diverged unexpectedly");
        for (std::size_t k = 0; k < a.points.size(); ++k)
            sup = std::max(sup, std::fabs(a.points[k].f1 - b.points[k].f1));
    } else {
        const auto mode = which == Perturb::x ? StarredSystem::OffsetMode::composed_q
                                              : StarredSystem::OffsetMode::rebuilt_q;
        const StarredSystem star(base, starred, mode);
        const auto a = rb_iterate(base, ep.grid_size, ep.max_iters, ep.tol);
        const auto b = rb_iterate(star, ep.grid_size, ep.max_iters, ep.tol);
        // compare on the shared uniform abscissae; node extras differ between
        // the two grids, so walk by position
        std::size_t j = 0;
        for (const auto& p : a.points) {
            while (j < b.points.size() && b.points[j].x < p.x - 1e-12) ++j;
            if (j >= b.points.size()) break;
            if (std::fabs(b.points[j].x - p.x) <= 1e-12)
                sup = std::max(sup, std::fabs(p.f1 - b.points[j].f1));
        }
    }
    rep.measured_sup_diff = sup;
    rep.satisfied = sup <= rep.bound + 1e-9;
    return rep;
}

} // namespace hvfif
