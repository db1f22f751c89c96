#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hvfif/error.hpp"
#include "hvfif/expr.hpp"
#include "hvfif/interval.hpp"

namespace hvfif {

// Interpolation nodes (x_i, y_i) extended with hidden ordinates z_i.
struct ExtendedDataSet {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> z;

    int interval_count() const { return static_cast<int>(x.size()) - 1; }
    Interval domain() const { return Interval{x.front(), x.back()}; }

    void validate() const {
        if (x.size() != y.size() || x.size() != z.size())
            throw Error("data arrays x, y, z must have equal length");
        if (x.size() < 3)
            throw Error("at least three interpolation points are required");
        for (std::size_t i = 1; i < x.size(); ++i) {
            if (!(x[i - 1] < x[i]))
                throw Error("abscissae must be strictly increasing (violated at index " +
                            std::to_string(i) + ")");
        }
    }

    Interval y_box() const {
        double lo = y.front(), hi = y.front();
        for (double v : y) { lo = std::min(lo, v); hi = std::max(hi, v); }
        return Interval{lo, hi};
    }
    Interval z_box() const {
        double lo = z.front(), hi = z.front();
        for (double v : z) { lo = std::min(lo, v); hi = std::max(hi, v); }
        return Interval{lo, hi};
    }
};

enum class Orientation { forward, reversed };

// Affine similarity L_i : I -> I_i with L_i({x_0, x_n}) = {x_{i-1}, x_i}.
// Lagrange form keeps the endpoint images exact in floating point.
struct IntervalMap {
    double x0 = 0.0, xn = 1.0;   // source interval I
    double xl = 0.0, xr = 1.0;   // target interval I_i
    Orientation orient = Orientation::forward;

    double apply(double x) const {
        const double t = (x - x0) / (xn - x0);
        const double u = (xn - x) / (xn - x0);
        return orient == Orientation::forward ? xl * u + xr * t : xr * u + xl * t;
    }

    double inverse(double v) const {
        const double t = (v - xl) / (xr - xl);
        const double u = (xr - v) / (xr - xl);
        return orient == Orientation::forward ? x0 * u + xn * t : xn * u + x0 * t;
    }

    // similarity ratio c_{L_i} = |I_i| / |I|
    double ratio() const { return (xr - xl) / (xn - x0); }

    // L_i as an expression tree a + b*x, for bound composition
    FactorExpr as_expr() const {
        const double b = (orient == Orientation::forward ? (xr - xl) : (xl - xr)) / (xn - x0);
        const double a = (orient == Orientation::forward ? xl : xr) - b * x0;
        return FactorExpr::affine_x(a, b);
    }

    Interval target() const { return Interval{xl, xr}; }
};

// The four contractivity-factor functions attached to one subinterval.
struct FactorQuad {
    FactorExpr s;
    FactorExpr s_prime;
    FactorExpr s_tilde;
    FactorExpr s_tilde_prime;
};

} // namespace hvfif
