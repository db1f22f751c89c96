#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "hvfif/error.hpp"

namespace hvfif {

// Closed interval [lo, hi]. Arithmetic results are widened by a small
// relative margin so the enclosure property survives floating-point
// rounding; transcendental ranges are clamped back to their exact
// mathematical limits afterwards.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    explicit Interval(double v) : lo(v), hi(v) {}
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw Error("interval requires lo <= hi");
    }

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }
    bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
};

// Axis-aligned rectangle, the bivariate factor domain E_ij.
struct Rect {
    Interval x;
    Interval y;
};

namespace detail {

inline constexpr double kWidenRel = 1e-15;

inline Interval widen(Interval a) {
    const double dl = kWidenRel * (1.0 + std::fabs(a.lo));
    const double dh = kWidenRel * (1.0 + std::fabs(a.hi));
    return Interval{a.lo - dl, a.hi + dh};
}

inline Interval clamp_unit(Interval a) {
    return Interval{std::max(a.lo, -1.0), std::min(a.hi, 1.0)};
}

} // namespace detail

inline Interval operator-(Interval a) { return Interval{-a.hi, -a.lo}; }

inline Interval operator+(Interval a, Interval b) {
    return detail::widen(Interval{a.lo + b.lo, a.hi + b.hi});
}

inline Interval operator-(Interval a, Interval b) {
    return detail::widen(Interval{a.lo - b.hi, a.hi - b.lo});
}

inline Interval operator*(Interval a, Interval b) {
    const double p1 = a.lo * b.lo;
    const double p2 = a.lo * b.hi;
    const double p3 = a.hi * b.lo;
    const double p4 = a.hi * b.hi;
    return detail::widen(Interval{std::min(std::min(p1, p2), std::min(p3, p4)),
                                  std::max(std::max(p1, p2), std::max(p3, p4))});
}

inline Interval abs(Interval a) {
    if (a.lo >= 0.0) return a;
    if (a.hi <= 0.0) return Interval{-a.hi, -a.lo};
    return Interval{0.0, std::max(-a.lo, a.hi)};
}

// Exact range of sin over [a.lo, a.hi]: endpoint values plus any interior
// extrema pi/2 + k*pi. Monotone branches need no subdivision this way.
inline Interval sin_range(Interval a) {
    constexpr double pi = 3.141592653589793238462643383279502884;
    if (a.width() >= 2.0 * pi) return Interval{-1.0, 1.0};
    double lo = std::sin(a.lo);
    double hi = std::sin(a.hi);
    if (lo > hi) std::swap(lo, hi);
    const double k0 = std::ceil((a.lo - 0.5 * pi) / pi);
    for (double k = k0; 0.5 * pi + k * pi <= a.hi; k += 1.0) {
        const long long ki = static_cast<long long>(std::llround(k));
        if (ki % 2 == 0) hi = 1.0;
        else lo = -1.0;
    }
    return detail::clamp_unit(detail::widen(Interval{lo, hi}));
}

inline Interval cos_range(Interval a) {
    constexpr double pi = 3.141592653589793238462643383279502884;
    if (a.width() >= 2.0 * pi) return Interval{-1.0, 1.0};
    double lo = std::cos(a.lo);
    double hi = std::cos(a.hi);
    if (lo > hi) std::swap(lo, hi);
    // extrema at k*pi: cos = +1 for even k, -1 for odd k
    const double k0 = std::ceil(a.lo / pi);
    for (double k = k0; k * pi <= a.hi; k += 1.0) {
        const long long ki = static_cast<long long>(std::llround(k));
        if (ki % 2 == 0) hi = 1.0;
        else lo = -1.0;
    }
    return detail::clamp_unit(detail::widen(Interval{lo, hi}));
}

// sup |v| and a lower bound on inf |v| over an enclosure.
inline double sup_abs(Interval a) { return std::max(std::fabs(a.lo), std::fabs(a.hi)); }

inline double inf_abs(Interval a) {
    if (a.contains_zero()) return 0.0;
    return std::min(std::fabs(a.lo), std::fabs(a.hi));
}

} // namespace hvfif
