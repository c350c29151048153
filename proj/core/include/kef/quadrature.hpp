#pragma once

// Global adaptive Gauss-Kronrod (10/21) integration with absolute and
// relative tolerances. Infinite ends are mapped to the unit interval by
// x = a + t/(1-t). Integrands may be real or complex valued.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "kef/errors.hpp"

namespace kef::quad {

struct Tolerance {
    double abs = 1e-10;
    double rel = 1e-8;
    int max_intervals = 4000;
};

template <class T>
struct Result {
    T value{};
    double error = 0.0;
    bool converged = true;
    int evaluations = 0;
};

namespace detail {

// Positive Kronrod abscissae, descending, with the 10-point Gauss nodes at odd index.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208532029770, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(const std::complex<double>& v) { return std::abs(v); }
inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const std::complex<double>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
}

enum class Map { Finite, Upper, Lower, Both };

// Integrand in the mapped variable on a finite parameter interval.
template <class F>
struct Mapped {
    const F& f;
    Map map;
    double anchor;

    auto operator()(double t) const {
        switch (map) {
            case Map::Finite:
                return f(t);
            case Map::Upper: {
                const double s = 1.0 - t;
                if (s <= 0.0) return decltype(f(t)){};  // node rounded onto the point at infinity
                return f(anchor + t / s) / (s * s);
            }
            case Map::Lower: {
                const double s = 1.0 - t;
                if (s <= 0.0) return decltype(f(t)){};
                return f(anchor - t / s) / (s * s);
            }
            case Map::Both:
            default: {
                const double s = 1.0 - t * t;
                if (s <= 0.0) return decltype(f(t)){};
                return f(t / s) * (1.0 + t * t) / (s * s);
            }
        }
    }
};

template <class T>
struct Piece {
    double a, b;
    T value;
    double error;
    int map_index;
    bool operator<(const Piece& o) const { return error < o.error; }
};

template <class G>
auto kronrod21(const G& g, double a, double b) {
    using T = decltype(g(a));
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    T fc = g(center);
    T kronrod = fc * kWgk[10];
    T gauss{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        T sum = g(center - dx) + g(center + dx);
        kronrod += sum * kWgk[j];
        if (j % 2 == 1) gauss += sum * kWg[j / 2];
    }
    const T value = kronrod * half;
    double err = magnitude((kronrod - gauss) * half);
    if (!finite(value)) err = std::numeric_limits<double>::infinity();
    return std::pair<T, double>{value, err};
}

}  // namespace detail

/// Integrate f over the union of consecutive pieces [pts[i], pts[i+1]].
/// Endpoints may be infinite; interior points mark kinks or discontinuities.
template <class F>
auto integrate(const F& f, std::span<const double> pts, Tolerance tol = {})
    -> Result<decltype(f(0.0))> {
    using T = decltype(f(0.0));
    using detail::Map;
    Result<T> out;
    if (pts.size() < 2) return out;

    std::vector<detail::Mapped<F>> maps;
    std::priority_queue<detail::Piece<T>> heap;
    T total{};
    double total_err = 0.0;

    auto push = [&](double a, double b, int mi) {
        auto [v, e] = detail::kronrod21(maps[mi], a, b);
        out.evaluations += 21;
        total += v;
        total_err += e;
        heap.push({a, b, v, e, mi});
    };

    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double a = pts[i], b = pts[i + 1];
        if (!(a < b)) continue;
        const bool lo_inf = std::isinf(a), hi_inf = std::isinf(b);
        if (lo_inf && hi_inf) {
            maps.push_back({f, Map::Both, 0.0});
            push(-1.0, 1.0, static_cast<int>(maps.size()) - 1);
        } else if (hi_inf) {
            maps.push_back({f, Map::Upper, a});
            push(0.0, 1.0, static_cast<int>(maps.size()) - 1);
        } else if (lo_inf) {
            maps.push_back({f, Map::Lower, b});
            push(0.0, 1.0, static_cast<int>(maps.size()) - 1);
        } else {
            maps.push_back({f, Map::Finite, 0.0});
            push(a, b, static_cast<int>(maps.size()) - 1);
        }
    }

    int count = static_cast<int>(heap.size());
    while (!heap.empty()) {
        const double target = std::max(tol.abs, tol.rel * detail::magnitude(total));
        if (total_err <= target) break;
        if (count >= tol.max_intervals) {
            out.converged = false;
            break;
        }
        auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        const double width = worst.b - worst.a;
        if (width <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) {
            // Interval cannot be refined further; accept its error.
            out.converged = total_err <= 10.0 * target;
            break;
        }
        heap.pop();
        total -= worst.value;
        total_err -= worst.error;
        push(worst.a, mid, worst.map_index);
        push(mid, worst.b, worst.map_index);
        ++count;
    }
    // Recompute sums to shed accumulated cancellation.
    T sum{};
    double err = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
        sum += copy.top().value;
        err += copy.top().error;
        copy.pop();
    }
    out.value = sum;
    out.error = err;
    if (!detail::finite(sum)) out.converged = false;
    return out;
}

template <class F>
auto integrate(const F& f, double a, double b, Tolerance tol = {}) {
    const std::array<double, 2> pts{a, b};
    return integrate(f, std::span<const double>(pts), tol);
}

/// Same as integrate, but infinite ends are first substituted by
/// x = a ± expm1(y), which turns power tails into exponential ones.
template <class F>
auto integrate_power_tails(const F& f, std::span<const double> pts, Tolerance tol = {})
    -> Result<decltype(f(0.0))> {
    using T = decltype(f(0.0));
    Result<T> out;
    const auto add = [&](const Result<T>& r) {
        out.value += r.value;
        out.error += r.error;
        out.converged = out.converged && r.converged;
        out.evaluations += r.evaluations;
    };
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        if (!(a < b)) continue;
        if (std::isinf(a) && std::isinf(b)) {
            const std::array<double, 3> split{a, 0.0, b};
            add(integrate_power_tails(f, std::span<const double>(split), tol));
        } else if (std::isinf(b)) {
            const auto g = [&](double y) {
                const double e = std::exp(y);
                if (!std::isfinite(e)) return T{};
                const T v = f(a + std::expm1(y)) * e;
                // Far out the density underflows while a growing weight may overflow.
                return detail::finite(v) ? v : T{};
            };
            add(integrate(g, 0.0, std::numeric_limits<double>::infinity(), tol));
        } else if (std::isinf(a)) {
            const auto g = [&](double y) {
                const double e = std::exp(y);
                if (!std::isfinite(e)) return T{};
                const T v = f(b - std::expm1(y)) * e;
                return detail::finite(v) ? v : T{};
            };
            add(integrate(g, 0.0, std::numeric_limits<double>::infinity(), tol));
        } else {
            add(integrate(f, a, b, tol));
        }
    }
    return out;
}

/// Sorted, deduplicated breakpoints restricted to [a, b], endpoints included.
std::vector<double> breakpoints(double a, double b, std::span<const double> interior);

/// Throwing wrapper used where a non-converged integral is an error.
template <class T>
T value_or_throw(const Result<T>& r, const char* what) {
    if (!r.converged) throw NumericFailure(what, r.error);
    return r.value;
}

}  // namespace kef::quad
