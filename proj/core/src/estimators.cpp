#include "kef/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kef/errors.hpp"
#include "kef/quadrature.hpp"

namespace kef {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

void require_nonempty(std::span<const double> v) {
    if (v.empty()) throw DomainError("empty sample");
}

template <class K>
double kernel_sum(std::span<const double> v, double z, double bw, K k) {
    require_nonempty(v);
    if (!(bw > 0.0)) bw = silverman_bandwidth(v);
    double s = 0.0;
    for (double x : v) {
        const double u = (z - x) / bw;
        s += k(u) * std::exp(-0.5 * u * u);
    }
    return s * kInvSqrt2Pi / static_cast<double>(v.size()) / bw;
}

}  // namespace

LawRep LawRep::closed(ClosedForm c) { return LawRep{std::move(c)}; }

LawRep LawRep::empirical(std::vector<double> values, bool track_atom) {
    require_nonempty(values);
    std::sort(values.begin(), values.end());
    Empirical e;
    if (track_atom) {
        const auto [lo, hi] = std::equal_range(values.begin(), values.end(), 0.0);
        e.atom0 = static_cast<double>(hi - lo) / static_cast<double>(values.size());
    }
    e.values = std::move(values);
    return LawRep{std::move(e)};
}

LawRep LawRep::empirical(const SampleBatch& b, bool track_atom) { return empirical(b.values, track_atom); }

double LawRep::atom0() const {
    return is_closed() ? closed_form().atom0 : sample().atom0;
}

double ecdf(std::span<const double> sorted, double x) {
    require_nonempty(sorted);
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double ks(std::span<const double> sorted, const RealFn& cdf) {
    require_nonempty(sorted);
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double f = cdf(sorted[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(j) / n - f});
        i = j;
    }
    return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    require_nonempty(a);
    require_nonempty(b);
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

std::vector<double> sorted_copy(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    std::sort(out.begin(), out.end());
    return out;
}

double kolmogorov_cdf(double x) {
    if (x <= 0.0) return 0.0;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    if (x < 1.0) {
        double s = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double m = 2.0 * k - 1.0;
            s += std::exp(-m * m * pi2 / (8.0 * x * x));
        }
        return std::sqrt(2.0 * std::numbers::pi) / x * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) s += (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * x * x);
    return 1.0 - 2.0 * s;
}

double kolmogorov_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    double lo = 0.0, hi = 5.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (kolmogorov_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

EmpCf emp_cf(std::span<const double> v, double u) {
    require_nonempty(v);
    using cplx = std::complex<double>;
    cplx s0, s1, s2;
    double q0 = 0.0, q1 = 0.0, q2 = 0.0;
    for (double x : v) {
        const cplx e = std::exp(cplx(0.0, u * x));
        const cplx z1 = cplx(0.0, x) * e, z2 = -x * x * e;
        s0 += e;
        s1 += z1;
        s2 += z2;
        q0 += std::norm(e);
        q1 += std::norm(z1);
        q2 += std::norm(z2);
    }
    const double n = static_cast<double>(v.size());
    EmpCf r{s0 / n, s1 / n, s2 / n, 0.0, 0.0, 0.0};
    const auto se = [n](double sq, cplx m) { return std::sqrt(std::max(0.0, sq / n - std::norm(m)) / n); };
    r.se_phi = se(q0, r.phi);
    r.se_d1 = se(q1, r.d1);
    r.se_d2 = se(q2, r.d2);
    return r;
}

double silverman_bandwidth(std::span<const double> v) {
    require_nonempty(v);
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 1.0;
    return 1.06 * (sd > 0.0 ? sd : 1.0) * std::pow(n, -0.2);
}

double kde(std::span<const double> v, double z, double bw) {
    return kernel_sum(v, z, bw, [](double) { return 1.0; });
}

double kde_deriv(std::span<const double> v, double z, double bw) {
    if (!(bw > 0.0)) bw = silverman_bandwidth(v);
    return kernel_sum(v, z, bw, [](double u) { return -u; }) / bw;
}

double kde_deriv2(std::span<const double> v, double z, double bw) {
    if (!(bw > 0.0)) bw = silverman_bandwidth(v);
    return kernel_sum(v, z, bw, [](double u) { return u * u - 1.0; }) / (bw * bw);
}

double kde(const Empirical& e, double z, double bw) {
    if (e.atom0 == 0.0) return kde(std::span<const double>(e.values), z, bw);
    std::vector<double> rest;
    rest.reserve(e.values.size());
    for (double x : e.values)
        if (x != 0.0) rest.push_back(x);
    if (rest.empty()) return 0.0;
    return (1.0 - e.atom0) * kde(std::span<const double>(rest), z, bw);
}

double integrate(const LawRep& law, const RealFn& g, const Interval& region) {
    if (law.is_closed()) {
        const auto& c = law.closed_form();
        double lo = std::max(region.lo, c.support.lo), hi = std::min(region.hi, c.support.hi);
        double total = region.contains(0.0) ? c.atom0 * g(0.0) : 0.0;
        if (lo < hi) {
            std::vector<double> interior = c.kinks;
            interior.push_back(0.0);
            const auto pts = quad::breakpoints(lo, hi, interior);
            const auto f = [&](double x) { return g(x) * c.density(x); };
            total += quad::value_or_throw(quad::integrate_power_tails(f, std::span<const double>(pts)), "law integral");
        }
        return total;
    }
    const auto& v = law.sample().values;
    double s = 0.0;
    for (double x : v)
        if (region.contains(x)) s += g(x);
    return s / static_cast<double>(v.size());
}

double integrate_se(const LawRep& law, const RealFn& g, const Interval& region) {
    if (law.is_closed()) return 0.0;
    const auto& v = law.sample().values;
    const double n = static_cast<double>(v.size());
    double s = 0.0, ss = 0.0;
    for (double x : v) {
        const double y = region.contains(x) ? g(x) : 0.0;
        s += y;
        ss += y * y;
    }
    const double m = s / n;
    return n > 1 ? std::sqrt(std::max(0.0, ss / n - m * m) / (n - 1.0)) : 0.0;
}

Normalization check_normalization(const ClosedForm& c) {
    Normalization r{};
    r.mass = integrate(LawRep::closed(c), [](double) { return 1.0; });
    r.cf_at_zero = c.cf ? std::abs(c.cf(0.0) - 1.0) : 0.0;
    r.cdf_left = c.cdf(std::isfinite(c.support.lo) ? c.support.lo - 1.0 : -1e8);
    r.cdf_right = c.cdf(std::isfinite(c.support.hi) ? c.support.hi + 1.0 : 1e8);
    const double a = std::isfinite(c.support.lo) ? c.support.lo : -50.0;
    const double b = std::isfinite(c.support.hi) ? c.support.hi : 50.0;
    r.cdf_monotone = true;
    double prev = c.cdf(a);
    for (int k = 1; k <= 2000; ++k) {
        const double x = a + (b - a) * k / 2000.0;
        const double f = c.cdf(x);
        if (f < prev - 1e-12) r.cdf_monotone = false;
        prev = f;
    }
    return r;
}

}  // namespace kef
