#include "kef/reference.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "kef/errors.hpp"
#include "kef/quadrature.hpp"
#include "kef/special.hpp"

namespace kef {

namespace {

using cplx = std::complex<double>;
using Cf3 = std::array<cplx, 3>;
constexpr cplx kI{0.0, 1.0};
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;
const quad::Tolerance kTight{1e-14, 1e-12, 4000};

double get(const Params& p, const std::string& key) { return p.at(key); }

double positive(const Params& p, const std::string& key) {
    const double v = get(p, key);
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("parameter '" + key + "' must be positive");
    return v;
}

double finite(const Params& p, const std::string& key) {
    const double v = get(p, key);
    if (!std::isfinite(v)) throw DomainError("parameter '" + key + "' must be finite");
    return v;
}

double integral(const std::function<double(double)>& f, std::vector<double> pts, const char* what) {
    return quad::value_or_throw(quad::integrate_power_tails(f, std::span<const double>(pts), kTight), what);
}

// φ, φ′, φ″ given on u >= 0, extended by φ(-u) = conj φ(u).
void set_cf(ClosedForm& c, std::function<Cf3(double)> f) {
    c.cf = [f](double u) { return u >= 0.0 ? f(u)[0] : std::conj(f(-u)[0]); };
    c.cf1 = [f](double u) { return u >= 0.0 ? f(u)[1] : -std::conj(f(-u)[1]); };
    c.cf2 = [f](double u) { return u >= 0.0 ? f(u)[2] : std::conj(f(-u)[2]); };
}

// I_m(x) = ∫_0^1 t^m e^{-xt} dt for m = 0..3.
std::array<cplx, 4> exp_moments(cplx x) {
    std::array<cplx, 4> out{};
    if (std::abs(x) < 1.0) {
        for (int m = 0; m < 4; ++m) {
            cplx term = 1.0, sum = 0.0;
            for (int j = 0; j < 40; ++j) {
                sum += term / static_cast<double>(m + j + 1);
                term *= -x / static_cast<double>(j + 1);
            }
            out[m] = sum;
        }
        return out;
    }
    const cplx e = std::exp(-x);
    out[0] = (1.0 - e) / x;
    for (int m = 1; m < 4; ++m) out[m] = (static_cast<double>(m) * out[m - 1] - e) / x;
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double exp_draw(Rng& rng, double rate) { return std::exponential_distribution<double>(rate)(rng); }

double open_uniform(Rng& rng, double hi) {
    std::uniform_real_distribution<double> d(0.0, hi);
    double u = 0.0;
    while (u == 0.0) u = d(rng);
    return u;
}

// ---------------------------------------------------------------- entries

ReferenceLaw yor(const Params& p) {
    const double q = positive(p, "q"), b = finite(p, "b");
    const double g = std::sqrt(2.0 * q + b * b);
    const double al = 0.5 * (g + b), be = 0.5 * (g - b);
    const double lg = std::lgamma(al);
    const double cap = 60.0 + 4.0 * al;

    ReferenceLaw r;
    r.summary = "B/(2G) with B ~ Beta(1, beta), G ~ Gamma(alpha, 1)";
    // The ratio law belongs to ξ_t = 2(B_t + bt): its mean 1/(2(α - 1)(1 + β)) equals
    // ∫ e^{-qt} E e^{-ξ_t} dt = 1/(q - 2 + 2b).
    r.setup = {brownian(4.0, 2.0 * b), deterministic(1.0), q};
    ClosedForm& c = r.law;
    c.support = Interval::right_open(0.0, kInf);
    // f(z) = (2/Γ(α)) ∫_0^{1/2z} β(1-2zs)^{β-1} s^α e^{-s} ds. With 1 - 2zs = w^{1/β}
    // the Beta factor becomes dw/(2z).
    c.density = [=](double z) {
        if (z <= 0.0) return 0.0;
        const double hi = 0.5 / z;
        if (hi > 1e15) return 2.0 * al * be;  // f(0+), error O(z)
        const auto s_of = [=](double w) { return -hi * std::expm1(std::log(w) / be); };
        const auto w_of = [=](double s) { return std::exp(be * std::log1p(-s / hi)); };
        const auto f = [=](double w) {
            const double s = s_of(w);
            return s > 0.0 ? std::exp(al * std::log(s) - s - lg) : 0.0;
        };
        const double lo = cap < hi ? w_of(cap) : 0.0;
        std::vector<double> marks;
        if (al < hi) marks.push_back(w_of(al));
        return 2.0 * hi * integral(f, quad::breakpoints(lo, 1.0, marks), "yor density");
    };
    // P(V > z) = ∫_0^{1/2z} (1-2zs)^β s^{α-1} e^{-s} ds / Γ(α); s = r^{1/α} removes s^{α-1}.
    c.cdf = [=](double z) {
        if (z <= 0.0) return 0.0;
        const double hi = 0.5 / z;
        if (hi > 1e15) return 2.0 * al * be * z;
        const auto f = [=](double r) {
            const double s = std::pow(r, 1.0 / al);
            return s < hi ? std::exp(be * std::log1p(-s / hi) - s) : 0.0;
        };
        const double top = std::pow(std::min(hi, cap), al);
        const std::vector<double> marks{std::pow(al, al)};
        const double tail = integral(f, quad::breakpoints(0.0, top, marks), "yor cdf") / std::tgamma(al + 1.0);
        return std::clamp(1.0 - tail, 0.0, 1.0);
    };
    r.sampler = [=](Rng& rng) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double beta_draw = 1.0 - std::pow(u, 1.0 / be);
        const double gamma_draw = std::gamma_distribution<double>(al, 1.0)(rng);
        return beta_draw / (2.0 * gamma_draw);
    };
    return r;
}

ReferenceLaw mittag_leffler_law(const Params& p) {
    const double al = get(p, "alpha");
    if (!(al > 0.0 && al < 1.0)) throw DomainError("parameter 'alpha' must lie in (0, 1)");
    ReferenceLaw r;
    r.summary = "Mittag-Leffler law with Laplace transform E_alpha(-t)";
    r.setup = {LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(al), 0.0), deterministic(1.0),
               1.0 / std::tgamma(1.0 - al)};
    ClosedForm& c = r.law;
    c.support = Interval::right_open(0.0, kInf);
    c.density = [al](double s) { return special::ml_density(al, s); };
    c.cdf = [al](double s) { return special::ml_cdf(al, s); };
    c.kinks = {special::ml_series_limit(al)};
    c.laplace = [al](double u) { return special::ml_laplace(al, u, 0); };
    c.laplace1 = [al](double u) { return special::ml_laplace(al, u, 1); };
    c.laplace2 = [al](double u) { return special::ml_laplace(al, u, 2); };
    r.sampler = [al](Rng& rng) {
        const double phi = open_uniform(rng, kPi);
        return std::pow(exp_draw(rng, 1.0) / special::kanter(al, phi), 1.0 - al);
    };
    return r;
}

ReferenceLaw gamma_law(const Params& p) {
    const double lambda = positive(p, "lambda"), gamma = positive(p, "gamma"), a = positive(p, "a");
    const double k = lambda / gamma;
    ReferenceLaw r;
    r.summary = "Gamma(lambda/gamma, a) for a linear xi and exponential jumps of eta, q = 0";
    r.setup = {deterministic(gamma), LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(lambda, a), 0.0), 0.0};
    ClosedForm& c = r.law;
    c.support = Interval::right_open(0.0, kInf);
    c.density = [=](double x) {
        return x > 0.0 ? std::exp((k - 1.0) * std::log(x) - a * x + k * std::log(a) - std::lgamma(k)) : 0.0;
    };
    c.cdf = [=](double x) { return x > 0.0 ? boost::math::gamma_p(k, a * x) : 0.0; };
    set_cf(c, [=](double u) {
        const cplx w = 1.0 - kI * u / a;
        const cplx d = kI / a;
        return Cf3{std::pow(w, -k), k * d * std::pow(w, -k - 1.0), k * (k + 1.0) * d * d * std::pow(w, -k - 2.0)};
    });
    c.laplace = [=](double u) { return std::pow(1.0 + u / a, -k); };
    c.laplace1 = [=](double u) { return -k / a * std::pow(1.0 + u / a, -k - 1.0); };
    c.laplace2 = [=](double u) { return k * (k + 1.0) / (a * a) * std::pow(1.0 + u / a, -k - 2.0); };
    r.sampler = [=](Rng& rng) { return std::gamma_distribution<double>(k, 1.0 / a)(rng); };
    return r;
}

// Laplace law with density (r/2) e^{-r|z|}.
void laplace_shape(ReferenceLaw& out, double rate) {
    ClosedForm& c = out.law;
    c.kinks = {0.0};
    c.density = [rate](double z) { return 0.5 * rate * std::exp(-rate * std::abs(z)); };
    c.cdf = [rate](double z) {
        return z < 0.0 ? 0.5 * std::exp(rate * z) : 1.0 - 0.5 * std::exp(-rate * z);
    };
    const double r2 = rate * rate;
    set_cf(c, [r2](double u) {
        const double d = r2 + u * u;
        return Cf3{r2 / d, -2.0 * r2 * u / (d * d), r2 * (6.0 * u * u - 2.0 * r2) / (d * d * d)};
    });
    out.sampler = [rate](Rng& rng) {
        const double e = exp_draw(rng, rate);
        return std::uniform_int_distribution<int>(0, 1)(rng) ? e : -e;
    };
}

ReferenceLaw laplace01(const Params&) {
    ReferenceLaw r;
    r.summary = "Laplace(0, 1) for xi_t = t, eta with jump density e^{-|x|}, q = 0";
    r.setup = {deterministic(1.0), LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.0, 1.0, 1.0), 0.0),
               0.0};
    laplace_shape(r, 1.0);
    return r;
}

ReferenceLaw potential_bm(const Params& p) {
    const double q = positive(p, "q"), s = positive(p, "sigma_eta");
    ReferenceLaw r;
    r.summary = "Laplace law of a Brownian eta at an Exp(q) time, xi = 0";
    r.setup = {deterministic(0.0), brownian(s * s), q};
    laplace_shape(r, std::sqrt(2.0 * q) / s);
    return r;
}

ReferenceLaw trivial_kef(const Params& p) {
    const double g = positive(p, "gamma"), q = positive(p, "q");
    const double k = q / g;
    ReferenceLaw r;
    r.summary = "(1 - exp(-gamma tau))/gamma for eta_t = t";
    r.setup = {deterministic(g), deterministic(1.0), q};
    ClosedForm& c = r.law;
    c.support = Interval::closed(0.0, 1.0 / g);
    c.density = [=](double v) { return v >= 0.0 && v < 1.0 / g ? q * std::pow(1.0 - g * v, k - 1.0) : 0.0; };
    c.cdf = [=](double v) {
        if (v <= 0.0) return 0.0;
        if (v >= 1.0 / g) return 1.0;
        return -std::expm1(k * std::log1p(-g * v));
    };
    if (q == g) {
        // Uniform on [0, 1/g]: φ = I_0(-iu/g), φ′ = (i/g) I_1, φ″ = -I_2/g².
        set_cf(c, [g](double u) {
            const auto m = exp_moments(-kI * u / g);
            return Cf3{m[0], kI / g * m[1], -m[2] / (g * g)};
        });
    } else {
        // V = (1 - x^{1/k})/g with x uniform on (0, 1).
        set_cf(c, [=](double u) {
            Cf3 out{};
            for (int d = 0; d < 3; ++d) {
                const auto f = [=](double x) {
                    const double v = (1.0 - std::pow(x, 1.0 / k)) / g;
                    return std::pow(kI * v, d) * std::exp(kI * u * v);
                };
                out[d] = quad::value_or_throw(quad::integrate(f, 0.0, 1.0, kTight), "trivial cf");
            }
            return out;
        });
    }
    r.sampler = [=](Rng& rng) { return -std::expm1(-g * exp_draw(rng, q)) / g; };
    return r;
}

ReferenceLaw uniform_over_2exp(const Params&) {
    ReferenceLaw r;
    r.summary = "Z1/(2 Z2) with Z1 uniform on [0, 1] and Z2 ~ Exp(1)";
    r.setup = {brownian(4.0), deterministic(1.0), 2.0};
    ClosedForm& c = r.law;
    c.support = Interval::right_open(0.0, kInf);
    // 2 - (1/z + 2) e^{-1/(2z)} = 2 (1 - (1 + c) e^{-c}) with c = 1/(2z).
    c.density = [](double z) {
        if (z <= 0.0) return 0.0;
        const double cc = 0.5 / z;
        if (cc > 1e-2) return 2.0 * (1.0 - (1.0 + cc) * std::exp(-cc));
        double term = cc, sum = 0.0;
        for (int n = 2; n < 12; ++n) {
            term *= -cc / n;
            sum += (n - 1) * term;
        }
        return -2.0 * sum;
    };
    c.cdf = [](double z) { return z > 0.0 ? -2.0 * z * std::expm1(-0.5 / z) : 0.0; };
    r.sampler = [](Rng& rng) {
        return std::uniform_real_distribution<double>(0.0, 1.0)(rng) / (2.0 * exp_draw(rng, 1.0));
    };
    return r;
}

ReferenceLaw two_bm_q0(const Params& p) {
    const double se = positive(p, "sigma_eta"), su = positive(p, "sigma_u");
    const double ge = finite(p, "gamma_eta"), gu = finite(p, "gamma_u");
    const double s2 = su * su;
    if (!(gu < 0.5 * s2)) throw DomainError("two_bm_q0 needs gamma_u < sigma_u^2/2 for convergence");
    ReferenceLaw r;
    r.summary = "unkilled functional of Brownian motions with drift";
    r.setup = {U_to_xi(brownian(s2, gu)), brownian(se * se, ge), 0.0};
    const double power = -1.0 + gu / s2, slope = 2.0 * ge / (se * su);
    const auto shape = [=](double z) {
        return std::exp(power * std::log(se * se + z * z * s2) + slope * std::atan(su * z / se));
    };
    const double scale = se / su;
    const std::vector<double> marks{-kInf, -scale, 0.0, scale, kInf};
    const double norm = integral(shape, marks, "two_bm_q0 normalization");
    ClosedForm& c = r.law;
    c.density = [=](double z) { return shape(z) / norm; };
    c.cdf = [=](double z) {
        std::vector<double> pts{-kInf};
        for (double m : {-scale, 0.0, scale})
            if (m < z) pts.push_back(m);
        pts.push_back(z);
        return std::clamp(integral(shape, pts, "two_bm_q0 cdf") / norm, 0.0, 1.0);
    };
    return r;
}

ReferenceLaw cf_bm_eta(const Params& p) {
    const double g = positive(p, "gamma"), s = positive(p, "sigma_eta"), q = positive(p, "q");
    int shape = 0;
    if (std::abs(q - 2.0 * g) <= 1e-12 * q) shape = 1;
    if (std::abs(q - 4.0 * g) <= 1e-12 * q) shape = 2;
    if (shape == 0) throw DomainError("cf_bm_eta needs q = 2 gamma or q = 4 gamma");
    ReferenceLaw r;
    r.summary = "Brownian eta, linear xi; closed characteristic function";
    r.setup = {deterministic(g), brownian(s * s), q};
    ClosedForm& c = r.law;
    // φ(u) = ∫_0^1 ρ(t) e^{-x t} dt with x = a u², ρ = 1 or 2(1 - t).
    const double a = s * s / (4.0 * g);
    set_cf(c, [=](double u) {
        const auto m = exp_moments(a * u * u);
        cplx g0, g1, g2;
        if (shape == 1) {
            g0 = m[0], g1 = -m[1], g2 = m[2];
        } else {
            g0 = 2.0 * (m[0] - m[1]), g1 = -2.0 * (m[1] - m[2]), g2 = 2.0 * (m[2] - m[3]);
        }
        const double dx = 2.0 * a * u;
        return Cf3{g0, g1 * dx, g2 * dx * dx + g1 * 2.0 * a};
    });
    // V | τ ~ N(0, v²(1 - e^{-2gτ})), v² = s²/(2g); e^{-2gτ} = (1 - y²)^{2g/q} for y with density 2y.
    const double v2 = s * s / (2.0 * g), k = 2.0 * g / q;
    const auto var = [=](double y) { return -v2 * std::expm1(k * std::log1p(-y * y)); };
    c.kinks = {0.0};
    c.density = [=](double z) {
        const auto f = [=](double y) {
            const double v = var(y);
            if (v <= 0.0) return 0.0;
            return 2.0 * y * std::exp(-0.5 * z * z / v) / std::sqrt(2.0 * kPi * v);
        };
        return integral(f, {0.0, 1.0}, "cf_bm_eta density");
    };
    c.cdf = [=](double z) {
        const auto f = [=](double y) {
            const double v = var(y);
            if (v <= 0.0) return z >= 0.0 ? 2.0 * y : 0.0;
            return 2.0 * y * normal_cdf(z / std::sqrt(v));
        };
        return integral(f, {0.0, 1.0}, "cf_bm_eta cdf");
    };
    r.sampler = [=](Rng& rng) {
        const double tau = exp_draw(rng, q);
        return std::sqrt(-v2 * std::expm1(-2.0 * g * tau)) * std::normal_distribution<double>(0.0, 1.0)(rng);
    };
    return r;
}

// Taylor coefficients of e^{-x}(x² + 3x + 3).
const std::array<double, 40>& bessel_coeffs() {
    static const std::array<double, 40> c = [] {
        std::array<double, 40> out{};
        double f0 = 1.0;  // 1/n!
        double f1 = 0.0;  // 1/(n-1)!
        double f2 = 0.0;  // 1/(n-2)!
        for (int n = 0; n < 40; ++n) {
            if (n > 0) {
                f2 = f1;
                f1 = f0;
                f0 /= n;
            }
            const double sg = n % 2 ? -1.0 : 1.0;
            out[n] = sg * (3.0 * f0 - 3.0 * f1 + f2);
        }
        return out;
    }();
    return c;
}

ReferenceLaw cf_bessel(const Params& p) {
    const double sx = positive(p, "sigma_xi"), se = positive(p, "sigma_eta");
    const double k = se / sx;
    ReferenceLaw r;
    r.summary = "Brownian xi and eta with q = 6 gamma_xi = 3 sigma_xi^2; closed characteristic function";
    r.setup = {brownian(sx * sx, 0.5 * sx * sx), brownian(se * se), 3.0 * sx * sx};
    // φ(u) = G(ku), G(x) = 6/x² - 2e^{-x}(1 + 3/x + 3/x²).
    set_cf(r.law, [k](double u) {
        const double x = k * u;
        double g0 = 0.0, g1 = 0.0, g2 = 0.0;
        if (x < 0.5) {
            const auto& c = bessel_coeffs();
            for (int n = 39; n >= 2; --n) g0 = g0 * x + c[n];
            for (int n = 39; n >= 3; --n) g1 = g1 * x + (n - 2) * c[n];
            for (int n = 39; n >= 4; --n) g2 = g2 * x + (n - 2) * (n - 3) * c[n];
            g0 *= -2.0, g1 *= -2.0, g2 *= -2.0;
        } else {
            const double e = std::exp(-x), i1 = 1.0 / x, i2 = i1 * i1, i3 = i2 * i1, i4 = i2 * i2;
            g0 = 6.0 * i2 - 2.0 * e * (1.0 + 3.0 * i1 + 3.0 * i2);
            g1 = -12.0 * i3 + 2.0 * e * (1.0 + 3.0 * i1 + 6.0 * i2 + 6.0 * i3);
            g2 = 36.0 * i4 - 2.0 * e * (1.0 + 3.0 * i1 + 9.0 * i2 + 18.0 * i3 + 18.0 * i4);
        }
        return Cf3{g0, k * g1, k * k * g2};
    });
    return r;
}

ReferenceLaw cf_hypergeom(const Params& p) {
    const double lambda = positive(p, "lambda"), g = positive(p, "gamma"), a = positive(p, "a"),
                 q = positive(p, "q");
    const double A = q / g, B = -lambda / g, C = 1.0 + A;
    ReferenceLaw r;
    r.summary = "linear xi, exponential jumps of eta, q > 0; hypergeometric characteristic function";
    r.setup = {deterministic(g), LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(lambda, a), 0.0), q};
    r.law.atom0 = q / (q + lambda);
    // φ = (1 - z)^B ₂F₁(A, B; C; z), z = iu/a.
    set_cf(r.law, [=](double u) {
        const cplx z = kI * u / a, w = 1.0 - z;
        const cplx f0 = special::hyp2f1(A, B, C, z);
        const cplx f1 = A * B / C * special::hyp2f1(A + 1.0, B + 1.0, C + 1.0, z);
        const cplx f2 = A * (A + 1.0) * B * (B + 1.0) / (C * (C + 1.0)) * special::hyp2f1(A + 2.0, B + 2.0, C + 2.0, z);
        const cplx p0 = std::pow(w, B), p1 = std::pow(w, B - 1.0), p2 = std::pow(w, B - 2.0);
        const cplx dz = p0 * f1 - B * p1 * f0;
        const cplx dzz = B * (B - 1.0) * p2 * f0 - 2.0 * B * p1 * f1 + p0 * f2;
        const cplx zu = kI / a;
        return Cf3{p0 * f0, dz * zu, dzz * zu * zu};
    });
    r.sampler = [=](Rng& rng) {
        const double tau = exp_draw(rng, q);
        double t = exp_draw(rng, lambda), v = 0.0;
        while (t < tau) {
            v += std::exp(-g * t) * exp_draw(rng, a);
            t += exp_draw(rng, lambda);
        }
        return v;
    };
    return r;
}

struct Entry {
    Params defaults;
    ReferenceLaw (*make)(const Params&);
};

const std::map<std::string, Entry>& registry() {
    static const std::map<std::string, Entry> r{
        {"yor", {{{"q", 2.0}, {"b", 0.0}}, yor}},
        {"mittag_leffler_law", {{{"alpha", 0.5}}, mittag_leffler_law}},
        {"gamma_law", {{{"lambda", 1.0}, {"gamma", 1.0}, {"a", 1.0}}, gamma_law}},
        {"laplace01", {{}, laplace01}},
        {"potential_bm", {{{"q", 1.0}, {"sigma_eta", 1.0}}, potential_bm}},
        {"trivial_kef", {{{"gamma", 1.0}, {"q", 1.0}}, trivial_kef}},
        {"uniform_over_2exp", {{}, uniform_over_2exp}},
        {"two_bm_q0",
         {{{"sigma_eta", 1.0}, {"sigma_u", 1.0}, {"gamma_eta", 0.5}, {"gamma_u", -0.5}}, two_bm_q0}},
        {"cf_bm_eta", {{{"gamma", 1.0}, {"sigma_eta", 1.0}, {"q", 2.0}}, cf_bm_eta}},
        {"cf_bessel", {{{"sigma_xi", 1.0}, {"sigma_eta", 1.0}}, cf_bessel}},
        {"cf_hypergeom", {{{"lambda", 1.0}, {"gamma", 1.0}, {"a", 1.0}, {"q", 1.0}}, cf_hypergeom}},
    };
    return r;
}

const Entry& entry(const std::string& name) {
    const auto& reg = registry();
    const auto it = reg.find(name);
    if (it == reg.end()) throw DomainError("unknown reference law '" + name + "'");
    return it->second;
}

}  // namespace

ReferenceLaw reference(const std::string& name, const Params& params) {
    const Entry& e = entry(name);
    Params resolved = e.defaults;
    for (const auto& [key, value] : params) {
        if (!resolved.contains(key)) throw DomainError("unknown parameter '" + key + "' for " + name);
        resolved[key] = value;
    }
    ReferenceLaw r = e.make(resolved);
    r.name = name;
    r.params = resolved;
    r.law.name = name;
    return r;
}

std::vector<std::string> reference_names() {
    std::vector<std::string> out;
    for (const auto& [name, e] : registry()) out.push_back(name);
    return out;
}

Params reference_defaults(const std::string& name) { return entry(name).defaults; }

bool same_process(const LevyTriplet& a, const LevyTriplet& b, double tol) {
    for (double z : {-3.0, -1.0, -0.3, 0.5, 1.0, 2.5}) {
        const cplx pa = char_exponent(a, z), pb = char_exponent(b, z);
        if (std::abs(pa - pb) > tol * (1.0 + std::abs(pa))) return false;
    }
    return true;
}

bool applicable(const ReferenceLaw& r, const LevyTriplet& xi, const LevyTriplet& eta, double q) {
    return std::abs(q - r.setup.q) <= 1e-12 * (1.0 + q) && same_process(r.setup.xi, xi) &&
           same_process(r.setup.eta, eta);
}

}  // namespace kef
