#include "kef/disteq.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "kef/errors.hpp"
#include "kef/path_sim.hpp"
#include "kef/quadrature.hpp"

namespace kef {

namespace {

using cplx = std::complex<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr quad::Tolerance kInner{1e-14, 1e-12, 2000};
constexpr quad::Tolerance kOuter{1e-12, 1e-10, 2000};
// Below this jump size the compensated integrands use their second-order Taylor term.
constexpr double kTaylor = 1e-4;

/// A value and the error charged to the budget for it.
struct Est {
    double value = 0.0;
    double err = 0.0;

    Est& operator+=(const Est& o) {
        value += o.value;
        err += o.err;
        return *this;
    }
    friend Est operator+(Est a, const Est& b) { return a += b; }
    friend Est operator-(Est a, const Est& b) {
        a.value -= b.value;
        a.err += b.err;
        return a;
    }
    friend Est operator*(double c, Est a) { return {c * a.value, std::abs(c) * a.err}; }
};

struct CEst {
    cplx value;
    double err = 0.0;
};

double measure_integral(const LevyMeasure& nu, const RealFn& f, const Interval& region,
                        std::span<const double> kinks = {}) {
    if (region.empty()) return 0.0;
    return nu.integrate_result(f, region, kinks, kInner).value;
}

std::vector<double> atom_positions(const LevyMeasure& nu) {
    std::vector<double> out;
    for (const auto& a : nu.atom_list()) out.push_back(a.position);
    return out;
}

bool is_subordinator(const LevyTriplet& t) {
    return t.sigma2 == 0.0 && t.gamma0 && *t.gamma0 >= 0.0 && t.nu.mass(Interval::open(-kInf, 0.0)) == 0.0;
}

/// Uniform access to μ for closed forms (density quadrature) and samples.
class LawAccess {
public:
    LawAccess(const LawRep& law, const CheckOptions& opt) : law_(law), opt_(opt) {
        if (law.is_closed()) {
            const auto& c = law.closed_form();
            kinks_ = c.kinks;
            kinks_.push_back(0.0);
            if (std::isfinite(c.support.lo)) kinks_.push_back(c.support.lo);
            if (std::isfinite(c.support.hi)) kinks_.push_back(c.support.hi);
        } else {
            const auto& e = law.sample();
            for (double x : e.values)
                if (!(e.atom0 > 0.0 && x == 0.0)) rest_.push_back(x);
            bw_ = opt.bandwidth > 0.0 ? opt.bandwidth : silverman_bandwidth(rest_);
        }
    }

    bool closed() const { return law_.is_closed(); }
    double atom() const { return law_.atom0(); }
    bool has_density() const { return !closed() || static_cast<bool>(law_.closed_form().density); }
    double lower() const { return closed() ? law_.closed_form().support.lo : law_.sample().values.front(); }

    void require_density(const char* what) const {
        if (!has_density()) throw DomainError(std::string(what) + " needs a law with a density");
    }

    /// ∫_{(lo,hi)∖{0}} g dμ.
    template <class T = double, class G>
    auto mean(const G& g, double lo, double hi, std::vector<double> kinks = {}) const {
        using R = std::conditional_t<std::is_same_v<T, double>, Est, CEst>;
        R out{};
        if (!(lo < hi)) return out;
        if (closed()) {
            require_density("integration against the law");
            const auto& c = law_.closed_form();
            const double a = std::max(lo, c.support.lo), b = std::min(hi, c.support.hi);
            if (!(a < b)) return out;
            kinks.insert(kinks.end(), kinks_.begin(), kinks_.end());
            const auto pts = quad::breakpoints(a, b, kinks);
            const auto f = [&](double x) -> T {
                const double w = c.density(x);
                if (w == 0.0) return T{};
                const T v = g(x) * w;
                return quad::detail::finite(v) ? v : T{};
            };
            const auto r = quad::integrate_power_tails(f, std::span<const double>(pts), kOuter);
            out.value = r.value;
            out.err = r.error;
            return out;
        }
        const auto& v = law_.sample().values;
        const double n = static_cast<double>(v.size());
        const bool skip0 = law_.sample().atom0 > 0.0;
        T s{};
        double ss = 0.0;
        for (auto it = std::upper_bound(v.begin(), v.end(), lo); it != v.end() && *it < hi; ++it) {
            if (skip0 && *it == 0.0) continue;
            const T y = g(*it);
            s += y;
            ss += std::norm(y);
        }
        const T m = s / n;
        const double var = std::max(0.0, ss / n - std::norm(m));
        out.value = m;
        out.err = n > 1 ? opt_.mc_sigmas * std::sqrt(var / (n - 1.0)) : 0.0;
        return out;
    }

    Est density(double z) const {
        if (closed()) {
            require_density("this equation");
            return {law_.closed_form().density(z), 0.0};
        }
        return kde_est(z, [this](double x, double h) { return kde(rest_, x, h); }, 0.5 / std::sqrt(std::numbers::pi), 1);
    }

    Est derivative(double z) const {
        if (closed()) {
            require_density("this equation");
            const auto& f = law_.closed_form().density;
            double d = kInf;
            for (double k : kinks_) d = std::min(d, std::abs(z - k));
            const double h = std::min(1e-3 * std::max(1.0, std::abs(z)), 0.25 * d);
            if (!(h > 0.0)) throw DomainError("density derivative requested at a kink");
            const double v = (f(z - 2 * h) - 8 * f(z - h) + 8 * f(z + h) - f(z + 2 * h)) / (12 * h);
            return {v, 0.0};
        }
        return kde_est(z, [this](double x, double h) { return kde_deriv(rest_, x, h); },
                       0.25 / std::sqrt(std::numbers::pi), 3);
    }

    double bandwidth() const { return bw_; }

private:
    // KDE value with an error of mc_sigmas standard deviations plus a
    // Richardson estimate of the smoothing bias.
    template <class K>
    Est kde_est(double z, const K& k, double roughness, int power) const {
        const double share = 1.0 - law_.sample().atom0;
        if (rest_.empty()) return {};
        const double n = static_cast<double>(rest_.size());
        const double h = bw_;
        const double v = share * k(z, h);
        const double v2 = share * k(z, 0.7 * h);
        const double f = std::max(0.0, share * kde(rest_, z, h));
        const double sd = std::sqrt(f * roughness / (n * std::pow(h, power)));
        return {v, opt_.mc_sigmas * sd + std::abs(v - v2) / 0.51};
    }

    const LawRep& law_;
    const CheckOptions& opt_;
    std::vector<double> kinks_;
    std::vector<double> rest_;
    double bw_ = 0.0;
};

template <class F>
auto for_grid(std::span<const double> grid, unsigned threads, const F& f) {
    using R = decltype(f(0.0));
    std::vector<R> out(grid.size());
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(threads ? threads : default_threads(), grid.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid[i]);
        return out;
    }
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr error;
    std::mutex m;
    auto work = [&] {
        for (std::size_t i; (i = cursor.fetch_add(1)) < grid.size();) {
            try {
                out[i] = f(grid[i]);
            } catch (...) {
                std::lock_guard lock(m);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

ResidualReport finish(std::string equation, std::span<const double> grid, const std::vector<Est>& r,
                      const CheckOptions& opt, std::vector<std::string> notes = {}) {
    ResidualReport rep;
    rep.equation = std::move(equation);
    rep.grid.assign(grid.begin(), grid.end());
    rep.tolerance = opt.tol;
    rep.notes = std::move(notes);
    for (const auto& e : r) {
        rep.residuals.push_back(e.value);
        rep.norm_sup = std::max(rep.norm_sup, std::abs(e.value));
        rep.budget = std::max(rep.budget, e.err);
    }
    for (std::size_t i = 1; i < r.size(); ++i)
        rep.norm_l1 += 0.5 * (std::abs(r[i].value) + std::abs(r[i - 1].value)) * std::abs(grid[i] - grid[i - 1]);
    rep.pass = std::isfinite(rep.norm_sup) && rep.norm_sup <= rep.tolerance + rep.budget;
    return rep;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(3);
    s << x;
    return s.str();
}

}  // namespace

LevyTriplet util_triplet(const LevyTriplet& xi, double q) { return kill(xi_to_U(xi), q); }

// ---------------------------------------------------------------------------
// Auxiliary functions

AuxFunctions::AuxFunctions(LevyTriplet eta, LevyTriplet util)
    : eta_(std::move(eta)), util_(std::move(util)) {
    fv_ = eta_.nu.finite_variation_jumps() && util_.nu.finite_variation_jumps();
    fm_ = finite_mean(eta_) && finite_mean(util_);
}

AuxFunctions build_aux(const LevyTriplet& eta, const LevyTriplet& util) { return AuxFunctions(eta, util); }

double AuxFunctions::b_eta(double z) const {
    if (z > 0.0) return eta_.nu.mass(Interval::open(std::max(z, 1.0), kInf));
    if (z < 0.0) return -eta_.nu.mass(Interval::open(-kInf, std::min(z, -1.0)));
    return 0.0;
}

double AuxFunctions::s_eta(double z) const {
    if (z > 0.0 && z < 1.0)
        return measure_integral(eta_.nu, [z](double y) { return y - z; }, Interval::left_open(z, 1.0));
    if (z < 0.0 && z > -1.0)
        return measure_integral(eta_.nu, [z](double y) { return z - y; }, Interval::right_open(-1.0, z));
    return 0.0;
}

double AuxFunctions::b_util(double z) const {
    if (z < 1.0) throw DomainError("B_util is defined on [1, inf)");
    if (z == 1.0) return 0.0;
    return util_.nu.mass(Interval::open(std::max(z - 1.0, 1.0), kInf));
}

double AuxFunctions::s_util(double z) const {
    if (z < 0.0) throw DomainError("S_util is defined on [0, inf)");
    const double c = z - 1.0;
    if (z < 1.0) return measure_integral(util_.nu, [c](double y) { return c - y; }, Interval::right_open(-1.0, c));
    if (z > 1.0 && c < 1.0)
        return measure_integral(util_.nu, [c](double y) { return y - c; }, Interval::left_open(c, 1.0));
    return 0.0;
}

double AuxFunctions::b_eta_fv(double z) const {
    if (!fv_) throw DomainError("finite-variation tail requested for a jump part of infinite variation");
    if (z > 0.0) return eta_.nu.tail_plus(z);
    if (z < 0.0) return -eta_.nu.tail_minus(-z);
    return 0.0;
}

double AuxFunctions::b_util_fv(double z) const {
    if (!fv_) throw DomainError("finite-variation tail requested for a jump part of infinite variation");
    if (z < 0.0) throw DomainError("B_util is defined on [0, inf)");
    if (z < 1.0) return -util_.nu.mass(Interval::open(-kInf, z - 1.0));
    if (z > 1.0) return util_.nu.mass(Interval::open(z - 1.0, kInf));
    return 0.0;
}

double AuxFunctions::s_eta_fm(double z) const {
    if (!fm_) throw DomainError("first-moment variant requested without finite first moments");
    if (z > 0.0) return measure_integral(eta_.nu, [z](double y) { return y - z; }, Interval::open(z, kInf));
    if (z < 0.0) return measure_integral(eta_.nu, [z](double y) { return z - y; }, Interval::open(-kInf, z));
    return 0.0;
}

double AuxFunctions::s_util_fm(double z) const {
    if (!fm_) throw DomainError("first-moment variant requested without finite first moments");
    if (z < 0.0) throw DomainError("S_util is defined on [0, inf)");
    const double c = z - 1.0;
    if (z < 1.0) return measure_integral(util_.nu, [c](double y) { return c - y; }, Interval::open(-kInf, c));
    if (z > 1.0) return measure_integral(util_.nu, [c](double y) { return y - c; }, Interval::open(c, kInf));
    return 0.0;
}

double AuxFunctions::b_eta_integral(double w) const {
    if (w > 0.0) {
        const std::array<double, 1> k{w};
        return measure_integral(eta_.nu, [w](double y) { return std::min(y, w); }, Interval::open(1.0, kInf), k);
    }
    if (w < 0.0) {
        const std::array<double, 1> k{w};
        return measure_integral(eta_.nu, [w](double y) { return std::min(-y, -w); }, Interval::open(-kInf, -1.0), k);
    }
    return 0.0;
}

double AuxFunctions::b_util_integral(double r) const {
    if (r < 1.0) throw DomainError("B_util is defined on [1, inf)");
    const double c = r - 1.0;
    const std::array<double, 1> k{c};
    return measure_integral(util_.nu, [c](double y) { return std::min(y, c); }, Interval::open(1.0, kInf), k);
}

double AuxFunctions::b_eta_bound() const { return eta_.nu.tail_plus(1.0) + eta_.nu.tail_minus(1.0); }
double AuxFunctions::b_util_bound() const { return util_.nu.tail_plus(1.0); }

// ---------------------------------------------------------------------------
// Reports

std::string to_json(const ResidualReport& r) {
    nlohmann::json j;
    j["equation"] = r.equation;
    j["grid"] = r.grid;
    j["residual"] = r.residuals;
    j["K"] = r.K ? nlohmann::json(*r.K) : nlohmann::json(nullptr);
    j["norm_sup"] = r.norm_sup;
    j["norm_l1"] = r.norm_l1;
    j["tolerance"] = r.tolerance;
    j["budget"] = r.budget;
    j["pass"] = r.pass;
    j["notes"] = r.notes;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Characteristic function

ResidualReport residual_cf(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                           const LawRep& law, const CheckOptions& opt) {
    if (!opt.assume_second_moment && !second_moment_condition(xi, eta, q))
        throw DomainError("characteristic-function equation needs E V^2 < inf; the sufficient moment condition fails");
    const LevyTriplet util = util_triplet(xi, q);
    const LawAccess mu(law, opt);
    const bool analytic = law.is_closed() && law.closed_form().cf && law.closed_form().cf1 && law.closed_form().cf2;
    const bool expectation = mu.has_density();
    if (!analytic && !expectation) throw DomainError("law has neither a density nor a characteristic function with derivatives");

    // Ũ form with φ, φ′, φ″ from formulas.
    const auto middle = [&](double u) -> Est {
        const auto& c = law.closed_form();
        const cplx pe = char_exponent(eta, u);
        const cplx p = c.cf(u), p1 = c.cf1(u), p2 = c.cf2(u);
        const auto jump = [&](double y) -> cplx {
            if (std::abs(y) < kTaylor) return 0.5 * u * u * y * y * p2;
            return c.cf(u + u * y) - p - (std::abs(y) <= 1.0 ? u * y * p1 : cplx{});
        };
        const std::array<double, 3> k{-1.0, 0.0, 1.0};
        const auto ji = util.nu.integrate_complex_result(jump, Interval::real_line(), k, kInner);
        const cplx rhs = -util.gamma * u * p1 - 0.5 * util.sigma2 * u * u * p2 - ji.value;
        return {std::abs(pe * p - rhs), ji.error};
    };
    // ψ_η(u)φ(u) + E[e^{iuV} ψ_Ũ(uV)] as one expectation.
    const auto expect = [&](double u) -> Est {
        const cplx pe = char_exponent(eta, u);
        const auto w = [&](double v) { return std::exp(cplx(0.0, u * v)) * (pe + char_exponent(util, u * v)); };
        const CEst e = mu.mean<cplx>(w, -kInf, kInf);
        return {std::abs(e.value + mu.atom() * pe), e.err};
    };
    std::vector<Est> res = analytic ? for_grid(grid, opt.threads, middle) : for_grid(grid, opt.threads, expect);
    std::vector<std::string> notes;
    if (analytic && expectation) {
        const auto other = for_grid(grid, opt.threads, expect);
        double worst = 0.0;
        for (std::size_t i = 0; i < res.size(); ++i) {
            worst = std::max(worst, other[i].value);
            res[i].value = std::max(res[i].value, other[i].value);
            res[i].err = std::max(res[i].err, other[i].err);
        }
        notes.push_back("expectation form evaluated as well; its largest residual is " + fmt(worst));
    } else if (analytic) {
        notes.push_back("expectation form skipped: the law has no density");
    }
    if (opt.assume_second_moment) notes.push_back("finite second moment assumed");
    return finish("cf", grid, res, opt, std::move(notes));
}

// ---------------------------------------------------------------------------
// Laplace transform

ResidualReport residual_laplace(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                                const LawRep& law, const CheckOptions& opt) {
    if (!is_subordinator(eta)) throw DomainError("Laplace-transform equation needs eta to be a subordinator");
    const LawAccess mu(law, opt);
    if (mu.lower() < 0.0) throw DomainError("Laplace-transform equation needs a law on [0, inf)");
    const bool analytic =
        law.is_closed() && law.closed_form().laplace && law.closed_form().laplace1 && law.closed_form().laplace2;
    if (!analytic && !mu.has_density() && law.is_closed())
        throw DomainError("law has neither a density nor a Laplace transform");
    const double g0 = *eta.gamma0, gx = xi.gamma, s2 = xi.sigma2;
    const std::array<double, 3> k{-1.0, 0.0, 1.0};

    const auto point = [&](double u) -> Est {
        if (u < 0.0) throw DomainError("Laplace arguments must be nonnegative");
        if (u == 0.0) return {};  // both sides of the undivided equation vanish
        const double lle = -g0 * u - laplace_jump_exponent(eta.nu, u);
        if (analytic) {
            const auto& c = law.closed_form();
            const double L = c.laplace(u), L1 = c.laplace1(u), L2 = c.laplace2(u);
            const auto jump = [&](double y) {
                if (std::abs(y) < kTaylor) return 0.5 * (L1 + u * L2) * y * y;
                return (c.laplace(u * std::exp(-y)) - L) / u + (std::abs(y) <= 1.0 ? y * L1 : 0.0);
            };
            const auto ji = xi.nu.integrate_result(jump, Interval::real_line(), k, kInner);
            const double rhs = q * (L - 1.0) / u + (gx - 0.5 * s2) * L1 - 0.5 * s2 * u * L2 - ji.value;
            return {lle / u * L - rhs, ji.error};
        }
        // The equation is linear in μ; integrate its per-point weight.
        const auto w = [&](double v) {
            const double e = std::exp(-u * v);
            const auto jump = [&](double y) {
                if (std::abs(y) < kTaylor) return 0.5 * (-v * e + u * v * v * e) * y * y;
                return (std::exp(-u * std::exp(-y) * v) - e) / u - (std::abs(y) <= 1.0 ? y * v * e : 0.0);
            };
            const double ji = xi.nu.is_zero() ? 0.0 : measure_integral(xi.nu, jump, Interval::real_line(), k);
            return lle / u * e - (q * (e - 1.0) / u - (gx - 0.5 * s2) * v * e - 0.5 * s2 * u * v * v * e - ji);
        };
        const Est e = mu.mean(w, -kInf, kInf);
        return {e.value + mu.atom() * lle / u, e.err};
    };
    return finish("laplace", grid, for_grid(grid, opt.threads, point), opt,
                  {"the point u = 0 is checked in the form multiplied by u"});
}

// ---------------------------------------------------------------------------
// Density equation for subordinator η

ResidualReport residual_density_laplace(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta,
                                        double q, const LawRep& law, const CheckOptions& opt) {
    if (!xi.gamma0) throw DomainError("density equation needs xi with finite-variation jumps");
    if (!is_subordinator(eta)) throw DomainError("density equation needs eta to be a subordinator");
    const LawAccess mu(law, opt);
    mu.require_density("density equation");
    if (mu.lower() < 0.0) throw DomainError("density equation needs a law on [0, inf)");
    const double ge = *eta.gamma0, gx = *xi.gamma0, s2 = xi.sigma2;
    const auto xa = atom_positions(xi.nu);
    const auto ea = atom_positions(eta.nu);

    const auto point = [&](double z) -> Est {
        if (!(z > 0.0)) throw DomainError("density equation is stated for z > 0");
        const Est f = mu.density(z);
        const Est f1 = s2 != 0.0 ? mu.derivative(z) : Est{};
        const Est tail = mu.mean([](double) { return 1.0; }, z, kInf);
        std::vector<double> k{z};
        for (double a : xa) k.push_back(z * std::exp(a));
        for (double a : ea) k.push_back(z - a);
        const auto up = [&](double s) { return xi.nu.mass(Interval::open(std::log(s / z), kInf)); };
        const auto down = [&](double s) {
            return xi.nu.mass(Interval::open(-kInf, std::log(s / z))) + eta.nu.mass(Interval::open(z - s, kInf));
        };
        const Est rhs = mu.mean(up, z, kInf, k) - mu.mean(down, 0.0, z, k);
        const Est lhs = ge * f - ((gx + 0.5 * s2) * z) * f - (0.5 * s2 * z * z) * f1 - q * tail;
        return lhs - rhs;
    };
    return finish("density-laplace", grid, for_grid(grid, opt.threads, point), opt);
}

// ---------------------------------------------------------------------------
// General equation for μ

namespace {

/// Oriented ∫_{0+}^z g dμ: μ((0, z]) for z > 0 and -μ([z, 0]) for z < 0.
Est oriented(const LawAccess& mu, const RealFn& g, double z) {
    if (z > 0.0) return mu.mean(g, 0.0, std::nextafter(z, kInf));
    if (z < 0.0) return -1.0 * (mu.mean(g, std::nextafter(z, -kInf), 0.0) + Est{mu.atom() * g(0.0), 0.0});
    return {};
}

std::vector<double> shifted(const std::vector<double>& atoms, double z, double sign) {
    std::vector<double> out;
    for (double a : atoms) out.push_back(z + sign * a);
    return out;
}

}  // namespace

Profile mu_profile(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                   const LawRep& law, const CheckOptions& opt) {
    const LevyTriplet util = util_triplet(xi, q);
    const AuxFunctions aux(eta, util);
    const LawAccess mu(law, opt);
    mu.require_density("general equation");
    const double m0 = mu.atom();
    const auto ea = atom_positions(eta.nu);
    const auto ua = atom_positions(util.nu);

    const auto point = [&](double z) -> Est {
        const Est f = (eta.sigma2 != 0.0 || util.sigma2 != 0.0) ? mu.density(z) : Est{};
        Est g = (0.5 * eta.sigma2 + 0.5 * z * z * util.sigma2) * f;

        // S_η ∗ μ
        std::vector<double> k = shifted(ea, z, -1.0);
        k.insert(k.end(), {z, z - 1.0, z + 1.0});
        g += mu.mean([&](double v) { return aux.s_eta(z - v); }, z - 1.0, z + 1.0, k);
        g.value += m0 * aux.s_eta(z);

        // ρ
        if (z != 0.0) {
            std::vector<double> kr{z, 0.5 * z};
            for (double a : ua)
                if (a > -1.0) kr.push_back(z / (1.0 + a));
            const auto w = [&](double v) { return std::abs(v) * aux.s_util(z / v); };
            g += z > 0.0 ? mu.mean(w, 0.5 * z, kInf, kr) : mu.mean(w, -kInf, 0.5 * z, kr);
        }

        // drift terms
        g = g - oriented(mu, [&](double x) { return eta.gamma + x * util.gamma; }, z);

        // ∫_0^z (B_η ∗ μ)(x) dx, with the order of integration swapped
        std::vector<double> kb = shifted(ea, z, -1.0);
        for (double a : ea) kb.push_back(-a);
        kb.insert(kb.end(), {z, z - 1.0, z + 1.0, -1.0, 1.0});
        g = g - mu.mean([&](double v) { return aux.b_eta_integral(z - v) - aux.b_eta_integral(-v); }, -kInf, kInf, kb);
        g.value -= m0 * aux.b_eta_integral(z);

        // ∫_0^z ∫_0^t B_Ũ(t/x) μ(dx) dt = ∫ |x| J(z/x) μ(dx) over x between 0 and z
        if (z != 0.0) {
            std::vector<double> kj{0.5 * z};
            for (double a : ua)
                if (a > 1.0) kj.push_back(z / (1.0 + a));
            const auto w = [&](double v) { return std::abs(v) * aux.b_util_integral(z / v); };
            g = g - (z > 0.0 ? mu.mean(w, 0.0, std::nextafter(z, kInf), kj)
                             : mu.mean(w, std::nextafter(z, -kInf), 0.0, kj));
        }
        return g;
    };
    const auto r = for_grid(grid, opt.threads, point);
    Profile p;
    for (const auto& e : r) {
        p.value.push_back(e.value);
        p.budget.push_back(e.err);
    }
    return p;
}

ResidualReport residual_mu(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                           const LawRep& law, const CheckOptions& opt) {
    if (grid.empty()) throw DomainError("empty grid");
    const Profile p = mu_profile(grid, xi, eta, q, law, opt);
    const double K = median(p.value);
    std::vector<Est> r;
    for (std::size_t i = 0; i < grid.size(); ++i) r.push_back({p.value[i] - K, p.budget[i]});
    auto rep = finish("mu", grid, r, opt, {"K estimated as the median of G over the grid"});
    rep.K = K;
    return rep;
}

// ---------------------------------------------------------------------------
// Finite first moments

namespace {

struct MomentData {
    LevyTriplet util;
    double g_eta, g_util;
};

MomentData moment_data(const LevyTriplet& xi, const LevyTriplet& eta, double q) {
    MomentData d{util_triplet(xi, q), 0.0, 0.0};
    const auto me = mean(eta);
    const auto mu = mean(d.util);
    if (!me || !mu) throw DomainError("finite-moment equation needs E|eta_1| < inf and E|U~_1| < inf");
    d.g_eta = *me;
    d.g_util = *mu;
    return d;
}

}  // namespace

KPair explicit_k(const LevyTriplet& xi, const LevyTriplet& eta, double q, const LawRep& law, const CheckOptions& opt) {
    const auto d = moment_data(xi, eta, q);
    if (!(d.g_util < 0.0)) throw DomainError("explicit K needs E U~_1 < 0");
    const LawAccess mu(law, opt);
    const auto g = [&](double x) { return d.g_eta + x * d.g_util; };
    const Est pos = mu.mean(g, 0.0, kInf);
    const Est neg = mu.mean(g, -kInf, 0.0);
    return {-pos.value, neg.value + mu.atom() * d.g_eta, pos.err + neg.err};
}

ResidualReport residual_mu_fm(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                              const LawRep& law, const CheckOptions& opt) {
    if (grid.empty()) throw DomainError("empty grid");
    const auto d = moment_data(xi, eta, q);
    const bool can_explicit = d.g_util < 0.0;
    if (opt.k_mode == CheckOptions::KMode::Explicit && !can_explicit)
        throw DomainError("explicit K needs E U~_1 < 0");
    const bool use_explicit = can_explicit && opt.k_mode != CheckOptions::KMode::Estimate;
    const AuxFunctions aux(eta, d.util);
    const LawAccess mu(law, opt);
    mu.require_density("finite-moment equation");
    const double m0 = mu.atom();
    const auto ea = atom_positions(eta.nu);
    const auto ua = atom_positions(d.util.nu);

    const auto point = [&](double z) -> Est {
        const Est f = (eta.sigma2 != 0.0 || d.util.sigma2 != 0.0) ? mu.density(z) : Est{};
        Est g = (0.5 * eta.sigma2 + 0.5 * z * z * d.util.sigma2) * f;
        std::vector<double> k = shifted(ea, z, -1.0);
        k.push_back(z);
        g += mu.mean([&](double v) { return aux.s_eta_fm(z - v); }, -kInf, kInf, k);
        g.value += m0 * aux.s_eta_fm(z);
        if (z != 0.0) {
            std::vector<double> kr{z};
            for (double a : ua)
                if (a > -1.0) kr.push_back(z / (1.0 + a));
            const auto w = [&](double v) { return std::abs(v) * aux.s_util_fm(z / v); };
            g += z > 0.0 ? mu.mean(w, 0.0, kInf, kr) : mu.mean(w, -kInf, 0.0, kr);
        }
        return g - oriented(mu, [&](double x) { return d.g_eta + x * d.g_util; }, z);
    };
    const auto r = for_grid(grid, opt.threads, point);
    std::vector<double> values;
    for (const auto& e : r) values.push_back(e.value);
    const double k_est = median(values);
    std::vector<std::string> notes;
    double K = k_est, k_err = 0.0;
    if (use_explicit) {
        const KPair kp = explicit_k(xi, eta, q, law, opt);
        K = kp.from_positive;
        k_err = kp.budget;
        notes.push_back("explicit K " + fmt(kp.from_positive) + ", from the negative half line " +
                        fmt(kp.from_negative) + ", grid median " + fmt(k_est));
    } else {
        notes.push_back("K estimated as the median of G over the grid");
    }
    std::vector<Est> res;
    for (const auto& e : r) res.push_back({e.value - K, e.err + k_err});
    auto rep = finish("mu-fm", grid, res, opt, std::move(notes));
    rep.K = K;
    return rep;
}

// ---------------------------------------------------------------------------
// Finite variation

namespace {

void require_fv(const LevyTriplet& eta, const LevyTriplet& util) {
    if (!eta.gamma0 || !util.gamma0 || !eta.nu.finite_variation_jumps() || !util.nu.finite_variation_jumps())
        throw DomainError("equation needs eta and U~ with finite-variation jump parts");
}

// (B^FV_η ∗ f)(z) + the B^FV_Ũ term, without the atom.
Est fv_convolutions(const LawAccess& mu, const AuxFunctions& aux, const std::vector<double>& ea,
                    const std::vector<double>& ua, double z) {
    std::vector<double> k = shifted(ea, z, -1.0);
    k.push_back(z);
    Est s = mu.mean([&](double v) { return aux.b_eta_fv(z - v); }, -kInf, kInf, k);
    if (z != 0.0) {
        std::vector<double> kr{z};
        for (double a : ua)
            if (a > -1.0) kr.push_back(z / (1.0 + a));
        const auto w = [&](double v) { return aux.b_util_fv(z / v); };
        s += z > 0.0 ? mu.mean(w, 0.0, kInf, kr) : -1.0 * mu.mean(w, -kInf, 0.0, kr);
    }
    return s;
}

}  // namespace

Profile mu_fv_profile(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                      const LawRep& law, const CheckOptions& opt) {
    const LevyTriplet util = util_triplet(xi, q);
    if (eta.sigma2 != 0.0 || util.sigma2 != 0.0)
        throw DomainError("finite-variation equation needs eta and U~ without Gaussian part");
    require_fv(eta, util);
    const AuxFunctions aux(eta, util);
    const LawAccess mu(law, opt);
    mu.require_density("finite-variation equation");
    const auto ea = atom_positions(eta.nu);
    const auto ua = atom_positions(util.nu);
    const auto r = for_grid(grid, opt.threads, [&](double z) -> Est {
        Est s = (*eta.gamma0 + z * *util.gamma0) * mu.density(z);
        s += fv_convolutions(mu, aux, ea, ua, z);
        s.value += mu.atom() * aux.b_eta_fv(z);
        return s;
    });
    Profile p;
    for (const auto& e : r) {
        p.value.push_back(e.value);
        p.budget.push_back(e.err);
    }
    return p;
}

ResidualReport residual_mu_fv(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                              const LawRep& law, const CheckOptions& opt) {
    const Profile p = mu_fv_profile(grid, xi, eta, q, law, opt);
    std::vector<Est> r;
    for (std::size_t i = 0; i < grid.size(); ++i) r.push_back({p.value[i], p.budget[i]});
    return finish("mu-fv", grid, r, opt);
}

ResidualReport residual_density_diff(std::span<const double> grid, const LevyTriplet& xi, const LevyTriplet& eta,
                                     double q, const LawRep& law, const CheckOptions& opt) {
    const LevyTriplet util = util_triplet(xi, q);
    require_fv(eta, util);
    if (!(eta.sigma2 + util.sigma2 > 0.0)) throw DomainError("density equation needs a Gaussian part in eta or U~");
    const AuxFunctions aux(eta, util);
    const LawAccess mu(law, opt);
    mu.require_density("density equation");
    const auto ea = atom_positions(eta.nu);
    const auto ua = atom_positions(util.nu);
    const double se = eta.sigma2, su = util.sigma2, ge = *eta.gamma0, gu = *util.gamma0;
    const auto point = [&](double z) -> Est {
        if (z == 0.0) throw DomainError("density equation is stated for z != 0");
        const Est f = mu.density(z);
        const Est f1 = mu.derivative(z);
        Est lhs = (0.5 * se + 0.5 * z * z * su) * f1 + (z * su - ge - z * gu) * f;
        lhs.value -= aux.b_eta_fv(z) * mu.atom();
        return lhs - fv_convolutions(mu, aux, ea, ua, z);
    };
    return finish("density-diff", grid, for_grid(grid, opt.threads, point), opt);
}

// ---------------------------------------------------------------------------
// Generator pairing

double PolyBump::operator()(double x) const {
    if (!(x > a && x < b)) return 0.0;
    const double t = (2.0 * x - a - b) / (b - a), s = 1.0 - t * t;
    return height * s * s * s * s;
}

double PolyBump::d1(double x) const {
    if (!(x > a && x < b)) return 0.0;
    const double c = 2.0 / (b - a), t = (2.0 * x - a - b) / (b - a), s = 1.0 - t * t;
    return height * c * (-8.0 * t * s * s * s);
}

double PolyBump::d2(double x) const {
    if (!(x > a && x < b)) return 0.0;
    const double c = 2.0 / (b - a), t = (2.0 * x - a - b) / (b - a), s = 1.0 - t * t;
    return height * c * c * (-8.0 * s * s * s + 48.0 * t * t * s * s);
}

Pairing generator_pairing(const PolyBump& f, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                          const LawRep& law, const CheckOptions& opt) {
    const LevyTriplet util = util_triplet(xi, q);
    const LawAccess mu(law, opt);
    const auto ea = atom_positions(eta.nu);
    const auto ua = atom_positions(util.nu);
    const auto gen = [&](double x) {
        const double f0 = f(x), f1 = f.d1(x), f2 = f.d2(x);
        double v = eta.gamma * f1 + 0.5 * eta.sigma2 * f2 + x * f1 * util.gamma + 0.5 * x * x * f2 * util.sigma2;
        if (!eta.nu.is_zero()) {
            const std::array<double, 5> k{f.a - x, f.b - x, -1.0, 0.0, 1.0};
            v += measure_integral(eta.nu, [&](double y) {
                if (std::abs(y) < kTaylor) return 0.5 * y * y * f2;
                return f(x + y) - f0 - (std::abs(y) <= 1.0 ? f1 * y : 0.0);
            }, Interval::real_line(), k);
        }
        if (!util.nu.is_zero()) {
            std::vector<double> k{-1.0, 0.0, 1.0};
            if (x != 0.0) k.insert(k.end(), {f.a / x - 1.0, f.b / x - 1.0});
            v += measure_integral(util.nu, [&](double y) {
                if (std::abs(y) < kTaylor) return 0.5 * x * x * y * y * f2;
                return f(x + x * y) - f0 - (std::abs(y) <= 1.0 ? x * y * f1 : 0.0);
            }, Interval::real_line(), k);
        }
        return v;
    };
    std::vector<double> k{f.a, f.b};
    for (double a : ea) k.insert(k.end(), {f.a - a, f.b - a});
    for (double a : ua)
        if (a != -1.0) k.insert(k.end(), {f.a / (1.0 + a), f.b / (1.0 + a)});
    if (mu.closed()) mu.require_density("generator pairing");
    const Est e = mu.mean(gen, -kInf, kInf, k);
    return {e.value + mu.atom() * gen(0.0), e.err};
}

// ---------------------------------------------------------------------------
// Tail equation in the form that ignores the negative half line

double tail_equation_value(double v, const LevyTriplet& xi, const LevyTriplet& eta, const LawRep& law) {
    if (!(v > 0.0)) throw DomainError("tail equation is stated for v > 0");
    if (xi.sigma2 != 0.0 || !xi.nu.is_zero() || xi.gamma != 1.0)
        throw DomainError("tail equation value is implemented for xi_t = t");
    if (eta.sigma2 != 0.0 || eta.gamma != 0.0) throw DomainError("tail equation value needs a pure-jump eta");
    const CheckOptions opt;
    const LawAccess mu(law, opt);
    const auto& nu = eta.nu;
    const auto tail_p = [&](double x) { return nu.tail_plus(x); };
    const auto tail_m = [&](double x) { return nu.tail_minus(x); };
    const auto int_p = [&](double x) {
        return measure_integral(nu, [x](double y) { return y - x; }, Interval::open(x, kInf));
    };
    const auto int_m = [&](double x) {
        return measure_integral(nu, [x](double y) { return -y - x; }, Interval::open(-kInf, -x));
    };
    const double m0 = mu.atom();
    double s = -mu.mean([](double) { return 1.0; }, v, kInf).value;
    s += (mu.mean([&](double x) { return tail_p(v - x); }, 0.0, v).value + m0 * tail_p(v)) / v;
    s += mu.mean([&](double x) { return tail_m(x - v); }, v, kInf).value / v;
    const auto inner = [&](double w) {
        const double a = mu.mean([&](double x) { return int_p(w - x); }, 0.0, w).value + m0 * int_p(w);
        const double b = mu.mean([&](double x) { return int_m(x - w); }, w, kInf).value;
        return (a + b) / (w * w);
    };
    s -= quad::integrate(inner, v, kInf, {1e-12, 1e-10, 2000}).value;
    return s;
}

// ---------------------------------------------------------------------------
// Grids

namespace {

std::vector<double> finish_grid(std::vector<double> g, std::span<const double> kinks, double gap) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (double k : kinks) {
            if (std::abs(g[i] - k) >= gap) continue;
            double step = gap;
            if (i + 1 < g.size() && g[i] >= k) step = std::max(gap, 0.5 * (g[i + 1] - g[i]));
            if (i > 0 && g[i] < k) step = std::max(gap, 0.5 * (g[i] - g[i - 1]));
            g[i] = g[i] >= k ? k + step : k - step;
        }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

}  // namespace

std::vector<double> log_symmetric_grid(double lo_exp, double hi_exp, int per_decade, bool symmetric,
                                       std::span<const double> kinks, double gap) {
    if (!(hi_exp > lo_exp) || per_decade < 1) throw DomainError("invalid grid specification");
    std::vector<double> g;
    const int n = static_cast<int>(std::round((hi_exp - lo_exp) * per_decade));
    for (int i = 0; i <= n; ++i) g.push_back(std::pow(10.0, lo_exp + static_cast<double>(i) / per_decade));
    if (lo_exp < 0.0 && hi_exp > 0.0)
        for (double d : {0.9, 0.95, 1.05, 1.1}) g.push_back(d);
    if (symmetric) {
        const std::size_t m = g.size();
        for (std::size_t i = 0; i < m; ++i) g.push_back(-g[i]);
    }
    std::vector<double> k{-1.0, 0.0, 1.0};
    k.insert(k.end(), kinks.begin(), kinks.end());
    return finish_grid(std::move(g), k, gap);
}

std::vector<double> linear_grid(double a, double b, int n, std::span<const double> kinks, double gap) {
    if (!(b > a) || n < 2) throw DomainError("invalid grid specification");
    std::vector<double> g;
    for (int i = 0; i < n; ++i) g.push_back(a + (b - a) * i / (n - 1));
    return finish_grid(std::move(g), kinks, gap);
}

}  // namespace kef
