#include "kef/levy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <variant>

#include "kef/errors.hpp"

namespace kef {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

double h_map(double x) {
    return std::isinf(x) ? (x > 0 ? -1.0 : kInf) : std::expm1(-x);
}
double g_map(double y) {
    if (y <= -1.0) return kInf;
    return std::isinf(y) ? -kInf : -std::log1p(y);
}

struct ZeroN {};
struct AtomsN {
    std::vector<Atom> atoms;
};
struct TseN {
    double rate, left, right;
};
struct CpN {
    double intensity, jump_rate;
};
struct MlN {
    double alpha;
    double inv_gamma;  // 1 / Gamma(1 - alpha)

    double density(double x) const {
        const double w = -std::expm1(-x / alpha);
        return inv_gamma * std::exp(-x / alpha) / std::pow(w, alpha + 1.0);
    }
    // nu((x, ∞)) in closed form.
    double tail(double x) const {
        if (x <= 0.0) return kInf;
        if (std::isinf(x)) return 0.0;
        const double e = std::exp(-x / alpha);
        return inv_gamma * std::expm1(-alpha * std::log1p(-e));
    }
};
struct ImageN {
    ImageMap map;
    LevyMeasure inner;
};
struct SumN {
    std::vector<LevyMeasure> parts;
};

}  // namespace

struct LevyMeasure::Node {
    std::variant<ZeroN, AtomsN, TseN, CpN, MlN, ImageN, SumN> v;
};

double apply_map(ImageMap map, double x) {
    return map == ImageMap::ExpMinusOne ? h_map(x) : g_map(x);
}

namespace {

ImageMap inverse(ImageMap map) {
    return map == ImageMap::ExpMinusOne ? ImageMap::NegLogOnePlus : ImageMap::ExpMinusOne;
}

// Both maps are decreasing, so preimages swap ends.
Interval preimage(ImageMap map, const Interval& region) {
    const ImageMap inv = inverse(map);
    return {apply_map(inv, region.hi), apply_map(inv, region.lo), region.hi_closed, region.lo_closed};
}

std::vector<double> map_points(ImageMap map, std::span<const double> pts) {
    std::vector<double> out;
    const ImageMap inv = inverse(map);
    for (double p : pts) {
        const double x = apply_map(inv, p);
        if (std::isfinite(x)) out.push_back(x);
    }
    return out;
}

template <class T>
void accumulate(quad::Result<T>& acc, const quad::Result<T>& r) {
    acc.value += r.value;
    acc.error += r.error;
    acc.converged = acc.converged && r.converged;
    acc.evaluations += r.evaluations;
}

// ∫_{(lo,hi)} g(x) dx for a density supported on one half line. When
// `singular_at_zero`, the piece adjoining 0 uses x = c e^{-s}.
template <class T, class G>
quad::Result<T> integrate_half(const G& g, double lo, double hi, std::span<const double> kinks,
                               bool singular_at_zero, quad::Tolerance tol = {}) {
    quad::Result<T> acc;
    if (!(lo < hi)) return acc;
    std::vector<double> pts = quad::breakpoints(lo, hi, kinks);
    if (singular_at_zero && lo == 0.0) {
        double c = pts[1];
        if (std::isinf(c)) {
            c = 1.0;
            pts.insert(pts.begin() + 1, c);
        }
        auto sub = [&](double s) -> T {
            const double x = c * std::exp(-s);
            if (x <= 0.0) return T{};
            const T v = g(x) * x;
            // Underflow deep in the singular end; the true contribution is negligible.
            return std::isfinite(std::abs(v)) ? v : T{};
        };
        accumulate(acc, quad::integrate(sub, 0.0, kInf, tol));
        pts.erase(pts.begin());
    }
    if (pts.size() >= 2) accumulate(acc, quad::integrate(g, std::span<const double>(pts), tol));
    return acc;
}

template <class T>
quad::Result<T> integrate_node(const LevyMeasure::Node& node, const std::function<T(double)>& f,
                               const Interval& region, std::span<const double> kinks, quad::Tolerance tol);

quad::Result<double> dispatch(const LevyMeasure& m, const RealFn& f, const Interval& region,
                              std::span<const double> kinks, quad::Tolerance tol) {
    return m.integrate_result(f, region, kinks, tol);
}
quad::Result<cplx> dispatch(const LevyMeasure& m, const ComplexFn& f, const Interval& region,
                            std::span<const double> kinks, quad::Tolerance tol) {
    return m.integrate_complex_result(f, region, kinks, tol);
}

// f(x) * w for a density value w. Far in a tail the density underflows while f
// may overflow; the product is then negligible for any integrable pairing.
template <class T, class F>
T weigh(const F& f, double x, double w) {
    if (w == 0.0) return T{};
    const T v = f(x) * w;
    return std::isfinite(std::abs(v)) ? v : T{};
}

template <class T>
quad::Result<T> integrate_node(const LevyMeasure::Node& node, const std::function<T(double)>& f,
                               const Interval& region, std::span<const double> kinks, quad::Tolerance tol) {
    quad::Result<T> acc;
    if (region.empty()) return acc;
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                for (const auto& a : n.atoms)
                    if (region.contains(a.position)) acc.value += a.mass * f(a.position);
            } else if constexpr (std::is_same_v<N, TseN>) {
                if (n.right > 0.0) {
                    auto g = [&](double x) -> T { return weigh<T>(f, x, n.right * std::exp(-n.rate * x)); };
                    accumulate(acc, integrate_half<T>(g, std::max(region.lo, 0.0), region.hi, kinks, false, tol));
                }
                if (n.left > 0.0) {
                    auto g = [&](double x) -> T { return weigh<T>(f, x, n.left * std::exp(n.rate * x)); };
                    accumulate(acc, integrate_half<T>(g, region.lo, std::min(region.hi, 0.0), kinks, false, tol));
                }
            } else if constexpr (std::is_same_v<N, CpN>) {
                auto g = [&](double x) -> T {
                    return weigh<T>(f, x, n.intensity * n.jump_rate * std::exp(-n.jump_rate * x));
                };
                accumulate(acc, integrate_half<T>(g, std::max(region.lo, 0.0), region.hi, kinks, false, tol));
            } else if constexpr (std::is_same_v<N, MlN>) {
                auto g = [&](double x) -> T { return weigh<T>(f, x, n.density(x)); };
                accumulate(acc, integrate_half<T>(g, std::max(region.lo, 0.0), region.hi, kinks, true, tol));
            } else if constexpr (std::is_same_v<N, ImageN>) {
                const ImageMap map = n.map;
                std::function<T(double)> pulled = [&](double x) -> T { return f(apply_map(map, x)); };
                const auto inner_kinks = map_points(map, kinks);
                accumulate(acc, dispatch(n.inner, pulled, preimage(map, region), inner_kinks, tol));
            } else if constexpr (std::is_same_v<N, SumN>) {
                for (const auto& p : n.parts) accumulate(acc, dispatch(p, f, region, kinks, tol));
            }
        },
        node.v);
    return acc;
}

std::vector<Atom> merge_atoms(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
        if (!std::isfinite(a.position) || a.position == 0.0)
            throw DomainError("atom position must be finite and nonzero");
        if (!(a.mass > 0.0) || !std::isfinite(a.mass)) throw DomainError("atom mass must be positive");
    }
    std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.position < y.position; });
    std::vector<Atom> out;
    for (const auto& a : atoms) {
        if (!out.empty() && out.back().position == a.position)
            out.back().mass += a.mass;
        else
            out.push_back(a);
    }
    return out;
}

}  // namespace

LevyMeasure::LevyMeasure() : node_(std::make_shared<Node>(Node{ZeroN{}})) {}
LevyMeasure::LevyMeasure(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

LevyMeasure LevyMeasure::atoms(std::vector<Atom> atoms) {
    if (atoms.empty()) return LevyMeasure();
    return LevyMeasure(std::make_shared<Node>(Node{AtomsN{merge_atoms(std::move(atoms))}}));
}

LevyMeasure LevyMeasure::atom(double position, double mass) { return atoms({{position, mass}}); }

LevyMeasure LevyMeasure::two_sided_exp(double rate, double left, double right) {
    if (!(rate > 0.0) || left < 0.0 || right < 0.0) throw DomainError("two_sided_exp needs rate > 0, scales >= 0");
    if (left == 0.0 && right == 0.0) return LevyMeasure();
    return LevyMeasure(std::make_shared<Node>(Node{TseN{rate, left, right}}));
}

LevyMeasure LevyMeasure::cp_exp(double intensity, double jump_rate) {
    if (!(intensity > 0.0) || !(jump_rate > 0.0)) throw DomainError("cp_exp needs intensity > 0 and jump rate > 0");
    return LevyMeasure(std::make_shared<Node>(Node{CpN{intensity, jump_rate}}));
}

LevyMeasure LevyMeasure::ml_subordinator(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ml_subordinator needs alpha in (0,1)");
    return LevyMeasure(std::make_shared<Node>(Node{MlN{alpha, 1.0 / std::tgamma(1.0 - alpha)}}));
}

LevyMeasure LevyMeasure::sum(std::vector<LevyMeasure> parts) {
    std::vector<Atom> atoms;
    std::vector<LevyMeasure> rest;
    std::function<void(const LevyMeasure&)> collect = [&](const LevyMeasure& m) {
        std::visit(
            [&](const auto& n) {
                using N = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<N, ZeroN>) {
                } else if constexpr (std::is_same_v<N, AtomsN>) {
                    atoms.insert(atoms.end(), n.atoms.begin(), n.atoms.end());
                } else if constexpr (std::is_same_v<N, SumN>) {
                    for (const auto& p : n.parts) collect(p);
                } else {
                    rest.push_back(m);
                }
            },
            m.node_->v);
    };
    for (const auto& p : parts) collect(p);
    if (!atoms.empty()) rest.insert(rest.begin(), LevyMeasure::atoms(std::move(atoms)));
    if (rest.empty()) return LevyMeasure();
    if (rest.size() == 1) return rest.front();
    return LevyMeasure(std::make_shared<Node>(Node{SumN{std::move(rest)}}));
}

LevyMeasure LevyMeasure::operator+(const LevyMeasure& other) const { return sum({*this, other}); }

LevyMeasure LevyMeasure::image(ImageMap map) const {
    return std::visit(
        [&](const auto& n) -> LevyMeasure {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                return *this;
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                std::vector<Atom> out;
                for (const auto& a : n.atoms) {
                    const double y = apply_map(map, a.position);
                    if (!std::isfinite(y)) throw DomainError("atom has no image under -ln(1+x): position <= -1");
                    out.push_back({y, a.mass});
                }
                return atoms(std::move(out));
            } else if constexpr (std::is_same_v<N, ImageN>) {
                if (n.map == inverse(map)) return n.inner;
                return LevyMeasure(std::make_shared<Node>(Node{ImageN{map, *this}}));
            } else if constexpr (std::is_same_v<N, SumN>) {
                std::vector<LevyMeasure> parts;
                for (const auto& p : n.parts) parts.push_back(p.image(map));
                return sum(std::move(parts));
            } else {
                if (map == ImageMap::NegLogOnePlus && mass(Interval::closed(-kInf, -1.0)) > 0.0)
                    throw DomainError("measure charges (-inf,-1]; no image under -ln(1+x)");
                return LevyMeasure(std::make_shared<Node>(Node{ImageN{map, *this}}));
            }
        },
        node_->v);
}

bool LevyMeasure::is_zero() const { return std::holds_alternative<ZeroN>(node_->v); }

bool LevyMeasure::finite_activity() const { return std::isfinite(total_mass()); }

bool LevyMeasure::finite_variation_jumps() const {
    // Atoms, the exponential families and the ML density (alpha < 1) all have
    // ∫_{|x|<=1}|x|ν < ∞, and both maps are bi-Lipschitz near 0.
    return true;
}

double LevyMeasure::total_mass() const {
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                return 0.0;
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                double s = 0.0;
                for (const auto& a : n.atoms) s += a.mass;
                return s;
            } else if constexpr (std::is_same_v<N, TseN>) {
                return (n.left + n.right) / n.rate;
            } else if constexpr (std::is_same_v<N, CpN>) {
                return n.intensity;
            } else if constexpr (std::is_same_v<N, MlN>) {
                return kInf;
            } else if constexpr (std::is_same_v<N, ImageN>) {
                return n.inner.total_mass();
            } else {
                double s = 0.0;
                for (const auto& p : n.parts) s += p.total_mass();
                return s;
            }
        },
        node_->v);
}

std::vector<Atom> LevyMeasure::atom_list() const {
    return std::visit(
        [&](const auto& n) -> std::vector<Atom> {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, AtomsN>) {
                return n.atoms;
            } else if constexpr (std::is_same_v<N, SumN>) {
                std::vector<Atom> out;
                for (const auto& p : n.parts) {
                    auto a = p.atom_list();
                    out.insert(out.end(), a.begin(), a.end());
                }
                return out;
            } else {
                return {};
            }
        },
        node_->v);
}

double LevyMeasure::mass(const Interval& region) const {
    if (region.empty()) return 0.0;
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                return 0.0;
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                double s = 0.0;
                for (const auto& a : n.atoms)
                    if (region.contains(a.position)) s += a.mass;
                return s;
            } else if constexpr (std::is_same_v<N, TseN>) {
                double s = 0.0;
                const double a = n.rate;
                const double r_lo = std::max(region.lo, 0.0), r_hi = region.hi;
                if (r_lo < r_hi) s += n.right / a * (std::exp(-a * r_lo) - std::exp(-a * r_hi));
                const double l_lo = region.lo, l_hi = std::min(region.hi, 0.0);
                if (l_lo < l_hi) s += n.left / a * (std::exp(a * l_hi) - std::exp(a * l_lo));
                return s;
            } else if constexpr (std::is_same_v<N, CpN>) {
                const double lo = std::max(region.lo, 0.0), hi = region.hi;
                if (!(lo < hi)) return 0.0;
                return n.intensity * (std::exp(-n.jump_rate * lo) - std::exp(-n.jump_rate * hi));
            } else if constexpr (std::is_same_v<N, MlN>) {
                const double lo = std::max(region.lo, 0.0), hi = region.hi;
                if (!(lo < hi)) return 0.0;
                if (lo == 0.0) return kInf;
                return n.tail(lo) - n.tail(hi);
            } else if constexpr (std::is_same_v<N, ImageN>) {
                return n.inner.mass(preimage(n.map, region));
            } else {
                double s = 0.0;
                for (const auto& p : n.parts) s += p.mass(region);
                return s;
            }
        },
        node_->v);
}

double LevyMeasure::tail_plus(double x) const { return mass(Interval::open(x, kInf)); }
double LevyMeasure::tail_minus(double x) const { return mass(Interval::open(-kInf, -x)); }

quad::Result<double> LevyMeasure::integrate_result(const RealFn& f, const Interval& region,
                                                   std::span<const double> kinks, quad::Tolerance tol) const {
    return integrate_node<double>(*node_, f, region, kinks, tol);
}

quad::Result<cplx> LevyMeasure::integrate_complex_result(const ComplexFn& f, const Interval& region,
                                                         std::span<const double> kinks, quad::Tolerance tol) const {
    return integrate_node<cplx>(*node_, f, region, kinks, tol);
}

double LevyMeasure::integrate(const RealFn& f, const Interval& region, std::span<const double> kinks) const {
    return quad::value_or_throw(integrate_result(f, region, kinks), "jump-measure integral");
}

cplx LevyMeasure::integrate_complex(const ComplexFn& f, const Interval& region, std::span<const double> kinks) const {
    return quad::value_or_throw(integrate_complex_result(f, region, kinks), "jump-measure integral");
}

bool LevyMeasure::finite_power_tail(double p) const {
    return std::visit(
        [&](const auto& n) -> bool {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ImageN>) {
                if (n.map == ImageMap::ExpMinusOne) return n.inner.finite_exp_moment_left(p);
                // |ln(1+y)|^p is harmless at +∞; near -1 only if no mass there.
                return n.inner.mass(Interval::open(-1.0, std::exp(-1.0) - 1.0)) == 0.0;
            } else if constexpr (std::is_same_v<N, SumN>) {
                return std::all_of(n.parts.begin(), n.parts.end(),
                                   [&](const LevyMeasure& m) { return m.finite_power_tail(p); });
            } else {
                return true;
            }
        },
        node_->v);
}

bool LevyMeasure::finite_exp_moment_left(double p) const {
    return std::visit(
        [&](const auto& n) -> bool {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, TseN>) {
                return n.left == 0.0 || n.rate > p;
            } else if constexpr (std::is_same_v<N, ImageN>) {
                if (n.map == ImageMap::NegLogOnePlus) return n.inner.finite_power_tail(p);
                // x < -1 means e^{-y} - 1 < -1 + ... : image lives on (-1,∞), left tail bounded.
                return true;
            } else if constexpr (std::is_same_v<N, SumN>) {
                return std::all_of(n.parts.begin(), n.parts.end(),
                                   [&](const LevyMeasure& m) { return m.finite_exp_moment_left(p); });
            } else {
                return true;
            }
        },
        node_->v);
}

double LevyMeasure::big_jump_rate(double eps) const {
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, MlN>) {
                if (!(eps > 0.0)) throw ConfigError("infinite-activity jump measure requires eps > 0");
                return n.tail(eps);
            } else if constexpr (std::is_same_v<N, ImageN>) {
                return n.inner.big_jump_rate(eps);
            } else if constexpr (std::is_same_v<N, SumN>) {
                double s = 0.0;
                for (const auto& p : n.parts) s += p.big_jump_rate(eps);
                return s;
            } else {
                return total_mass();
            }
        },
        node_->v);
}

double LevyMeasure::sample_big_jump(double eps, Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                throw DomainError("cannot sample a jump from the zero measure");
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                double u = unif(rng) * total_mass();
                for (const auto& a : n.atoms) {
                    if (u < a.mass) return a.position;
                    u -= a.mass;
                }
                return n.atoms.back().position;
            } else if constexpr (std::is_same_v<N, TseN>) {
                std::exponential_distribution<double> e(n.rate);
                const double size = e(rng);
                return unif(rng) * (n.left + n.right) < n.right ? size : -size;
            } else if constexpr (std::is_same_v<N, CpN>) {
                std::exponential_distribution<double> e(n.jump_rate);
                return e(rng);
            } else if constexpr (std::is_same_v<N, MlN>) {
                const double u = 1.0 - unif(rng);
                const double w_eps = -std::expm1(-eps / n.alpha);
                const double excess = std::expm1(-n.alpha * std::log(w_eps));
                const double r = 1.0 + u * excess;
                const double w = std::pow(r, -1.0 / n.alpha);
                return -n.alpha * std::log1p(-w);
            } else if constexpr (std::is_same_v<N, ImageN>) {
                return apply_map(n.map, n.inner.sample_big_jump(eps, rng));
            } else {
                double u = unif(rng) * big_jump_rate(eps);
                for (const auto& p : n.parts) {
                    const double r = p.big_jump_rate(eps);
                    if (u < r) return p.sample_big_jump(eps, rng);
                    u -= r;
                }
                return n.parts.back().sample_big_jump(eps, rng);
            }
        },
        node_->v);
}

double LevyMeasure::integrate_small(const RealFn& f, double eps) const {
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, MlN>) {
                if (!(eps > 0.0)) throw ConfigError("infinite-activity jump measure requires eps > 0");
                auto g = [&](double x) { return f(x) * n.density(x); };
                return quad::value_or_throw(integrate_half<double>(g, 0.0, eps, {}, true), "small-jump integral");
            } else if constexpr (std::is_same_v<N, ImageN>) {
                const ImageMap map = n.map;
                return n.inner.integrate_small([&](double x) { return f(apply_map(map, x)); }, eps);
            } else if constexpr (std::is_same_v<N, SumN>) {
                double s = 0.0;
                for (const auto& p : n.parts) s += p.integrate_small(f, eps);
                return s;
            } else {
                return 0.0;
            }
        },
        node_->v);
}

std::string LevyMeasure::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& n) {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                os << "zero";
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                os << "atoms[";
                for (std::size_t i = 0; i < n.atoms.size(); ++i)
                    os << (i ? "," : "") << "(" << n.atoms[i].position << ":" << n.atoms[i].mass << ")";
                os << "]";
            } else if constexpr (std::is_same_v<N, TseN>) {
                os << "two_sided_exp(rate=" << n.rate << ",left=" << n.left << ",right=" << n.right << ")";
            } else if constexpr (std::is_same_v<N, CpN>) {
                os << "cp_exp(intensity=" << n.intensity << ",jump_rate=" << n.jump_rate << ")";
            } else if constexpr (std::is_same_v<N, MlN>) {
                os << "ml_subordinator(alpha=" << n.alpha << ")";
            } else if constexpr (std::is_same_v<N, ImageN>) {
                os << (n.map == ImageMap::ExpMinusOne ? "image_h(" : "image_g(") << n.inner.describe() << ")";
            } else {
                os << "sum(";
                for (std::size_t i = 0; i < n.parts.size(); ++i) os << (i ? "+" : "") << n.parts[i].describe();
                os << ")";
            }
        },
        node_->v);
    return os.str();
}

// ---------------------------------------------------------------------------

double truncated_mean(const LevyMeasure& nu) {
    return nu.integrate([](double x) { return x; }, Interval::closed(-1.0, 1.0));
}

LevyTriplet LevyTriplet::from_location(double sigma2, LevyMeasure nu, double gamma) {
    if (!(sigma2 >= 0.0)) throw DomainError("sigma2 must be nonnegative");
    LevyTriplet t{sigma2, std::move(nu), gamma, std::nullopt};
    if (t.nu.finite_variation_jumps()) t.gamma0 = gamma - truncated_mean(t.nu);
    return t;
}

LevyTriplet LevyTriplet::from_drift(double sigma2, LevyMeasure nu, double drift0) {
    if (!(sigma2 >= 0.0)) throw DomainError("sigma2 must be nonnegative");
    const double g = drift0 + truncated_mean(nu);
    return LevyTriplet{sigma2, std::move(nu), g, drift0};
}

std::string LevyTriplet::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << "(sigma2=" << sigma2 << ", nu=" << nu.describe() << ", gamma=" << gamma;
    if (gamma0) os << ", gamma0=" << *gamma0;
    os << ")";
    return os.str();
}

namespace {

cplx atom_exponent(const std::vector<Atom>& atoms, double z) {
    cplx s{};
    for (const auto& a : atoms) {
        const double zx = z * a.position;
        cplx term{std::cos(zx) - 1.0, std::sin(zx)};
        if (std::abs(a.position) <= 1.0) term -= kI * zx;
        s += a.mass * term;
    }
    return s;
}

cplx quadrature_exponent(const LevyMeasure& nu, double z) {
    ComplexFn inner = [z](double x) {
        const double zx = z * x;
        const double s = std::sin(0.5 * zx);
        return cplx{-2.0 * s * s, std::sin(zx) - zx};
    };
    ComplexFn outer = [z](double x) {
        const double zx = z * x;
        const double s = std::sin(0.5 * zx);
        return cplx{-2.0 * s * s, std::sin(zx)};
    };
    return nu.integrate_complex(inner, Interval::closed(-1.0, 1.0), std::array{0.0}) +
           nu.integrate_complex(outer, Interval::open(-kInf, -1.0)) +
           nu.integrate_complex(outer, Interval::open(1.0, kInf));
}

// ∫_0^1 x e^{-a x} dx
double first_moment_unit(double a) {
    if (a < 1e-4) return 0.5 - a / 3.0 + a * a / 8.0;
    return (1.0 - (1.0 + a) * std::exp(-a)) / (a * a);
}

}  // namespace

cplx jump_exponent(const LevyMeasure& nu, double z) {
    return std::visit(
        [&](const auto& n) -> cplx {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                return {};
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                return atom_exponent(n.atoms, z);
            } else if constexpr (std::is_same_v<N, TseN>) {
                const double a = n.rate;
                const double m1 = first_moment_unit(a);
                const cplx right = n.right * (1.0 / (a - kI * z) - 1.0 / a) - kI * z * n.right * m1;
                const cplx left = n.left * (1.0 / (a + kI * z) - 1.0 / a) + kI * z * n.left * m1;
                return right + left;
            } else if constexpr (std::is_same_v<N, CpN>) {
                const double a = n.jump_rate;
                return n.intensity * (kI * z / (a - kI * z)) - kI * z * n.intensity * a * first_moment_unit(a);
            } else if constexpr (std::is_same_v<N, SumN>) {
                cplx s{};
                for (const auto& p : n.parts) s += jump_exponent(p, z);
                return s;
            } else {
                return quadrature_exponent(nu, z);
            }
        },
        nu.node_->v);
}

cplx jump_exponent_quadrature(const LevyMeasure& nu, double z) { return quadrature_exponent(nu, z); }

double laplace_jump_exponent(const LevyMeasure& nu, double u) {
    return std::visit(
        [&](const auto& n) -> double {
            using N = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<N, ZeroN>) {
                return 0.0;
            } else if constexpr (std::is_same_v<N, AtomsN>) {
                double s = 0.0;
                for (const auto& a : n.atoms) s += -a.mass * std::expm1(-u * a.position);
                return s;
            } else if constexpr (std::is_same_v<N, CpN>) {
                return n.intensity * u / (n.jump_rate + u);
            } else if constexpr (std::is_same_v<N, SumN>) {
                double s = 0.0;
                for (const auto& p : n.parts) s += laplace_jump_exponent(p, u);
                return s;
            } else {
                return nu.integrate([u](double x) { return -std::expm1(-u * x); }, Interval::real_line(),
                                    std::array{0.0});
            }
        },
        nu.node_->v);
}

cplx char_exponent(const LevyTriplet& t, double z) {
    return kI * (t.gamma * z) - 0.5 * t.sigma2 * z * z + jump_exponent(t.nu, z);
}

LevyTriplet xi_to_U(const LevyTriplet& xi) {
    // Location of U under truncation 1_{|y|<=1}, where |h(x)| <= 1 iff x >= -ln 2:
    // gamma_U = -gamma_xi + sigma^2/2 + ∫ [x 1_{|x|<=1} + h(x) 1_{x >= -ln 2}] nu_xi(dx).
    const double ln2 = std::numbers::ln2;
    const auto& nu = xi.nu;
    double corr = nu.integrate([](double x) { return x; }, Interval::right_open(-1.0, -ln2));
    corr += nu.integrate([](double x) { return x + std::expm1(-x); }, Interval::closed(-ln2, 1.0), std::array{0.0});
    corr += nu.integrate([](double x) { return std::expm1(-x); }, Interval::open(1.0, kInf));
    const double gamma_u = -xi.gamma + 0.5 * xi.sigma2 + corr;
    return LevyTriplet::from_location(xi.sigma2, nu.image(ImageMap::ExpMinusOne), gamma_u);
}

LevyTriplet U_to_xi(const LevyTriplet& u) {
    if (u.nu.mass(Interval::closed(-kInf, -1.0)) > 0.0)
        throw DomainError("U jump measure charges (-inf,-1]; no xi preimage");
    const double lo = std::exp(-1.0) - 1.0, hi = std::numbers::e - 1.0;
    const auto& nu = u.nu;
    double corr = nu.integrate([](double y) { return y; }, Interval::open(-1.0, lo));
    corr += nu.integrate([](double y) { return y - std::log1p(y); }, Interval::closed(lo, 1.0), std::array{0.0});
    corr += nu.integrate([](double y) { return -std::log1p(y); }, Interval::left_open(1.0, hi));
    const double gamma_xi = -u.gamma + 0.5 * u.sigma2 + corr;
    return LevyTriplet::from_location(u.sigma2, nu.image(ImageMap::NegLogOnePlus), gamma_xi);
}

LevyTriplet kill(const LevyTriplet& u, double q) {
    if (!(q >= 0.0)) throw DomainError("killing rate must be nonnegative");
    if (u.nu.mass(Interval::closed(-kInf, -1.0)) > 0.0)
        throw DomainError("U jump measure already charges (-inf,-1]");
    if (q == 0.0) return u;
    LevyTriplet out{u.sigma2, u.nu + LevyMeasure::atom(-1.0, q), u.gamma - q, u.gamma0};
    return out;
}

bool finite_mean(const LevyTriplet& t) { return t.nu.finite_power_tail(1.0); }

std::optional<double> mean(const LevyTriplet& t) {
    if (!finite_mean(t)) return std::nullopt;
    const auto id = [](double x) { return x; };
    return t.gamma + t.nu.integrate(id, Interval::open(-kInf, -1.0)) + t.nu.integrate(id, Interval::open(1.0, kInf));
}

std::optional<MeanVar> mean_var(const LevyTriplet& t) {
    if (!t.nu.finite_power_tail(2.0)) return std::nullopt;
    const double m = *mean(t);
    const double v = t.sigma2 + t.nu.integrate([](double x) { return x * x; }, Interval::real_line(), std::array{0.0});
    return MeanVar{m, v};
}

bool second_moment_condition(const LevyTriplet& xi, const LevyTriplet& eta, double q) {
    const auto mu = mean_var(xi_to_U(xi));
    const auto me = mean_var(eta);
    if (!mu || !me) return false;
    return 2.0 * mu->mean + mu->variance < q;
}

bool unkilled_convergence_sufficient(const LevyTriplet& xi, const LevyTriplet& eta) {
    const auto m = mean(xi);
    return m && *m > 0.0 && finite_mean(eta);
}

Structure classify(const LevyTriplet& t) {
    if (t.nu.is_zero()) return t.sigma2 == 0.0 ? Structure::Deterministic : Structure::BrownianDrift;
    if (t.nu.finite_activity()) return t.sigma2 == 0.0 ? Structure::CompoundPoissonDrift : Structure::JumpDiffusion;
    return Structure::InfiniteActivity;
}

const char* to_string(Structure s) {
    switch (s) {
        case Structure::Deterministic: return "deterministic";
        case Structure::BrownianDrift: return "brownian_drift";
        case Structure::CompoundPoissonDrift: return "compound_poisson_drift";
        case Structure::JumpDiffusion: return "jump_diffusion";
        case Structure::InfiniteActivity: return "infinite_activity";
    }
    return "?";
}

const char* to_string(Role r) {
    switch (r) {
        case Role::Xi: return "xi";
        case Role::Eta: return "eta";
        case Role::U: return "U";
        case Role::Utilde: return "Utilde";
    }
    return "?";
}

ProcessSpec ProcessSpec::make(LevyTriplet t, Role role) {
    const Structure s = classify(t);
    return ProcessSpec{std::move(t), role, s};
}

LevyTriplet deterministic(double drift) { return LevyTriplet::from_drift(0.0, LevyMeasure(), drift); }

LevyTriplet brownian(double sigma2, double drift0) { return LevyTriplet::from_drift(sigma2, LevyMeasure(), drift0); }

LevyTriplet poisson(double intensity, double jump) {
    return LevyTriplet::from_drift(0.0, LevyMeasure::atom(jump, intensity), 0.0);
}

}  // namespace kef
