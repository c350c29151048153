#include "kef/path_sim.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include "kef/errors.hpp"

namespace kef {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Driver = KefSampler::Driver;

Driver make_driver(const LevyTriplet& t, double eps, SmallJumpMode mode) {
    if (!t.gamma0) throw DomainError("simulation needs a finite-variation jump part");
    Driver d;
    d.nu = t.nu;
    d.eps = eps;
    double var = t.sigma2;
    d.drift = *t.gamma0;
    if (!t.nu.is_zero()) {
        d.rate = t.nu.big_jump_rate(eps);
        if (!t.nu.finite_activity()) {
            d.drift += t.nu.integrate_small([](double x) { return x; }, eps);
            if (mode == SmallJumpMode::GaussianApprox)
                var += t.nu.integrate_small([](double x) { return x * x; }, eps);
        }
    }
    d.sigma = std::sqrt(var);
    return d;
}

// ∫_0^Δ e^{cs} ds.
double exp_integral(double c, double dt) {
    const double x = c * dt;
    return x == 0.0 ? dt : std::expm1(x) / c;
}

// Running state of ∫ e^{L_{s-}} dη_s where L has drift `slope` and volatility
// `vol` between jumps.
struct Integrator {
    double L = 0.0;
    double V = 0.0;
    double slope = 0.0;
    double vol = 0.0;
    double h = 0.0;
    const Driver* eta = nullptr;

    void advance(double dt, Rng& rng) {
        if (!(dt > 0.0)) return;
        std::normal_distribution<double> normal;
        if (vol == 0.0) {
            // L is linear on the segment: integrate exactly.
            double inc = eta->drift * exp_integral(slope, dt);
            if (eta->sigma > 0.0) inc += eta->sigma * std::sqrt(exp_integral(2.0 * slope, dt)) * normal(rng);
            V += std::exp(L) * inc;
            L += slope * dt;
            return;
        }
        const auto steps = static_cast<long>(std::ceil(dt / h - 1e-9));
        const double d = dt / static_cast<double>(std::max(1L, steps));
        const double sd = std::sqrt(d);
        for (long k = 0; k < std::max(1L, steps); ++k) {
            double deta = eta->drift * d;
            if (eta->sigma > 0.0) deta += eta->sigma * sd * normal(rng);
            V += std::exp(L) * deta;
            L += slope * d + vol * sd * normal(rng);
        }
    }
};

void check_setup(double q, const SimConfig& cfg) {
    if (!(cfg.h > 0.0)) throw ConfigError("step h must be positive");
    if (!(cfg.eps >= 0.0)) throw ConfigError("eps must be nonnegative");
    if (q < 0.0) throw DomainError("q must be nonnegative");
    if (cfg.horizon.kind == Horizon::Kind::Killed && !(q > 0.0))
        throw ConfigError("a killed horizon needs q > 0; use a fixed horizon for q = 0");
    if (cfg.horizon.kind == Horizon::Kind::Fixed) {
        if (q != 0.0) throw ConfigError("a fixed horizon is only used for q = 0");
        if (!(cfg.horizon.T > 0.0) || !std::isfinite(cfg.horizon.T))
            throw ConfigError("fixed horizon T must be positive and finite");
    }
}

}  // namespace

const char* to_string(Sampler s) { return s == Sampler::Direct ? "direct" : "sde"; }

Increment sample_increment(const ProcessSpec& spec, double dt, double eps, Rng& rng, SmallJumpMode mode) {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    const Driver d = make_driver(spec.triplet, eps, mode);
    Increment out;
    out.value = d.drift * dt;
    if (d.sigma > 0.0) out.value += d.sigma * std::sqrt(dt) * std::normal_distribution<double>()(rng);
    if (d.rate > 0.0) {
        std::exponential_distribution<double> gap(d.rate);
        for (double s = gap(rng); s < dt; s += gap(rng)) {
            out.value += d.nu.sample_big_jump(eps, rng);
            out.jump_times.push_back(s);
        }
    }
    return out;
}

double small_jump_bound(const LevyMeasure& nu, double eps) {
    if (nu.is_zero() || nu.finite_activity()) return 0.0;
    return nu.integrate_small([](double x) { return std::abs(x); }, eps);
}

BiasNote bias_note(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg) {
    BiasNote b;
    b.eps_xi = small_jump_bound(xi.triplet.nu, cfg.eps);
    b.eps_eta = small_jump_bound(eta.triplet.nu, cfg.eps);
    const bool gauss_small = cfg.small_jumps == SmallJumpMode::GaussianApprox && b.eps_xi > 0.0;
    b.step = (xi.triplet.sigma2 > 0.0 || gauss_small) ? cfg.h : 0.0;
    if (cfg.horizon.kind == Horizon::Kind::Fixed) {
        const auto m = mean(xi.triplet);
        b.horizon = m ? std::exp(-cfg.horizon.T * *m) : 1.0;
    }
    b.convergence_assumed = q == 0.0 && cfg.assume_convergence;
    return b;
}

KefSampler::KefSampler(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Sampler kind)
    : kind_(kind), q_(q), cfg_(cfg) {
    check_setup(q, cfg);
    if (kind == Sampler::Sde && !(q > 0.0)) throw DomainError("the SDE sampler needs q > 0");
    if (q == 0.0 && !cfg.assume_convergence && !unkilled_convergence_sufficient(xi.triplet, eta.triplet))
        throw ConfigError("convergence of the unkilled functional is not established (E xi_1 > 0 and E|eta_1| < inf); "
                          "pass assume_convergence to override");
    xi_ = make_driver(xi.triplet, cfg.eps, cfg.small_jumps);
    eta_ = make_driver(eta.triplet, cfg.eps, cfg.small_jumps);
    if (kind == Sampler::Sde) u_ = make_driver(xi_to_U(xi.triplet), cfg.eps, cfg.small_jumps);
    bias_ = bias_note(xi, eta, q, cfg);
}

KefDraw KefSampler::draw(Rng& rng) const { return kind_ == Sampler::Direct ? draw_direct(rng) : draw_sde(rng); }

KefDraw KefSampler::draw_direct(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double tau =
        cfg_.horizon.kind == Horizon::Kind::Killed ? std::exponential_distribution<double>(q_)(rng) : cfg_.horizon.T;
    Integrator in{0.0, 0.0, -xi_.drift, xi_.sigma, cfg_.h, &eta_};
    const double lambda = xi_.rate + eta_.rate;
    std::exponential_distribution<double> gap(lambda > 0.0 ? lambda : 1.0);
    double t = 0.0;
    while (true) {
        const double next = lambda > 0.0 ? t + gap(rng) : kInf;
        if (next >= tau) {
            in.advance(tau - t, rng);
            break;
        }
        in.advance(next - t, rng);
        t = next;
        if (unif(rng) * lambda < xi_.rate)
            in.L -= xi_.nu.sample_big_jump(cfg_.eps, rng);
        else
            in.V += std::exp(in.L) * eta_.nu.sample_big_jump(cfg_.eps, rng);
    }
    return {in.V, tau};
}

KefDraw KefSampler::draw_sde(Rng& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // log E(U) between jumps, then the killing clock N of rate q.
    Integrator in{0.0, 0.0, u_.drift - 0.5 * u_.sigma * u_.sigma, u_.sigma, cfg_.h, &eta_};
    const double lambda = u_.rate + eta_.rate + q_;
    std::exponential_distribution<double> gap(lambda);
    double t = 0.0;
    while (true) {
        const double next = t + gap(rng);
        in.advance(next - t, rng);
        t = next;
        const double pick = unif(rng) * lambda;
        if (pick < q_) break;  // ΔŨ = -1: E(Ũ) is 0 from here on
        if (pick < q_ + u_.rate)
            in.L += std::log1p(u_.nu.sample_big_jump(cfg_.eps, rng));
        else
            in.V += std::exp(in.L) * eta_.nu.sample_big_jump(cfg_.eps, rng);
    }
    return {in.V, t};
}

KefDraw draw_kef_direct(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng) {
    return KefSampler(xi, eta, q, cfg, Sampler::Direct).draw(rng);
}

double simulate_kef_direct(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng) {
    return draw_kef_direct(xi, eta, q, cfg, rng).value;
}

KefDraw draw_kef_sde(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng) {
    if (!(q > 0.0)) throw DomainError("the SDE sampler needs q > 0");
    SimConfig c = cfg;
    c.horizon = Horizon::killed();
    return KefSampler(xi, eta, q, c, Sampler::Sde).draw(rng);
}

double simulate_kef_sde(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng) {
    return draw_kef_sde(xi, eta, q, cfg, rng).value;
}

GouPath simulate_gou_path(const ProcessSpec& xi, const ProcessSpec& eta, double x0, double T, const SimConfig& cfg,
                          Rng& rng) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("T must be positive and finite");
    if (!(cfg.h > 0.0)) throw ConfigError("step h must be positive");
    const Driver dx = make_driver(xi.triplet, cfg.eps, cfg.small_jumps);
    const Driver de = make_driver(eta.triplet, cfg.eps, cfg.small_jumps);
    // Track ξ_t as L and ∫_0^t e^{ξ_{s-}} dη_s as V.
    Integrator in{0.0, 0.0, dx.drift, dx.sigma, cfg.h, &de};
    const double lambda = dx.rate + de.rate;
    std::exponential_distribution<double> gap(lambda > 0.0 ? lambda : 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const auto n = static_cast<std::size_t>(std::ceil(T / cfg.h - 1e-9));
    GouPath path;
    path.t.reserve(n + 1);
    path.x.reserve(n + 1);
    path.t.push_back(0.0);
    path.x.push_back(x0);
    double t = 0.0;
    double next = lambda > 0.0 ? gap(rng) : kInf;
    for (std::size_t k = 1; k <= n; ++k) {
        const double grid = k == n ? T : static_cast<double>(k) * cfg.h;
        while (next < grid) {
            in.advance(next - t, rng);
            t = next;
            if (unif(rng) * lambda < dx.rate)
                in.L += dx.nu.sample_big_jump(cfg.eps, rng);
            else
                in.V += std::exp(in.L) * de.nu.sample_big_jump(cfg.eps, rng);
            next = t + gap(rng);
        }
        in.advance(grid - t, rng);
        t = grid;
        path.t.push_back(t);
        path.x.push_back(std::exp(-in.L) * (in.V + x0));
    }
    return path;
}

unsigned default_threads() {
    if (const char* env = std::getenv("KEF_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

SampleBatch batch(std::size_t n, Sampler kind, const ProcessSpec& xi, const ProcessSpec& eta, double q,
                  const SimConfig& cfg, unsigned threads) {
    if (n == 0) throw DomainError("batch size must be at least 1");
    const KefSampler sampler(xi, eta, q, cfg, kind);
    SampleBatch out;
    out.values.resize(n);
    out.n = n;
    out.bias = sampler.bias();
    out.seed = cfg.master_seed;
    out.sampler = kind;

    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads ? threads : default_threads(), n));
    constexpr std::size_t kChunk = 256;
    std::atomic<std::size_t> cursor{0};
    auto work = [&] {
        for (std::size_t start; (start = cursor.fetch_add(kChunk)) < n;) {
            const std::size_t stop = std::min(n, start + kChunk);
            for (std::size_t i = start; i < stop; ++i) {
                Rng rng = substream(cfg.master_seed, i);
                out.values[i] = sampler.draw(rng).value;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    for (double v : out.values)
        if (!std::isfinite(v)) throw NumericFailure("non-finite draw in sample batch", v);
    return out;
}

void write_csv(const SampleBatch& b, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os.precision(17);
    os << "v\n";
    for (double v : b.values) os << v << '\n';
}

std::vector<double> read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    std::string line;
    std::vector<double> out;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == "v") continue;
        }
        out.push_back(std::stod(line));
    }
    return out;
}

}  // namespace kef
