#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kef/levy.hpp"
#include "kef/random.hpp"

namespace kef {

enum class SmallJumpMode { DropCompensate, GaussianApprox };

/// Killed: integrate up to an independent Exp(q) time. Fixed: up to T (q = 0).
struct Horizon {
    enum class Kind { Killed, Fixed };
    Kind kind = Kind::Killed;
    double T = 0.0;

    static Horizon killed() { return {}; }
    static Horizon fixed(double T) { return {Kind::Fixed, T}; }
};

struct SimConfig {
    double h = 1e-3;    ///< step for Brownian segments
    double eps = 1e-4;  ///< small-jump cutoff for infinite-activity measures
    Horizon horizon;
    SmallJumpMode small_jumps = SmallJumpMode::DropCompensate;
    std::uint64_t master_seed = 0;
    /// Skip the sufficient convergence check when q = 0.
    bool assume_convergence = false;
};

/// Error indicators attached to a batch. None of them is a rigorous bound on
/// the law; they record what the discretization gave up.
struct BiasNote {
    double eps_xi = 0.0;   ///< ∫_{small} |x| ν_ξ(dx), mass replaced by its mean
    double eps_eta = 0.0;  ///< ∫_{small} |y| ν_η(dy)
    double step = 0.0;     ///< h when some segment is time-stepped, else 0
    double horizon = 0.0;  ///< exp(-T E ξ_1) for a fixed horizon, 0 when killed
    bool convergence_assumed = false;
};

enum class Sampler { Direct, Sde };
const char* to_string(Sampler s);

struct SampleBatch {
    std::vector<double> values;
    std::size_t n = 0;
    BiasNote bias;
    std::uint64_t seed = 0;
    Sampler sampler = Sampler::Direct;
};

struct Increment {
    double value = 0.0;
    std::vector<double> jump_times;  ///< offsets in [0, dt) of the simulated big jumps
};

/// One increment over dt: drift, Gaussian part, big jumps at exact times and
/// small jumps replaced according to `mode`.
Increment sample_increment(const ProcessSpec& spec, double dt, double eps, Rng& rng,
                           SmallJumpMode mode = SmallJumpMode::DropCompensate);

/// ∫_{small} |x| ν(dx) for the truncation at eps.
double small_jump_bound(const LevyMeasure& nu, double eps);

BiasNote bias_note(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg);

struct KefDraw {
    double value;
    double horizon;  ///< τ, the first killing time, or T
};

/// Precomputed drift and jump data for repeated draws of V_{q,ξ,η}.
class KefSampler {
public:
    KefSampler(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Sampler kind);

    KefDraw draw(Rng& rng) const;
    const BiasNote& bias() const { return bias_; }
    Sampler kind() const { return kind_; }

    struct Driver {
        double drift = 0.0;  ///< γ⁰ plus the mean of the dropped small jumps
        double sigma = 0.0;
        double rate = 0.0;   ///< intensity of simulated jumps
        LevyMeasure nu;
        double eps = 0.0;
    };

private:
    KefDraw draw_direct(Rng& rng) const;
    KefDraw draw_sde(Rng& rng) const;

    Sampler kind_;
    double q_;
    SimConfig cfg_;
    Driver xi_, eta_, u_;
    BiasNote bias_;
};

KefDraw draw_kef_direct(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng);
double simulate_kef_direct(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng);
KefDraw draw_kef_sde(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng);
double simulate_kef_sde(const ProcessSpec& xi, const ProcessSpec& eta, double q, const SimConfig& cfg, Rng& rng);

struct GouPath {
    std::vector<double> t;
    std::vector<double> x;
};

/// X_t = e^{-ξ_t}(∫_0^t e^{ξ_{s-}} dη_s + x0) on the grid 0, h, 2h, ..., T.
GouPath simulate_gou_path(const ProcessSpec& xi, const ProcessSpec& eta, double x0, double T, const SimConfig& cfg,
                          Rng& rng);

/// Worker count from KEF_THREADS, else the hardware concurrency.
unsigned default_threads();

/// n draws; draw i uses substream(cfg.master_seed, i), so the values do not
/// depend on `threads`.
SampleBatch batch(std::size_t n, Sampler kind, const ProcessSpec& xi, const ProcessSpec& eta, double q,
                  const SimConfig& cfg, unsigned threads = 0);

/// CSV with header "v" and one value per row.
void write_csv(const SampleBatch& b, const std::string& path);
std::vector<double> read_csv(const std::string& path);

}  // namespace kef
