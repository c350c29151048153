#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kef/estimators.hpp"
#include "kef/levy.hpp"

namespace kef {

/// Ũ: the process U of ξ with an atom of mass q added at -1.
LevyTriplet util_triplet(const LevyTriplet& xi, double q);

/// Tail and integrated-tail functions of η and Ũ. The plain variants use
/// the truncation at |y| = 1, the FV variants the tails from 0, the FM
/// variants the untruncated jump measures. Immutable and cheap to copy.
class AuxFunctions {
public:
    AuxFunctions(LevyTriplet eta, LevyTriplet util);

    double b_eta(double z) const;
    double s_eta(double z) const;
    double b_util(double z) const;  ///< z >= 1
    double s_util(double z) const;  ///< z >= 0

    bool has_fv() const { return fv_; }
    bool has_fm() const { return fm_; }
    /// Throw DomainError unless both jump parts have finite variation.
    double b_eta_fv(double z) const;
    double b_util_fv(double z) const;
    /// Throw DomainError unless both jump measures have a finite first moment.
    double s_eta_fm(double z) const;
    double s_util_fm(double z) const;

    /// ∫_0^w B_η(s) ds and ∫_1^r B_Ũ(s) ds.
    double b_eta_integral(double w) const;
    double b_util_integral(double r) const;

    /// ν_η(ℝ∖[-1,1]) and ν_Ũ((1,∞)), the bounds on |B_η| and |B_Ũ|.
    double b_eta_bound() const;
    double b_util_bound() const;

    const LevyTriplet& eta() const { return eta_; }
    const LevyTriplet& util() const { return util_; }

private:
    LevyTriplet eta_, util_;
    bool fv_, fm_;
};

AuxFunctions build_aux(const LevyTriplet& eta, const LevyTriplet& util);

struct CheckOptions {
    enum class KMode { Auto, Estimate, Explicit };

    double tol = 1e-8;
    /// Accept the law as having a finite second moment without the sufficient check.
    bool assume_second_moment = false;
    KMode k_mode = KMode::Auto;
    /// Standard errors of a sample mean charged to the budget.
    double mc_sigmas = 4.0;
    /// KDE bandwidth for empirical laws; <= 0 selects the rule-of-thumb value.
    double bandwidth = 0.0;
    /// Worker count for grid points; 0 selects default_threads().
    unsigned threads = 0;
};

struct ResidualReport {
    std::string equation;
    std::vector<double> grid;
    std::vector<double> residuals;
    std::optional<double> K;
    double norm_sup = 0.0;
    double norm_l1 = 0.0;
    double tolerance = 0.0;
    double budget = 0.0;  ///< quadrature error estimates plus Monte Carlo and KDE terms
    bool pass = false;
    std::vector<std::string> notes;
};

std::string to_json(const ResidualReport& r);

// Residual operators. Each throws DomainError when its preconditions fail.

/// ψ_η(u)φ(u) against the Ũ form of the right-hand side. For laws with φ′ and
/// φ″ the expectation form is evaluated as well and the larger discrepancy
/// is reported.
ResidualReport residual_cf(std::span<const double> u, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                           const LawRep& law, const CheckOptions& opt = {});
/// Laplace-transform equation, η a subordinator.
ResidualReport residual_laplace(std::span<const double> u, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                                const LawRep& law, const CheckOptions& opt = {});
/// Density equation for z > 0; ξ with finite-variation jumps, η a subordinator.
/// With σ_ξ² > 0 it assumes, without checking, that z²f(z) is absolutely continuous.
ResidualReport residual_density_laplace(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta,
                                        double q, const LawRep& law, const CheckOptions& opt = {});
/// General equation for μ; G(z) minus its median over the grid.
ResidualReport residual_mu(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                           const LawRep& law, const CheckOptions& opt = {});
/// Finite first moments; explicit K when E Ũ_1 < 0.
ResidualReport residual_mu_fm(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                              const LawRep& law, const CheckOptions& opt = {});
/// Finite variation, no Gaussian parts.
ResidualReport residual_mu_fv(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                              const LawRep& law, const CheckOptions& opt = {});
/// First-order equation for the density; finite-variation jumps, some Gaussian part.
ResidualReport residual_density_diff(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta,
                                     double q, const LawRep& law, const CheckOptions& opt = {});

/// The profile G(z) of residual_mu before K is removed, with per-point budget.
struct Profile {
    std::vector<double> value;
    std::vector<double> budget;
};
Profile mu_profile(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                   const LawRep& law, const CheckOptions& opt = {});
/// Right-hand side of the finite-variation equation as a density in z.
Profile mu_fv_profile(std::span<const double> z, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                      const LawRep& law, const CheckOptions& opt = {});

/// Both expressions for K in the finite-moment equation.
struct KPair {
    double from_positive;  ///< -∫_{(0,∞)} (γ¹_η + xγ¹_Ũ) μ(dx)
    double from_negative;  ///< ∫_{(-∞,0]} (γ¹_η + xγ¹_Ũ) μ(dx)
    double budget;
};
KPair explicit_k(const LevyTriplet& xi, const LevyTriplet& eta, double q, const LawRep& law,
                 const CheckOptions& opt = {});

/// Smooth bump (1 - t²)^4 on [a, b], t the affine image of [a, b] on [-1, 1],
/// scaled by `height`.
struct PolyBump {
    double a = 0.0;
    double b = 1.0;
    double height = 1.0;

    double operator()(double x) const;
    double d1(double x) const;
    double d2(double x) const;
};

struct Pairing {
    double value;
    double budget;
};
/// ∫ A f dμ for the generator A of the killed generalized Ornstein-Uhlenbeck
/// process; zero for its invariant law.
Pairing generator_pairing(const PolyBump& f, const LevyTriplet& xi, const LevyTriplet& eta, double q,
                          const LawRep& law, const CheckOptions& opt = {});

/// Left-hand side at v > 0 of the tail equation for q = 0 in the form that
/// omits the contribution of the negative half line; nonzero when η has
/// jumps of both signs.
double tail_equation_value(double v, const LevyTriplet& xi, const LevyTriplet& eta, const LawRep& law);

/// Points ±10^k, `per_decade` per decade between 10^lo_exp and 10^hi_exp, plus
/// a refinement near ±1. Points closer than `gap` to a kink move away by half
/// a step.
std::vector<double> log_symmetric_grid(double lo_exp, double hi_exp, int per_decade, bool symmetric = true,
                                       std::span<const double> kinks = {}, double gap = 1e-3);
/// n equispaced points on [a, b] with the same kink avoidance.
std::vector<double> linear_grid(double a, double b, int n, std::span<const double> kinks = {}, double gap = 1e-3);

}  // namespace kef
