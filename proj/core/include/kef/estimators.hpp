#pragma once

#include <complex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kef/levy.hpp"
#include "kef/path_sim.hpp"

namespace kef {

/// Law given by formulas. `density` is the absolutely continuous part; an
/// atom at 0 is carried separately in `atom0`.
struct ClosedForm {
    std::string name;
    RealFn density;
    RealFn cdf;
    ComplexFn cf;
    ComplexFn cf1;  ///< φ′
    ComplexFn cf2;  ///< φ″
    RealFn laplace;   ///< E e^{-uV}, u >= 0, for laws on [0, ∞)
    RealFn laplace1;
    RealFn laplace2;
    double atom0 = 0.0;
    Interval support = Interval::real_line();
    std::vector<double> kinks;  ///< points where the density is not smooth
};

struct Empirical {
    std::vector<double> values;  ///< sorted
    double atom0 = 0.0;          ///< fraction of exact zeros, when tracked
};

struct LawRep {
    std::variant<ClosedForm, Empirical> rep;

    static LawRep closed(ClosedForm c);
    /// `track_atom` records the share of exact zeros as an atom at 0.
    static LawRep empirical(std::vector<double> values, bool track_atom = false);
    static LawRep empirical(const SampleBatch& b, bool track_atom = false);

    bool is_closed() const { return std::holds_alternative<ClosedForm>(rep); }
    const ClosedForm& closed_form() const { return std::get<ClosedForm>(rep); }
    const Empirical& sample() const { return std::get<Empirical>(rep); }
    double atom0() const;
};

double ecdf(std::span<const double> sorted, double x);
/// sup |F_n - F| for a sorted sample.
double ks(std::span<const double> sorted, const RealFn& cdf);
double ks_two_sample(std::span<const double> a_sorted, std::span<const double> b_sorted);
std::vector<double> sorted_copy(std::span<const double> v);

/// Limiting Kolmogorov distribution P(sup|B⁰| <= x).
double kolmogorov_cdf(double x);
double kolmogorov_quantile(double p);

struct EmpCf {
    std::complex<double> phi, d1, d2;
    double se_phi, se_d1, se_d2;
};
EmpCf emp_cf(std::span<const double> v, double u);

double silverman_bandwidth(std::span<const double> v);
/// Gaussian-kernel density estimate and its first two derivatives.
/// A bandwidth <= 0 selects the rule-of-thumb value.
double kde(std::span<const double> v, double z, double bandwidth = 0.0);
double kde_deriv(std::span<const double> v, double z, double bandwidth = 0.0);
double kde_deriv2(std::span<const double> v, double z, double bandwidth = 0.0);
/// Density estimate of the continuous part: zeros are left out when the law
/// carries an atom at 0, and the result is scaled by the remaining share.
double kde(const Empirical& e, double z, double bandwidth = 0.0);

/// ∫_region g dμ: quadrature against the density plus the atom for closed
/// forms, a sample mean for empirical laws.
double integrate(const LawRep& law, const RealFn& g, const Interval& region = Interval::real_line());
/// Standard error of the sample mean above; 0 for closed forms.
double integrate_se(const LawRep& law, const RealFn& g, const Interval& region = Interval::real_line());

struct Normalization {
    double mass;          ///< ∫ f + atom0
    double cf_at_zero;    ///< |φ(0) - 1|
    bool cdf_monotone;
    double cdf_left, cdf_right;
};
Normalization check_normalization(const ClosedForm& c);

}  // namespace kef
