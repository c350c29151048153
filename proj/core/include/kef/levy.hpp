#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kef/quadrature.hpp"
#include "kef/random.hpp"

namespace kef {

using RealFn = std::function<double(double)>;
using ComplexFn = std::function<std::complex<double>(double)>;

/// Real interval with independently open or closed ends.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_closed = false;
    bool hi_closed = false;

    static Interval open(double a, double b) { return {a, b, false, false}; }
    static Interval closed(double a, double b) { return {a, b, true, true}; }
    static Interval left_open(double a, double b) { return {a, b, false, true}; }
    static Interval right_open(double a, double b) { return {a, b, true, false}; }
    static Interval real_line() { return {}; }

    bool contains(double x) const {
        return (x > lo || (lo_closed && x == lo)) && (x < hi || (hi_closed && x == hi));
    }
    bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

struct Atom {
    double position;
    double mass;
};

/// h(x) = e^{-x} - 1 maps xi-jumps to U-jumps; g(y) = -ln(1+y) is its inverse.
enum class ImageMap { ExpMinusOne, NegLogOnePlus };

double apply_map(ImageMap map, double x);

class LevyMeasure;
std::complex<double> jump_exponent(const LevyMeasure& nu, double z);
double laplace_jump_exponent(const LevyMeasure& nu, double u);

/// Jump measure from a closed family: atoms, three parametric densities,
/// finite sums and images under h or g. Immutable, cheap to copy.
class LevyMeasure {
public:
    LevyMeasure();

    static LevyMeasure atoms(std::vector<Atom> atoms);
    static LevyMeasure atom(double position, double mass);
    /// Density right*e^{-rate x} on x>0 plus left*e^{-rate|x|} on x<0.
    static LevyMeasure two_sided_exp(double rate, double left, double right);
    /// Compound Poisson with `intensity` and Exp(`jump_rate`) jumps.
    static LevyMeasure cp_exp(double intensity, double jump_rate);
    /// Density e^{-x/alpha}/(1-e^{-x/alpha})^{alpha+1}/Gamma(1-alpha) on x>0.
    static LevyMeasure ml_subordinator(double alpha);
    static LevyMeasure sum(std::vector<LevyMeasure> parts);

    LevyMeasure operator+(const LevyMeasure& other) const;
    LevyMeasure image(ImageMap map) const;

    bool is_zero() const;
    bool finite_activity() const;
    /// ∫_{|x|<=1} |x| ν(dx) < ∞ (true for every member of the family).
    bool finite_variation_jumps() const;
    double total_mass() const;
    std::vector<Atom> atom_list() const;

    double mass(const Interval& region) const;
    double tail_plus(double x) const;   ///< ν((x, ∞)), x > 0
    double tail_minus(double x) const;  ///< ν((-∞, -x)), x > 0

    /// ∫_region f dν. `kinks` are interior points where f is not smooth.
    quad::Result<double> integrate_result(const RealFn& f, const Interval& region,
                                          std::span<const double> kinks = {}, quad::Tolerance tol = {}) const;
    quad::Result<std::complex<double>> integrate_complex_result(const ComplexFn& f, const Interval& region,
                                                                std::span<const double> kinks = {},
                                                                quad::Tolerance tol = {}) const;
    double integrate(const RealFn& f, const Interval& region,
                     std::span<const double> kinks = {}) const;
    std::complex<double> integrate_complex(const ComplexFn& f, const Interval& region,
                                           std::span<const double> kinks = {}) const;

    /// ∫_{|x|>1} |x|^p ν(dx) < ∞.
    bool finite_power_tail(double p) const;
    /// ∫_{x<-1} e^{p|x|} ν(dx) < ∞.
    bool finite_exp_moment_left(double p) const;

    // Simulation support. Finite-activity parts never truncate; infinite
    // activity parts split at |x| = eps in their own base coordinates.
    double big_jump_rate(double eps) const;
    double sample_big_jump(double eps, Rng& rng) const;
    /// ∫_{small jumps} f dν for the truncation at eps.
    double integrate_small(const RealFn& f, double eps) const;

    std::string describe() const;

    struct Node;

    friend std::complex<double> jump_exponent(const LevyMeasure& nu, double z);
    friend double laplace_jump_exponent(const LevyMeasure& nu, double u);

private:
    explicit LevyMeasure(std::shared_ptr<const Node> node);
    std::shared_ptr<const Node> node_;
};

/// Characteristic triplet with truncation 1_{|x|<=1}. gamma0 is the drift,
/// present whenever the jump part has finite variation.
struct LevyTriplet {
    double sigma2 = 0.0;
    LevyMeasure nu;
    double gamma = 0.0;
    std::optional<double> gamma0;

    static LevyTriplet from_location(double sigma2, LevyMeasure nu, double gamma);
    static LevyTriplet from_drift(double sigma2, LevyMeasure nu, double drift0);

    bool finite_variation() const { return sigma2 == 0.0 && gamma0.has_value(); }
    std::string describe() const;
};

/// ∫_{[-1,1]} x ν(dx).
double truncated_mean(const LevyMeasure& nu);

std::complex<double> char_exponent(const LevyTriplet& t, double z);
/// Jump part of the exponent; closed forms where available.
std::complex<double> jump_exponent(const LevyMeasure& nu, double z);
/// Same integral by plain quadrature; used to cross-check the closed forms.
std::complex<double> jump_exponent_quadrature(const LevyMeasure& nu, double z);
/// ∫(1 - e^{-u x}) ν(dx) for measures on (0, ∞).
double laplace_jump_exponent(const LevyMeasure& nu, double u);

LevyTriplet xi_to_U(const LevyTriplet& xi);
LevyTriplet U_to_xi(const LevyTriplet& u);
LevyTriplet kill(const LevyTriplet& u, double q);

struct MeanVar {
    double mean;
    double variance;
};
std::optional<MeanVar> mean_var(const LevyTriplet& t);
/// Finite first absolute moment E|L_1| < ∞.
bool finite_mean(const LevyTriplet& t);
std::optional<double> mean(const LevyTriplet& t);

bool second_moment_condition(const LevyTriplet& xi, const LevyTriplet& eta, double q);
/// Sufficient check for convergence of the unkilled functional:
/// E xi_1 exists and is positive and E|eta_1| < ∞.
bool unkilled_convergence_sufficient(const LevyTriplet& xi, const LevyTriplet& eta);

enum class Role { Xi, Eta, U, Utilde };
enum class Structure { Deterministic, BrownianDrift, CompoundPoissonDrift, JumpDiffusion, InfiniteActivity };

Structure classify(const LevyTriplet& t);
const char* to_string(Structure s);
const char* to_string(Role r);

struct ProcessSpec {
    LevyTriplet triplet;
    Role role = Role::Xi;
    Structure structure = Structure::Deterministic;

    static ProcessSpec make(LevyTriplet t, Role role);
};

// Common processes.
LevyTriplet deterministic(double drift);
LevyTriplet brownian(double sigma2, double drift0 = 0.0);
LevyTriplet poisson(double intensity, double jump = 1.0);

}  // namespace kef
