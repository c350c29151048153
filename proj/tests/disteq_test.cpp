#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "kef/disteq.hpp"
#include "kef/errors.hpp"
#include "kef/path_sim.hpp"
#include "kef/quadrature.hpp"
#include "kef/reference.hpp"
#include "kef/special.hpp"

namespace {

using namespace kef;
constexpr double kInf = std::numeric_limits<double>::infinity();

CheckOptions tight(double tol) {
    CheckOptions o;
    o.tol = tol;
    return o;
}

std::vector<double> nonzero_grid(double a, double b, int n) {
    std::vector<double> g;
    for (double z : linear_grid(a, b, n, std::array{0.0}, 0.05)) g.push_back(z);
    return g;
}

LawRep law_of(const ReferenceLaw& r) { return r.rep(); }

// Laplace(0, 1) with its density scaled by `rate`.
LawRep laplace_law(double rate) {
    ClosedForm c;
    c.name = "laplace";
    c.density = [rate](double z) { return 0.5 * rate * std::exp(-rate * std::abs(z)); };
    c.kinks = {0.0};
    return LawRep::closed(c);
}

LawRep shifted(const ReferenceLaw& r, double by) {
    ClosedForm c = r.law;
    const auto f = r.law.density;
    c.density = [f, by](double z) { return f(z - by); };
    c.support = Interval{r.law.support.lo + by, r.law.support.hi + by, r.law.support.lo_closed, r.law.support.hi_closed};
    for (double& k : c.kinks) k += by;
    c.kinks.push_back(by);
    c.cf = nullptr;
    c.cf1 = nullptr;
    c.cf2 = nullptr;
    c.laplace = nullptr;
    c.laplace1 = nullptr;
    c.laplace2 = nullptr;
    return LawRep::closed(c);
}

// ---------------------------------------------------------------- auxiliary functions

TEST(AuxFunctions, ExponentialTailsFromZero) {
    const auto eta = LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.0, 1.0, 1.0), 0.0);
    const AuxFunctions aux(eta, util_triplet(deterministic(1.0), 0.0));
    for (double z : {-3.0, -0.4, 0.2, 2.5}) {
        const double sign = z > 0 ? 1.0 : -1.0;
        EXPECT_NEAR(aux.b_eta_fv(z), sign * std::exp(-std::abs(z)), 1e-14) << z;
    }
    EXPECT_EQ(aux.b_eta_fv(0.0), 0.0);
}

TEST(AuxFunctions, PoissonXiWithKilling) {
    const double c = 1.5, q = 0.7;
    const AuxFunctions aux(brownian(1.0), util_triplet(poisson(c), q));
    const double e = std::exp(-1.0);
    for (double z : {0.05, 0.2, 0.99 * e, e}) EXPECT_NEAR(aux.b_util_fv(z), -q, 1e-13) << z;
    for (double z : {1.01 * e, 0.6, 0.999}) EXPECT_NEAR(aux.b_util_fv(z), -(c + q), 1e-13) << z;
    for (double z : {1.0, 1.5, 4.0}) EXPECT_EQ(aux.b_util_fv(z), 0.0) << z;
}

TEST(AuxFunctions, SingleAtomInsideUnitInterval) {
    const auto eta = LevyTriplet::from_drift(0.0, LevyMeasure::atom(0.5, 1.0), 0.0);
    const AuxFunctions aux(eta, util_triplet(deterministic(1.0), 1.0));
    EXPECT_NEAR(aux.s_eta(0.25), 0.25, 1e-15);
    EXPECT_EQ(aux.s_eta(0.75), 0.0);
    EXPECT_EQ(aux.s_eta(-0.3), 0.0);
    EXPECT_EQ(aux.b_eta(0.3), 0.0);
}

std::vector<std::pair<LevyTriplet, LevyTriplet>> aux_cases() {
    return {
        {LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.0, 1.0, 1.0), 0.0),
         util_triplet(deterministic(1.0), 0.0)},
        {LevyTriplet::from_drift(0.0, LevyMeasure::atoms({{-2.0, 0.5}, {0.3, 1.0}, {1.7, 2.0}}), 0.1),
         util_triplet(LevyTriplet::from_drift(0.5, LevyMeasure::cp_exp(2.0, 0.8), 0.3), 1.2)},
        {LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(0.6), 0.0),
         util_triplet(LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.5, 0.5, 2.0), 0.0), 0.4)},
    };
}

TEST(AuxFunctions, BoundsAndSigns) {
    for (const auto& [eta, util] : aux_cases()) {
        const AuxFunctions aux(eta, util);
        const double be = aux.b_eta_bound(), bu = aux.b_util_bound();
        for (double z = -6.0; z <= 6.0; z += 0.0371) {
            EXPECT_LE(std::abs(aux.b_eta(z)), be + 1e-14) << z;
            EXPECT_GE(aux.s_eta(z), 0.0) << z;
            if (z >= 0.0) EXPECT_GE(aux.s_util(z), 0.0) << z;
            if (z >= 1.0) EXPECT_LE(std::abs(aux.b_util(z)), bu + 1e-14) << z;
        }
        EXPECT_EQ(aux.s_eta(0.0), 0.0);
        EXPECT_EQ(aux.s_util(1.0), 0.0);
        EXPECT_EQ(aux.b_util(1.0), 0.0);
        const auto ie = quad::integrate([&](double z) { return aux.s_eta(z); }, std::span<const double>(std::array{-1.0, 0.0, 1.0}));
        EXPECT_TRUE(ie.converged);
        EXPECT_TRUE(std::isfinite(ie.value));
        const auto iu = quad::integrate([&](double z) { return aux.s_util(z + 1.0); },
                                        std::span<const double>(std::array{-1.0, 0.0, 1.0}));
        EXPECT_TRUE(iu.converged);
        EXPECT_TRUE(std::isfinite(iu.value));
    }
}

TEST(AuxFunctions, IntegratedTailsMatchQuadrature) {
    for (const auto& [eta, util] : aux_cases()) {
        const AuxFunctions aux(eta, util);
        for (double w : {-3.5, -1.2, -0.5, 0.4, 1.0, 2.6}) {
            std::vector<double> pts{0.0, w};
            for (double k : {-2.0, -1.0, 1.0, 1.7})
                if ((k - 0.0) * (k - w) < 0) pts.push_back(k);
            std::sort(pts.begin(), pts.end());
            double direct = quad::integrate([&](double s) { return aux.b_eta(s); }, std::span<const double>(pts),
                                            {1e-13, 1e-11, 4000}).value;
            if (w < 0) direct = -direct;
            EXPECT_NEAR(aux.b_eta_integral(w), direct, 1e-9) << w;
        }
        for (double r : {1.0, 1.5, 2.5, 7.0}) {
            const std::vector<double> pts{1.0, std::min(r, 2.0), r};
            const double direct = quad::integrate([&](double s) { return aux.b_util(s); }, std::span<const double>(pts),
                                                  {1e-13, 1e-11, 4000}).value;
            EXPECT_NEAR(aux.b_util_integral(r), direct, 1e-9) << r;
        }
    }
}

TEST(AuxFunctions, FirstMomentVariantsNeedFiniteMeans) {
    const auto heavy = util_triplet(LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(0.5, 1.0, 1.0), 0.0), 1.0);
    const AuxFunctions aux(brownian(1.0), heavy);
    EXPECT_FALSE(aux.has_fm());
    EXPECT_THROW(aux.s_util_fm(0.5), DomainError);
    EXPECT_THROW(aux.s_eta_fm(0.5), DomainError);
    EXPECT_NO_THROW(aux.s_util(0.5));
}

// ---------------------------------------------------------------- characteristic functions

TEST(CharacteristicEquation, TrivialCase) {
    const auto r = reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}});
    const auto grid = linear_grid(0.1, 10.0, 25);
    const auto rep = residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-10));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    EXPECT_LT(rep.norm_sup, 1e-10);
}

TEST(CharacteristicEquation, BrownianEtaBothRates) {
    for (double ratio : {2.0, 4.0}) {
        const double g = 0.8;
        const auto r = reference("cf_bm_eta", {{"gamma", g}, {"sigma_eta", 1.3}, {"q", ratio * g}});
        const auto grid = linear_grid(0.1, 10.0, 25);
        const auto rep = residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-9));
        EXPECT_TRUE(rep.pass) << ratio << " " << rep.norm_sup;
    }
}

TEST(CharacteristicEquation, BesselCase) {
    const auto r = reference("cf_bessel", {{"sigma_xi", 0.9}, {"sigma_eta", 1.4}});
    const auto grid = linear_grid(0.1, 10.0, 25);
    const auto rep = residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-9));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(CharacteristicEquation, HypergeometricCaseWithAtom) {
    const auto r = reference("cf_hypergeom", {{"lambda", 1.0}, {"gamma", 1.0}, {"a", 2.0}, {"q", 1.5}});
    const auto grid = linear_grid(0.1, 10.0, 15);
    const auto rep = residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-9));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(CharacteristicEquation, WrongLawFails) {
    const auto r = reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}});
    const auto wrong = reference("gamma_law", {{"lambda", 1.0}, {"gamma", 1.0}, {"a", 1.0}});
    const auto grid = linear_grid(0.1, 10.0, 25);
    const auto rep = residual_cf(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(wrong), tight(1e-9));
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.norm_sup, 0.05);
}

TEST(CharacteristicEquation, SampleAgreesWithinMonteCarloError) {
    const auto r = reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}});
    Rng rng(7);
    std::vector<double> v(20000);
    for (double& x : v) x = r.sampler(rng);
    const auto rep = residual_cf(linear_grid(0.5, 5.0, 6), r.setup.xi, r.setup.eta, r.setup.q,
                                 LawRep::empirical(v), tight(0.0));
    EXPECT_TRUE(rep.pass) << rep.norm_sup << " " << rep.budget;
    EXPECT_LT(rep.budget, 0.1);
}

TEST(CharacteristicEquation, MomentPreconditionIsEnforced) {
    const auto r = reference("uniform_over_2exp");
    const std::array<double, 1> u{1.0};
    EXPECT_THROW(residual_cf(u, r.setup.xi, r.setup.eta, r.setup.q, law_of(r)), DomainError);
    CheckOptions o;
    o.assume_second_moment = true;
    EXPECT_NO_THROW(residual_cf(u, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), o));
}

// ---------------------------------------------------------------- Laplace transforms

TEST(LaplaceEquation, MittagLefflerHalf) {
    const auto r = reference("mittag_leffler_law", {{"alpha", 0.5}});
    EXPECT_NEAR(r.setup.q, 1.0 / std::sqrt(std::numbers::pi), 1e-15);
    const auto grid = linear_grid(0.1, 5.0, 12);
    const auto rep = residual_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-6));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(LaplaceEquation, GammaLawUnderCompoundPoissonEta) {
    const auto r = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto grid = linear_grid(0.1, 8.0, 12);
    const auto rep = residual_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    // Same check through density quadrature instead of the closed transform.
    ClosedForm c = r.law;
    c.laplace = nullptr;
    const auto rep2 = residual_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, LawRep::closed(c), tight(1e-8));
    EXPECT_TRUE(rep2.pass) << rep2.norm_sup;
}

TEST(LaplaceEquation, ZeroArgumentBalances) {
    const auto r = reference("mittag_leffler_law", {{"alpha", 0.5}});
    const std::array<double, 1> u{0.0};
    const auto rep = residual_laplace(u, r.setup.xi, r.setup.eta, r.setup.q, law_of(r));
    EXPECT_EQ(rep.residuals[0], 0.0);
}

TEST(LaplaceEquation, WrongLawFailsAndGatesHold) {
    const auto r = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto wrong = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.5}});
    const auto grid = linear_grid(0.1, 8.0, 12);
    EXPECT_FALSE(residual_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(wrong)).pass);
    const auto lap = reference("laplace01");
    EXPECT_THROW(residual_laplace(grid, lap.setup.xi, lap.setup.eta, 0.0, law_of(lap)), DomainError);
}

// ---------------------------------------------------------------- density equation, subordinator η

TEST(DensityLaplaceEquation, UniformOverTwoExponentials) {
    const auto r = reference("uniform_over_2exp");
    const auto grid = linear_grid(0.05, 5.0, 20);
    const auto rep = residual_density_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(DensityLaplaceEquation, GammaDensity) {
    const auto r = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto grid = linear_grid(0.05, 6.0, 20);
    const auto rep = residual_density_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(DensityLaplaceEquation, NullSolution) {
    ClosedForm c;
    c.density = [](double) { return 0.0; };
    c.support = Interval::right_open(0.0, kInf);
    const auto eta = LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(1.0, 1.0), 0.0);
    const auto grid = linear_grid(0.1, 3.0, 8);
    const auto rep = residual_density_laplace(grid, deterministic(1.0), eta, 0.0, LawRep::closed(c));
    EXPECT_EQ(rep.norm_sup, 0.0);
}

TEST(DensityLaplaceEquation, WrongLawFails) {
    const auto r = reference("uniform_over_2exp");
    const auto wrong = reference("yor", {{"q", 2.0}, {"b", 0.3}});
    const auto grid = linear_grid(0.05, 5.0, 20);
    const auto rep = residual_density_laplace(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(wrong), tight(1e-8));
    EXPECT_GT(rep.norm_sup, 1e-3);
}

// ---------------------------------------------------------------- general equation

TEST(MeasureEquation, LaplaceCounterexampleSetup) {
    const auto r = reference("laplace01");
    const auto grid = nonzero_grid(-5.0, 5.0, 21);
    const auto rep = residual_mu(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    ASSERT_TRUE(rep.K.has_value());
}

TEST(MeasureEquation, PotentialDensity) {
    const auto r = reference("potential_bm", {{"q", 2.0}, {"sigma_eta", 1.0}});
    const auto grid = nonzero_grid(-3.0, 3.0, 19);
    const auto rep = residual_mu(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-7));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(MeasureEquation, JumpsOnBothSidesAndKilling) {
    const auto r = reference("uniform_over_2exp");
    const auto grid = linear_grid(0.05, 4.0, 12);
    const auto rep = residual_mu(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-7));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    const auto g = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto rep2 = residual_mu(grid, g.setup.xi, g.setup.eta, g.setup.q, law_of(g), tight(1e-7));
    EXPECT_TRUE(rep2.pass) << rep2.norm_sup;
}

TEST(MeasureEquation, WrongLawFails) {
    const auto r = reference("laplace01");
    const auto grid = nonzero_grid(-5.0, 5.0, 21);
    const auto rep = residual_mu(grid, r.setup.xi, r.setup.eta, r.setup.q, laplace_law(1.5), tight(1e-8));
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.norm_sup, 1e-3);
}

TEST(MeasureEquation, DerivativeOfProfileIsFiniteVariationIntegrand) {
    // For a law that does not solve the equation G is not constant; its
    // slope is the finite-variation right-hand side with opposite sign.
    const auto r = reference("laplace01");
    const auto law = laplace_law(1.5);
    const double h = 1e-3;
    for (double z : {-2.3, -0.6, 0.45, 1.7}) {
        const std::array<double, 4> pts{z - 2 * h, z - h, z + h, z + 2 * h};
        const auto p = mu_profile(pts, r.setup.xi, r.setup.eta, r.setup.q, law);
        const double slope = (p.value[0] - 8 * p.value[1] + 8 * p.value[2] - p.value[3]) / (12 * h);
        const std::array<double, 1> at{z};
        const auto fv = mu_fv_profile(at, r.setup.xi, r.setup.eta, r.setup.q, law);
        EXPECT_NEAR(slope, -fv.value[0], 1e-7) << z;
        EXPECT_GT(std::abs(fv.value[0]), 1e-3) << z;
    }
}

// ---------------------------------------------------------------- finite first moments

TEST(FirstMomentEquation, LaplaceExampleExplicitK) {
    const auto r = reference("laplace01");
    const auto kp = explicit_k(r.setup.xi, r.setup.eta, r.setup.q, law_of(r));
    EXPECT_NEAR(kp.from_positive, kp.from_negative, 1e-8);
    EXPECT_NEAR(kp.from_positive, 0.5, 1e-10);
    const auto grid = nonzero_grid(-5.0, 5.0, 21);
    const auto rep = residual_mu_fm(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    EXPECT_NEAR(*rep.K, 0.5, 1e-10);
}

TEST(FirstMomentEquation, ExplicitBranchNeedsNegativeMean) {
    const auto lap = reference("laplace01");
    CheckOptions o;
    o.k_mode = CheckOptions::KMode::Explicit;
    const std::array<double, 1> z{0.5};
    EXPECT_THROW(residual_mu_fm(z, deterministic(-1.0), lap.setup.eta, 0.0, law_of(lap), o), DomainError);
    EXPECT_THROW(explicit_k(deterministic(-1.0), lap.setup.eta, 0.0, law_of(lap)), DomainError);
}

TEST(FirstMomentEquation, PotentialAndGamma) {
    const auto p = reference("potential_bm", {{"q", 2.0}, {"sigma_eta", 1.0}});
    const auto rep = residual_mu_fm(nonzero_grid(-3.0, 3.0, 13), p.setup.xi, p.setup.eta, p.setup.q, law_of(p),
                                    tight(1e-7));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    const auto g = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto rep2 = residual_mu_fm(linear_grid(0.05, 5.0, 12), g.setup.xi, g.setup.eta, g.setup.q, law_of(g),
                                     tight(1e-7));
    EXPECT_TRUE(rep2.pass) << rep2.norm_sup;
}

double mean_of(const std::vector<double>& v, double& se) {
    double s = 0.0, ss = 0.0;
    for (double x : v) {
        s += x;
        ss += x * x;
    }
    const double n = static_cast<double>(v.size()), m = s / n;
    se = std::sqrt((ss / n - m * m) / (n - 1.0));
    return m;
}

TEST(FirstMomentEquation, MomentIdentityOnSimulations) {
    struct Case {
        ReferenceLaw law;
        SimConfig cfg;
    };
    SimConfig cfg;
    cfg.master_seed = 99;
    for (const auto& r : {reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}}),
                          reference("yor", {{"q", 2.0}, {"b", 1.0}})}) {
        const auto xi = ProcessSpec::make(r.setup.xi, Role::Xi);
        const auto eta = ProcessSpec::make(r.setup.eta, Role::Eta);
        const auto b = batch(20000, Sampler::Direct, xi, eta, r.setup.q, cfg);
        double se = 0.0;
        const double ev = mean_of(b.values, se);
        const double eu = *mean(util_triplet(r.setup.xi, r.setup.q));
        const double ee = *mean(r.setup.eta);
        EXPECT_LT(std::abs(ev * eu + ee), 4.0 * se * std::abs(eu)) << r.name << " " << ev;
    }
}

// ---------------------------------------------------------------- finite variation

TEST(FiniteVariationEquation, LaplaceExample) {
    const auto r = reference("laplace01");
    const auto grid = nonzero_grid(-5.0, 5.0, 41);
    const auto rep = residual_mu_fv(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-9));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
    EXPECT_LT(rep.norm_sup, 1e-9);
}

TEST(FiniteVariationEquation, LaplaceExampleDirectForm) {
    // z f(z) = ∫_{-∞}^z e^{-z+s} f(s) ds - ∫_z^∞ e^{z-s} f(s) ds
    const auto f = [](double s) { return 0.5 * std::exp(-std::abs(s)); };
    for (double z : {-3.0, -0.5, 0.7, 2.0}) {
        const double a = quad::integrate([&](double s) { return std::exp(s - z) * f(s); },
                                         std::span<const double>(std::array{-kInf, std::min(z, 0.0), z}),
                                         {1e-14, 1e-12, 4000}).value;
        const double b = quad::integrate([&](double s) { return std::exp(z - s) * f(s); },
                                         std::span<const double>(std::array{z, std::max(z, 0.0), kInf}),
                                         {1e-14, 1e-12, 4000}).value;
        EXPECT_NEAR(z * f(z), a - b, 1e-12) << z;
        const std::array<double, 1> at{z};
        const auto r = reference("laplace01");
        const auto p = mu_fv_profile(at, r.setup.xi, r.setup.eta, 0.0, law_of(r));
        EXPECT_NEAR(p.value[0], -z * f(z) + a - b, 1e-10) << z;
    }
}

TEST(FiniteVariationEquation, GammaLaw) {
    const auto r = reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}});
    const auto grid = linear_grid(0.05, 6.0, 20);
    const auto rep = residual_mu_fv(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(FiniteVariationEquation, GaussianPartIsRejected) {
    const auto r = reference("potential_bm");
    const std::array<double, 1> z{0.5};
    EXPECT_THROW(residual_mu_fv(z, r.setup.xi, r.setup.eta, r.setup.q, law_of(r)), DomainError);
}

TEST(FiniteVariationEquation, WrongLawFails) {
    const auto r = reference("laplace01");
    const auto grid = nonzero_grid(-5.0, 5.0, 21);
    const auto rep = residual_mu_fv(grid, r.setup.xi, r.setup.eta, r.setup.q, laplace_law(0.8), tight(1e-9));
    EXPECT_GT(rep.norm_sup, 1e-2);
}

TEST(FiniteVariationEquation, ExactSampleWithinKdeBudget) {
    const auto r = reference("laplace01");
    Rng rng(3);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(50000);
    for (double& x : v) x = e(rng) - e(rng);
    const auto grid = nonzero_grid(-3.0, 3.0, 7);
    const auto rep = residual_mu_fv(grid, r.setup.xi, r.setup.eta, r.setup.q, LawRep::empirical(v), tight(0.0));
    EXPECT_TRUE(rep.pass) << rep.norm_sup << " " << rep.budget;
    EXPECT_LT(rep.budget, 0.1);
}

// ---------------------------------------------------------------- differentiable density

TEST(DensityEquation, PotentialDensity) {
    for (double q : {0.5, 2.0}) {
        const auto r = reference("potential_bm", {{"q", q}, {"sigma_eta", 1.0}});
        const auto grid = nonzero_grid(-4.0, 4.0, 24);
        const auto rep = residual_density_diff(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-9));
        EXPECT_TRUE(rep.pass) << rep.norm_sup;
        // (σ²/2) f′ = q(1_{z<0} F(z) - 1_{z>0}(1 - F(z)))
        for (double z : grid) {
            const double h = 1e-4;
            const double fd = (r.law.density(z + h) - r.law.density(z - h)) / (2 * h);
            const double F = r.law.cdf(z);
            EXPECT_NEAR(0.5 * fd, q * (z < 0 ? F : -(1.0 - F)), 1e-6) << z;
        }
    }
}

TEST(DensityEquation, TwoBrownianMotions) {
    const auto r = reference("two_bm_q0");
    const auto grid = nonzero_grid(-4.0, 4.0, 24);
    const auto rep = residual_density_diff(grid, r.setup.xi, r.setup.eta, r.setup.q, law_of(r), tight(1e-8));
    EXPECT_TRUE(rep.pass) << rep.norm_sup;
}

TEST(DensityEquation, WrongLawFails) {
    const auto r = reference("potential_bm", {{"q", 2.0}, {"sigma_eta", 1.0}});
    const auto grid = nonzero_grid(-4.0, 4.0, 24);
    const auto rep = residual_density_diff(grid, r.setup.xi, r.setup.eta, r.setup.q, laplace_law(1.0), tight(1e-9));
    EXPECT_GT(rep.norm_sup, 1e-2);
}

// Delay equation (σ²/2) f″(z) = q f(z) + c (f(z) - e f(ez)) for Poisson ξ and
// Brownian η, on a simulated sample. Smoothing with K_h turns e f(e·) into a
// kernel of width eh and the kink of f′ at 0 into -q K_h(z), so the kernel
// residual has mean zero at any bandwidth.
TEST(DensityEquation, PoissonXiDelayEquationOnSample) {
    const double c = 1.0, q = 1.0, s2 = 1.0;
    const auto xi = ProcessSpec::make(poisson(c), Role::Xi);
    const auto eta = ProcessSpec::make(brownian(s2), Role::Eta);
    SimConfig cfg;
    cfg.master_seed = 17;
    const auto b = batch(40000, Sampler::Direct, xi, eta, q, cfg);
    const auto& v = b.values;
    const double h = 0.5, e = std::numbers::e;
    const double n = static_cast<double>(v.size());
    const auto k0 = [](double x, double bw) { return std::exp(-0.5 * x * x / (bw * bw)) / (bw * std::sqrt(2 * std::numbers::pi)); };
    const auto k2 = [&](double x, double bw) { return k0(x, bw) * (x * x / (bw * bw) - 1.0) / (bw * bw); };
    double literal = 0.0;
    for (double z : {-0.8, -0.4, 0.3, 0.6, 1.0}) {
        double s = 0.0, ss = 0.0, plain = 0.0;
        for (double x : v) {
            const double w = 0.5 * s2 * k2(z - x, h) - (q + c) * k0(z - x, h) + c * e * k0(e * z - x, e * h);
            s += w;
            ss += w * w;
            plain += 0.5 * s2 * k2(z - x, h) - (q + c) * k0(z - x, h) + c * k0(e * z - x, e * h);
        }
        const double m = s / n, se = std::sqrt((ss / n - m * m) / n);
        EXPECT_LT(std::abs(m + q * k0(z, h)), 4.0 * se) << z;
        literal = std::max(literal, std::abs(plain / n + q * k0(z, h)) / (4.0 * se));
    }
    // Without the factor e the same residual is far outside its budget.
    EXPECT_GT(literal, 5.0);
}

// ---------------------------------------------------------------- generator pairing

std::vector<PolyBump> bumps() {
    return {{0.0, 2.0, 1.0}, {0.1, 0.6, 1.0}, {0.3, 1.7, 2.0}, {-1.5, -0.2, 1.0}, {-0.5, 0.8, 1.0}};
}

TEST(GeneratorPairing, InvariantLawsAnnihilateBumps) {
    const std::vector<ReferenceLaw> laws{
        reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}}),
        reference("laplace01"),
        reference("potential_bm", {{"q", 2.0}, {"sigma_eta", 1.0}}),
        reference("uniform_over_2exp"),
        reference("gamma_law", {{"lambda", 1.5}, {"gamma", 0.7}, {"a", 2.0}}),
        reference("two_bm_q0"),
    };
    for (const auto& r : laws) {
        for (const auto& f : bumps()) {
            const auto p = generator_pairing(f, r.setup.xi, r.setup.eta, r.setup.q, law_of(r));
            EXPECT_LT(std::abs(p.value), 1e-8 + p.budget) << r.name << " [" << f.a << ", " << f.b << "]";
        }
    }
}

TEST(GeneratorPairing, ZeroFunctionAndShiftedLaw) {
    const auto r = reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}});
    const auto zero = generator_pairing({0.0, 2.0, 0.0}, r.setup.xi, r.setup.eta, r.setup.q, law_of(r));
    EXPECT_EQ(zero.value, 0.0);
    const PolyBump f{0.0, 2.0, 1.0};
    const auto p = generator_pairing(f, r.setup.xi, r.setup.eta, r.setup.q, shifted(r, 0.3));
    EXPECT_GT(std::abs(p.value), 10.0 * (1e-8 + p.budget));
}

TEST(GeneratorPairing, SampleWithinMonteCarloBudget) {
    const auto r = reference("trivial_kef", {{"gamma", 1.0}, {"q", 1.0}});
    Rng rng(11);
    std::vector<double> v(20000);
    for (double& x : v) x = r.sampler(rng);
    const auto p = generator_pairing({0.1, 0.6, 1.0}, r.setup.xi, r.setup.eta, r.setup.q, LawRep::empirical(v));
    EXPECT_LT(std::abs(p.value), p.budget);
    EXPECT_GT(p.budget, 0.0);
}

// ---------------------------------------------------------------- tail equation counterexample

TEST(TailEquation, NegativeHalfLineCannotBeDropped) {
    const auto r = reference("laplace01");
    for (double v : {0.5, 1.0, 2.0}) {
        const double expected = -0.25 * special::exp_integral_e1(v);
        EXPECT_NEAR(tail_equation_value(v, r.setup.xi, r.setup.eta, law_of(r)), expected, 1e-6) << v;
    }
    const double oracle = -0.25 * quad::integrate([](double w) { return std::exp(-w) / w; }, 1.0, kInf,
                                                  {1e-14, 1e-12, 4000}).value;
    EXPECT_NEAR(tail_equation_value(1.0, r.setup.xi, r.setup.eta, law_of(r)), oracle, 1e-6);
}

// ---------------------------------------------------------------- grids and reports

TEST(Grids, KinksAreAvoided) {
    const auto g = log_symmetric_grid(-2.0, 1.0, 4);
    for (double z : g) {
        EXPECT_GE(std::abs(z), 1e-3);
        EXPECT_GE(std::abs(std::abs(z) - 1.0), 1e-3);
    }
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
    EXPECT_NEAR(g.back(), 10.0, 1e-12);
    EXPECT_NEAR(g.front(), -10.0, 1e-12);
    const auto l = linear_grid(-1.0, 1.0, 5, std::array{0.0}, 0.01);
    for (double z : l) EXPECT_NE(z, 0.0);
    EXPECT_THROW(linear_grid(1.0, 0.0, 4), DomainError);
}

TEST(Reports, JsonCarriesAllFields) {
    const auto r = reference("laplace01");
    const auto rep = residual_mu_fv(nonzero_grid(-1.0, 1.0, 5), r.setup.xi, r.setup.eta, 0.0, law_of(r));
    const auto j = nlohmann::json::parse(to_json(rep));
    for (const char* key : {"equation", "grid", "residual", "K", "norm_sup", "norm_l1", "budget", "pass"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["equation"], "mu-fv");
    EXPECT_EQ(j["grid"].size(), rep.grid.size());
    EXPECT_TRUE(j["K"].is_null());
}

}  // namespace
