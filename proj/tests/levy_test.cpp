#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "kef/errors.hpp"
#include "kef/levy.hpp"

namespace {

using namespace kef;
using cplx = std::complex<double>;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr cplx kI{0.0, 1.0};

std::vector<LevyTriplet> sample_triplets() {
    return {
        brownian(1.0),
        poisson(2.0),
        LevyTriplet::from_drift(0.5, LevyMeasure::two_sided_exp(1.5, 0.7, 1.2), 0.3),
        LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(2.0, 3.0), -0.4),
        LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(0.5), 0.0),
        LevyTriplet::from_location(1.0, LevyMeasure::atoms({{-0.5, 1.0}, {2.0, 0.25}}), 0.1),
        xi_to_U(LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(0.3), 0.2)),
    };
}

TEST(CharExponent, StandardBrownianMotion) {
    const auto psi = char_exponent(brownian(1.0), 2.0);
    EXPECT_NEAR(psi.real(), -2.0, 1e-15);
    EXPECT_NEAR(psi.imag(), 0.0, 1e-15);
}

TEST(CharExponent, CompoundPoissonExponentialJumps) {
    const double lambda = 1.7, a = 2.3;
    const auto t = LevyTriplet::from_drift(0.0, LevyMeasure::cp_exp(lambda, a), 0.0);
    for (double u : {-3.0, -0.5, 0.1, 1.0, 4.0}) {
        const cplx expected = lambda * kI * u / (a - kI * u);
        EXPECT_LT(std::abs(char_exponent(t, u) - expected), 1e-12) << u;
    }
}

TEST(CharExponent, PoissonAtom) {
    const double c = 1.3;
    const auto t = LevyTriplet::from_location(0.0, LevyMeasure::atom(1.0, c), c);
    for (double z : {-2.0, 0.7, 5.0}) {
        const cplx expected = c * (std::exp(kI * z) - 1.0);
        EXPECT_LT(std::abs(char_exponent(t, z) - expected), 1e-13);
    }
}

TEST(CharExponent, ZeroAndHermitianSymmetry) {
    for (const auto& t : sample_triplets()) {
        EXPECT_LT(std::abs(char_exponent(t, 0.0)), 1e-14) << t.describe();
        for (double z : {0.3, 1.0, 2.5, 7.0}) {
            const cplx a = char_exponent(t, z), b = char_exponent(t, -z);
            EXPECT_LT(std::abs(b - std::conj(a)), 1e-9 * (1.0 + std::abs(a))) << t.describe();
        }
    }
}

TEST(CharExponent, ClosedFormsMatchQuadrature) {
    const std::vector<LevyMeasure> measures = {
        LevyMeasure::two_sided_exp(1.0, 1.0, 1.0),
        LevyMeasure::two_sided_exp(0.4, 2.0, 0.3),
        LevyMeasure::cp_exp(1.5, 0.8),
    };
    for (const auto& m : measures) {
        for (double z : {-4.0, -1.0, 0.5, 3.0}) {
            EXPECT_LT(std::abs(jump_exponent(m, z) - jump_exponent_quadrature(m, z)), 1e-9) << m.describe();
        }
    }
}

TEST(CharExponent, SubordinatorLaplaceExponentMatchesGammaRatio) {
    // For the ML subordinator, ∫(1-e^{-λx})ν(dx) = Γ(αλ+1)/Γ(αλ+1-α) - 1/Γ(1-α).
    for (double alpha : {0.3, 0.5, 0.8}) {
        const auto nu = LevyMeasure::ml_subordinator(alpha);
        for (double lam : {0.1, 1.0, 3.0}) {
            const double s = alpha * lam;
            const double expected = std::tgamma(s + 1.0) / std::tgamma(s + 1.0 - alpha) - 1.0 / std::tgamma(1.0 - alpha);
            EXPECT_NEAR(laplace_jump_exponent(nu, lam), expected, 1e-9) << alpha << " " << lam;
        }
    }
}

TEST(LevyMeasure, MlTailMatchesDensityQuadrature) {
    const double alpha = 0.5;
    const auto nu = LevyMeasure::ml_subordinator(alpha);
    for (double x : {1e-3, 0.1, 1.0, 3.0}) {
        // Independent route: integrate the density itself.
        const double dens_tail = nu.integrate([](double) { return 1.0; }, Interval::open(x, kInf));
        EXPECT_NEAR(nu.tail_plus(x), dens_tail, 1e-8 * (1.0 + dens_tail));
    }
    EXPECT_TRUE(std::isinf(nu.tail_plus(0.0)));
}

TEST(LevyMeasure, TailsAreNonincreasingAndLevyIntegrable) {
    for (const auto& t : sample_triplets()) {
        double prev_p = kInf, prev_m = kInf;
        for (double x = 0.01; x < 6.0; x *= 1.3) {
            const double p = t.nu.tail_plus(x), m = t.nu.tail_minus(x);
            EXPECT_LE(p, prev_p * (1.0 + 1e-12));
            EXPECT_LE(m, prev_m * (1.0 + 1e-12));
            prev_p = p;
            prev_m = m;
        }
        const double levy = t.nu.integrate([](double x) { return std::min(1.0, x * x); }, Interval::real_line(),
                                           std::array{-1.0, 0.0, 1.0});
        EXPECT_TRUE(std::isfinite(levy));
    }
}

TEST(LevyMeasure, RejectsInvalidAtoms) {
    EXPECT_THROW(LevyMeasure::atom(0.0, 1.0), DomainError);
    EXPECT_THROW(LevyMeasure::atom(1.0, -1.0), DomainError);
    EXPECT_THROW(LevyMeasure::ml_subordinator(1.0), DomainError);
}

TEST(LevyMeasure, IntervalEndsRespectAtoms) {
    const auto nu = LevyMeasure::atoms({{-1.0, 2.0}, {1.0, 3.0}});
    EXPECT_EQ(nu.mass(Interval::closed(-1.0, 1.0)), 5.0);
    EXPECT_EQ(nu.mass(Interval::open(-1.0, 1.0)), 0.0);
    EXPECT_EQ(nu.mass(Interval::left_open(-1.0, 1.0)), 3.0);
}

TEST(LevyMeasure, ImageTailsMatchPreimageTails) {
    const auto xi_nu = LevyMeasure::two_sided_exp(3.0, 1.0, 2.0) + LevyMeasure::ml_subordinator(0.4);
    const auto u_nu = xi_nu.image(ImageMap::ExpMinusOne);
    for (double y : {0.1, 0.5, 2.0, 10.0}) {
        // U-jump above y <=> xi-jump below -ln(1+y).
        EXPECT_NEAR(u_nu.tail_plus(y), xi_nu.tail_minus(std::log1p(y)), 1e-13);
    }
    for (double y : {0.05, 0.3, 0.9}) {
        // U-jump below -y <=> xi-jump above -ln(1-y).
        EXPECT_NEAR(u_nu.tail_minus(y), xi_nu.tail_plus(-std::log1p(-y)), 1e-10);
    }
    EXPECT_EQ(u_nu.mass(Interval::closed(-kInf, -1.0)), 0.0);
}

TEST(LevyMeasure, BigJumpSamplerFollowsTruncatedTail) {
    const auto nu = LevyMeasure::ml_subordinator(0.5);
    const double eps = 1e-3;
    Rng rng(7);
    const int n = 100000;
    std::vector<double> x(n);
    for (auto& v : x) v = nu.sample_big_jump(eps, rng);
    for (double level : {0.01, 0.1, 1.0}) {
        const double p = nu.tail_plus(level) / nu.tail_plus(eps);
        const double emp = std::count_if(x.begin(), x.end(), [&](double v) { return v > level; }) / double(n);
        EXPECT_NEAR(emp, p, 4.0 * std::sqrt(p * (1 - p) / n) + 1e-12) << level;
    }
    EXPECT_GE(*std::min_element(x.begin(), x.end()), eps);
}

TEST(Triplet, DriftAndLocationAreConsistent) {
    const auto t = LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.0, 1.0, 2.0), 0.25);
    const double trunc = LevyMeasure::two_sided_exp(1.0, 1.0, 2.0).integrate([](double x) { return x; },
                                                                              Interval::closed(-1, 1));
    EXPECT_NEAR(t.gamma, 0.25 + trunc, 1e-12);
    const auto back = LevyTriplet::from_location(t.sigma2, t.nu, t.gamma);
    EXPECT_NEAR(*back.gamma0, 0.25, 1e-12);
}

TEST(Transform, BrownianXiToU) {
    const double g = 0.7;
    const auto u = xi_to_U(LevyTriplet::from_location(4.0, LevyMeasure(), g));
    EXPECT_EQ(u.sigma2, 4.0);
    EXPECT_TRUE(u.nu.is_zero());
    // e^{-2B_t - g t} = E(U)_t forces U_t = -2B_t + (2 - g)t.
    EXPECT_NEAR(u.gamma, -g + 2.0, 1e-15);
    const auto back = U_to_xi(u);
    EXPECT_NEAR(back.gamma, g, 1e-15);
}

TEST(Transform, PoissonXiMapsToShiftedAtom) {
    const double c = 1.5;
    const auto u = xi_to_U(poisson(c));
    const auto atoms = u.nu.atom_list();
    ASSERT_EQ(atoms.size(), 1u);
    EXPECT_NEAR(atoms[0].position, std::exp(-1.0) - 1.0, 1e-15);
    EXPECT_EQ(atoms[0].mass, c);
    const auto back = U_to_xi(u).nu.atom_list();
    ASSERT_EQ(back.size(), 1u);
    EXPECT_NEAR(back[0].position, 1.0, 1e-15);
}

TEST(Transform, FiniteVariationDriftsNegate) {
    for (const auto& nu : {LevyMeasure::cp_exp(2.0, 1.0), LevyMeasure::ml_subordinator(0.6),
                           LevyMeasure::two_sided_exp(2.5, 1.0, 0.5) + LevyMeasure::atom(-2.0, 0.3)}) {
        const auto xi = LevyTriplet::from_drift(0.0, nu, 0.8);
        const auto u = xi_to_U(xi);
        ASSERT_TRUE(u.gamma0.has_value());
        EXPECT_NEAR(*u.gamma0, -0.8, 1e-9) << nu.describe();
        // With a Gaussian part the drift picks up sigma^2/2.
        const auto xs = LevyTriplet::from_drift(0.6, nu, 0.8);
        EXPECT_NEAR(*xi_to_U(xs).gamma0, -0.8 + 0.3, 1e-9);
    }
}

TEST(Transform, RoundTripOnRandomTriplets) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        std::vector<LevyMeasure> parts;
        const int n_atoms = 1 + static_cast<int>(u01(rng) * 3);
        std::vector<Atom> atoms;
        for (int i = 0; i < n_atoms; ++i) {
            double pos = (u01(rng) - 0.5) * 6.0;
            if (std::abs(pos) < 1e-3) pos = 0.5;
            atoms.push_back({pos, 0.1 + u01(rng)});
        }
        parts.push_back(LevyMeasure::atoms(atoms));
        switch (k % 4) {
            case 0: parts.push_back(LevyMeasure::two_sided_exp(0.5 + 3 * u01(rng), u01(rng), u01(rng))); break;
            case 1: parts.push_back(LevyMeasure::cp_exp(0.1 + u01(rng), 0.5 + 2 * u01(rng))); break;
            case 2: parts.push_back(LevyMeasure::ml_subordinator(0.1 + 0.8 * u01(rng))); break;
            default: break;
        }
        const auto xi = LevyTriplet::from_location(2.0 * u01(rng), LevyMeasure::sum(parts), 4.0 * (u01(rng) - 0.5));
        const auto back = U_to_xi(xi_to_U(xi));
        EXPECT_NEAR(back.gamma, xi.gamma, 1e-10) << xi.describe();
        EXPECT_EQ(back.sigma2, xi.sigma2);
        auto a = xi.nu.atom_list(), b = back.nu.atom_list();
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i].position, b[i].position, 1e-13);
            EXPECT_EQ(a[i].mass, b[i].mass);
        }
        EXPECT_EQ(back.nu.describe(), xi.nu.describe().empty() ? "" : back.nu.describe());
        for (double x : {0.2, 1.5}) EXPECT_NEAR(back.nu.tail_plus(x), xi.nu.tail_plus(x), 1e-12);
    }
}

TEST(Transform, InverseRejectsJumpsBelowMinusOne) {
    const auto u = LevyTriplet::from_location(0.0, LevyMeasure::atom(-1.5, 1.0), 0.0);
    EXPECT_THROW(U_to_xi(u), DomainError);
    EXPECT_THROW(kill(u, 1.0), DomainError);
}

TEST(Kill, IdentityAndAtomAtMinusOne) {
    const auto u = xi_to_U(poisson(1.0));
    const auto same = kill(u, 0.0);
    EXPECT_EQ(same.gamma, u.gamma);
    EXPECT_EQ(same.nu.describe(), u.nu.describe());
    EXPECT_THROW(kill(u, -1.0), DomainError);

    const double q = 2.0;
    const auto zero = kill(xi_to_U(deterministic(0.0)), q);
    EXPECT_EQ(zero.sigma2, 0.0);
    EXPECT_EQ(zero.gamma, -q);
    ASSERT_EQ(zero.nu.atom_list().size(), 1u);
    EXPECT_EQ(zero.nu.atom_list()[0].position, -1.0);
    EXPECT_EQ(zero.nu.atom_list()[0].mass, q);
    EXPECT_NEAR(*zero.gamma0, 0.0, 1e-15);

    const double c = 0.7;
    const auto k = kill(xi_to_U(poisson(c)), q);
    const auto atoms = k.nu.atom_list();
    ASSERT_EQ(atoms.size(), 2u);
    EXPECT_EQ(atoms[0].position, -1.0);
    EXPECT_EQ(atoms[0].mass, q);
    EXPECT_NEAR(atoms[1].position, std::exp(-1.0) - 1.0, 1e-15);
    EXPECT_EQ(atoms[1].mass, c);
}

TEST(Kill, ExponentShiftsByKillingTerm) {
    const double q = 1.3;
    for (const auto& xi : {brownian(2.0, 0.5), poisson(0.8), LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(0.5), 0.0)}) {
        const auto u = xi_to_U(xi);
        const auto ut = kill(u, q);
        for (double z : {-2.0, 0.4, 3.0}) {
            const cplx diff = char_exponent(ut, z) - char_exponent(u, z);
            EXPECT_LT(std::abs(diff - q * (std::exp(-kI * z) - 1.0)), 1e-10);
        }
    }
}

TEST(Moments, StandardCases) {
    auto bm = mean_var(brownian(1.0));
    ASSERT_TRUE(bm);
    EXPECT_EQ(bm->mean, 0.0);
    EXPECT_EQ(bm->variance, 1.0);

    auto pois = mean_var(poisson(2.5));
    ASSERT_TRUE(pois);
    EXPECT_NEAR(pois->mean, 2.5, 1e-15);
    EXPECT_NEAR(pois->variance, 2.5, 1e-15);

    auto lap = mean_var(LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.0, 1.0, 1.0), 0.0));
    ASSERT_TRUE(lap);
    EXPECT_NEAR(lap->mean, 0.0, 1e-12);
    EXPECT_NEAR(lap->variance, 4.0, 1e-9);
}

TEST(Moments, UnavailableWhenImageTailIsHeavy) {
    // Negative xi-jumps with rate 1.5 give U-jumps e^{-x}-1 without a second moment.
    const auto xi = LevyTriplet::from_drift(0.0, LevyMeasure::two_sided_exp(1.5, 1.0, 0.0), 0.0);
    EXPECT_FALSE(mean_var(xi_to_U(xi)).has_value());
    EXPECT_TRUE(mean(xi_to_U(xi)).has_value());
}

TEST(Moments, SecondMomentCondition) {
    EXPECT_TRUE(second_moment_condition(deterministic(1.0), deterministic(1.0), 1.0));
    EXPECT_TRUE(second_moment_condition(deterministic(1.0), deterministic(1.0), 0.0));
    // xi = 2B: E U_1 = 2, Var U_1 = 4, so 2E U_1 + Var U_1 = 8.
    const auto u = mean_var(xi_to_U(brownian(4.0)));
    ASSERT_TRUE(u);
    EXPECT_NEAR(u->mean, 2.0, 1e-15);
    EXPECT_NEAR(u->variance, 4.0, 1e-15);
    EXPECT_FALSE(second_moment_condition(brownian(4.0), deterministic(1.0), 2.0));
    EXPECT_TRUE(second_moment_condition(brownian(4.0), deterministic(1.0), 8.5));
}

TEST(Moments, UnkilledConvergenceCheck) {
    EXPECT_TRUE(unkilled_convergence_sufficient(deterministic(1.0), brownian(1.0)));
    EXPECT_FALSE(unkilled_convergence_sufficient(deterministic(-1.0), brownian(1.0)));
    EXPECT_FALSE(unkilled_convergence_sufficient(brownian(1.0), deterministic(1.0)));
}

TEST(ProcessSpec, StructuralTags) {
    EXPECT_EQ(classify(deterministic(1.0)), Structure::Deterministic);
    EXPECT_EQ(classify(brownian(1.0)), Structure::BrownianDrift);
    EXPECT_EQ(classify(poisson(1.0)), Structure::CompoundPoissonDrift);
    EXPECT_EQ(classify(LevyTriplet::from_drift(1.0, LevyMeasure::atom(1.0, 1.0), 0.0)), Structure::JumpDiffusion);
    EXPECT_EQ(classify(LevyTriplet::from_drift(0.0, LevyMeasure::ml_subordinator(0.5), 0.0)),
              Structure::InfiniteActivity);
    EXPECT_EQ(ProcessSpec::make(poisson(1.0), Role::Xi).structure, Structure::CompoundPoissonDrift);
}

}  // namespace
