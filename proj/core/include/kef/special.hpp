#pragma once

#include <complex>

namespace kef::special {

/// E_α(x) for α ∈ (0, 1] and x <= 0.
double mittag_leffler(double alpha, double x);

/// k-th derivative (k = 0, 1, 2) of u ↦ E_α(-u) for u >= 0.
double ml_laplace(double alpha, double u, int k = 0);

/// Density of the Mittag-Leffler law from its power series. Accurate only
/// on (0, ml_series_limit(alpha)].
double ml_density_series(double alpha, double s);

/// Largest s at which the sum of |terms| stays below 1e4, so cancellation
/// costs at most about 1e-12 in absolute terms.
double ml_series_limit(double alpha);

/// Density and distribution function of the Mittag-Leffler law through the
/// positive stable representation V = S^{-α}; valid for all s > 0.
double ml_density_stable(double alpha, double s);
double ml_cdf(double alpha, double s);

/// A(φ) = (sin αφ / sin φ)^{1/(1-α)} sin((1-α)φ) / sin αφ on (0, π). With U
/// uniform on (0, π) and E ~ Exp(1), (E/A(U))^{1-α} is Mittag-Leffler(α).
double kanter(double alpha, double phi);

/// Density using the series where it is accurate and the stable
/// representation beyond.
double ml_density(double alpha, double s);

/// ₂F₁(a, b; c; z): Gauss series for |z| < 0.9 or a terminating series,
/// otherwise the Pfaff transformation to z/(z-1), which needs Re z < 1/2.
std::complex<double> hyp2f1(double a, double b, double c, std::complex<double> z);

/// K_{n+1/2}(z) in closed form, z > 0.
double bessel_k_half(int n, double z);

double gamma_fn(double x);
double erfc(double x);
/// E_1(x) = ∫_x^∞ e^{-t}/t dt, x > 0.
double exp_integral_e1(double x);

}  // namespace kef::special
