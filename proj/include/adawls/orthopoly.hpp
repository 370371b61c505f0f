#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adawls/rng.hpp"

namespace adawls {

/// Univariate orthonormal polynomial families.
///
/// LegendreUniform: orthonormal on [-1, 1] against dt/2, T_j = sqrt(2j+1) P_j.
/// HermiteGaussian: orthonormal on R against the standard Gaussian density,
///                  T_j = He_j / sqrt(j!).
enum class Family { LegendreUniform, HermiteGaussian };

std::string to_string(Family family);
Family family_from_string(const std::string& name);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to one
};

/// Off-diagonal coefficient b_n (n >= 1) of the orthonormal recurrence
///   t T_n(t) = b_{n+1} T_{n+1}(t) + b_n T_{n-1}(t).
/// Both families are symmetric, so the diagonal coefficients vanish.
double recurrence_coefficient(Family family, int n);

double eval_orthonormal(Family family, int degree, double t);

/// Values T_0(t), ..., T_max_degree(t) from a single upward recurrence.
/// `out` must hold max_degree + 1 entries.
void eval_all_orthonormal(Family family, int max_degree, double t, std::span<double> out);
std::vector<double> eval_all_orthonormal(Family family, int max_degree, double t);

/// Density of the reference measure (1/2 on [-1,1], or the Gaussian density).
double reference_density(Family family, double t);

/// Density of the induced measure |T_j|^2 d rho against Lebesgue measure.
double induced_density(Family family, int degree, double t);

/// q-point Gauss rule for the reference probability measure (Golub-Welsch).
GaussRule gauss_rule(Family family, int q);

/// Roots of T_degree (eigenvalues of the degree x degree Jacobi matrix), ascending.
std::vector<double> polynomial_roots(Family family, int degree);

/// Interval outside which the induced measure is treated as having no mass:
/// [-1, 1] for Legendre, [-R_j, R_j] with R_j = sqrt(2(2j+1)) + 12 for Hermite.
std::pair<double, double> induced_support(Family family, int degree);

/// Induced cumulative distribution chi_j((-inf, t]).
double induced_cdf(Family family, int degree, double t);

/// Inverse of induced_cdf at u in (0, 1).
double induced_quantile(Family family, int degree, double u);

/// One draw from |T_j|^2 d rho by inverse transform of a single uniform.
double sample_induced(Family family, int degree, RngStream& rng);

}  // namespace adawls
