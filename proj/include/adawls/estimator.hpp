#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adawls/basis.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/sampling.hpp"

namespace adawls {

/// Basis values and optimal weights at a point cloud for a fixed index list.
struct Design {
  Eigen::MatrixXd psi;      // m x n
  Eigen::VectorXd weights;  // w(x^l) = n / sum_i psi_i(x^l)^2
};

Design make_design(const TensorBasis& basis, std::span<const MultiIndex> indices,
                   const Points& points);

struct GramianSystem {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns
  double deviation = 0.0;        // spectral norm of G - I
  double cond = 1.0;             // lambda_max / lambda_min, +inf when singular
  std::size_t samples = 0;
};

/// G = (1/m) Psi^T diag(w) Psi, h = (1/m) Psi^T (w .* u), with the spectral
/// decomposition of G. Throws if u does not match the design.
GramianSystem assemble(const Design& design, const Eigen::VectorXd& u_values);

/// Same system accumulated over blocks of points, without forming the full
/// design matrix. `weights`, if given, receives w at every point.
GramianSystem assemble(const TensorBasis& basis, std::span<const MultiIndex> indices,
                       const Points& points, const Eigen::VectorXd& u_values,
                       Eigen::VectorXd* weights = nullptr);

GramianSystem assemble(const TensorBasis& basis, std::span<const MultiIndex> indices,
                       const SampleSet& samples, const Eigen::VectorXd& u_values);

/// Largest |eigenvalue| of G - I for symmetric G.
double spectral_deviation(const Eigen::MatrixXd& G);

class Estimator {
 public:
  Estimator() = default;
  Estimator(std::vector<MultiIndex> indices, Eigen::VectorXd coefficients, bool conditioned);

  [[nodiscard]] const std::vector<MultiIndex>& indices() const noexcept { return indices_; }
  [[nodiscard]] const Eigen::VectorXd& coefficients() const noexcept { return coefficients_; }
  /// Whether the stability gate passed (always true for a plain weighted fit).
  [[nodiscard]] bool conditioned() const noexcept { return conditioned_; }

  [[nodiscard]] double evaluate(const TensorBasis& basis, std::span<const double> x) const;
  /// Values at every row of `points`; evaluated in blocks to bound memory.
  [[nodiscard]] Eigen::VectorXd evaluate(const TensorBasis& basis, const Points& points) const;

 private:
  std::vector<MultiIndex> indices_;
  Eigen::VectorXd coefficients_;
  bool conditioned_ = true;
};

/// Weighted least-squares coefficients: G^+ h through the stored spectral
/// decomposition, dropping eigenvalues below 1e-12 lambda_max.
Estimator solve_wls(const GramianSystem& system, std::vector<MultiIndex> indices);

/// u_C: u_W when deviation <= 1/2, the zero function otherwise.
Estimator conditioned(const GramianSystem& system, const Estimator& weighted);

constexpr double kStabilityThreshold = 0.5;

/// e(nu) = |(1/m) sum_l w(x^l) r(x^l) psi_nu(x^l)|^2 for every candidate nu,
/// with r the residual values at the samples and w the weights of the current
/// space.
std::map<MultiIndex, double> residual_inner_products(const TensorBasis& basis,
                                                     const Points& points,
                                                     const Eigen::VectorXd& weights,
                                                     const Eigen::VectorXd& residual,
                                                     std::span<const MultiIndex> candidates);

}  // namespace adawls
