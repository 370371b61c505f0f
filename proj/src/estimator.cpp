#include "adawls/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace adawls {

Design make_design(const TensorBasis& basis, std::span<const MultiIndex> indices,
                   const Points& points) {
  if (indices.empty()) throw std::invalid_argument("make_design: empty index list");
  Design d;
  d.psi = basis.design_matrix(indices, points);
  d.weights = christoffel_weights(d.psi);
  return d;
}

namespace {

void finish(GramianSystem& sys) {
  const Eigen::Index n = sys.G.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sys.G);
  if (eig.info() != Eigen::Success) throw std::runtime_error("assemble: eigensolver failed");
  sys.eigenvalues = eig.eigenvalues();
  sys.eigenvectors = eig.eigenvectors();
  const double lo = sys.eigenvalues(0);
  const double hi = sys.eigenvalues(n - 1);
  sys.deviation = std::max(std::abs(lo - 1.0), std::abs(hi - 1.0));
  sys.cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// Adds the contribution of one block of rows to the unscaled lower triangle of G and to h.
void accumulate(GramianSystem& sys, const Eigen::MatrixXd& psi, const Eigen::VectorXd& w,
                const Eigen::VectorXd& u) {
  const Eigen::MatrixXd scaled = w.array().sqrt().matrix().asDiagonal() * psi;
  sys.G.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  sys.h.noalias() += psi.transpose() * w.cwiseProduct(u);
}

}  // namespace

GramianSystem assemble(const Design& design, const Eigen::VectorXd& u_values) {
  const Eigen::Index m = design.psi.rows();
  const Eigen::Index n = design.psi.cols();
  if (m == 0) throw std::invalid_argument("assemble: no samples");
  if (u_values.size() != m || design.weights.size() != m) {
    throw std::invalid_argument("assemble: evaluations do not match the samples");
  }
  GramianSystem sys;
  sys.samples = static_cast<std::size_t>(m);
  sys.G = Eigen::MatrixXd::Zero(n, n);
  sys.h = Eigen::VectorXd::Zero(n);
  accumulate(sys, design.psi, design.weights, u_values);
  const double inv_m = 1.0 / static_cast<double>(m);
  sys.G = sys.G.selfadjointView<Eigen::Lower>();
  sys.G *= inv_m;
  sys.h *= inv_m;
  finish(sys);
  return sys;
}

GramianSystem assemble(const TensorBasis& basis, std::span<const MultiIndex> indices,
                       const Points& points, const Eigen::VectorXd& u_values,
                       Eigen::VectorXd* weights) {
  const Eigen::Index m = points.rows();
  const auto n = static_cast<Eigen::Index>(indices.size());
  if (m == 0) throw std::invalid_argument("assemble: no samples");
  if (n == 0) throw std::invalid_argument("assemble: empty index list");
  if (u_values.size() != m) throw std::invalid_argument("assemble: evaluations do not match the samples");
  GramianSystem sys;
  sys.samples = static_cast<std::size_t>(m);
  sys.G = Eigen::MatrixXd::Zero(n, n);
  sys.h = Eigen::VectorXd::Zero(n);
  if (weights) weights->resize(m);
  constexpr Eigen::Index block = 4096;
  for (Eigen::Index start = 0; start < m; start += block) {
    const Eigen::Index len = std::min(block, m - start);
    const Points chunk = points.middleRows(start, len);
    const Eigen::MatrixXd psi = basis.design_matrix(indices, chunk);
    const Eigen::VectorXd w = christoffel_weights(psi);
    accumulate(sys, psi, w, u_values.segment(start, len));
    if (weights) weights->segment(start, len) = w;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  sys.G = sys.G.selfadjointView<Eigen::Lower>();
  sys.G *= inv_m;
  sys.h *= inv_m;
  finish(sys);
  return sys;
}

GramianSystem assemble(const TensorBasis& basis, std::span<const MultiIndex> indices,
                       const SampleSet& samples, const Eigen::VectorXd& u_values) {
  return assemble(basis, indices, samples.points(), u_values);
}

double spectral_deviation(const Eigen::MatrixXd& G) {
  if (G.rows() != G.cols()) throw std::invalid_argument("spectral_deviation: matrix not square");
  if (G.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return std::max(std::abs(ev(0) - 1.0), std::abs(ev(ev.size() - 1) - 1.0));
}

Estimator::Estimator(std::vector<MultiIndex> indices, Eigen::VectorXd coefficients,
                     bool conditioned)
    : indices_(std::move(indices)), coefficients_(std::move(coefficients)), conditioned_(conditioned) {
  if (static_cast<Eigen::Index>(indices_.size()) != coefficients_.size()) {
    throw std::invalid_argument("Estimator: coefficient count does not match the indices");
  }
}

double Estimator::evaluate(const TensorBasis& basis, std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const double a = coefficients_(static_cast<Eigen::Index>(i));
    if (a != 0.0) v += a * basis.eval(indices_[i], x);
  }
  return v;
}

Eigen::VectorXd Estimator::evaluate(const TensorBasis& basis, const Points& points) const {
  const Eigen::Index m = points.rows();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  if (indices_.empty() || !conditioned_) return out;
  constexpr Eigen::Index block = 2048;
  for (Eigen::Index start = 0; start < m; start += block) {
    const Eigen::Index len = std::min(block, m - start);
    const Points chunk = points.middleRows(start, len);
    out.segment(start, len) = basis.design_matrix(indices_, chunk) * coefficients_;
  }
  return out;
}

Estimator solve_wls(const GramianSystem& system, std::vector<MultiIndex> indices) {
  const Eigen::Index n = system.G.rows();
  if (static_cast<Eigen::Index>(indices.size()) != n) {
    throw std::invalid_argument("solve_wls: index count does not match the Gramian");
  }
  const double cutoff = 1e-12 * std::max(system.eigenvalues(n - 1), 0.0);
  const Eigen::VectorXd projected = system.eigenvectors.transpose() * system.h;
  Eigen::VectorXd scaled = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lambda = system.eigenvalues(i);
    if (lambda > cutoff && lambda > 0.0) scaled(i) = projected(i) / lambda;
  }
  return {std::move(indices), system.eigenvectors * scaled, true};
}

Estimator conditioned(const GramianSystem& system, const Estimator& weighted) {
  if (system.deviation <= kStabilityThreshold) return weighted;
  return {weighted.indices(), Eigen::VectorXd::Zero(weighted.coefficients().size()), false};
}

std::map<MultiIndex, double> residual_inner_products(const TensorBasis& basis,
                                                     const Points& points,
                                                     const Eigen::VectorXd& weights,
                                                     const Eigen::VectorXd& residual,
                                                     std::span<const MultiIndex> candidates) {
  const Eigen::Index m = points.rows();
  if (m == 0) throw std::invalid_argument("residual_inner_products: no samples");
  if (weights.size() != m || residual.size() != m) {
    throw std::invalid_argument("residual_inner_products: size mismatch");
  }
  std::map<MultiIndex, double> out;
  if (candidates.empty()) return out;
  const Eigen::VectorXd wr = weights.cwiseProduct(residual);
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(candidates.size()));
  constexpr Eigen::Index block = 4096;
  for (Eigen::Index start = 0; start < m; start += block) {
    const Eigen::Index len = std::min(block, m - start);
    const Points chunk = points.middleRows(start, len);
    sums.noalias() += basis.design_matrix(candidates, chunk).transpose() * wr.segment(start, len);
  }
  sums /= static_cast<double>(m);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = sums(static_cast<Eigen::Index>(i));
    out[candidates[i]] = v * v;
  }
  return out;
}

}  // namespace adawls
