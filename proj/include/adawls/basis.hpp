#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adawls/multiindex.hpp"
#include "adawls/orthopoly.hpp"

namespace adawls {

/// Point cloud, one point per row.
using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Tensorized orthonormal basis psi_nu(x) = prod_i T_{nu_i}(x_i) for a product
/// reference measure with the same univariate family in every coordinate.
class TensorBasis {
 public:
  TensorBasis(Family family, std::size_t dim);

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  [[nodiscard]] double eval(const MultiIndex& nu, std::span<const double> x) const;

  /// m x n matrix with entry (l, i) = psi_{indices[i]}(points.row(l)).
  [[nodiscard]] Eigen::MatrixXd design_matrix(std::span<const MultiIndex> indices,
                                              const Points& points) const;

 private:
  Family family_;
  std::size_t dim_;
};

/// Sparse factorization of a list of multi-indices: for each index only the
/// coordinates with a nonzero degree are kept.
class SparseIndexList {
 public:
  SparseIndexList(std::span<const MultiIndex> indices, std::size_t dim);

  [[nodiscard]] std::size_t size() const noexcept { return offsets_.size() - 1; }
  [[nodiscard]] const std::vector<int>& max_degree() const noexcept { return max_degree_; }

  /// Products over the univariate table `values` (dim rows of stride `stride`).
  void evaluate(const double* values, std::size_t stride, double* out) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::pair<std::size_t, unsigned>> factors_;
  std::vector<int> max_degree_;
};

}  // namespace adawls
