#include "adawls/basis.hpp"

#include <algorithm>
#include <stdexcept>

namespace adawls {

TensorBasis::TensorBasis(Family family, std::size_t dim) : family_(family), dim_(dim) {
  if (dim == 0) throw std::invalid_argument("TensorBasis: dimension must be >= 1");
}

double TensorBasis::eval(const MultiIndex& nu, std::span<const double> x) const {
  if (nu.dim() != dim_ || x.size() != dim_) {
    throw std::invalid_argument("TensorBasis::eval: dimension mismatch");
  }
  double value = 1.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    if (nu[i] != 0) value *= eval_orthonormal(family_, static_cast<int>(nu[i]), x[i]);
  }
  return value;
}

SparseIndexList::SparseIndexList(std::span<const MultiIndex> indices, std::size_t dim)
    : max_degree_(dim, 0) {
  offsets_.reserve(indices.size() + 1);
  offsets_.push_back(0);
  for (const auto& nu : indices) {
    if (nu.dim() != dim) throw std::invalid_argument("SparseIndexList: dimension mismatch");
    for (std::size_t i = 0; i < dim; ++i) {
      if (nu[i] != 0) {
        factors_.emplace_back(i, nu[i]);
        max_degree_[i] = std::max(max_degree_[i], static_cast<int>(nu[i]));
      }
    }
    offsets_.push_back(factors_.size());
  }
}

void SparseIndexList::evaluate(const double* values, std::size_t stride, double* out) const {
  for (std::size_t k = 0; k + 1 < offsets_.size(); ++k) {
    double v = 1.0;
    for (std::size_t f = offsets_[k]; f < offsets_[k + 1]; ++f) {
      v *= values[factors_[f].first * stride + factors_[f].second];
    }
    out[k] = v;
  }
}

Eigen::MatrixXd TensorBasis::design_matrix(std::span<const MultiIndex> indices,
                                           const Points& points) const {
  if (points.cols() != static_cast<Eigen::Index>(dim_) && points.rows() > 0) {
    throw std::invalid_argument("design_matrix: point dimension mismatch");
  }
  const SparseIndexList sparse(indices, dim_);
  const int max_deg = *std::max_element(sparse.max_degree().begin(), sparse.max_degree().end());
  const std::size_t stride = static_cast<std::size_t>(max_deg) + 1;

  // Row-major scratch so each point's basis values are written contiguously.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> psi(
      points.rows(), static_cast<Eigen::Index>(indices.size()));
  std::vector<double> table(dim_ * stride, 0.0);
  for (Eigen::Index l = 0; l < points.rows(); ++l) {
    for (std::size_t i = 0; i < dim_; ++i) {
      const int deg = sparse.max_degree()[i];
      eval_all_orthonormal(family_, deg, points(l, static_cast<Eigen::Index>(i)),
                           std::span<double>(table.data() + i * stride, deg + 1));
    }
    sparse.evaluate(table.data(), stride, psi.row(l).data());
  }
  return psi;
}

}  // namespace adawls
