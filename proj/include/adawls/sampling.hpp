#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adawls/basis.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/rng.hpp"

namespace adawls {

// ---------------------------------------------------------------------------
// Sample budgets

/// theta = (3 ln(3/2) - 1) / 2, the matrix Chernoff exponent at delta = 1/2.
double theta();

/// Riemann zeta for s > 1: exact pi^2/6 at s = 2, otherwise a 10^6-term partial
/// sum with an Euler-Maclaurin tail.
double riemann_zeta(double s);

struct BudgetRule {
  enum class Kind {
    FixedOversampling,      // m = tau n
    SingleSpace,            // m = ceil(n/theta ln(2n/alpha))
    StructuredSingleSpace,  // m = n ceil(ln(2n/alpha)/theta)
    UnionStructured,        // m = n ceil(ln(zeta(s) n^(s+1)/alpha)/theta)
    UnionIID,               // m = ceil(n/theta ln(zeta(s) n^(s+1)/alpha))
    LegacyRate,             // smallest m with n (1+r)/theta <= m / ln m
  };

  Kind kind = Kind::UnionStructured;
  std::size_t tau = 0;
  double alpha = 0.1;
  double s = 2.0;
  double r = 1.0;

  static BudgetRule fixed_oversampling(std::size_t tau);
  static BudgetRule single_space(double alpha);
  static BudgetRule structured_single_space(double alpha);
  static BudgetRule union_structured(double alpha, double s);
  static BudgetRule union_iid(double alpha, double s);
  static BudgetRule legacy_rate(double r);

  /// True when the rule always yields a multiple of n.
  [[nodiscard]] bool structured() const noexcept;
  /// Samples per basis function for structured rules. Throws otherwise.
  [[nodiscard]] std::size_t samples_per_row(std::size_t n) const;
};

std::size_t budget(const BudgetRule& rule, std::size_t n);

struct BudgetBoundsRow {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t m = 0;          // UnionIID budget
  std::size_t m_hat = 0;      // UnionStructured budget
  std::size_t m_doubled = 0;    // ceil(n/theta ln(2 zeta(s) n^(s+1)/alpha))
  std::size_t m_hat_doubled = 0;
  double epsilon = 0.0;       // theta / ln(2 n^(s+1) zeta(s)/alpha)
  bool lower_ok = false;      // m <= m_hat
  bool upper_ok = false;      // m_hat <= m + n - 1
  bool relative_ok = false;   // m_doubled + n - 1 <= m_doubled (1 + epsilon) - 1
  bool epsilon_ok = false;    // epsilon < 1
};

struct BudgetBoundsReport {
  std::vector<BudgetBoundsRow> rows;
  std::vector<std::size_t> violations;  // indices into rows
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Checks m_k <= m_hat_k <= m_k + n_k - 1 <= m_k (1 + eps_k) - 1 for n_k = k.
/// The first two use the union-bound budgets verbatim; the last one is
/// evaluated with the factor 2 inside the logarithm that eps_k carries.
BudgetBoundsReport budget_bounds_check(double alpha, double s, std::size_t k_max);

// ---------------------------------------------------------------------------
// Mixture measure mu_n = (1/n) sum_nu chi_nu

class MixtureMeasure {
 public:
  MixtureMeasure(TensorBasis basis, std::vector<MultiIndex> components);
  MixtureMeasure(TensorBasis basis, const IndexSet& set);

  [[nodiscard]] const TensorBasis& basis() const noexcept { return basis_; }
  [[nodiscard]] const std::vector<MultiIndex>& components() const noexcept { return components_; }
  [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }

  /// w(x) = n / sum_nu psi_nu(x)^2. Throws std::domain_error when the
  /// denominator is below 1e-300.
  [[nodiscard]] double weight(std::span<const double> x) const;
  /// d mu_n / d rho = 1 / w.
  [[nodiscard]] double density_ratio(std::span<const double> x) const;

 private:
  TensorBasis basis_;
  std::vector<MultiIndex> components_;
};

/// n / row-wise squared norm of a design matrix, with the same degeneracy check.
Eigen::VectorXd christoffel_weights(const Eigen::MatrixXd& psi);

// ---------------------------------------------------------------------------
// Sample sets

enum class Layout { Structured, Flat };

struct Provenance {
  enum class Source { Row, Mixture };
  Source source = Source::Row;
  /// Row index (structured) or index of the mixture component actually drawn;
  /// -1 when unknown (imported mixture points).
  int component = -1;
  int iteration = 0;
};

/// Random samples with their generating distribution recorded.
///
/// Structured sets hold one row per basis function, each with exactly tau()
/// points from chi_nu, in the order the rows were created, optionally followed
/// by a tail of mu_n mixture draws. Flat sets hold only mixture draws. The
/// vectorized order is row-major over rows, then the tail.
class SampleSet {
 public:
  static SampleSet structured(std::size_t dim);
  static SampleSet flat(std::size_t dim);

  [[nodiscard]] Layout layout() const noexcept { return layout_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept;

  [[nodiscard]] std::size_t rows() const noexcept { return rows_.size(); }
  [[nodiscard]] std::size_t tau() const noexcept { return tau_; }
  [[nodiscard]] std::vector<MultiIndex> row_indices() const;
  [[nodiscard]] const MultiIndex& row_index(std::size_t r) const { return rows_.at(r).nu; }
  [[nodiscard]] std::span<const double> row_point(std::size_t r, std::size_t l) const;
  [[nodiscard]] const Provenance& row_provenance(std::size_t r, std::size_t l) const;

  [[nodiscard]] std::size_t tail_size() const noexcept { return tail_prov_.size(); }
  /// Mixture components available to flat / tail draws (flat sets only track
  /// the components of the latest extension).
  [[nodiscard]] const std::vector<MultiIndex>& mixture_components() const noexcept {
    return mixture_components_;
  }

  /// All points in vectorized order.
  [[nodiscard]] Points points() const;
  [[nodiscard]] std::vector<Provenance> provenance() const;

  /// CSV with columns x_1..x_d, component, iteration; component is the row
  /// index for row points and "mixture" for mixture draws.
  void write_csv(std::ostream& os) const;
  /// Inverse of write_csv. `row_indices` gives the basis function of each row.
  static SampleSet read_csv(std::istream& is, Layout layout, std::span<const MultiIndex> row_indices,
                            std::span<const MultiIndex> mixture_components = {});

 private:
  friend SampleSet algo1_extend(const SampleSet&, std::span<const MultiIndex>, std::size_t,
                                std::span<const MultiIndex>, std::size_t, const TensorBasis&,
                                const RngStream&, int);
  friend struct Algo2Access;
  friend SampleSet mixed_extend(const SampleSet&, std::size_t, const TensorBasis&,
                                const RngStream&, int);

  struct Row {
    MultiIndex nu;
    std::vector<double> coords;  // tau * dim, row-major
    std::vector<Provenance> prov;
  };

  SampleSet(Layout layout, std::size_t dim) : layout_(layout), dim_(dim) {}

  Layout layout_;
  std::size_t dim_;
  std::size_t tau_ = 0;
  std::vector<Row> rows_;
  std::vector<double> tail_coords_;
  std::vector<Provenance> tail_prov_;
  std::vector<MultiIndex> mixture_components_;
};

// ---------------------------------------------------------------------------
// Draws

/// count i.i.d. draws from chi_nu, coordinatewise by inverse transform.
/// Draws read the stream sequentially.
Points sample_chi(const TensorBasis& basis, const MultiIndex& nu, std::size_t count,
                  RngStream& rng);

/// count i.i.d. draws from mu_n: a uniform component, then a chi draw. Point i
/// uses the child stream rng.split(i). `chosen`, if given, receives the
/// component index of every draw.
Points sample_mixture(const MixtureMeasure& mix, std::size_t count, const RngStream& rng,
                      std::vector<int>* chosen = nullptr);

/// Binomial(m, p): inversion when m min(p, 1-p) < 30, Bernoulli sum otherwise.
std::uint64_t binomial_draw(std::uint64_t m, double p, RngStream& rng);

// ---------------------------------------------------------------------------
// Sequential sampling

/// Deterministic sequential sampling. Grows a structured set from
/// (old_indices, tau_old) to (new_indices, tau_new): existing rows gain
/// tau_new - tau_old fresh points, rows for new indices get tau_new points,
/// and every existing point is kept bit-identical at its position. Row r
/// draws from rng.split(r). Throws std::invalid_argument when the state does
/// not match the old space, the spaces are not nested or tau decreases.
SampleSet algo1_extend(const SampleSet& state, std::span<const MultiIndex> old_indices,
                       std::size_t tau_old, std::span<const MultiIndex> new_indices,
                       std::size_t tau_new, const TensorBasis& basis, const RngStream& rng,
                       int iteration);

struct Algo2Counters {
  std::uint64_t binomial = 0;         // B_k
  std::size_t recycled = 0;           // min(m_k - B_k, m_{k-1})
  std::size_t fresh_old = 0;          // max(m_k - B_k - m_{k-1}, 0) draws from mu_{n_{k-1}}
  std::size_t fresh_new = 0;          // draws from sigma_{n_k}
  std::size_t discarded = 0;          // m_{k-1} - recycled
  [[nodiscard]] std::size_t new_draws() const noexcept { return fresh_old + fresh_new; }
};

struct Algo2Result {
  SampleSet samples;
  Algo2Counters counters;
};

/// Random sequential sampling. Turns m_old i.i.d. mu_{n_old} draws into m_new
/// i.i.d. mu_{n_new} draws, recycling as many old points as the binomial split
/// allows. The output order is randomly permuted so any prefix is again an
/// i.i.d. sample. Throws std::invalid_argument for non-nested spaces or a
/// decreasing budget.
Algo2Result algo2_extend(const SampleSet& state, std::span<const MultiIndex> old_indices,
                         std::size_t m_old, std::span<const MultiIndex> new_indices,
                         std::size_t m_new, const TensorBasis& basis, const RngStream& rng,
                         int iteration);

/// Tops a complete structured set with tau points per row up to m_total points
/// with mu_n draws (n = rows). Throws std::invalid_argument when m_total is
/// below the structured count.
SampleSet mixed_extend(const SampleSet& state, std::size_t m_total, const TensorBasis& basis,
                       const RngStream& rng, int iteration);

}  // namespace adawls
