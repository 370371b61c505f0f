#include "adawls/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

#include "adawls/csv.hpp"

namespace adawls {

double theta() { return (3.0 * std::log(1.5) - 1.0) / 2.0; }

double riemann_zeta(double s) {
  if (!(s > 1.0)) throw std::invalid_argument("riemann_zeta: s must exceed 1");
  if (s == 2.0) return std::numbers::pi * std::numbers::pi / 6.0;

  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (const auto it = cache.find(s); it != cache.end()) return it->second;
  }
  constexpr double N = 1e6;
  // Euler-Maclaurin tail from N onwards, then the head summed smallest first.
  double sum = std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s) +
               s / 12.0 * std::pow(N, -s - 1.0) -
               s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(N, -s - 3.0);
  for (long k = static_cast<long>(N) - 1; k >= 1; --k) sum += std::pow(static_cast<double>(k), -s);
  std::lock_guard lock(mutex);
  cache.emplace(s, sum);
  return sum;
}

BudgetRule BudgetRule::fixed_oversampling(std::size_t tau) {
  BudgetRule r;
  r.kind = Kind::FixedOversampling;
  r.tau = tau;
  return r;
}

BudgetRule BudgetRule::single_space(double alpha) {
  BudgetRule r;
  r.kind = Kind::SingleSpace;
  r.alpha = alpha;
  return r;
}

BudgetRule BudgetRule::structured_single_space(double alpha) {
  BudgetRule r;
  r.kind = Kind::StructuredSingleSpace;
  r.alpha = alpha;
  return r;
}

BudgetRule BudgetRule::union_structured(double alpha, double s) {
  BudgetRule r;
  r.kind = Kind::UnionStructured;
  r.alpha = alpha;
  r.s = s;
  return r;
}

BudgetRule BudgetRule::union_iid(double alpha, double s) {
  BudgetRule r;
  r.kind = Kind::UnionIID;
  r.alpha = alpha;
  r.s = s;
  return r;
}

BudgetRule BudgetRule::legacy_rate(double rate) {
  BudgetRule r;
  r.kind = Kind::LegacyRate;
  r.r = rate;
  return r;
}

bool BudgetRule::structured() const noexcept {
  return kind == Kind::FixedOversampling || kind == Kind::StructuredSingleSpace ||
         kind == Kind::UnionStructured;
}

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("budget: alpha must lie in (0,1)");
}

double union_log(double alpha, double s, double n) {
  return std::log(riemann_zeta(s) * std::pow(n, s + 1.0) / alpha);
}

std::size_t ceil_size(double x) { return static_cast<std::size_t>(std::ceil(x)); }

}  // namespace

std::size_t BudgetRule::samples_per_row(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("budget: n must be >= 1");
  const double nd = static_cast<double>(n);
  switch (kind) {
    case Kind::FixedOversampling:
      return tau;
    case Kind::StructuredSingleSpace:
      check_alpha(alpha);
      return ceil_size(std::log(2.0 * nd / alpha) / theta());
    case Kind::UnionStructured:
      check_alpha(alpha);
      return ceil_size(union_log(alpha, s, nd) / theta());
    default:
      throw std::invalid_argument("samples_per_row: rule is not structured");
  }
}

std::size_t budget(const BudgetRule& rule, std::size_t n) {
  if (n == 0) throw std::invalid_argument("budget: n must be >= 1");
  const double nd = static_cast<double>(n);
  using Kind = BudgetRule::Kind;
  switch (rule.kind) {
    case Kind::FixedOversampling:
    case Kind::StructuredSingleSpace:
    case Kind::UnionStructured:
      return n * rule.samples_per_row(n);
    case Kind::SingleSpace:
      check_alpha(rule.alpha);
      return ceil_size(nd / theta() * std::log(2.0 * nd / rule.alpha));
    case Kind::UnionIID:
      check_alpha(rule.alpha);
      return ceil_size(nd / theta() * union_log(rule.alpha, rule.s, nd));
    case Kind::LegacyRate: {
      if (!(rule.r > 0.0)) throw std::invalid_argument("budget: r must be positive");
      const double target = nd * (1.0 + rule.r) / theta();
      // m / ln m is increasing for m >= 3.
      auto ok = [&](std::size_t m) {
        const double md = static_cast<double>(m);
        return target <= md / std::log(md);
      };
      std::size_t hi = 3;
      while (!ok(hi)) hi *= 2;
      std::size_t lo = hi / 2 < 3 ? 3 : hi / 2;
      if (ok(lo)) return lo;
      while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (ok(mid) ? hi : lo) = mid;
      }
      return hi;
    }
  }
  throw std::logic_error("budget: unknown rule");
}

BudgetBoundsReport budget_bounds_check(double alpha, double s, std::size_t k_max) {
  check_alpha(alpha);
  if (!(s > 1.0)) throw std::invalid_argument("budget_bounds_check: s must exceed 1");
  const double zeta = riemann_zeta(s);
  BudgetBoundsReport report;
  for (std::size_t k = 1; k <= k_max; ++k) {
    BudgetBoundsRow row;
    row.k = k;
    row.n = k;
    const double nd = static_cast<double>(k);
    row.m = budget(BudgetRule::union_iid(alpha, s), k);
    row.m_hat = budget(BudgetRule::union_structured(alpha, s), k);
    const double doubled_log = std::log(2.0 * zeta * std::pow(nd, s + 1.0) / alpha);
    row.m_doubled = ceil_size(nd / theta() * doubled_log);
    row.m_hat_doubled = k * ceil_size(doubled_log / theta());
    row.epsilon = theta() / doubled_log;
    row.lower_ok = row.m <= row.m_hat;
    row.upper_ok = row.m_hat <= row.m + row.n - 1;
    row.relative_ok = static_cast<double>(row.m_doubled + row.n - 1) <=
                      static_cast<double>(row.m_doubled) * (1.0 + row.epsilon) - 1.0;
    row.epsilon_ok = row.epsilon < 1.0;
    if (!(row.lower_ok && row.upper_ok && row.relative_ok && row.epsilon_ok)) {
      report.violations.push_back(report.rows.size());
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------

MixtureMeasure::MixtureMeasure(TensorBasis basis, std::vector<MultiIndex> components)
    : basis_(std::move(basis)), components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("MixtureMeasure: no components");
  for (const auto& nu : components_) {
    if (nu.dim() != basis_.dim()) throw std::invalid_argument("MixtureMeasure: dimension mismatch");
  }
}

MixtureMeasure::MixtureMeasure(TensorBasis basis, const IndexSet& set)
    : MixtureMeasure(std::move(basis), set.enumerate_lex()) {}

double MixtureMeasure::weight(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& nu : components_) {
    const double v = basis_.eval(nu, x);
    sum += v * v;
  }
  if (!(sum >= 1e-300)) {
    throw std::domain_error("weight: basis functions vanish simultaneously at the point");
  }
  return static_cast<double>(components_.size()) / sum;
}

double MixtureMeasure::density_ratio(std::span<const double> x) const { return 1.0 / weight(x); }

Eigen::VectorXd christoffel_weights(const Eigen::MatrixXd& psi) {
  Eigen::VectorXd w(psi.rows());
  const double n = static_cast<double>(psi.cols());
  for (Eigen::Index l = 0; l < psi.rows(); ++l) {
    const double sum = psi.row(l).squaredNorm();
    if (!(sum >= 1e-300)) {
      throw std::domain_error("weight: basis functions vanish simultaneously at a sample");
    }
    w(l) = n / sum;
  }
  return w;
}

// ---------------------------------------------------------------------------

SampleSet SampleSet::structured(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("SampleSet: dimension must be >= 1");
  return {Layout::Structured, dim};
}

SampleSet SampleSet::flat(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("SampleSet: dimension must be >= 1");
  return {Layout::Flat, dim};
}

std::size_t SampleSet::size() const noexcept { return rows_.size() * tau_ + tail_prov_.size(); }

std::vector<MultiIndex> SampleSet::row_indices() const {
  std::vector<MultiIndex> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row.nu);
  return out;
}

std::span<const double> SampleSet::row_point(std::size_t r, std::size_t l) const {
  const Row& row = rows_.at(r);
  if (l >= tau_) throw std::out_of_range("SampleSet::row_point");
  return {row.coords.data() + l * dim_, dim_};
}

const Provenance& SampleSet::row_provenance(std::size_t r, std::size_t l) const {
  return rows_.at(r).prov.at(l);
}

Points SampleSet::points() const {
  Points out(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim_));
  double* dst = out.data();
  for (const auto& row : rows_) dst = std::copy(row.coords.begin(), row.coords.end(), dst);
  std::copy(tail_coords_.begin(), tail_coords_.end(), dst);
  return out;
}

std::vector<Provenance> SampleSet::provenance() const {
  std::vector<Provenance> out;
  out.reserve(size());
  for (const auto& row : rows_) out.insert(out.end(), row.prov.begin(), row.prov.end());
  out.insert(out.end(), tail_prov_.begin(), tail_prov_.end());
  return out;
}

void SampleSet::write_csv(std::ostream& os) const {
  std::vector<std::string> fields;
  for (std::size_t i = 1; i <= dim_; ++i) fields.push_back("x_" + std::to_string(i));
  fields.emplace_back("component");
  fields.emplace_back("iteration");
  csv::write_row(os, fields);

  auto emit = [&](const double* x, const Provenance& p) {
    fields.clear();
    for (std::size_t i = 0; i < dim_; ++i) fields.push_back(csv::format(x[i]));
    fields.push_back(p.source == Provenance::Source::Row ? std::to_string(p.component) : "mixture");
    fields.push_back(std::to_string(p.iteration));
    csv::write_row(os, fields);
  };
  for (const auto& row : rows_) {
    for (std::size_t l = 0; l < tau_; ++l) emit(row.coords.data() + l * dim_, row.prov[l]);
  }
  for (std::size_t l = 0; l < tail_prov_.size(); ++l) {
    emit(tail_coords_.data() + l * dim_, tail_prov_[l]);
  }
}

SampleSet SampleSet::read_csv(std::istream& is, Layout layout,
                              std::span<const MultiIndex> row_indices,
                              std::span<const MultiIndex> mixture_components) {
  std::vector<std::string> fields;
  if (!csv::read_row(is, fields) || fields.size() < 3) {
    throw std::invalid_argument("SampleSet::read_csv: missing header");
  }
  const std::size_t dim = fields.size() - 2;
  for (std::size_t i = 0; i < dim; ++i) {
    if (fields[i] != "x_" + std::to_string(i + 1)) {
      throw std::invalid_argument("SampleSet::read_csv: unexpected column " + fields[i]);
    }
  }
  if (fields[dim] != "component" || fields[dim + 1] != "iteration") {
    throw std::invalid_argument("SampleSet::read_csv: unexpected trailing columns");
  }

  SampleSet out(layout, dim);
  out.mixture_components_.assign(mixture_components.begin(), mixture_components.end());
  if (layout == Layout::Structured) {
    for (const auto& nu : row_indices) {
      if (nu.dim() != dim) throw std::invalid_argument("SampleSet::read_csv: row index dimension");
      out.rows_.push_back(Row{nu, {}, {}});
    }
  }

  bool in_tail = false;
  while (csv::read_row(is, fields)) {
    if (fields.size() != dim + 2) throw std::invalid_argument("SampleSet::read_csv: ragged row");
    std::vector<double> x(dim);
    for (std::size_t i = 0; i < dim; ++i) x[i] = csv::parse_double(fields[i]);
    Provenance p;
    p.iteration = static_cast<int>(csv::parse_int(fields[dim + 1]));
    if (fields[dim] == "mixture") {
      p.source = Provenance::Source::Mixture;
      in_tail = true;
      out.tail_coords_.insert(out.tail_coords_.end(), x.begin(), x.end());
      out.tail_prov_.push_back(p);
      continue;
    }
    if (layout == Layout::Flat || in_tail) {
      throw std::invalid_argument("SampleSet::read_csv: row point outside the structured block");
    }
    const long long r = csv::parse_int(fields[dim]);
    if (r < 0 || static_cast<std::size_t>(r) >= out.rows_.size()) {
      throw std::invalid_argument("SampleSet::read_csv: component " + fields[dim] +
                                  " has no row index");
    }
    p.source = Provenance::Source::Row;
    p.component = static_cast<int>(r);
    Row& row = out.rows_[static_cast<std::size_t>(r)];
    row.coords.insert(row.coords.end(), x.begin(), x.end());
    row.prov.push_back(p);
  }

  if (!out.rows_.empty()) {
    out.tau_ = out.rows_.front().prov.size();
    for (const auto& row : out.rows_) {
      if (row.prov.size() != out.tau_) {
        throw std::invalid_argument("SampleSet::read_csv: rows hold different numbers of points");
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void draw_chi_into(const TensorBasis& basis, const MultiIndex& nu, RngStream& rng, double* out) {
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    out[i] = sample_induced(basis.family(), static_cast<int>(nu[i]), rng);
  }
}

void check_dims(const TensorBasis& basis, std::span<const MultiIndex> indices) {
  for (const auto& nu : indices) {
    if (nu.dim() != basis.dim()) throw std::invalid_argument("sampling: dimension mismatch");
  }
}

void check_nested(std::span<const MultiIndex> old_indices, std::span<const MultiIndex> new_indices) {
  const std::set<MultiIndex> fresh(new_indices.begin(), new_indices.end());
  if (fresh.size() != new_indices.size()) throw std::invalid_argument("sampling: duplicate indices");
  const std::set<MultiIndex> old(old_indices.begin(), old_indices.end());
  if (old.size() != old_indices.size()) throw std::invalid_argument("sampling: duplicate indices");
  for (const auto& nu : old) {
    if (!fresh.contains(nu)) {
      throw std::invalid_argument("sampling: spaces are not nested, " + to_string(nu) +
                                  " was removed");
    }
  }
}

}  // namespace

Points sample_chi(const TensorBasis& basis, const MultiIndex& nu, std::size_t count,
                  RngStream& rng) {
  if (nu.dim() != basis.dim()) throw std::invalid_argument("sample_chi: dimension mismatch");
  Points out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(basis.dim()));
  for (std::size_t l = 0; l < count; ++l) draw_chi_into(basis, nu, rng, out.row(l).data());
  return out;
}

Points sample_mixture(const MixtureMeasure& mix, std::size_t count, const RngStream& rng,
                      std::vector<int>* chosen) {
  const TensorBasis& basis = mix.basis();
  Points out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(basis.dim()));
  if (chosen) chosen->resize(count);
  for (std::size_t l = 0; l < count; ++l) {
    RngStream stream = rng.split(l);
    const auto j = static_cast<std::size_t>(stream.below(mix.size()));
    draw_chi_into(basis, mix.components()[j], stream, out.row(l).data());
    if (chosen) (*chosen)[l] = static_cast<int>(j);
  }
  return out;
}

std::uint64_t binomial_draw(std::uint64_t m, double p, RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_draw: p must lie in [0,1]");
  if (m == 0 || p == 0.0) return 0;
  if (p == 1.0) return m;
  const double md = static_cast<double>(m);
  const bool flip = p > 0.5;
  const double q = flip ? 1.0 - p : p;
  if (md * q < 30.0) {
    // Inversion through the pmf recursion P(k+1) = P(k) (m-k)/(k+1) q/(1-q).
    const double u = rng.uniform();
    const double ratio = q / (1.0 - q);
    double pmf = std::exp(md * std::log1p(-q));
    double cdf = pmf;
    std::uint64_t k = 0;
    while (cdf < u && k < m) {
      pmf *= static_cast<double>(m - k) / static_cast<double>(k + 1) * ratio;
      ++k;
      cdf += pmf;
    }
    return flip ? m - k : k;
  }
  std::uint64_t successes = 0;
  for (std::uint64_t t = 0; t < m; ++t) successes += rng.uniform() < p ? 1 : 0;
  return successes;
}

// ---------------------------------------------------------------------------

SampleSet algo1_extend(const SampleSet& state, std::span<const MultiIndex> old_indices,
                       std::size_t tau_old, std::span<const MultiIndex> new_indices,
                       std::size_t tau_new, const TensorBasis& basis, const RngStream& rng,
                       int iteration) {
  if (state.layout() != Layout::Structured) {
    throw std::invalid_argument("algo1_extend: needs a structured sample set");
  }
  if (state.tail_size() != 0) {
    throw std::invalid_argument("algo1_extend: sample set carries mixture draws");
  }
  if (state.dim() != basis.dim()) throw std::invalid_argument("algo1_extend: dimension mismatch");
  if (tau_new < tau_old) throw std::invalid_argument("algo1_extend: tau decreased");
  check_dims(basis, new_indices);
  check_nested(old_indices, new_indices);
  if (state.rows() != old_indices.size()) {
    throw std::invalid_argument("algo1_extend: sample rows do not match the old space");
  }
  for (std::size_t r = 0; r < state.rows(); ++r) {
    if (state.row_index(r) != old_indices[r]) {
      throw std::invalid_argument("algo1_extend: row " + std::to_string(r) +
                                  " does not match the old space");
    }
  }
  if (state.rows() > 0 && state.tau() != tau_old) {
    throw std::invalid_argument("algo1_extend: rows do not hold tau_old points");
  }

  SampleSet out = state;
  out.tau_ = tau_new;
  const std::set<MultiIndex> old(old_indices.begin(), old_indices.end());
  for (const auto& nu : new_indices) {
    if (!old.contains(nu)) out.rows_.push_back(SampleSet::Row{nu, {}, {}});
  }
  const std::size_t dim = basis.dim();
  for (std::size_t r = 0; r < out.rows_.size(); ++r) {
    auto& row = out.rows_[r];
    const std::size_t have = row.prov.size();
    if (have == tau_new) continue;
    RngStream stream = rng.split(r);
    row.coords.resize(tau_new * dim);
    for (std::size_t l = have; l < tau_new; ++l) {
      draw_chi_into(basis, row.nu, stream, row.coords.data() + l * dim);
      row.prov.push_back({Provenance::Source::Row, static_cast<int>(r), iteration});
    }
  }
  out.mixture_components_ = out.row_indices();
  return out;
}

struct Algo2Access {
  static Algo2Result extend(const SampleSet& state, std::span<const MultiIndex> old_indices,
                            std::size_t m_old, std::span<const MultiIndex> new_indices,
                            std::size_t m_new, const TensorBasis& basis, const RngStream& rng,
                            int iteration) {
    if (state.layout() != Layout::Flat) {
      throw std::invalid_argument("algo2_extend: needs a flat sample set");
    }
    if (state.dim() != basis.dim()) throw std::invalid_argument("algo2_extend: dimension mismatch");
    if (m_new < m_old) throw std::invalid_argument("algo2_extend: budget decreased");
    if (new_indices.empty()) throw std::invalid_argument("algo2_extend: empty new space");
    check_dims(basis, new_indices);
    check_nested(old_indices, new_indices);
    if (state.size() != m_old) {
      throw std::invalid_argument("algo2_extend: sample set does not hold m_old points");
    }
    if (m_old > 0) {
      const std::set<MultiIndex> recorded(state.mixture_components_.begin(),
                                          state.mixture_components_.end());
      const std::set<MultiIndex> old(old_indices.begin(), old_indices.end());
      if (recorded != old) {
        throw std::invalid_argument("algo2_extend: samples were drawn for a different space");
      }
    }

    const std::size_t n_old = old_indices.size();
    const std::size_t n_new = new_indices.size();
    const std::size_t dim = basis.dim();

    Algo2Counters c;
    RngStream split_stream = rng.split(0);
    const double p = static_cast<double>(n_new - n_old) / static_cast<double>(n_new);
    c.binomial = binomial_draw(m_new, p, split_stream);
    const std::size_t from_old = m_new - static_cast<std::size_t>(c.binomial);
    c.recycled = std::min(from_old, m_old);
    c.fresh_old = from_old > m_old ? from_old - m_old : 0;
    c.fresh_new = m_new - c.recycled - c.fresh_old;
    c.discarded = m_old - c.recycled;

    // Position of every component in the new listing, for provenance.
    std::map<MultiIndex, int> position;
    for (std::size_t j = 0; j < n_new; ++j) position.emplace(new_indices[j], static_cast<int>(j));

    SampleSet out = SampleSet::flat(dim);
    out.mixture_components_.assign(new_indices.begin(), new_indices.end());
    out.tail_coords_.reserve(m_new * dim);
    out.tail_prov_.reserve(m_new);

    // The stored order is a uniform random permutation, so its prefix is an
    // unbiased subsample of the old i.i.d. set.
    out.tail_coords_.assign(state.tail_coords_.begin(),
                            state.tail_coords_.begin() + static_cast<std::ptrdiff_t>(c.recycled * dim));
    for (std::size_t l = 0; l < c.recycled; ++l) {
      Provenance prov = state.tail_prov_[l];
      if (prov.component >= 0 &&
          static_cast<std::size_t>(prov.component) < state.mixture_components_.size()) {
        prov.component = position.at(state.mixture_components_[static_cast<std::size_t>(prov.component)]);
      }
      out.tail_prov_.push_back(prov);
    }

    auto append = [&](const Points& pts, const std::vector<int>& chosen,
                      const std::vector<MultiIndex>& components) {
      for (Eigen::Index l = 0; l < pts.rows(); ++l) {
        out.tail_coords_.insert(out.tail_coords_.end(), pts.row(l).data(), pts.row(l).data() + dim);
        out.tail_prov_.push_back({Provenance::Source::Mixture,
                                  position.at(components[static_cast<std::size_t>(chosen[static_cast<std::size_t>(l)])]),
                                  iteration});
      }
    };

    std::vector<int> chosen;
    if (c.fresh_old > 0) {
      const MixtureMeasure old_mix(basis, std::vector<MultiIndex>(old_indices.begin(), old_indices.end()));
      append(sample_mixture(old_mix, c.fresh_old, rng.split(1), &chosen), chosen, old_mix.components());
    }
    if (c.fresh_new > 0) {
      const std::set<MultiIndex> old(old_indices.begin(), old_indices.end());
      std::vector<MultiIndex> added;
      for (const auto& nu : new_indices) {
        if (!old.contains(nu)) added.push_back(nu);
      }
      const MixtureMeasure sigma(basis, added);
      append(sample_mixture(sigma, c.fresh_new, rng.split(2), &chosen), chosen, sigma.components());
    }

    RngStream perm = rng.split(3);
    for (std::size_t i = m_new; i > 1; --i) {
      const auto j = static_cast<std::size_t>(perm.below(i));
      if (j == i - 1) continue;
      std::swap_ranges(out.tail_coords_.begin() + static_cast<std::ptrdiff_t>((i - 1) * dim),
                       out.tail_coords_.begin() + static_cast<std::ptrdiff_t>(i * dim),
                       out.tail_coords_.begin() + static_cast<std::ptrdiff_t>(j * dim));
      std::swap(out.tail_prov_[i - 1], out.tail_prov_[j]);
    }
    return {std::move(out), c};
  }
};

Algo2Result algo2_extend(const SampleSet& state, std::span<const MultiIndex> old_indices,
                         std::size_t m_old, std::span<const MultiIndex> new_indices,
                         std::size_t m_new, const TensorBasis& basis, const RngStream& rng,
                         int iteration) {
  return Algo2Access::extend(state, old_indices, m_old, new_indices, m_new, basis, rng, iteration);
}

SampleSet mixed_extend(const SampleSet& state, std::size_t m_total, const TensorBasis& basis,
                       const RngStream& rng, int iteration) {
  if (state.layout() != Layout::Structured) {
    throw std::invalid_argument("mixed_extend: needs a structured sample set");
  }
  if (state.rows() == 0) throw std::invalid_argument("mixed_extend: no rows");
  if (state.dim() != basis.dim()) throw std::invalid_argument("mixed_extend: dimension mismatch");
  if (m_total < state.size()) {
    throw std::invalid_argument("mixed_extend: target below the current sample count");
  }
  SampleSet out = state;
  const std::size_t extra = m_total - state.size();
  if (extra == 0) return out;
  const MixtureMeasure mix(basis, state.row_indices());
  std::vector<int> chosen;
  const Points pts = sample_mixture(mix, extra, rng, &chosen);
  const std::size_t dim = basis.dim();
  for (std::size_t l = 0; l < extra; ++l) {
    const double* x = pts.row(static_cast<Eigen::Index>(l)).data();
    out.tail_coords_.insert(out.tail_coords_.end(), x, x + dim);
    out.tail_prov_.push_back({Provenance::Source::Mixture, chosen[l], iteration});
  }
  out.mixture_components_ = state.row_indices();
  return out;
}

}  // namespace adawls
