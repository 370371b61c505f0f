#include "adawls/orthopoly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace adawls {

std::string to_string(Family family) {
  switch (family) {
    case Family::LegendreUniform:
      return "legendre";
    case Family::HermiteGaussian:
      return "hermite";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "legendre" || name == "Legendre" || name == "LegendreUniform") {
    return Family::LegendreUniform;
  }
  if (name == "hermite" || name == "Hermite" || name == "HermiteGaussian") {
    return Family::HermiteGaussian;
  }
  throw std::invalid_argument("unknown polynomial family: " + name);
}

double recurrence_coefficient(Family family, int n) {
  const double x = static_cast<double>(n);
  switch (family) {
    case Family::LegendreUniform:
      return x / std::sqrt(4.0 * x * x - 1.0);
    case Family::HermiteGaussian:
      return std::sqrt(x);
  }
  return 0.0;
}

namespace {

constexpr int kTabulatedDegree = 1024;

struct CoefficientTable {
  std::vector<double> b;      // b[n] = b_{n+1}
  std::vector<double> inv_b;
};

const CoefficientTable& coefficients(Family family) {
  static const auto build = [](Family f) {
    CoefficientTable c;
    for (int n = 1; n <= kTabulatedDegree; ++n) {
      c.b.push_back(recurrence_coefficient(f, n));
      c.inv_b.push_back(1.0 / c.b.back());
    }
    return c;
  };
  static const CoefficientTable legendre = build(Family::LegendreUniform);
  static const CoefficientTable hermite = build(Family::HermiteGaussian);
  return family == Family::LegendreUniform ? legendre : hermite;
}

}  // namespace

void eval_all_orthonormal(Family family, int max_degree, double t, std::span<double> out) {
  if (max_degree < 0) throw std::invalid_argument("eval_all_orthonormal: negative degree");
  if (out.size() < static_cast<std::size_t>(max_degree) + 1) {
    throw std::invalid_argument("eval_all_orthonormal: output span too small");
  }
  out[0] = 1.0;
  if (max_degree == 0) return;
  if (max_degree <= kTabulatedDegree) {
    const auto& c = coefficients(family);
    double prev = 0.0;
    double cur = 1.0;
    double b_n = 0.0;
    for (int n = 0; n < max_degree; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double next = (t * cur - b_n * prev) * c.inv_b[i];
      out[i + 1] = next;
      prev = cur;
      cur = next;
      b_n = c.b[i];
    }
    return;
  }
  double prev = 0.0;
  double cur = 1.0;
  double b_n = 0.0;
  for (int n = 0; n < max_degree; ++n) {
    const double b_next = recurrence_coefficient(family, n + 1);
    const double next = (t * cur - b_n * prev) / b_next;
    out[static_cast<std::size_t>(n) + 1] = next;
    prev = cur;
    cur = next;
    b_n = b_next;
  }
}

std::vector<double> eval_all_orthonormal(Family family, int max_degree, double t) {
  std::vector<double> out(static_cast<std::size_t>(std::max(max_degree, 0)) + 1);
  eval_all_orthonormal(family, max_degree, t, out);
  return out;
}

double eval_orthonormal(Family family, int degree, double t) {
  if (degree < 0) throw std::invalid_argument("eval_orthonormal: negative degree");
  if (degree <= kTabulatedDegree) {
    const auto& c = coefficients(family);
    double prev = 0.0;
    double cur = 1.0;
    double b_n = 0.0;
    for (int n = 0; n < degree; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const double next = (t * cur - b_n * prev) * c.inv_b[i];
      prev = cur;
      cur = next;
      b_n = c.b[i];
    }
    return cur;
  }
  double prev = 0.0;
  double cur = 1.0;
  double b_n = 0.0;
  for (int n = 0; n < degree; ++n) {
    const double b_next = recurrence_coefficient(family, n + 1);
    const double next = (t * cur - b_n * prev) / b_next;
    prev = cur;
    cur = next;
    b_n = b_next;
  }
  return cur;
}

double reference_density(Family family, double t) {
  switch (family) {
    case Family::LegendreUniform:
      return (t >= -1.0 && t <= 1.0) ? 0.5 : 0.0;
    case Family::HermiteGaussian:
      return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
  }
  return 0.0;
}

double induced_density(Family family, int degree, double t) {
  const double p = eval_orthonormal(family, degree, t);
  return p * p * reference_density(family, t);
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> jacobi_eigensolver(Family family, int q,
                                                                  bool vectors) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd sub(std::max(q - 1, 0));
  for (int n = 1; n < q; ++n) sub(n - 1) = recurrence_coefficient(family, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub,
                                vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Jacobi matrix eigensolver did not converge");
  }
  return solver;
}

}  // namespace

GaussRule gauss_rule(Family family, int q) {
  if (q < 1) throw std::invalid_argument("gauss_rule: q must be >= 1");
  const auto solver = jacobi_eigensolver(family, q, true);
  GaussRule rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  // Weights from the Christoffel function 1 / sum_k p_k(x)^2.
  for (int i = 0; i < q; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    double sum = 0.0;
    for (double p : eval_all_orthonormal(family, q - 1, rule.nodes[i])) sum += p * p;
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

std::vector<double> polynomial_roots(Family family, int degree) {
  if (degree <= 0) return {};
  const auto solver = jacobi_eigensolver(family, degree, false);
  std::vector<double> roots(solver.eigenvalues().data(),
                            solver.eigenvalues().data() + degree);
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::pair<double, double> induced_support(Family family, int degree) {
  if (family == Family::LegendreUniform) return {-1.0, 1.0};
  const double r = std::sqrt(2.0 * (2.0 * degree + 1.0)) + 12.0;
  return {-r, r};
}

namespace {

constexpr int kPanelOrder = 32;
constexpr double kHermitePanelWidth = 1.0;
// Every root-to-root panel is split into this many cells for the lookup table.
constexpr int kCellsPerPanel = 8;

// Composite Gauss quadrature of the induced density, split at the roots of
// T_j, with the cumulative mass stored at every cell boundary.
struct InducedTable {
  Family family;
  int degree;
  std::vector<double> breaks;
  std::vector<double> cumulative;
  std::vector<double> ref_nodes;    // on [-1, 1]
  std::vector<double> ref_weights;  // sum to one
  std::vector<double> b;            // recurrence coefficients b_1..b_j
  std::vector<double> inv_b;

  double density(double t) const {
    double prev = 0.0;
    double cur = 1.0;
    double b_n = 0.0;
    for (int n = 0; n < degree; ++n) {
      const double next = (t * cur - b_n * prev) * inv_b[static_cast<std::size_t>(n)];
      prev = cur;
      cur = next;
      b_n = b[static_cast<std::size_t>(n)];
    }
    return cur * cur * reference_density(family, t);
  }

  double integral(double a, double t) const {
    if (t <= a) return 0.0;
    const double half = 0.5 * (t - a);
    const double mid = a + half;
    double acc = 0.0;
    for (std::size_t i = 0; i < ref_nodes.size(); ++i) {
      acc += ref_weights[i] * density(mid + half * ref_nodes[i]);
    }
    return 2.0 * half * acc;
  }

  double partial(std::size_t cell, double t) const { return integral(breaks[cell], t); }

  double total() const { return cumulative.back(); }

  std::size_t cell_of(double t) const {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
    const auto idx = static_cast<std::size_t>(std::distance(breaks.begin(), it));
    return std::clamp<std::size_t>(idx == 0 ? 0 : idx - 1, 0, breaks.size() - 2);
  }
};

std::shared_ptr<const InducedTable> build_table(Family family, int degree) {
  auto table = std::make_shared<InducedTable>();
  table->family = family;
  table->degree = degree;
  for (int n = 1; n <= degree; ++n) {
    table->b.push_back(recurrence_coefficient(family, n));
    table->inv_b.push_back(1.0 / table->b.back());
  }

  // Legendre integrands are polynomials of degree 2j: j + 1 points are exact.
  const int q = family == Family::LegendreUniform ? std::min(kPanelOrder, degree + 1)
                                                  : kPanelOrder;
  const GaussRule ref = gauss_rule(Family::LegendreUniform, q);
  table->ref_nodes = ref.nodes;
  table->ref_weights = ref.weights;

  const auto [lo, hi] = induced_support(family, degree);
  std::vector<double> knots{lo};
  for (double r : polynomial_roots(family, degree)) {
    if (r > lo && r < hi) knots.push_back(r);
  }
  knots.push_back(hi);

  table->breaks.push_back(lo);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i];
    const double b = knots[i + 1];
    int pieces = kCellsPerPanel;
    if (family == Family::HermiteGaussian) {
      pieces *= std::max(1, static_cast<int>(std::ceil((b - a) / kHermitePanelWidth)));
    }
    for (int p = 1; p <= pieces; ++p) {
      table->breaks.push_back(p == pieces ? b : a + (b - a) * p / pieces);
    }
  }

  table->cumulative.assign(table->breaks.size(), 0.0);
  for (std::size_t i = 0; i + 1 < table->breaks.size(); ++i) {
    table->cumulative[i + 1] = table->cumulative[i] + table->partial(i, table->breaks[i + 1]);
  }
  return table;
}

std::shared_ptr<const InducedTable> induced_table(Family family, int degree) {
  if (degree < 0) throw std::invalid_argument("induced measure: negative degree");
  const auto key = std::make_pair(static_cast<int>(family), degree);
  thread_local std::map<std::pair<int, int>, std::shared_ptr<const InducedTable>> local;
  if (auto it = local.find(key); it != local.end()) return it->second;

  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const InducedTable>> shared;
  std::shared_ptr<const InducedTable> table;
  {
    std::lock_guard lock(mutex);
    if (auto it = shared.find(key); it != shared.end()) table = it->second;
  }
  if (!table) {
    auto built = build_table(family, degree);
    std::lock_guard lock(mutex);
    table = shared.emplace(key, std::move(built)).first->second;
  }
  local.emplace(key, table);
  return table;
}

double quantile(const InducedTable& table, double u) {
  const double target = u * table.total();

  // Binary search over the tabulated cumulative masses brackets the root in
  // one cell; safeguarded Newton on the cell's partial integral finishes it.
  const auto& cum = table.cumulative;
  auto it = std::upper_bound(cum.begin(), cum.end(), target);
  std::size_t cell = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
  cell = std::min(cell, cum.size() - 2);
  while (cell + 2 < cum.size() && cum[cell + 1] - cum[cell] <= 0.0) ++cell;

  const double residual = target - cum[cell];
  double lo = table.breaks[cell];
  double hi = table.breaks[cell + 1];
  const double cell_mass = cum[cell + 1] - cum[cell];
  double t = lo + (hi - lo) * std::clamp(residual / cell_mass, 0.0, 1.0);

  const double tolerance = 1e-14 * table.total();
  for (int iter = 0; iter < 100; ++iter) {
    const double g = table.partial(cell, t) - residual;
    if (std::abs(g) <= tolerance) break;
    if (g < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    const double f = table.density(t);
    double next = f > 0.0 ? t - g / f : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 1e-14 * std::max(1.0, std::abs(t)) || hi - lo <= 1e-12) break;
  }
  return t;
}

}  // namespace

double induced_cdf(Family family, int degree, double t) {
  const auto table = induced_table(family, degree);
  if (t <= table->breaks.front()) return 0.0;
  if (t >= table->breaks.back()) return 1.0;
  const std::size_t cell = table->cell_of(t);
  const double mass = table->cumulative[cell] + table->partial(cell, t);
  return std::clamp(mass / table->total(), 0.0, 1.0);
}

double induced_quantile(Family family, int degree, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("induced_quantile: u must lie in (0,1)");
  return quantile(*induced_table(family, degree), u);
}

double sample_induced(Family family, int degree, RngStream& rng) {
  return quantile(*induced_table(family, degree), rng.uniform());
}

}  // namespace adawls
