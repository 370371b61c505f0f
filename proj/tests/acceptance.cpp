// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
// Usage: acceptance [criterion ...]   (default: all)

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "adawls/adaptive.hpp"
#include "adawls/basis.hpp"
#include "adawls/estimator.hpp"
#include "adawls/experiments.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/orthopoly.hpp"
#include "adawls/rng.hpp"
#include "adawls/sampling.hpp"
#include "support/oracles.hpp"

using namespace adawls;

namespace {

constexpr auto kLeg = Family::LegendreUniform;
constexpr auto kHer = Family::HermiteGaussian;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<MultiIndex> chain(unsigned n) {
  std::vector<MultiIndex> out;
  for (unsigned j = 0; j < n; ++j) out.push_back(MultiIndex{j});
  return out;
}

Points structured_draw(const TensorBasis& basis, const std::vector<MultiIndex>& idx, std::size_t tau,
                       const RngStream& rng) {
  return algo1_extend(SampleSet::structured(basis.dim()), {}, 0, idx, tau, basis, rng, 1).points();
}

unsigned threads() { return default_threads(); }

Outcome stability_certificate() {
  const TensorBasis basis(kLeg, 1);
  const auto idx = chain(10);
  const std::size_t m = budget(BudgetRule::structured_single_space(0.2), 10);
  const std::size_t reps = 5000;
  const auto failed = run_replications(reps, 101, threads(), [&](std::size_t, RngStream rng) {
    const Points pts = structured_draw(basis, idx, m / 10, rng);
    return assemble(basis, idx, pts, Eigen::VectorXd::Zero(pts.rows())).deviation > 0.5 ? 1 : 0;
  });
  const double freq = std::accumulate(failed.begin(), failed.end(), 0.0) / reps;
  return {m == 430 && freq <= 0.2 + 0.017, fmt("m=%zu failure frequency %.4f (limit 0.217)", m, freq)};
}

Outcome expected_gramian() {
  const TensorBasis basis(kLeg, 1);
  const auto idx = chain(4);
  const std::size_t reps = 20000;
  const auto gs = run_replications(reps, 102, threads(), [&](std::size_t, RngStream rng) {
    const Points pts = structured_draw(basis, idx, 3, rng);
    return Eigen::MatrixXd(assemble(basis, idx, pts, Eigen::VectorXd::Zero(pts.rows())).G);
  });
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(4, 4);
  for (const auto& g : gs) {
    sum += g;
    sq += g.cwiseProduct(g);
  }
  double worst = 0.0;  // largest |mean - I| in standard errors
  bool ok = true;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double mean = sum(i, j) / reps;
      const double var = (sq(i, j) / reps - mean * mean) * reps / (reps - 1.0);
      const double se = std::sqrt(std::max(var, 0.0) / reps);
      const double dev = std::abs(mean - (i == j ? 1.0 : 0.0));
      if (se == 0.0) {
        ok = ok && dev <= 1e-12;
        continue;
      }
      worst = std::max(worst, dev / se);
      ok = ok && dev < 5.0 * se;
    }
  }
  return {ok, fmt("max |mean(G) - I| = %.2f standard errors (limit 5)", worst)};
}

Outcome union_bound_stability() {
  const TensorBasis basis(kHer, 1);
  const BudgetFn fn = budget_fn(BudgetRule::union_structured(0.1, 2.0));
  const std::size_t reps = 200;
  const auto runs = run_replications(reps, 103, threads(), [&](std::size_t, RngStream rng) {
    return condition_trajectory(basis, 30, fn, SamplerKind::Structured, rng);
  });
  std::size_t above = 0;
  bool chain_ok = true;
  for (const auto& run : runs) {
    double mx = 0.0;
    for (std::size_t k = 0; k < run.size(); ++k) {
      mx = std::max(mx, run[k].cond);
      chain_ok = chain_ok && run[k].n == k + 1;
    }
    if (mx > 3.0) ++above;
  }
  const double frac = static_cast<double>(above) / reps;
  double worst_mean = 0.0;
  for (const auto& s : trajectory_stats(runs)) worst_mean = std::max(worst_mean, s.mean_cond);
  return {chain_ok && frac <= 0.1 + 0.064 && worst_mean < 2.5,
          fmt("fraction with max cond > 3: %.3f (limit 0.164); largest mean cond %.3f (limit 2.5)", frac,
              worst_mean)};
}

Outcome recycling() {
  const TensorBasis basis(kLeg, 3);
  const BudgetRule rule = BudgetRule::union_structured(0.1, 2.0);
  const RngStream master(104);
  std::size_t u_calls = 0;
  std::unordered_set<std::uint64_t> seen;
  std::size_t repeated = 0;
  EvaluationCache cache([&](std::span<const double> x) {
    ++u_calls;
    std::uint64_t h = 0;
    for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    if (!seen.insert(h).second) ++repeated;
    return test_function(x);
  });

  IndexSet set = IndexSet::root(3);
  SampleSet samples = SampleSet::structured(3);
  std::size_t tau = 0;
  std::size_t misplaced = 0;
  std::size_t checked = 0;
  for (int k = 1; k <= 20; ++k) {
    const RngStream it = master.split(static_cast<std::uint64_t>(k));
    if (k > 1) {
      RngStream growth = it.split(1);
      set = random_growth(set, growth, k);
    }
    const auto& idx = set.inclusion_order();
    const std::size_t tau_new = rule.samples_per_row(idx.size());
    const SampleSet next = algo1_extend(samples, samples.row_indices(), tau, idx, tau_new, basis, it.split(0), k);
    const Points old_pts = samples.points();
    const Points new_pts = next.points();
    for (std::size_t r = 0; r < samples.rows(); ++r) {
      for (std::size_t l = 0; l < tau; ++l) {
        ++checked;
        const auto pos = static_cast<Eigen::Index>(r * tau_new + l);
        const auto was = static_cast<Eigen::Index>(r * tau + l);
        bool same = next.row_index(r) == samples.row_index(r);
        for (Eigen::Index c = 0; c < 3; ++c) {
          same = same && std::bit_cast<std::uint64_t>(new_pts(pos, c)) ==
                             std::bit_cast<std::uint64_t>(old_pts(was, c));
        }
        if (!same) ++misplaced;
      }
    }
    (void)cache.evaluate(new_pts);
    samples = next;
    tau = tau_new;
  }
  const bool ok = misplaced == 0 && checked > 0 && repeated == 0 && u_calls == samples.size();
  return {ok, fmt("%zu recycled points checked, %zu misplaced; %zu calls of u for %zu points, %zu re-evaluations",
                  checked, misplaced, u_calls, samples.size(), repeated)};
}

Outcome unrecycled_statistics() {
  const TensorBasis basis(kLeg, 1);
  const std::size_t T = 20;
  const auto schedule = chain_schedule(T);
  std::vector<std::size_t> n(T), m(T);
  for (std::size_t k = 0; k < T; ++k) {
    n[k] = k + 1;
    m[k] = budget(BudgetRule::union_iid(0.1, 2.0), n[k]);
  }
  const UnrecycledMoments cf = unrecycled_moments(n, m);
  const std::size_t reps = 5000;
  const auto u = run_replications(reps, 105, threads(), [&](std::size_t, RngStream rng) {
    return static_cast<double>(run_algo2_schedule(basis, schedule, m, rng).unrecycled_bound);
  });
  const double mean = std::accumulate(u.begin(), u.end(), 0.0) / reps;
  double m2 = 0.0, m4 = 0.0;
  for (double v : u) {
    m2 += std::pow(v - mean, 2);
    m4 += std::pow(v - mean, 4);
  }
  const double var = m2 / (reps - 1.0);
  const double se_mean = std::sqrt(cf.variance / reps);
  const double se_var = std::sqrt(std::max(m4 / reps - std::pow(m2 / reps, 2), 0.0) / reps);
  const bool ok = std::abs(mean - cf.mean) < 4.0 * se_mean && std::abs(var - cf.variance) < 4.0 * se_var &&
                  cf.variance < cf.mean && cf.mean <= cf.bound;
  return {ok, fmt("mean %.2f vs %.2f (se %.2f); variance %.2f vs %.2f (se %.2f); closed form %.2f < %.2f <= %.0f",
                  mean, cf.mean, se_mean, var, cf.variance, se_var, cf.variance, cf.mean, cf.bound)};
}

Outcome budget_comparison() {
  std::size_t violations = 0;
  std::size_t rows = 0;
  for (double alpha : {0.1, 0.5}) {
    for (double s : {1.5, 2.0, 3.0}) {
      const auto report = budget_bounds_check(alpha, s, 100);
      for (const auto& r : report.rows) {
        ++rows;
        if (!(r.m <= r.m_hat && r.m_hat <= r.m + r.n - 1)) ++violations;
      }
      violations += report.violations.size();
    }
  }
  return {violations == 0 && rows == 600, fmt("%zu rows, %zu violations", rows, violations)};
}

Outcome expectation_bound() {
  const TensorBasis basis(kLeg, 1);
  const auto idx = chain(5);
  const double alpha = 0.1;
  const std::size_t m = budget(BudgetRule::structured_single_space(alpha), 5);
  auto u = [](double t) { return 1.0 / (t + 3.0); };

  const GaussRule oracle_rule = gauss_rule(kLeg, 200);
  double norm2 = 0.0;
  std::vector<double> c(5, 0.0);
  for (std::size_t q = 0; q < oracle_rule.nodes.size(); ++q) {
    const double t = oracle_rule.nodes[q];
    norm2 += oracle_rule.weights[q] * u(t) * u(t);
    for (unsigned j = 0; j < 5; ++j) c[j] += oracle_rule.weights[q] * u(t) * eval_orthonormal(kLeg, static_cast<int>(j), t);
  }
  double best2 = norm2;
  for (double cj : c) best2 -= cj * cj;

  Points nodes(static_cast<Eigen::Index>(oracle_rule.nodes.size()), 1);
  Eigen::VectorXd u_nodes(nodes.rows());
  for (Eigen::Index q = 0; q < nodes.rows(); ++q) {
    nodes(q, 0) = oracle_rule.nodes[static_cast<std::size_t>(q)];
    u_nodes(q) = u(nodes(q, 0));
  }

  const std::size_t reps = 2000;
  const auto errs = run_replications(reps, 107, threads(), [&](std::size_t, RngStream rng) {
    const Points pts = structured_draw(basis, idx, m / 5, rng);
    Eigen::VectorXd values(pts.rows());
    for (Eigen::Index l = 0; l < pts.rows(); ++l) values(l) = u(pts(l, 0));
    const GramianSystem sys = assemble(basis, idx, pts, values);
    const Estimator uc = conditioned(sys, solve_wls(sys, idx));
    const Eigen::VectorXd diff = u_nodes - uc.evaluate(basis, nodes);
    double e = 0.0;
    for (Eigen::Index q = 0; q < nodes.rows(); ++q) e += oracle_rule.weights[static_cast<std::size_t>(q)] * diff(q) * diff(q);
    return e;
  });
  const double mean = std::accumulate(errs.begin(), errs.end(), 0.0) / reps;
  const double bound = (1.0 + 4.0 * theta() / std::log(2.0 * 5 / alpha)) * best2 + alpha * norm2;
  return {m == 215 && std::abs(norm2 - 0.125) < 1e-14 && mean <= bound,
          fmt("mean squared error %.4e <= bound %.4e (best approximation %.4e, |u|^2 %.6f)", mean, bound, best2,
              norm2)};
}

Outcome adaptive_convergence() {
  const TensorBasis basis(kLeg, 16);
  AdaptiveConfig cfg;
  cfg.alpha = 0.1;
  cfg.s = 2.0;
  cfg.beta = 0.5;
  cfg.k_max = 25;
  cfg.seed = 108;
  const AdaptiveStudy study = run_adaptive_study(basis, cfg, 10, 100000, false, threads());
  std::vector<double> finals;
  double max_cond = 0.0;
  for (const auto& run : study.runs) {
    for (const auto& rec : run.trace.records) max_cond = std::max(max_cond, rec.cond);
    finals.push_back(run.trace.records.back().cv ? run.trace.records.back().cv->l2 : INFINITY);
  }
  std::sort(finals.begin(), finals.end());
  const double median = 0.5 * (finals[4] + finals[5]);
  return {median <= 1e-4 && max_cond < 3.0,
          fmt("median final CV error %.3e (limit 1e-4); largest cond %.3f (limit 3)", median, max_cond)};
}

Outcome sampler_comparison() {
  const TensorBasis basis(kHer, 1);
  const BudgetFn fn = budget_fn(BudgetRule::fixed_oversampling(static_cast<std::size_t>(std::ceil(1.0 / theta()))));
  const std::size_t reps = 500;
  struct Pair {
    std::vector<ConditionStep> structured, iid;
  };
  const auto runs = run_replications(reps, 109, threads(), [&](std::size_t, RngStream rng) {
    return Pair{condition_trajectory(basis, 40, fn, SamplerKind::Structured, rng.split(0)),
                condition_trajectory(basis, 40, fn, SamplerKind::Iid, rng.split(1))};
  });
  std::vector<std::vector<ConditionStep>> a, b;
  for (const auto& p : runs) {
    a.push_back(p.structured);
    b.push_back(p.iid);
  }
  const auto sa = trajectory_stats(a);
  const auto sb = trajectory_stats(b);
  std::size_t considered = 0, wins = 0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].k < 5) continue;
    ++considered;
    if (sa[i].mean_cond <= sb[i].mean_cond) ++wins;
  }
  const double frac = static_cast<double>(wins) / static_cast<double>(considered);
  return {considered == 36 && frac >= 0.8,
          fmt("structured mean cond <= i.i.d. at %zu of %zu iterations (%.3f, limit 0.8)", wins, considered, frac)};
}

// --- property suites -------------------------------------------------------

bool orthonormality_suite(std::string& note) {
  for (Family f : {kLeg, kHer}) {
    const int deg = 60;
    const GaussRule rule = gauss_rule(f, deg + 2);
    std::vector<std::vector<double>> vals;
    for (double t : rule.nodes) vals.push_back(eval_all_orthonormal(f, deg, t));
    double err = 0.0;
    for (int i = 0; i <= deg; ++i) {
      for (int j = i; j <= deg; ++j) {
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) s += rule.weights[q] * vals[q][i] * vals[q][j];
        err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    }
    if (err > 1e-10) {
      note = fmt("orthonormality error %.2e for %s", err, to_string(f).c_str());
      return false;
    }
  }
  return true;
}

bool ks_suite(std::string& note) {
  const std::size_t N = 20000;
  const RngStream master(110);
  std::uint64_t id = 0;
  for (Family f : {kLeg, kHer}) {
    for (int j : {0, 1, 5, 20}) {
      // The tabulated CDF is first checked against an independent quadrature.
      for (double t : {-2.5, -0.7, -0.1, 0.3, 0.9, 3.1}) {
        const double want = oracle::induced_cdf(f, j, t);
        if (std::abs(induced_cdf(f, j, t) - want) > 1e-10) {
          note = fmt("CDF mismatch %s degree %d at %.2f", to_string(f).c_str(), j, t);
          return false;
        }
      }
      RngStream rng = master.split(id++);
      std::vector<double> xs(N);
      for (double& x : xs) x = sample_induced(f, j, rng);
      const double d = ks_statistic(xs, [&](double t) { return induced_cdf(f, j, t); });
      if (d >= oracle::ks_critical_1pct(N)) {
        note = fmt("KS %.4f for %s degree %d", d, to_string(f).c_str(), j);
        return false;
      }
    }
  }
  // Mixture draws: component frequencies and the pooled CDF.
  const TensorBasis basis(kLeg, 1);
  const MixtureMeasure mix(basis, chain(4));
  std::vector<int> chosen;
  const Points pts = sample_mixture(mix, N, master.split(id++), &chosen);
  std::vector<double> xs(N);
  for (std::size_t i = 0; i < N; ++i) xs[i] = pts(static_cast<Eigen::Index>(i), 0);
  const double d = ks_statistic(xs, [](double t) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += induced_cdf(kLeg, j, t);
    return s / 4.0;
  });
  if (d >= oracle::ks_critical_1pct(N)) {
    note = fmt("KS %.4f for the mixture", d);
    return false;
  }
  return true;
}

bool margin_suite(std::string& note) {
  const RngStream master(2024);
  for (int run = 0; run < 200; ++run) {
    RngStream rng = master.split(static_cast<std::uint64_t>(run));
    const std::size_t d = 1 + rng.below(5);
    const std::size_t target = 2 + rng.below(39);
    IndexSet s = IndexSet::root(d);
    int k = 1;
    while (s.size() < target) {
      const auto rm = s.reduced_margin();
      s = s.add(rm[rng.below(rm.size())], ++k);
      const auto bf = oracle::brute_force_margins(s.members(), d);
      const auto margin = s.margin();
      const auto reduced = s.reduced_margin();
      if (std::set<MultiIndex>(margin.begin(), margin.end()) != bf.margin ||
          std::set<MultiIndex>(reduced.begin(), reduced.end()) != bf.reduced || !oracle::downward_closed(s.members())) {
        note = fmt("margin mismatch in growth %d", run);
        return false;
      }
    }
  }
  return true;
}

bool bulk_suite(std::string& note) {
  const RngStream master(77);
  int checked = 0;
  for (int run = 0; run < 300; ++run) {
    RngStream rng = master.split(static_cast<std::uint64_t>(run));
    const std::size_t d = 2 + rng.below(4);
    IndexSet s = IndexSet::root(d);
    const std::size_t grow = rng.below(12);
    for (std::size_t i = 0; i < grow; ++i) {
      const auto rm = s.reduced_margin();
      s = s.add(rm[rng.below(rm.size())], static_cast<int>(i) + 2);
    }
    const auto rm = s.reduced_margin();
    if (rm.size() > 12) continue;
    std::map<MultiIndex, double> e;
    std::vector<double> values;
    for (const auto& nu : rm) {
      const double v = rng.below(4) == 0 ? 0.5 : rng.uniform() * rng.uniform();
      e[nu] = v;
      values.push_back(v);
    }
    const double beta = 0.05 + 0.95 * rng.uniform();
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    const auto F = bulk(s, e, beta);
    double mass = 0.0;
    for (const auto& nu : F) mass += e[nu];
    if (F.size() != oracle::minimal_bulk_size(values, beta * total) || mass < beta * total) {
      note = fmt("bulk mismatch in case %d", run);
      return false;
    }
    ++checked;
  }
  if (checked < 150) {
    note = fmt("only %d bulk cases", checked);
    return false;
  }
  return true;
}

bool pseudo_inverse_suite(std::string& note) {
  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd B(5, 3);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 3; ++j) B(i, j) = rng.uniform() - 0.5;
    }
    GramianSystem sys;
    sys.G = B * B.transpose();
    const Eigen::Vector3d c(rng.uniform(), rng.uniform(), rng.uniform());
    sys.h = sys.G * (B * c);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys.G);
    sys.eigenvalues = es.eigenvalues();
    sys.eigenvectors = es.eigenvectors();
    sys.deviation = spectral_deviation(sys.G);
    const Eigen::VectorXd a = solve_wls(sys, chain(5)).coefficients();
    const Eigen::MatrixXd null = Eigen::FullPivLU<Eigen::MatrixXd>(sys.G).kernel();
    // Minimal norm: a solves the system and has no component in the kernel.
    if ((sys.G * a - sys.h).norm() > 1e-10 * sys.h.norm() || null.cols() != 2 ||
        (null.transpose() * a).norm() > 1e-10 * a.norm()) {
      note = fmt("pseudo-inverse trial %d", trial);
      return false;
    }
  }
  return true;
}

Outcome property_suites() {
  std::string note;
  const std::pair<const char*, std::function<bool(std::string&)>> suites[] = {
      {"orthonormality", orthonormality_suite}, {"KS", ks_suite},   {"margins", margin_suite},
      {"bulk", bulk_suite},                     {"pseudo-inverse", pseudo_inverse_suite}};
  std::string passed;
  for (const auto& [name, fn] : suites) {
    if (!fn(note)) return {false, std::string(name) + " suite failed: " + note};
    passed += passed.empty() ? name : std::string(", ") + name;
  }
  return {true, passed + " suites pass"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"stability certificate", stability_certificate},
      {"expected Gramian", expected_gramian},
      {"union-bound stability", union_bound_stability},
      {"recycling", recycling},
      {"unrecycled-sample statistics", unrecycled_statistics},
      {"budget comparison", budget_comparison},
      {"expectation bound", expectation_bound},
      {"adaptive convergence", adaptive_convergence},
      {"sampler comparison", sampler_comparison},
      {"property suites", property_suites},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (int i = 0; i < 10; ++i) {
    if (!selected.empty() && !selected.contains(i + 1)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %d %s: %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
