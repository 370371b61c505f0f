#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "adawls/adaptive.hpp"
#include "support/oracles.hpp"

using namespace adawls;

namespace {

constexpr Family kLeg = Family::LegendreUniform;

AdaptiveConfig small_config(int k_max) {
  AdaptiveConfig cfg;
  cfg.k_max = k_max;
  cfg.seed = 3;
  return cfg;
}

std::set<MultiIndex> as_set(const std::vector<MultiIndex>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("config validation") {
  AdaptiveConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  auto bad = [](auto mutate) {
    AdaptiveConfig c;
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](auto& c) { c.beta = 0.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.beta = 1.1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.alpha = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.s = 1.0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.k_max = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.k_sg = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& c) { c.xi = 0.4; }).validate(), std::invalid_argument);
  CHECK_NOTHROW(bad([](auto& c) { c.beta = 1.0; }).validate());
}

TEST_CASE("rational test function") {
  CHECK(test_function(std::vector<double>(16, 0.0)) == 1.0);
  std::vector<double> e1(16, 0.0);
  e1[0] = 1.0;
  CHECK(test_function(e1) == doctest::Approx(1.0 / (1.0 + 1.0 / 32.0)).epsilon(1e-15));
  std::vector<double> e16(16, 0.0);
  e16[15] = 1.0;
  CHECK(test_function(e16) == doctest::Approx(1.0 / (1.0 + 1e-3 / 32.0)).epsilon(1e-15));
  CHECK(test_function(std::vector<double>{1.0}) == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("evaluation cache serves repeated points") {
  int raw = 0;
  EvaluationCache cache([&](std::span<const double> x) {
    ++raw;
    return x[0] * 2.0;
  });
  const std::vector<double> a{0.25}, b{0.5};
  CHECK(cache(a) == 0.5);
  CHECK(cache(b) == 1.0);
  CHECK(cache(a) == 0.5);
  CHECK(raw == 2);
  CHECK(cache.calls() == 2);
  CHECK(cache.hits() == 1);
  CHECK(cache.size() == 2);
}

TEST_CASE("cross-validation error") {
  const TensorBasis b2(kLeg, 2);
  const Function u = [](std::span<const double> x) { return 1.0 + 0.5 * x[0]; };
  const CrossValidation cv = CrossValidation::draw(b2, 500, RngStream(1), u);
  REQUIRE(cv.points.rows() == 500);
  for (Eigen::Index i = 0; i < cv.points.rows(); ++i) {
    CHECK(std::abs(cv.points(i, 0)) <= 1.0);
  }
  const std::vector<MultiIndex> idx{{0, 0}, {1, 0}};
  const Estimator exact(idx, Eigen::Vector2d(1.0, 0.5 / std::sqrt(3.0)), true);
  const CvError zero = estimate_cv_error(exact, b2, cv);
  CHECK(zero.l2 < 1e-14);
  CHECK(zero.linf < 1e-14);
  const Estimator shifted(idx, Eigen::Vector2d(1.25, 0.5 / std::sqrt(3.0)), true);
  const CvError c = estimate_cv_error(shifted, b2, cv);
  CHECK(c.l2 == doctest::Approx(0.25));
  CHECK(c.linf == doctest::Approx(0.25));
  const Estimator other(idx, Eigen::Vector2d(0.7, 0.1), true);
  const CvError o = estimate_cv_error(other, b2, cv);
  CHECK(o.l2 <= o.linf);
  CHECK_THROWS_AS(estimate_cv_error(exact, b2, CrossValidation{}), std::invalid_argument);
}

TEST_CASE("constant function") {
  const TensorBasis b3(kLeg, 3);
  const auto res = run_adaptive([](std::span<const double>) { return 1.0; }, b3, small_config(4));
  const auto first = res.trace.records.front();
  CHECK(first.n == 1);
  CHECK(first.m == 26);
  for (const auto& [nu, a] : res.coefficients_by_inclusion()) {
    CHECK(std::abs(a - (nu.is_zero() ? 1.0 : 0.0)) < 1e-12);
  }
  for (const auto& [nu, e] : res.margin_estimates) CHECK(e < 1e-20);
  // With zero residual mass the tie rule picks the lexicographically smallest candidate.
  CHECK(res.trace.records[1].selected == std::vector<MultiIndex>{{0, 0, 1}});
}

TEST_CASE("known univariate expansion") {
  const TensorBasis b1(kLeg, 1);
  const Function u = [](std::span<const double> x) {
    return eval_orthonormal(Family::LegendreUniform, 1, x[0]) + 2.0 * eval_orthonormal(Family::LegendreUniform, 2, x[0]);
  };
  const auto res = run_adaptive(u, b1, small_config(3));
  CHECK(res.index_set.size() == 3);
  const auto coeffs = res.coefficients_by_inclusion();
  CHECK(std::abs(coeffs[0].second) < 1e-10);
  CHECK(coeffs[1].second == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(coeffs[2].second == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("trace invariants of the budget-driven loop") {
  const TensorBasis b4(kLeg, 4);
  AdaptiveConfig cfg = small_config(12);
  const auto res = run_adaptive(test_function, b4, cfg);
  const BudgetRule rule = BudgetRule::union_structured(cfg.alpha, cfg.s);
  std::set<MultiIndex> prev;
  std::size_t prev_n = 0;
  std::size_t prev_m = 0;
  for (const auto& rec : res.trace.records) {
    CHECK(rec.n > prev_n);
    CHECK(rec.m == budget(rule, rec.n));
    CHECK(rec.m == rec.tau * rec.n);
    CHECK(rec.cumulative_samples == rec.m);
    CHECK(rec.new_samples == rec.m - prev_m);
    // Every point is evaluated exactly once.
    CHECK(rec.u_evaluations == rec.m);
    const auto members = as_set(rec.index_set);
    CHECK(oracle::downward_closed(members));
    for (const auto& nu : prev) CHECK(members.contains(nu));
    CHECK(rec.index_set.size() == rec.n);
    CHECK(rec.cond < 3.0);
    prev = members;
    prev_n = rec.n;
    prev_m = rec.m;
  }
  CHECK(res.u_calls == res.samples.size());
}

TEST_CASE("retained coefficients dominate the rejected margin estimates") {
  const TensorBasis b4(kLeg, 4);
  AdaptiveConfig cfg = small_config(15);
  const auto res = run_adaptive(test_function, b4, cfg);
  std::set<MultiIndex> forced;
  for (const auto& rec : res.trace.records) {
    if (rec.safeguard) forced.insert(*rec.safeguard);
  }
  double smallest = 1e300;
  for (const auto& [nu, a] : res.coefficients_by_inclusion()) {
    if (!forced.contains(nu)) smallest = std::min(smallest, std::abs(a));
  }
  double largest_rejected = 0.0;
  for (const auto& [nu, e] : res.margin_estimates) largest_rejected = std::max(largest_rejected, std::sqrt(e));
  CHECK(smallest * 10.0 >= largest_rejected);
}

TEST_CASE("safeguard adjoins the most ancient index every k_sg iterations") {
  const TensorBasis b2(kLeg, 2);
  // Even in both coordinates: odd indices only ever see sampling noise.
  const Function u = [](std::span<const double> x) {
    return eval_orthonormal(Family::LegendreUniform, 2, x[0]) + eval_orthonormal(Family::LegendreUniform, 2, x[1]);
  };
  AdaptiveConfig cfg = small_config(9);
  cfg.k_sg = 3;
  const auto res = run_adaptive(u, b2, cfg);
  for (const auto& rec : res.trace.records) {
    INFO("iteration " << rec.k);
    if (rec.k % 3 == 0) {
      REQUIRE(rec.safeguard.has_value());
      CHECK(std::find(rec.selected.begin(), rec.selected.end(), *rec.safeguard) == rec.selected.end());
      CHECK(std::find(rec.index_set.begin(), rec.index_set.end(), *rec.safeguard) != rec.index_set.end());
    } else {
      CHECK_FALSE(rec.safeguard.has_value());
    }
  }
  CHECK(res.trace.safeguard_activations() == 3);

  cfg.safeguard = false;
  CHECK(run_adaptive(u, b2, cfg).trace.safeguard_activations() == 0);
}

TEST_CASE("safeguard picks the oldest unselected reduced-margin index") {
  const TensorBasis b3(kLeg, 3);
  AdaptiveConfig cfg = small_config(10);
  cfg.k_sg = 2;
  const auto res = run_adaptive(test_function, b3, cfg);
  IndexSet replay = IndexSet::root(3);
  for (std::size_t i = 1; i < res.trace.records.size(); ++i) {
    const auto& rec = res.trace.records[i];
    const IndexSet before = replay;
    for (const auto& nu : rec.selected) replay = replay.add(nu, rec.k);
    if (rec.safeguard) {
      const std::set<MultiIndex> excluded(rec.selected.begin(), rec.selected.end());
      CHECK(*rec.safeguard == most_ancient(before, excluded));
      replay = replay.add(*rec.safeguard, rec.k);
    }
    CHECK(replay.inclusion_order() == rec.index_set);
  }
}

TEST_CASE("runs are reproducible") {
  const TensorBasis b3(kLeg, 3);
  const auto a = run_adaptive(test_function, b3, small_config(6));
  const auto b = run_adaptive(test_function, b3, small_config(6));
  std::ostringstream sa, sb;
  a.trace.write_csv(sa);
  b.trace.write_csv(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.samples.points() == b.samples.points());
  AdaptiveConfig other = small_config(6);
  other.seed = 4;
  CHECK(run_adaptive(test_function, b3, other).samples.points() != a.samples.points());
}

TEST_CASE("trace serialization") {
  const TensorBasis b2(kLeg, 2);
  const CrossValidation cv = CrossValidation::draw(b2, 100, RngStream(5), test_function);
  const auto res = run_adaptive(test_function, b2, small_config(3), &cv);
  std::ostringstream os;
  res.trace.write_csv(os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "k,n,m,tau,new_samples,cumulative_samples,u_evaluations,cache_hits,deviation,cond,conditioned,"
        "cv_l2,cv_linf,selected_count,selected,safeguard,topup_rounds");
  int lines = 0;
  for (std::string line; std::getline(is, line);) ++lines;
  CHECK(lines == 3);
  const auto j = res.trace.index_sets_json();
  REQUIRE(j.size() == 3);
  CHECK(j[0].dump() == "[[0,0]]");
  const auto summary = res.summary(small_config(3));
  CHECK(summary.contains("coefficients"));
  CHECK(res.trace.records.back().cv.has_value());
}

TEST_CASE("single iteration") {
  const TensorBasis b2(kLeg, 2);
  const auto res = run_adaptive(test_function, b2, small_config(1));
  CHECK(res.trace.records.size() == 1);
  CHECK(res.index_set.size() == 1);
}

TEST_CASE("fully adaptive loop") {
  const TensorBasis b1(kLeg, 1);
  AdaptiveConfig cfg = small_config(1);
  cfg.xi = 0.5;
  const auto one = run_fully_adaptive(test_function, b1, cfg);
  CHECK(one.trace.records[0].topup_rounds == 1);
  CHECK(one.trace.records[0].m == 1);
  CHECK(one.trace.records[0].deviation == 0.0);

  const TensorBasis b4(kLeg, 4);
  AdaptiveConfig fa = small_config(8);
  const auto fully = run_fully_adaptive(test_function, b4, fa);
  const auto budgeted = run_adaptive(test_function, b4, fa);
  for (std::size_t i = 0; i < fully.trace.records.size(); ++i) {
    const auto& rec = fully.trace.records[i];
    CHECK(rec.m % rec.n == 0);
    CHECK(rec.deviation < fa.xi);
    CHECK(rec.topup_rounds >= 1);
    CHECK(rec.u_evaluations == rec.m);
    CHECK(rec.m < budgeted.trace.records[i].m);
  }
  for (std::size_t i = 1; i < fully.trace.records.size(); ++i) {
    CHECK(fully.trace.records[i].tau >= fully.trace.records[i - 1].tau);
  }
}

TEST_CASE("top-up cap aborts with a diagnostic") {
  const TensorBasis b4(kLeg, 4);
  AdaptiveConfig cfg = small_config(6);
  cfg.xi = 0.5;
  cfg.topup_cap = 1;
  CHECK_THROWS_WITH_AS(run_fully_adaptive(test_function, b4, cfg), doctest::Contains("top-up rounds"),
                       std::runtime_error);
}
