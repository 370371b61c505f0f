#include "adawls/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "adawls/csv.hpp"

namespace adawls {

void AdaptiveConfig::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("config: beta must lie in (0,1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0,1)");
  if (!(s > 1.0)) throw std::invalid_argument("config: s must exceed 1");
  if (k_max < 1) throw std::invalid_argument("config: k_max must be >= 1");
  if (k_sg < 1) throw std::invalid_argument("config: k_sg must be >= 1");
  if (!(xi >= 0.5)) throw std::invalid_argument("config: xi must be at least 1/2");
  if (topup_cap < 1) throw std::invalid_argument("config: topup_cap must be >= 1");
}

nlohmann::json to_json(const AdaptiveConfig& cfg) {
  return {{"beta", cfg.beta},   {"alpha", cfg.alpha}, {"s", cfg.s},
          {"k_max", cfg.k_max}, {"k_sg", cfg.k_sg},   {"xi", cfg.xi},
          {"seed", cfg.seed},   {"topup_cap", cfg.topup_cap}, {"safeguard", cfg.safeguard}};
}

double EvaluationCache::operator()(std::span<const double> x) {
  std::string key(x.size() * sizeof(double), '\0');
  std::memcpy(key.data(), x.data(), key.size());
  const auto [it, inserted] = values_.try_emplace(std::move(key), 0.0);
  if (!inserted) {
    ++hits_;
    return it->second;
  }
  ++calls_;
  it->second = u_(x);
  return it->second;
}

Eigen::VectorXd EvaluationCache::evaluate(const Points& points) {
  Eigen::VectorXd out(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  for (Eigen::Index l = 0; l < points.rows(); ++l) {
    out(l) = (*this)(std::span<const double>(points.row(l).data(), d));
  }
  return out;
}

CrossValidation CrossValidation::draw(const TensorBasis& basis, std::size_t count,
                                      const RngStream& rng, const Function& u) {
  CrossValidation cv;
  const std::size_t d = basis.dim();
  cv.points.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  cv.values.resize(static_cast<Eigen::Index>(count));
  for (std::size_t l = 0; l < count; ++l) {
    RngStream stream = rng.split(l);
    double* x = cv.points.row(static_cast<Eigen::Index>(l)).data();
    for (std::size_t i = 0; i < d; ++i) x[i] = sample_induced(basis.family(), 0, stream);
    cv.values(static_cast<Eigen::Index>(l)) = u(std::span<const double>(x, d));
  }
  return cv;
}

CvError estimate_cv_error(const Estimator& estimator, const TensorBasis& basis,
                          const CrossValidation& cv) {
  if (cv.points.rows() == 0) throw std::invalid_argument("estimate_cv_error: empty cross-validation set");
  const Eigen::VectorXd diff = (cv.values - estimator.evaluate(basis, cv.points)).cwiseAbs();
  return {std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size())), diff.maxCoeff()};
}

double test_function(std::span<const double> x) {
  const std::size_t d = x.size();
  if (d == 0) throw std::invalid_argument("test_function: empty point");
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double q = d == 1 ? 1.0
                            : std::pow(10.0, -3.0 * static_cast<double>(i) / static_cast<double>(d - 1));
    sum += q * x[i];
  }
  return 1.0 / (1.0 + sum / (2.0 * static_cast<double>(d)));
}

namespace {

std::string join(const std::vector<MultiIndex>& list) {
  std::string out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out += ';';
    out += to_string(list[i]);
  }
  return out;
}

nlohmann::json list_json(const std::vector<MultiIndex>& list) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& nu : list) out.push_back(to_json(nu));
  return out;
}

}  // namespace

void AdaptiveTrace::write_csv(std::ostream& os) const {
  csv::write_row(os, {"k", "n", "m", "tau", "new_samples", "cumulative_samples", "u_evaluations",
                      "cache_hits", "deviation", "cond", "conditioned", "cv_l2", "cv_linf",
                      "selected_count", "selected", "safeguard", "topup_rounds"});
  for (const auto& r : records) {
    csv::write_row(os, {std::to_string(r.k), std::to_string(r.n), std::to_string(r.m),
                        std::to_string(r.tau), std::to_string(r.new_samples),
                        std::to_string(r.cumulative_samples), std::to_string(r.u_evaluations),
                        std::to_string(r.cache_hits), csv::format(r.deviation), csv::format(r.cond),
                        r.conditioned ? "1" : "0", r.cv ? csv::format(r.cv->l2) : "",
                        r.cv ? csv::format(r.cv->linf) : "", std::to_string(r.selected.size()),
                        join(r.selected), r.safeguard ? to_string(*r.safeguard) : "",
                        std::to_string(r.topup_rounds)});
  }
}

nlohmann::json AdaptiveTrace::index_sets_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : records) out.push_back(list_json(r.index_set));
  return out;
}

std::size_t AdaptiveTrace::safeguard_activations() const {
  return static_cast<std::size_t>(std::count_if(records.begin(), records.end(),
                                                [](const auto& r) { return r.safeguard.has_value(); }));
}

std::vector<std::pair<MultiIndex, double>> AdaptiveResult::coefficients_by_inclusion() const {
  std::map<MultiIndex, double> by_index;
  for (std::size_t i = 0; i < estimator.indices().size(); ++i) {
    by_index[estimator.indices()[i]] = estimator.coefficients()(static_cast<Eigen::Index>(i));
  }
  std::vector<std::pair<MultiIndex, double>> out;
  for (const auto& nu : index_set.inclusion_order()) out.emplace_back(nu, by_index.at(nu));
  return out;
}

nlohmann::json AdaptiveResult::summary(const AdaptiveConfig& cfg) const {
  nlohmann::json j;
  j["algorithm"] = trace.algorithm;
  j["config"] = to_json(cfg);
  j["dimension"] = index_set.dim();
  j["iterations"] = trace.records.size();
  if (!trace.records.empty()) {
    const auto& last = trace.records.back();
    j["n"] = last.n;
    j["m"] = last.m;
    j["tau"] = last.tau;
    j["deviation"] = last.deviation;
    j["cond"] = std::isfinite(last.cond) ? nlohmann::json(last.cond) : nlohmann::json("inf");
    j["conditioned"] = last.conditioned;
    if (last.cv) j["cv"] = {{"l2", last.cv->l2}, {"linf", last.cv->linf}};
    double max_cond = 0.0;
    for (const auto& r : trace.records) max_cond = std::max(max_cond, r.cond);
    j["max_cond"] = std::isfinite(max_cond) ? nlohmann::json(max_cond) : nlohmann::json("inf");
  }
  j["u_evaluations"] = u_calls;
  j["cache_hits"] = cache_hits;
  j["samples_drawn"] = trace.records.empty() ? 0 : trace.records.back().cumulative_samples;
  j["safeguard_activations"] = trace.safeguard_activations();
  j["index_set"] = to_json(index_set);
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& [nu, a] : coefficients_by_inclusion()) {
    coeffs.push_back({{"index", to_json(nu)}, {"value", a}});
  }
  j["coefficients"] = coeffs;
  return j;
}

namespace {

// State shared by both adaptive loops: the current space, its structured
// samples and the latest fit.
class Loop {
 public:
  Loop(const Function& u, const TensorBasis& basis, const AdaptiveConfig& cfg,
       const CrossValidation* cv, bool gate)
      : basis_(basis), cv_(cv), gate_(gate), cache_(u), master_(cfg.seed),
        set_(IndexSet::root(basis.dim())), samples_(SampleSet::structured(basis.dim())) {}

  const IndexSet& set() const { return set_; }
  std::size_t tau() const { return tau_; }
  const GramianSystem& system() const { return system_; }
  RngStream stream(int k) const { return master_.split(static_cast<std::uint64_t>(k)); }

  // Grows rows to `next` with `tau` points each.
  void extend(const IndexSet& next, std::size_t tau, const RngStream& rng, int k) {
    const std::size_t before = samples_.size();
    samples_ = algo1_extend(samples_, samples_.row_indices(), tau_, next.inclusion_order(), tau,
                            basis_, rng, k);
    drawn_ += samples_.size() - before;
    set_ = next;
    tau_ = tau;
  }

  void solve() {
    points_ = samples_.points();
    u_values_ = cache_.evaluate(points_);
    std::vector<MultiIndex> lex = set_.enumerate_lex();
    system_ = assemble(basis_, lex, points_, u_values_, &weights_);
    weighted_ = solve_wls(system_, std::move(lex));
    estimator_ = gate_ ? conditioned(system_, weighted_) : weighted_;
  }

  std::map<MultiIndex, double> margin_estimates() const {
    const Eigen::VectorXd residual = u_values_ - estimator_.evaluate(basis_, points_);
    const std::vector<MultiIndex> margin = set_.reduced_margin();
    return residual_inner_products(basis_, points_, weights_, residual, margin);
  }

  IterationRecord record(int k, std::size_t drawn_before) const {
    IterationRecord r;
    r.k = k;
    r.n = set_.size();
    r.m = samples_.size();
    r.tau = tau_;
    r.new_samples = drawn_ - drawn_before;
    r.cumulative_samples = drawn_;
    r.u_evaluations = cache_.calls();
    r.cache_hits = cache_.hits();
    r.deviation = system_.deviation;
    r.cond = system_.cond;
    r.conditioned = system_.deviation <= kStabilityThreshold;
    if (cv_) r.cv = estimate_cv_error(estimator_, basis_, *cv_);
    r.index_set = set_.inclusion_order();
    return r;
  }

  std::size_t drawn() const { return drawn_; }

  AdaptiveResult finish(AdaptiveTrace trace, std::map<MultiIndex, double> estimates) {
    AdaptiveResult out;
    out.estimator = estimator_;
    out.weighted = weighted_;
    out.index_set = set_;
    out.samples = samples_;
    out.trace = std::move(trace);
    out.margin_estimates = std::move(estimates);
    out.u_calls = cache_.calls();
    out.cache_hits = cache_.hits();
    return out;
  }

 private:
  const TensorBasis& basis_;
  const CrossValidation* cv_;
  bool gate_;
  EvaluationCache cache_;
  RngStream master_;
  IndexSet set_;
  SampleSet samples_;
  std::size_t tau_ = 0;
  std::size_t drawn_ = 0;
  Points points_;
  Eigen::VectorXd u_values_;
  Eigen::VectorXd weights_;
  GramianSystem system_;
  Estimator weighted_;
  Estimator estimator_;
};

IndexSet grow(const IndexSet& set, const std::vector<MultiIndex>& added, int k) {
  IndexSet out = set;
  for (const auto& nu : added) out = out.add(nu, k);
  return out;
}

std::optional<MultiIndex> safeguard_candidate(const IndexSet& previous,
                                              const std::vector<MultiIndex>& selected) {
  const std::set<MultiIndex> excluded(selected.begin(), selected.end());
  for (const auto& [nu, age] : previous.reduced_margin_ages()) {
    if (!excluded.contains(nu)) return most_ancient(previous, excluded);
  }
  return std::nullopt;
}

// Adds one point per row until the deviation drops below xi; at least one round.
std::size_t top_up(Loop& loop, const AdaptiveConfig& cfg, const RngStream& rng, int k) {
  for (std::size_t round = 1;; ++round) {
    if (round > cfg.topup_cap) {
      std::ostringstream msg;
      msg << "fully adaptive: iteration " << k << " did not reach deviation < " << cfg.xi
          << " within " << cfg.topup_cap << " top-up rounds (n = " << loop.set().size()
          << ", samples per row = " << loop.tau() << ", deviation = " << loop.system().deviation
          << ")";
      throw std::runtime_error(msg.str());
    }
    loop.extend(loop.set(), loop.tau() + 1, rng.split(round), k);
    loop.solve();
    if (loop.system().deviation < cfg.xi) return round;
  }
}

}  // namespace

AdaptiveResult run_adaptive(const Function& u, const TensorBasis& basis, const AdaptiveConfig& cfg,
                            const CrossValidation* cv) {
  cfg.validate();
  const BudgetRule rule = BudgetRule::union_structured(cfg.alpha, cfg.s);
  Loop loop(u, basis, cfg, cv, true);
  AdaptiveTrace trace;
  trace.algorithm = "adaptive";

  loop.extend(loop.set(), rule.samples_per_row(loop.set().size()), loop.stream(1).split(0), 1);
  loop.solve();
  trace.records.push_back(loop.record(1, 0));
  auto estimates = loop.margin_estimates();

  for (int k = 2; k <= cfg.k_max; ++k) {
    const std::size_t drawn_before = loop.drawn();
    const RngStream it = loop.stream(k);
    const IndexSet previous = loop.set();
    const std::vector<MultiIndex> selected = bulk(previous, estimates, cfg.beta);
    IndexSet next = grow(previous, selected, k);
    loop.extend(next, rule.samples_per_row(next.size()), it.split(0), k);
    loop.solve();

    std::optional<MultiIndex> forced;
    if (cfg.safeguard && k % cfg.k_sg == 0) {
      forced = safeguard_candidate(previous, selected);
      if (forced) {
        next = loop.set().add(*forced, k);
        loop.extend(next, rule.samples_per_row(next.size()), it.split(1).split(0), k);
        loop.solve();
      }
    }
    IterationRecord rec = loop.record(k, drawn_before);
    rec.selected = selected;
    rec.safeguard = forced;
    trace.records.push_back(std::move(rec));
    estimates = loop.margin_estimates();
  }
  return loop.finish(std::move(trace), std::move(estimates));
}

AdaptiveResult run_fully_adaptive(const Function& u, const TensorBasis& basis,
                                  const AdaptiveConfig& cfg, const CrossValidation* cv) {
  cfg.validate();
  Loop loop(u, basis, cfg, cv, false);
  AdaptiveTrace trace;
  trace.algorithm = "fully-adaptive";

  const std::size_t first_rounds = top_up(loop, cfg, loop.stream(1).split(0), 1);
  IterationRecord first = loop.record(1, 0);
  first.topup_rounds = first_rounds;
  trace.records.push_back(std::move(first));
  auto estimates = loop.margin_estimates();

  for (int k = 2; k <= cfg.k_max; ++k) {
    const std::size_t drawn_before = loop.drawn();
    const RngStream it = loop.stream(k);
    const IndexSet previous = loop.set();
    const std::vector<MultiIndex> selected = bulk(previous, estimates, cfg.beta);
    // New rows inherit the current number of samples per row.
    loop.extend(grow(previous, selected, k), loop.tau(), it.split(0).split(0), k);
    std::size_t rounds = top_up(loop, cfg, it.split(0), k);

    std::optional<MultiIndex> forced;
    if (cfg.safeguard && k % cfg.k_sg == 0) {
      forced = safeguard_candidate(previous, selected);
      if (forced) {
        loop.extend(loop.set().add(*forced, k), loop.tau(), it.split(1).split(0), k);
        rounds += top_up(loop, cfg, it.split(1), k);
      }
    }
    IterationRecord rec = loop.record(k, drawn_before);
    rec.selected = selected;
    rec.safeguard = forced;
    rec.topup_rounds = rounds;
    trace.records.push_back(std::move(rec));
    estimates = loop.margin_estimates();
  }
  return loop.finish(std::move(trace), std::move(estimates));
}

}  // namespace adawls
