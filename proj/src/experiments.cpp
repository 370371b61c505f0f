#include "adawls/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "adawls/csv.hpp"
#include "adawls/estimator.hpp"

namespace adawls {

namespace fs = std::filesystem;

unsigned default_threads() {
  if (const char* env = std::getenv("ADAWLS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RngStream replication_stream(std::uint64_t seed, std::size_t r) { return RngStream(seed).split(r); }

IndexSet random_growth(const IndexSet& set, RngStream& rng, int iteration, std::size_t max_new) {
  std::vector<MultiIndex> margin = set.reduced_margin();
  if (margin.empty()) throw std::invalid_argument("random_growth: empty reduced margin");
  if (max_new == 0) throw std::invalid_argument("random_growth: max_new must be positive");
  const std::size_t upper = std::min(max_new, margin.size());
  const std::size_t count = 1 + static_cast<std::size_t>(rng.below(upper));
  IndexSet out = set;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(margin.size() - i));
    std::swap(margin[i], margin[j]);
    out = out.add(margin[i], iteration);
  }
  return out;
}

BudgetFn budget_fn(const BudgetRule& rule) {
  return [rule](std::size_t n) { return budget(rule, n); };
}

namespace {

double gramian_deviation(const TensorBasis& basis, const IndexSet& set, const Points& points,
                         double* cond) {
  const std::vector<MultiIndex> lex = set.enumerate_lex();
  const GramianSystem sys =
      assemble(basis, lex, points, Eigen::VectorXd::Zero(points.rows()));
  *cond = sys.cond;
  return sys.deviation;
}

}  // namespace

std::vector<ConditionStep> condition_trajectory(const TensorBasis& basis, int k_max,
                                                const BudgetFn& budget_of, SamplerKind sampler,
                                                const RngStream& rng) {
  if (k_max < 1) throw std::invalid_argument("condition_trajectory: k_max must be >= 1");
  std::vector<ConditionStep> out;
  IndexSet set = IndexSet::root(basis.dim());
  SampleSet samples = sampler == SamplerKind::Structured ? SampleSet::structured(basis.dim())
                                                         : SampleSet::flat(basis.dim());
  std::vector<MultiIndex> previous;
  std::size_t m_prev = 0;
  std::size_t tau = 0;
  std::size_t drawn = 0;
  for (int k = 1; k <= k_max; ++k) {
    const RngStream it = rng.split(static_cast<std::uint64_t>(k));
    if (k > 1) {
      RngStream growth = it.split(0);
      set = random_growth(set, growth, k);
    }
    const std::size_t n = set.size();
    const std::size_t m = budget_of(n);
    const std::vector<MultiIndex>& indices = set.inclusion_order();
    if (sampler == SamplerKind::Structured) {
      if (m % n != 0) throw std::invalid_argument("condition_trajectory: budget is not a multiple of n");
      const std::size_t before = samples.size();
      samples = algo1_extend(samples, samples.row_indices(), tau, indices, m / n, basis, it.split(1), k);
      tau = m / n;
      drawn += samples.size() - before;
    } else {
      Algo2Result res = algo2_extend(samples, previous, m_prev, indices, m, basis, it.split(1), k);
      drawn += res.counters.new_draws();
      samples = std::move(res.samples);
    }
    previous = indices;
    m_prev = m;

    ConditionStep step;
    step.n = n;
    step.m = m;
    step.drawn = drawn;
    step.deviation = gramian_deviation(basis, set, samples.points(), &step.cond);
    out.push_back(step);
  }
  return out;
}

std::vector<TrajectoryStats> trajectory_stats(const std::vector<std::vector<ConditionStep>>& runs) {
  std::vector<TrajectoryStats> out;
  if (runs.empty()) return out;
  const std::size_t K = runs.front().size();
  const double R = static_cast<double>(runs.size());
  for (std::size_t k = 0; k < K; ++k) {
    TrajectoryStats st;
    st.k = static_cast<int>(k + 1);
    double above = 0.0;
    for (const auto& run : runs) {
      const ConditionStep& s = run.at(k);
      st.mean_n += static_cast<double>(s.n);
      st.mean_m += static_cast<double>(s.m);
      st.mean_drawn += static_cast<double>(s.drawn);
      st.mean_cond += s.cond;
      st.max_cond = std::max(st.max_cond, s.cond);
      if (s.cond > 3.0) above += 1.0;
    }
    st.mean_n /= R;
    st.mean_m /= R;
    st.mean_drawn /= R;
    st.mean_cond /= R;
    st.frac_cond_above_3 = above / R;
    if (runs.size() > 1) {
      double ss = 0.0;
      for (const auto& run : runs) ss += (run[k].cond - st.mean_cond) * (run[k].cond - st.mean_cond);
      st.sd_cond = std::sqrt(ss / (R - 1.0));
    }
    out.push_back(st);
  }
  return out;
}

std::vector<std::vector<MultiIndex>> chain_schedule(std::size_t T) {
  std::vector<std::vector<MultiIndex>> out;
  std::vector<MultiIndex> current;
  for (std::size_t k = 0; k < T; ++k) {
    current.push_back(MultiIndex{static_cast<unsigned>(k)});
    out.push_back(current);
  }
  return out;
}

Algo2Run run_algo2_schedule(const TensorBasis& basis,
                            const std::vector<std::vector<MultiIndex>>& schedule,
                            const std::vector<std::size_t>& m, const RngStream& rng) {
  if (schedule.size() != m.size()) throw std::invalid_argument("run_algo2_schedule: size mismatch");
  Algo2Run run;
  SampleSet samples = SampleSet::flat(basis.dim());
  std::vector<MultiIndex> previous;
  std::size_t m_prev = 0;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    Algo2Result res = algo2_extend(samples, previous, m_prev, schedule[k], m[k], basis,
                                   rng.split(k + 1), static_cast<int>(k + 1));
    if (k > 0) run.unrecycled_bound += res.counters.binomial;
    run.total_drawn += res.counters.new_draws();
    run.steps.push_back(res.counters);
    samples = std::move(res.samples);
    previous = schedule[k];
    m_prev = m[k];
  }
  return run;
}

UnrecycledMoments unrecycled_moments(const std::vector<std::size_t>& n, const std::vector<std::size_t>& m) {
  if (n.size() != m.size() || n.empty()) throw std::invalid_argument("unrecycled_moments: size mismatch");
  UnrecycledMoments out;
  for (std::size_t k = 1; k < n.size(); ++k) {
    const double nk = static_cast<double>(n[k]);
    const double p = (nk - static_cast<double>(n[k - 1])) / nk;
    out.mean += static_cast<double>(m[k]) * p;
    out.variance += static_cast<double>(m[k]) * p * (1.0 - p);
  }
  out.bound = static_cast<double>(m.back()) + static_cast<double>(n.back()) - static_cast<double>(m.front());
  return out;
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double F = cdf(sample[i]);
    d = std::max({d, F - static_cast<double>(i) / N, static_cast<double>(i + 1) / N - F});
  }
  return d;
}

std::vector<BudgetTableRow> budget_table(double alpha, double s, std::size_t k_max,
                                         std::size_t replications, std::uint64_t seed,
                                         unsigned threads) {
  const BudgetBoundsReport report = budget_bounds_check(alpha, s, k_max);
  std::vector<std::size_t> n(k_max);
  std::vector<std::size_t> m(k_max);
  std::vector<BudgetTableRow> rows(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    n[k] = k + 1;
    m[k] = report.rows[k].m;
    auto& row = rows[k];
    row.k = k + 1;
    row.n = n[k];
    row.m_iid = report.rows[k].m;
    row.m_structured = report.rows[k].m_hat;
    row.bounds_ok = report.rows[k].lower_ok && report.rows[k].upper_ok &&
                    report.rows[k].relative_ok && report.rows[k].epsilon_ok;
    const auto moments = unrecycled_moments({n.begin(), n.begin() + static_cast<long>(k + 1)},
                                            {m.begin(), m.begin() + static_cast<long>(k + 1)});
    row.mean_unrecycled = moments.mean;
    row.var_unrecycled = moments.variance;
    row.mean_bound = moments.bound;
  }
  if (replications == 0) return rows;

  // The counters of random sequential sampling depend only on the binomial draws, which use
  // the same streams as algo2_extend inside run_algo2_schedule.
  struct Sim {
    std::vector<double> total;
    std::vector<double> unrecycled;
  };
  const auto sims = run_replications(replications, seed, threads, [&](std::size_t, RngStream rng) {
    Sim sim;
    double total = 0.0;
    double u = 0.0;
    for (std::size_t k = 0; k < k_max; ++k) {
      RngStream split = rng.split(k + 1).split(0);
      const double p = static_cast<double>(n[k] - (k ? n[k - 1] : 0)) / static_cast<double>(n[k]);
      const auto b = static_cast<double>(binomial_draw(m[k], p, split));
      const double m_prev = k ? static_cast<double>(m[k - 1]) : 0.0;
      total += b + std::max(static_cast<double>(m[k]) - b - m_prev, 0.0);
      if (k > 0) u += b;
      sim.total.push_back(total);
      sim.unrecycled.push_back(u);
    }
    return sim;
  });
  const double R = static_cast<double>(replications);
  for (std::size_t k = 0; k < k_max; ++k) {
    double sum_t = 0.0;
    double sum_u = 0.0;
    for (const auto& sim : sims) {
      sum_t += sim.total[k];
      sum_u += sim.unrecycled[k];
    }
    rows[k].mc_mean_total = sum_t / R;
    rows[k].mc_mean_unrecycled = sum_u / R;
    if (replications > 1) {
      double ss = 0.0;
      for (const auto& sim : sims) {
        const double d = sim.unrecycled[k] - rows[k].mc_mean_unrecycled;
        ss += d * d;
      }
      rows[k].mc_sd_unrecycled = std::sqrt(ss / (R - 1.0));
    }
  }
  return rows;
}

AdaptiveStudy run_adaptive_study(const TensorBasis& basis, const AdaptiveConfig& cfg,
                                 std::size_t replications, std::size_t cv_count, bool fully,
                                 unsigned threads) {
  cfg.validate();
  AdaptiveStudy study;
  CrossValidation cv;
  if (cv_count > 0) {
    cv = CrossValidation::draw(basis, cv_count, RngStream(cfg.seed).split(~std::uint64_t{0}),
                               test_function);
  }
  for (std::size_t r = 0; r < replications; ++r) {
    AdaptiveConfig c = cfg;
    c.seed = replication_stream(cfg.seed, r).next_u64();
    study.configs.push_back(c);
  }
  const CrossValidation* cv_ptr = cv_count > 0 ? &cv : nullptr;
  study.runs = run_replications(replications, cfg.seed, threads, [&](std::size_t r, RngStream) {
    return fully ? run_fully_adaptive(test_function, basis, study.configs[r], cv_ptr)
                 : run_adaptive(test_function, basis, study.configs[r], cv_ptr);
  });
  return study;
}

// ---------------------------------------------------------------------------
// Command runners

namespace {

template <class T>
T get(const nlohmann::json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(std::string("config: invalid value for '") + key + "'");
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

std::string num(double v) { return csv::format(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::size_t positive(const nlohmann::json& cfg, const char* key, std::size_t fallback) {
  const auto v = get<long long>(cfg, key, static_cast<long long>(fallback));
  if (v < 1) throw std::invalid_argument(std::string("config: '") + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

nlohmann::json finite_or_string(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(csv::format(v));
}

}  // namespace

nlohmann::json cmd_cond(const nlohmann::json& config, const fs::path& out) {
  const Family family = family_from_string(get<std::string>(config, "family", "hermite"));
  const auto d = positive(config, "d", 1);
  const auto k_max = static_cast<int>(positive(config, "k_max", 50));
  const auto reps = positive(config, "replications", 100);
  const double alpha = get<double>(config, "alpha", 0.1);
  const double s = get<double>(config, "s", 2.0);
  const auto seed = get<std::uint64_t>(config, "seed", 1);
  const std::string sampler_name = get<std::string>(config, "sampler", "structured");
  const unsigned threads = static_cast<unsigned>(get<long long>(config, "threads", default_threads()));
  SamplerKind sampler;
  BudgetRule rule;
  if (sampler_name == "structured") {
    sampler = SamplerKind::Structured;
    rule = BudgetRule::union_structured(alpha, s);
  } else if (sampler_name == "iid") {
    sampler = SamplerKind::Iid;
    rule = BudgetRule::union_iid(alpha, s);
  } else {
    throw std::invalid_argument("config: sampler must be 'structured' or 'iid'");
  }
  const TensorBasis basis(family, d);
  const BudgetFn fn = budget_fn(rule);
  const auto runs = run_replications(reps, seed, threads, [&](std::size_t, RngStream rng) {
    return condition_trajectory(basis, k_max, fn, sampler, rng);
  });
  fs::create_directories(out);
  {
    auto os = open_out(out / "cond_trajectories.csv");
    csv::write_row(os, {"replication", "k", "n", "m", "drawn", "cond", "deviation"});
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (std::size_t k = 0; k < runs[r].size(); ++k) {
        const auto& st = runs[r][k];
        csv::write_row(os, {num(r), num(k + 1), num(st.n), num(st.m), num(st.drawn), num(st.cond),
                            num(st.deviation)});
      }
    }
  }
  const auto stats = trajectory_stats(runs);
  {
    auto os = open_out(out / "cond_mean.csv");
    csv::write_row(os, {"k", "mean_n", "mean_m", "mean_cond", "sd_cond", "mean_plus_sd",
                        "max_cond", "frac_cond_above_3"});
    for (const auto& st : stats) {
      csv::write_row(os, {std::to_string(st.k), num(st.mean_n), num(st.mean_m), num(st.mean_cond),
                          num(st.sd_cond), num(st.mean_cond + st.sd_cond), num(st.max_cond),
                          num(st.frac_cond_above_3)});
    }
  }
  std::size_t above = 0;
  double worst_mean = 0.0;
  for (const auto& run : runs) {
    if (std::any_of(run.begin(), run.end(), [](const auto& st) { return st.cond > 3.0; })) ++above;
  }
  for (const auto& st : stats) worst_mean = std::max(worst_mean, st.mean_cond);
  nlohmann::json summary = {{"command", "cond"},
                            {"family", to_string(family)},
                            {"d", d},
                            {"k_max", k_max},
                            {"replications", reps},
                            {"alpha", alpha},
                            {"s", s},
                            {"seed", seed},
                            {"sampler", sampler_name},
                            {"fraction_max_cond_above_3", static_cast<double>(above) / static_cast<double>(reps)},
                            {"max_mean_cond", finite_or_string(worst_mean)}};
  write_json(out / "summary.json", summary);
  return summary;
}

nlohmann::json cmd_compare_samplers(const nlohmann::json& config, const fs::path& out) {
  const Family family = family_from_string(get<std::string>(config, "family", "hermite"));
  const auto k_max = static_cast<int>(positive(config, "k_max", 40));
  const auto reps = positive(config, "replications", 500);
  const auto seed = get<std::uint64_t>(config, "seed", 1);
  const unsigned threads = static_cast<unsigned>(get<long long>(config, "threads", default_threads()));
  std::vector<std::string> scalings;
  const std::string scaling = get<std::string>(config, "scaling", "both");
  if (scaling == "both") {
    scalings = {"fixed", "quadratic"};
  } else if (scaling == "fixed" || scaling == "quadratic") {
    scalings = {scaling};
  } else {
    throw std::invalid_argument("config: scaling must be 'fixed', 'quadratic' or 'both'");
  }
  const TensorBasis basis(family, 1);
  fs::create_directories(out);
  nlohmann::json summary = {{"command", "compare-samplers"}, {"family", to_string(family)},
                            {"k_max", k_max}, {"replications", reps}, {"seed", seed}};
  for (const auto& sc : scalings) {
    const auto per_row = static_cast<std::size_t>(std::ceil(1.0 / theta()));
    const BudgetFn fn = sc == "fixed" ? BudgetFn([per_row](std::size_t n) { return per_row * n; })
                                      : BudgetFn([](std::size_t n) { return (3 + n) * n; });
    using Pair = std::pair<std::vector<ConditionStep>, std::vector<ConditionStep>>;
    const auto runs = run_replications(reps, seed, threads, [&](std::size_t, RngStream rng) {
      return Pair{condition_trajectory(basis, k_max, fn, SamplerKind::Structured, rng.split(0)),
                  condition_trajectory(basis, k_max, fn, SamplerKind::Iid, rng.split(1))};
    });
    std::vector<std::vector<ConditionStep>> first;
    std::vector<std::vector<ConditionStep>> second;
    for (const auto& [a, b] : runs) {
      first.push_back(a);
      second.push_back(b);
    }
    const auto s1 = trajectory_stats(first);
    const auto s2 = trajectory_stats(second);
    auto os = open_out(out / ("compare_" + sc + ".csv"));
    csv::write_row(os, {"k", "n", "m", "E1", "S1", "E1_plus_S1", "E2", "S2", "E2_plus_S2",
                        "E2_minus_E1", "drawn1", "drawn2"});
    std::size_t considered = 0;
    std::size_t favourable = 0;
    for (std::size_t k = 0; k < s1.size(); ++k) {
      csv::write_row(os, {std::to_string(s1[k].k), num(s1[k].mean_n), num(s1[k].mean_m),
                          num(s1[k].mean_cond), num(s1[k].sd_cond),
                          num(s1[k].mean_cond + s1[k].sd_cond), num(s2[k].mean_cond),
                          num(s2[k].sd_cond), num(s2[k].mean_cond + s2[k].sd_cond),
                          num(s2[k].mean_cond - s1[k].mean_cond), num(s1[k].mean_drawn),
                          num(s2[k].mean_drawn)});
      if (s1[k].k >= 5) {
        ++considered;
        if (s1[k].mean_cond <= s2[k].mean_cond) ++favourable;
      }
    }
    summary[sc] = {{"iterations_from_5", considered},
                   {"structured_not_worse", favourable},
                   {"fraction", considered ? static_cast<double>(favourable) / static_cast<double>(considered) : 0.0}};
  }
  write_json(out / "summary.json", summary);
  return summary;
}

nlohmann::json cmd_adapt(const nlohmann::json& config, const fs::path& out, bool fully) {
  const Family family = family_from_string(get<std::string>(config, "family", "legendre"));
  const auto d = positive(config, "d", 16);
  const auto reps = positive(config, "replications", 10);
  const auto cv_count = static_cast<std::size_t>(get<long long>(config, "cv_count", 100000));
  const unsigned threads = static_cast<unsigned>(get<long long>(config, "threads", default_threads()));
  AdaptiveConfig cfg;
  cfg.beta = get<double>(config, "beta", cfg.beta);
  cfg.alpha = get<double>(config, "alpha", cfg.alpha);
  cfg.s = get<double>(config, "s", cfg.s);
  cfg.k_max = static_cast<int>(get<long long>(config, "k_max", cfg.k_max));
  cfg.k_sg = static_cast<int>(get<long long>(config, "k_sg", cfg.k_sg));
  cfg.xi = get<double>(config, "xi", cfg.xi);
  cfg.seed = get<std::uint64_t>(config, "seed", cfg.seed);
  cfg.topup_cap = static_cast<std::size_t>(get<long long>(config, "topup_cap", static_cast<long long>(cfg.topup_cap)));
  cfg.safeguard = get<bool>(config, "safeguard", cfg.safeguard);
  if (family != Family::LegendreUniform) {
    throw std::invalid_argument("config: the rational test function lives on [-1,1]^d; use family 'legendre'");
  }

  const TensorBasis basis(family, d);
  const AdaptiveStudy study = run_adaptive_study(basis, cfg, reps, cv_count, fully, threads);
  fs::create_directories(out);

  auto errors = open_out(out / "errors.csv");
  csv::write_row(errors, {"replication", "k", "n", "m", "cumulative_samples", "cv_l2", "cv_linf",
                          "cond", "deviation"});
  for (std::size_t r = 0; r < study.runs.size(); ++r) {
    const auto& run = study.runs[r];
    char name[32];
    std::snprintf(name, sizeof name, "rep_%03zu", r);
    const fs::path dir = out / name;
    fs::create_directories(dir);
    {
      auto os = open_out(dir / "trace.csv");
      run.trace.write_csv(os);
    }
    write_json(dir / "index_sets.json", run.trace.index_sets_json());
    write_json(dir / "summary.json", run.summary(study.configs[r]));
    for (const auto& rec : run.trace.records) {
      csv::write_row(errors, {num(r), std::to_string(rec.k), num(rec.n), num(rec.m),
                              num(rec.cumulative_samples), rec.cv ? num(rec.cv->l2) : "",
                              rec.cv ? num(rec.cv->linf) : "", num(rec.cond), num(rec.deviation)});
    }
  }

  const std::size_t K = study.runs.front().trace.records.size();
  std::vector<double> final_l2;
  double worst_cond = 0.0;
  {
    auto os = open_out(out / "median.csv");
    csv::write_row(os, {"k", "median_n", "median_m", "median_cv_l2", "median_cv_linf", "max_cond"});
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> n, m, l2, linf;
      double mc = 0.0;
      for (const auto& run : study.runs) {
        const auto& rec = run.trace.records[k];
        n.push_back(static_cast<double>(rec.n));
        m.push_back(static_cast<double>(rec.m));
        if (rec.cv) {
          l2.push_back(rec.cv->l2);
          linf.push_back(rec.cv->linf);
        }
        mc = std::max(mc, rec.cond);
      }
      worst_cond = std::max(worst_cond, mc);
      if (k + 1 == K) final_l2 = l2;
      csv::write_row(os, {num(k + 1), num(median(n)), num(median(m)), l2.empty() ? "" : num(median(l2)),
                          linf.empty() ? "" : num(median(linf)), num(mc)});
    }
  }
  {
    auto os = open_out(out / "coefficients.csv");
    csv::write_row(os, {"position", "index", "value", "abs_value"});
    std::size_t pos = 0;
    for (const auto& [nu, a] : study.runs.front().coefficients_by_inclusion()) {
      csv::write_row(os, {num(pos++), to_string(nu), num(a), num(std::abs(a))});
    }
  }
  write_json(out / "final_index_set.json", to_json(study.runs.front().index_set));

  nlohmann::json summary = {{"command", fully ? "fully-adapt" : "adapt"},
                            {"family", to_string(family)},
                            {"d", d},
                            {"replications", reps},
                            {"cv_count", cv_count},
                            {"config", to_json(cfg)},
                            {"max_cond", finite_or_string(worst_cond)}};
  if (!final_l2.empty()) summary["median_final_cv_l2"] = median(final_l2);
  write_json(out / "summary.json", summary);
  return summary;
}

nlohmann::json cmd_budget_table(const nlohmann::json& config, const fs::path& out) {
  const double alpha = get<double>(config, "alpha", 0.1);
  const double s = get<double>(config, "s", 2.0);
  const auto k_max = positive(config, "k_max", 100);
  const auto reps = static_cast<std::size_t>(get<long long>(config, "replications", 1000));
  const auto seed = get<std::uint64_t>(config, "seed", 1);
  const unsigned threads = static_cast<unsigned>(get<long long>(config, "threads", default_threads()));
  const auto rows = budget_table(alpha, s, k_max, reps, seed, threads);
  const auto report = budget_bounds_check(alpha, s, k_max);
  fs::create_directories(out);
  auto os = open_out(out / "budget_table.csv");
  csv::write_row(os, {"k", "n", "m_iid", "m_structured", "m_iid_plus_n_minus_1", "lower_ok",
                      "upper_ok", "epsilon", "relative_ok", "mean_unrecycled", "var_unrecycled",
                      "mean_bound", "mc_mean_total", "mc_mean_unrecycled", "mc_sd_unrecycled"});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    const auto& b = report.rows[k];
    csv::write_row(os, {num(r.k), num(r.n), num(r.m_iid), num(r.m_structured),
                        num(r.m_iid + r.n - 1), b.lower_ok ? "1" : "0", b.upper_ok ? "1" : "0",
                        num(b.epsilon), b.relative_ok ? "1" : "0", num(r.mean_unrecycled),
                        num(r.var_unrecycled), num(r.mean_bound), num(r.mc_mean_total),
                        num(r.mc_mean_unrecycled), num(r.mc_sd_unrecycled)});
  }
  nlohmann::json summary = {{"command", "budget-table"}, {"alpha", alpha}, {"s", s},
                            {"k_max", k_max},           {"replications", reps},
                            {"seed", seed},             {"violations", report.violations.size()}};
  write_json(out / "summary.json", summary);
  return summary;
}

nlohmann::json cmd_sampler_stats(const nlohmann::json& config, const fs::path& out) {
  const Family family = family_from_string(get<std::string>(config, "family", "legendre"));
  const double alpha = get<double>(config, "alpha", 0.1);
  const double s = get<double>(config, "s", 2.0);
  const auto k_max = positive(config, "k_max", 20);
  const auto reps = positive(config, "replications", 5000);
  const auto seed = get<std::uint64_t>(config, "seed", 1);
  const auto ks_draws = static_cast<std::size_t>(get<long long>(config, "ks_draws", 100000));
  const auto degrees = get<std::vector<int>>(config, "ks_degrees", {0, 1, 5, 20});
  const unsigned threads = static_cast<unsigned>(get<long long>(config, "threads", default_threads()));

  const TensorBasis basis(family, 1);
  const auto schedule = chain_schedule(k_max);
  std::vector<std::size_t> n(k_max);
  std::vector<std::size_t> m(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    n[k] = k + 1;
    m[k] = budget(BudgetRule::union_iid(alpha, s), n[k]);
  }
  const auto runs = run_replications(reps, seed, threads, [&](std::size_t, RngStream rng) {
    return run_algo2_schedule(basis, schedule, m, rng);
  });
  fs::create_directories(out);
  double sum = 0.0;
  double sumsq = 0.0;
  {
    auto os = open_out(out / "unrecycled.csv");
    csv::write_row(os, {"replication", "unrecycled_bound", "total_drawn", "discarded"});
    for (std::size_t r = 0; r < runs.size(); ++r) {
      std::size_t discarded = 0;
      for (const auto& c : runs[r].steps) discarded += c.discarded;
      const auto u = static_cast<double>(runs[r].unrecycled_bound);
      sum += u;
      sumsq += u * u;
      csv::write_row(os, {num(r), std::to_string(runs[r].unrecycled_bound), num(runs[r].total_drawn),
                          num(discarded)});
    }
  }
  const double R = static_cast<double>(reps);
  const double mean = sum / R;
  const double var = reps > 1 ? (sumsq - R * mean * mean) / (R - 1.0) : 0.0;
  const auto moments = unrecycled_moments(n, m);

  nlohmann::json ks = nlohmann::json::array();
  {
    auto os = open_out(out / "ks.csv");
    csv::write_row(os, {"family", "degree", "draws", "ks_statistic", "critical_1pct"});
    if (ks_draws > 0) {
      for (int j : degrees) {
        RngStream rng = RngStream(seed).split(~std::uint64_t{1}).split(static_cast<std::uint64_t>(j));
        std::vector<double> draws(ks_draws);
        for (auto& x : draws) x = sample_induced(family, j, rng);
        const double stat = ks_statistic(draws, [&](double t) { return induced_cdf(family, j, t); });
        const double crit = 1.63 / std::sqrt(static_cast<double>(ks_draws));
        csv::write_row(os, {to_string(family), std::to_string(j), num(ks_draws), num(stat), num(crit)});
        ks.push_back({{"degree", j}, {"statistic", stat}, {"critical", crit}});
      }
    }
  }
  nlohmann::json summary = {{"command", "sampler-stats"},
                            {"family", to_string(family)},
                            {"k_max", k_max},
                            {"replications", reps},
                            {"seed", seed},
                            {"empirical_mean", mean},
                            {"empirical_variance", var},
                            {"closed_form_mean", moments.mean},
                            {"closed_form_variance", moments.variance},
                            {"mean_bound", moments.bound},
                            {"ks", ks}};
  write_json(out / "summary.json", summary);
  return summary;
}

namespace {

constexpr const char* kPlotPrelude = R"PY(import csv
import os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        return list(csv.DictReader(fh))


def column(rows, key):
    return [float(r[key]) for r in rows if r[key] != ""]

)PY";

struct PlotSpec {
  std::string csv;
  std::string script;
  std::string body;
};

std::vector<PlotSpec> plot_specs(const fs::path& dir) {
  std::vector<PlotSpec> specs;
  auto has = [&](const std::string& name) { return fs::exists(dir / name); };
  if (has("cond_mean.csv")) {
    specs.push_back({"cond_mean.csv", "plot_cond.py", R"PY(rows = load("cond_mean.csv")
k = column(rows, "k")
fig, ax = plt.subplots()
if os.path.exists(os.path.join(HERE, "cond_trajectories.csv")):
    traj = load("cond_trajectories.csv")
    by_rep = {}
    for r in traj:
        by_rep.setdefault(r["replication"], []).append((float(r["k"]), float(r["cond"])))
    for pts in list(by_rep.values())[:200]:
        ax.plot([p[0] for p in pts], [p[1] for p in pts], color="black", lw=0.3, alpha=0.3)
ax.plot(k, column(rows, "mean_cond"), color="red", lw=2, label="sample mean")
ax.set_xlabel("k")
ax.set_ylabel("cond(G_k)")
ax.set_yscale("log")
ax.legend()
fig.savefig(os.path.join(HERE, "cond.png"), dpi=150)
)PY"});
  }
  for (const char* sc : {"fixed", "quadratic"}) {
    const std::string name = std::string("compare_") + sc + ".csv";
    if (!has(name)) continue;
    specs.push_back({name, std::string("plot_compare_") + sc + ".py",
                     "rows = load(\"" + name + "\")\n" + R"PY(k = column(rows, "k")
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for key, style in (("E1", "b-"), ("E1_plus_S1", "b--"), ("E2", "r-"), ("E2_plus_S2", "r--")):
    ax1.plot(k, column(rows, key), style, label=key)
ax1.set_xlabel("k")
ax1.set_ylabel("cond(G_k)")
ax1.legend()
ax2.plot(k, column(rows, "E2_minus_E1"), "k-")
ax2.axhline(0.0, color="grey", lw=0.5)
ax2.set_xlabel("k")
ax2.set_ylabel("E2 - E1")
fig.tight_layout()
)PY" + "fig.savefig(os.path.join(HERE, \"compare_" + sc + ".png\"), dpi=150)\n"});
  }
  if (has("errors.csv")) {
    specs.push_back({"errors.csv", "plot_errors.py", R"PY(rows = load("errors.csv")
by_rep = {}
for r in rows:
    if r["cv_l2"] == "":
        continue
    by_rep.setdefault(r["replication"], []).append(r)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
for reps in by_rep.values():
    m = [float(r["m"]) for r in reps]
    ax1.loglog(m, [float(r["cv_l2"]) for r in reps], color="black", lw=0.5)
    ax2.plot([float(r["k"]) for r in reps], [float(r["cond"]) for r in reps], color="black", lw=0.5)
ax1.set_xlabel("m_k")
ax1.set_ylabel("CV L2 error")
ax2.set_xlabel("k")
ax2.set_ylabel("cond(G_k)")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "errors.png"), dpi=150)
)PY"});
  }
  if (has("coefficients.csv")) {
    specs.push_back({"coefficients.csv", "plot_coefficients.py", R"PY(rows = load("coefficients.csv")
fig, ax = plt.subplots()
ax.semilogy(column(rows, "position"), column(rows, "abs_value"), "k.", ms=3)
ax.set_xlabel("position of inclusion")
ax.set_ylabel("|coefficient|")
fig.savefig(os.path.join(HERE, "coefficients.png"), dpi=150)
if os.path.exists(os.path.join(HERE, "final_index_set.json")):
    import json
    with open(os.path.join(HERE, "final_index_set.json")) as fh:
        idx = json.load(fh)
    fig2, ax2 = plt.subplots()
    ax2.scatter([i[0] for i in idx], [i[1] if len(i) > 1 else 0 for i in idx], s=8)
    ax2.set_xlabel("degree in coordinate 1")
    ax2.set_ylabel("degree in coordinate 2")
    fig2.savefig(os.path.join(HERE, "index_section.png"), dpi=150)
)PY"});
  }
  if (has("budget_table.csv")) {
    specs.push_back({"budget_table.csv", "plot_budget.py", R"PY(rows = load("budget_table.csv")
n = column(rows, "n")
fig, ax = plt.subplots()
ax.plot(n, column(rows, "m_iid"), label="i.i.d. budget")
ax.plot(n, column(rows, "m_structured"), label="structured budget")
ax.plot(n, column(rows, "mc_mean_total"), label="mean total draws, random sequential")
ax.plot(n, column(rows, "mean_bound"), "--", label="bound on mean unrecycled")
ax.set_xlabel("n")
ax.set_ylabel("samples")
ax.legend()
fig.savefig(os.path.join(HERE, "budget.png"), dpi=150)
)PY"});
  }
  if (has("unrecycled.csv")) {
    specs.push_back({"unrecycled.csv", "plot_unrecycled.py", R"PY(rows = load("unrecycled.csv")
fig, ax = plt.subplots()
ax.hist(column(rows, "unrecycled_bound"), bins=50)
ax.set_xlabel("U_T")
ax.set_ylabel("count")
fig.savefig(os.path.join(HERE, "unrecycled.png"), dpi=150)
)PY"});
  }
  return specs;
}

}  // namespace

nlohmann::json cmd_plots(const fs::path& run_dir) {
  if (!fs::is_directory(run_dir)) throw std::runtime_error("plots: no such directory " + run_dir.string());
  const auto specs = plot_specs(run_dir);
  if (specs.empty()) throw std::runtime_error("plots: no experiment output in " + run_dir.string());
  nlohmann::json written = nlohmann::json::array();
  for (const auto& spec : specs) {
    auto os = open_out(run_dir / spec.script);
    os << kPlotPrelude << spec.body;
    written.push_back(spec.script);
  }
  return {{"command", "plots"}, {"directory", run_dir.string()}, {"scripts", written}};
}

}  // namespace adawls
