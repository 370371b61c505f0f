#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

#include "adawls/adaptive.hpp"
#include "adawls/basis.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/rng.hpp"
#include "adawls/sampling.hpp"

namespace adawls {

/// Worker count: $ADAWLS_THREADS when set, otherwise the hardware concurrency.
unsigned default_threads();

/// Stream of replication r: RngStream(seed).split(r).
RngStream replication_stream(std::uint64_t seed, std::size_t r);

/// Evaluates fn(r, replication_stream(seed, r)) for r < count on up to
/// `threads` workers. Results are returned by replication index, so the output
/// does not depend on scheduling. The first exception is rethrown.
template <class Fn>
auto run_replications(std::size_t count, std::uint64_t seed, unsigned threads, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<RngStream>()))> {
  using T = decltype(fn(std::size_t{}, std::declval<RngStream>()));
  std::vector<T> out(count);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (workers <= 1) {
    for (std::size_t r = 0; r < count; ++r) out[r] = fn(r, replication_stream(seed, r));
    return out;
  }
  std::mutex mutex;
  std::size_t next = 0;
  std::exception_ptr error;
  auto work = [&] {
    for (;;) {
      std::size_t r;
      {
        std::lock_guard lock(mutex);
        if (next >= count || error) return;
        r = next++;
      }
      try {
        out[r] = fn(r, replication_stream(seed, r));
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

/// One step of the random growth schedule: Uniform{1, ..., min(max_new, |R|)}
/// indices drawn uniformly without replacement from the reduced margin.
IndexSet random_growth(const IndexSet& set, RngStream& rng, int iteration, std::size_t max_new = 5);

enum class SamplerKind { Structured, Iid };

/// Sample budget m as a function of the dimension n of the space.
using BudgetFn = std::function<std::size_t(std::size_t)>;

BudgetFn budget_fn(const BudgetRule& rule);

struct ConditionStep {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t drawn = 0;  // cumulative points drawn
  double cond = 1.0;
  double deviation = 0.0;
};

/// Gramian conditioning along one random growth sequence of k_max spaces
/// starting from {0}. Structured sampling extends rows with algo1_extend
/// (m(n) must be a multiple of n); i.i.d. sampling uses algo2_extend.
/// Iteration k uses rng.split(k): split(0) for growth, split(1) for samples.
std::vector<ConditionStep> condition_trajectory(const TensorBasis& basis, int k_max,
                                                const BudgetFn& budget, SamplerKind sampler,
                                                const RngStream& rng);

struct TrajectoryStats {
  int k = 0;
  double mean_n = 0.0;
  double mean_m = 0.0;
  double mean_drawn = 0.0;
  double mean_cond = 0.0;
  double sd_cond = 0.0;  // sample standard deviation, 0 for one replication
  double max_cond = 0.0;
  double frac_cond_above_3 = 0.0;
};

std::vector<TrajectoryStats> trajectory_stats(const std::vector<std::vector<ConditionStep>>& runs);

/// Per-iteration random sequential sampling counters along the chain n_k = k in d = 1 (or
/// any fixed schedule of nested index lists).
struct Algo2Run {
  std::vector<Algo2Counters> steps;
  std::uint64_t unrecycled_bound = 0;  // U_T = sum_{k >= 2} B_k
  std::size_t total_drawn = 0;         // m~_T
};

/// Runs algo2_extend through `schedule` with budgets m[k]; step k uses rng.split(k).
Algo2Run run_algo2_schedule(const TensorBasis& basis,
                            const std::vector<std::vector<MultiIndex>>& schedule,
                            const std::vector<std::size_t>& m, const RngStream& rng);

/// Index lists {0}, {0,1}, ..., {0..T-1} in d = 1.
std::vector<std::vector<MultiIndex>> chain_schedule(std::size_t T);

struct UnrecycledMoments {
  double mean = 0.0;      // sum_{k>=2} m_k (n_k - n_{k-1}) / n_k
  double variance = 0.0;  // sum_{k>=2} m_k (n_k - n_{k-1}) n_{k-1} / n_k^2
  double bound = 0.0;     // m_T + n_T - m_1
};

UnrecycledMoments unrecycled_moments(const std::vector<std::size_t>& n, const std::vector<std::size_t>& m);

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

struct BudgetTableRow {
  std::size_t k = 0;
  std::size_t n = 0;
  std::size_t m_iid = 0;
  std::size_t m_structured = 0;
  bool bounds_ok = false;
  double mean_unrecycled = 0.0;       // closed form E(U_k)
  double var_unrecycled = 0.0;        // closed form Var(U_k)
  double mean_bound = 0.0;           // m_k + n_k - m_1
  double mc_mean_total = 0.0;         // Monte Carlo mean of m~_k
  double mc_mean_unrecycled = 0.0;    // Monte Carlo mean of U_k
  double mc_sd_unrecycled = 0.0;
};

/// Budgets for n_k = k <= k_max with the Monte Carlo mean of m~_k over
/// `replications` binomial simulations of the random sequential sampling counters.
std::vector<BudgetTableRow> budget_table(double alpha, double s, std::size_t k_max,
                                         std::size_t replications, std::uint64_t seed,
                                         unsigned threads);

/// Replications of the adaptive loops on the rational test function with a
/// shared cross-validation cloud drawn from RngStream(seed).split(2^64 - 1).
/// Replication r runs with seed replication_stream(seed, r).next_u64().
struct AdaptiveStudy {
  std::vector<AdaptiveResult> runs;
  std::vector<AdaptiveConfig> configs;
};

AdaptiveStudy run_adaptive_study(const TensorBasis& basis, const AdaptiveConfig& cfg,
                                 std::size_t replications, std::size_t cv_count, bool fully,
                                 unsigned threads);

// ---------------------------------------------------------------------------
// Command runners: each reads its parameters from `config` (missing keys fall
// back to defaults), writes CSV/JSON files to `out` and returns the summary.

nlohmann::json cmd_cond(const nlohmann::json& config, const std::filesystem::path& out);
nlohmann::json cmd_compare_samplers(const nlohmann::json& config, const std::filesystem::path& out);
nlohmann::json cmd_adapt(const nlohmann::json& config, const std::filesystem::path& out, bool fully);
nlohmann::json cmd_budget_table(const nlohmann::json& config, const std::filesystem::path& out);
nlohmann::json cmd_sampler_stats(const nlohmann::json& config, const std::filesystem::path& out);
/// Writes one matplotlib script per recognised CSV in `run_dir`. Throws
/// std::runtime_error when the directory is missing or holds no known CSV.
nlohmann::json cmd_plots(const std::filesystem::path& run_dir);

}  // namespace adawls
