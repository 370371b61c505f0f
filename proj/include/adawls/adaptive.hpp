#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "adawls/basis.hpp"
#include "adawls/estimator.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/sampling.hpp"

namespace adawls {

using Function = std::function<double(std::span<const double>)>;

struct AdaptiveConfig {
  double beta = 0.5;
  double alpha = 0.1;
  double s = 2.0;
  int k_max = 25;
  int k_sg = 5;
  double xi = 0.9;                 // fully adaptive stability threshold
  std::uint64_t seed = 1;
  std::size_t topup_cap = 200;     // fully adaptive: top-up rounds per iteration
  bool safeguard = true;

  /// Throws std::invalid_argument with the offending field.
  void validate() const;
};

nlohmann::json to_json(const AdaptiveConfig& cfg);

/// Counts evaluations of u and serves repeated points from memory. Points are
/// keyed by their exact bit pattern.
class EvaluationCache {
 public:
  explicit EvaluationCache(Function u) : u_(std::move(u)) {}

  double operator()(std::span<const double> x);
  Eigen::VectorXd evaluate(const Points& points);

  [[nodiscard]] std::size_t calls() const noexcept { return calls_; }
  [[nodiscard]] std::size_t hits() const noexcept { return hits_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

 private:
  Function u_;
  std::unordered_map<std::string, double> values_;
  std::size_t calls_ = 0;
  std::size_t hits_ = 0;
};

/// Points drawn once from the reference measure, with u precomputed there.
struct CrossValidation {
  Points points;
  Eigen::VectorXd values;

  static CrossValidation draw(const TensorBasis& basis, std::size_t count, const RngStream& rng,
                              const Function& u);
};

struct CvError {
  double l2 = 0.0;    // root mean square deviation
  double linf = 0.0;  // maximum deviation
};

/// Throws std::invalid_argument on an empty cloud.
CvError estimate_cv_error(const Estimator& estimator, const TensorBasis& basis,
                          const CrossValidation& cv);

/// u(x) = 1 / (1 + (1/(2d)) sum_i q_i x_i) with q_i = 10^(-3(i-1)/(d-1)), q_1 = 1 when d = 1.
double test_function(std::span<const double> x);

struct IterationRecord {
  int k = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t tau = 0;                 // samples per basis function
  std::size_t new_samples = 0;         // points drawn during this iteration
  std::size_t cumulative_samples = 0;  // points drawn so far
  std::size_t u_evaluations = 0;       // cumulative calls of u
  std::size_t cache_hits = 0;          // cumulative cache hits
  double deviation = 0.0;
  double cond = 1.0;
  bool conditioned = true;
  std::optional<CvError> cv;
  std::vector<MultiIndex> selected;    // BULK output
  std::optional<MultiIndex> safeguard;
  std::size_t topup_rounds = 0;
  std::vector<MultiIndex> index_set;   // inclusion order
};

struct AdaptiveTrace {
  std::string algorithm;
  std::vector<IterationRecord> records;

  void write_csv(std::ostream& os) const;
  /// Index-set snapshots, one JSON array of integer arrays per iteration.
  [[nodiscard]] nlohmann::json index_sets_json() const;
  [[nodiscard]] std::size_t safeguard_activations() const;
};

struct AdaptiveResult {
  Estimator estimator;  // conditioned estimator of the last iteration
  Estimator weighted;   // weighted least-squares estimator of the last iteration
  IndexSet index_set = IndexSet::root(1);
  SampleSet samples = SampleSet::structured(1);
  AdaptiveTrace trace;
  /// Residual estimates on the final reduced margin.
  std::map<MultiIndex, double> margin_estimates;
  std::size_t u_calls = 0;
  std::size_t cache_hits = 0;

  /// Coefficients listed in the order their indices entered the set.
  [[nodiscard]] std::vector<std::pair<MultiIndex, double>> coefficients_by_inclusion() const;
  [[nodiscard]] nlohmann::json summary(const AdaptiveConfig& cfg) const;
};

/// Budget-driven adaptive weighted least squares with structured sampling.
AdaptiveResult run_adaptive(const Function& u, const TensorBasis& basis, const AdaptiveConfig& cfg,
                            const CrossValidation* cv = nullptr);

/// Stability-driven variant: samples are added one per basis function until
/// the Gramian deviation drops below cfg.xi. Throws std::runtime_error when an
/// iteration exceeds cfg.topup_cap rounds.
AdaptiveResult run_fully_adaptive(const Function& u, const TensorBasis& basis,
                                  const AdaptiveConfig& cfg, const CrossValidation* cv = nullptr);

}  // namespace adawls
