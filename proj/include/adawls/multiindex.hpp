#pragma once

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace adawls {

/// Element of N_0^d. Ordered lexicographically.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t dim) : components_(dim, 0) {}
  explicit MultiIndex(std::vector<unsigned> components) : components_(std::move(components)) {}
  MultiIndex(std::initializer_list<unsigned> components) : components_(components) {}

  static MultiIndex unit(std::size_t dim, std::size_t j);

  [[nodiscard]] std::size_t dim() const noexcept { return components_.size(); }
  unsigned operator[](std::size_t i) const { return components_[i]; }
  [[nodiscard]] const std::vector<unsigned>& components() const noexcept { return components_; }

  [[nodiscard]] MultiIndex plus_unit(std::size_t j) const;
  /// Requires (*this)[j] > 0.
  [[nodiscard]] MultiIndex minus_unit(std::size_t j) const;

  [[nodiscard]] bool is_zero() const noexcept;
  [[nodiscard]] unsigned max_component() const noexcept;
  [[nodiscard]] unsigned total_degree() const noexcept;
  /// Componentwise partial order.
  [[nodiscard]] bool dominated_by(const MultiIndex& other) const;

  auto operator<=>(const MultiIndex&) const = default;
  bool operator==(const MultiIndex&) const = default;

 private:
  std::vector<unsigned> components_;
};

std::string to_string(const MultiIndex& nu);

/// Downward-closed multi-index set with its reduced margin.
///
/// Values are immutable: `add` returns a new set. Every member of the reduced
/// margin carries the iteration at which it entered the margin ("age"), used
/// by the safeguard step of the adaptive loop.
class IndexSet {
 public:
  /// {0} in dimension dim; reduced margin {e_1, ..., e_d} with age `iteration`.
  static IndexSet root(std::size_t dim, int iteration = 1);

  /// Builds a set from an arbitrary listing of a downward-closed set.
  /// Throws if the listing is not downward closed or misses the origin.
  static IndexSet from_members(std::size_t dim, std::vector<MultiIndex> members, int iteration = 1);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
  [[nodiscard]] bool contains(const MultiIndex& nu) const { return members_.contains(nu); }
  [[nodiscard]] bool in_reduced_margin(const MultiIndex& nu) const {
    return reduced_margin_.contains(nu);
  }

  [[nodiscard]] const std::set<MultiIndex>& members() const noexcept { return members_; }
  /// Members in order of inclusion (the root first).
  [[nodiscard]] const std::vector<MultiIndex>& inclusion_order() const noexcept { return order_; }
  /// Reduced margin, lexicographically sorted.
  [[nodiscard]] std::vector<MultiIndex> reduced_margin() const;
  [[nodiscard]] const std::map<MultiIndex, int>& reduced_margin_ages() const noexcept {
    return reduced_margin_;
  }
  /// Iteration at which nu entered the reduced margin. Throws if nu is not in it.
  [[nodiscard]] int entry_age(const MultiIndex& nu) const;

  /// Moves nu from the reduced margin into the set. Throws std::invalid_argument
  /// if nu is not in the reduced margin.
  [[nodiscard]] IndexSet add(const MultiIndex& nu, int iteration) const;

  /// {nu not in set : nu - e_j in set for some j}, lexicographically sorted.
  [[nodiscard]] std::vector<MultiIndex> margin() const;

  /// Members sorted lexicographically: position i is the i-th basis function.
  [[nodiscard]] std::vector<MultiIndex> enumerate_lex() const;

  [[nodiscard]] bool is_downward_closed() const;

 private:
  IndexSet() = default;

  std::size_t dim_ = 0;
  std::set<MultiIndex> members_;
  std::map<MultiIndex, int> reduced_margin_;
  std::vector<MultiIndex> order_;
};

/// Whether nu satisfies the reduced-margin predicate with respect to `members`.
bool reduced_margin_predicate(const std::set<MultiIndex>& members, const MultiIndex& nu);

/// Bulk chasing: the shortest prefix of the reduced margin sorted by estimate
/// (descending, lexicographic on ties) whose mass reaches beta times the total.
/// When the total mass is zero the lexicographically smallest candidate is
/// returned. `estimates` must cover the whole reduced margin.
std::vector<MultiIndex> bulk(const IndexSet& set, const std::map<MultiIndex, double>& estimates,
                             double beta);

/// Member of the reduced margin outside `excluded` with the smallest entry age,
/// lexicographic on ties. Throws std::invalid_argument if none is left.
MultiIndex most_ancient(const IndexSet& set, const std::set<MultiIndex>& excluded);

nlohmann::json to_json(const MultiIndex& nu);
MultiIndex multi_index_from_json(const nlohmann::json& j);

/// JSON array of integer arrays, in inclusion order.
nlohmann::json to_json(const IndexSet& set);
IndexSet index_set_from_json(const nlohmann::json& j);

}  // namespace adawls
