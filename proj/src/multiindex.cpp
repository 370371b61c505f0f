#include "adawls/multiindex.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace adawls {

MultiIndex MultiIndex::unit(std::size_t dim, std::size_t j) {
  MultiIndex e(dim);
  e.components_.at(j) = 1;
  return e;
}

MultiIndex MultiIndex::plus_unit(std::size_t j) const {
  MultiIndex out = *this;
  ++out.components_.at(j);
  return out;
}

MultiIndex MultiIndex::minus_unit(std::size_t j) const {
  if (components_.at(j) == 0) throw std::invalid_argument("minus_unit: component is zero");
  MultiIndex out = *this;
  --out.components_[j];
  return out;
}

bool MultiIndex::is_zero() const noexcept {
  return std::all_of(components_.begin(), components_.end(), [](unsigned c) { return c == 0; });
}

unsigned MultiIndex::max_component() const noexcept {
  return components_.empty() ? 0 : *std::max_element(components_.begin(), components_.end());
}

unsigned MultiIndex::total_degree() const noexcept {
  return std::accumulate(components_.begin(), components_.end(), 0u);
}

bool MultiIndex::dominated_by(const MultiIndex& other) const {
  if (other.dim() != dim()) throw std::invalid_argument("dominated_by: dimension mismatch");
  for (std::size_t i = 0; i < dim(); ++i) {
    if (components_[i] > other.components_[i]) return false;
  }
  return true;
}

std::string to_string(const MultiIndex& nu) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < nu.dim(); ++i) {
    if (i) os << ',';
    os << nu[i];
  }
  os << ')';
  return os.str();
}

bool reduced_margin_predicate(const std::set<MultiIndex>& members, const MultiIndex& nu) {
  if (members.contains(nu)) return false;
  for (std::size_t j = 0; j < nu.dim(); ++j) {
    if (nu[j] != 0 && !members.contains(nu.minus_unit(j))) return false;
  }
  return true;
}

IndexSet IndexSet::root(std::size_t dim, int iteration) {
  if (dim == 0) throw std::invalid_argument("IndexSet::root: dimension must be >= 1");
  IndexSet set;
  set.dim_ = dim;
  const MultiIndex zero(dim);
  set.members_.insert(zero);
  set.order_.push_back(zero);
  for (std::size_t j = 0; j < dim; ++j) set.reduced_margin_.emplace(MultiIndex::unit(dim, j), iteration);
  return set;
}

IndexSet IndexSet::from_members(std::size_t dim, std::vector<MultiIndex> members, int iteration) {
  for (const auto& nu : members) {
    if (nu.dim() != dim) throw std::invalid_argument("IndexSet::from_members: dimension mismatch");
  }
  // Predecessors have strictly smaller total degree, so this order always
  // walks through reduced margins of a downward-closed listing.
  std::stable_sort(members.begin(), members.end(), [](const MultiIndex& a, const MultiIndex& b) {
    return a.total_degree() < b.total_degree();
  });
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (members.empty() || !members.front().is_zero()) {
    throw std::invalid_argument("IndexSet::from_members: the origin is missing");
  }
  IndexSet set = root(dim, iteration);
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (set.contains(members[i])) continue;
    if (!set.in_reduced_margin(members[i])) {
      throw std::invalid_argument("IndexSet::from_members: set is not downward closed at " +
                                  to_string(members[i]));
    }
    set = set.add(members[i], iteration);
  }
  return set;
}

std::vector<MultiIndex> IndexSet::reduced_margin() const {
  std::vector<MultiIndex> out;
  out.reserve(reduced_margin_.size());
  for (const auto& [nu, age] : reduced_margin_) out.push_back(nu);
  return out;
}

int IndexSet::entry_age(const MultiIndex& nu) const {
  const auto it = reduced_margin_.find(nu);
  if (it == reduced_margin_.end()) {
    throw std::invalid_argument("entry_age: " + to_string(nu) + " is not in the reduced margin");
  }
  return it->second;
}

IndexSet IndexSet::add(const MultiIndex& nu, int iteration) const {
  if (nu.dim() != dim_) throw std::invalid_argument("IndexSet::add: dimension mismatch");
  if (!reduced_margin_.contains(nu)) {
    throw std::invalid_argument("IndexSet::add: " + to_string(nu) +
                                " is not in the reduced margin; adding it would break downward "
                                "closedness");
  }
  IndexSet out = *this;
  out.reduced_margin_.erase(nu);
  out.members_.insert(nu);
  out.order_.push_back(nu);
  for (std::size_t j = 0; j < dim_; ++j) {
    MultiIndex candidate = nu.plus_unit(j);
    if (reduced_margin_predicate(out.members_, candidate)) {
      out.reduced_margin_.emplace(std::move(candidate), iteration);
    }
  }
  return out;
}

std::vector<MultiIndex> IndexSet::margin() const {
  std::set<MultiIndex> out;
  for (const auto& nu : members_) {
    for (std::size_t j = 0; j < dim_; ++j) {
      MultiIndex candidate = nu.plus_unit(j);
      if (!members_.contains(candidate)) out.insert(std::move(candidate));
    }
  }
  return {out.begin(), out.end()};
}

std::vector<MultiIndex> IndexSet::enumerate_lex() const { return {members_.begin(), members_.end()}; }

bool IndexSet::is_downward_closed() const {
  for (const auto& nu : members_) {
    for (std::size_t j = 0; j < dim_; ++j) {
      if (nu[j] != 0 && !members_.contains(nu.minus_unit(j))) return false;
    }
  }
  return true;
}

std::vector<MultiIndex> bulk(const IndexSet& set, const std::map<MultiIndex, double>& estimates,
                             double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("bulk: beta must lie in (0,1]");
  const auto& margin = set.reduced_margin_ages();
  if (margin.empty()) throw std::invalid_argument("bulk: empty reduced margin");

  std::vector<std::pair<MultiIndex, double>> ranked;
  ranked.reserve(margin.size());
  for (const auto& [nu, age] : margin) {
    const auto it = estimates.find(nu);
    if (it == estimates.end()) {
      throw std::invalid_argument("bulk: no estimate for " + to_string(nu));
    }
    if (!(it->second >= 0.0)) throw std::invalid_argument("bulk: estimates must be nonnegative");
    ranked.emplace_back(nu, it->second);
  }
  // Map iteration is lexicographic, so a stable sort keeps lex order on ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  double total = 0.0;
  for (const auto& [nu, e] : ranked) total += e;
  if (total == 0.0) return {margin.begin()->first};

  // Same summation order for prefix and total, so the full prefix always qualifies.
  const double threshold = beta * total;
  std::vector<MultiIndex> selected;
  double acc = 0.0;
  for (const auto& [nu, e] : ranked) {
    selected.push_back(nu);
    acc += e;
    if (acc >= threshold) break;
  }
  return selected;
}

MultiIndex most_ancient(const IndexSet& set, const std::set<MultiIndex>& excluded) {
  const MultiIndex* best = nullptr;
  int best_age = 0;
  for (const auto& [nu, age] : set.reduced_margin_ages()) {
    if (excluded.contains(nu)) continue;
    if (best == nullptr || age < best_age) {
      best = &nu;
      best_age = age;
    }
  }
  if (best == nullptr) throw std::invalid_argument("most_ancient: no candidate left");
  return *best;
}

nlohmann::json to_json(const MultiIndex& nu) { return nu.components(); }

MultiIndex multi_index_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("multi-index JSON must be a nonempty array");
  std::vector<unsigned> entries;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw std::invalid_argument("multi-index entries must be nonnegative integers, got " + v.dump());
    }
    entries.push_back(v.get<unsigned>());
  }
  return MultiIndex(std::move(entries));
}

nlohmann::json to_json(const IndexSet& set) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& nu : set.inclusion_order()) out.push_back(to_json(nu));
  return out;
}

IndexSet index_set_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("index set JSON must be a nonempty array");
  std::vector<MultiIndex> members;
  for (const auto& item : j) members.push_back(multi_index_from_json(item));
  const std::size_t dim = members.front().dim();
  // Preserve the recorded inclusion order when it is a valid growth sequence.
  try {
    if (!members.front().is_zero()) throw std::invalid_argument("origin first");
    IndexSet set = IndexSet::root(dim);
    for (std::size_t i = 1; i < members.size(); ++i) set = set.add(members[i], 1);
    return set;
  } catch (const std::invalid_argument&) {
    return IndexSet::from_members(dim, std::move(members));
  }
}

}  // namespace adawls
