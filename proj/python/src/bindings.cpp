#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adawls/adaptive.hpp"
#include "adawls/basis.hpp"
#include "adawls/experiments.hpp"
#include "adawls/multiindex.hpp"
#include "adawls/orthopoly.hpp"
#include "adawls/sampling.hpp"

namespace py = pybind11;
using namespace adawls;

namespace {

using Index = std::vector<unsigned>;

MultiIndex to_index(const Index& v) { return MultiIndex(v); }

std::vector<Index> to_lists(const std::vector<MultiIndex>& v) {
  std::vector<Index> out;
  out.reserve(v.size());
  for (const auto& nu : v) out.push_back(nu.components());
  return out;
}

std::vector<MultiIndex> from_lists(const std::vector<Index>& v) {
  std::vector<MultiIndex> out;
  out.reserve(v.size());
  for (const auto& c : v) out.emplace_back(c);
  return out;
}

BudgetRule rule_from(const std::string& name, double alpha, double s, std::size_t tau, double r) {
  if (name == "fixed") return BudgetRule::fixed_oversampling(tau);
  if (name == "single") return BudgetRule::single_space(alpha);
  if (name == "structured-single") return BudgetRule::structured_single_space(alpha);
  if (name == "union-structured") return BudgetRule::union_structured(alpha, s);
  if (name == "union-iid") return BudgetRule::union_iid(alpha, s);
  if (name == "legacy") return BudgetRule::legacy_rate(r);
  throw std::invalid_argument("unknown budget rule '" + name + "'");
}

std::string adaptive_json(const py::function& u, const std::string& family, std::size_t dim,
                          const AdaptiveConfig& cfg, std::size_t cv_count, bool fully) {
  const TensorBasis basis(family_from_string(family), dim);
  const Function f = [&](std::span<const double> x) {
    py::array_t<double> arr(static_cast<py::ssize_t>(x.size()), x.data());
    return u(arr).cast<double>();
  };
  CrossValidation cv;
  if (cv_count > 0) cv = CrossValidation::draw(basis, cv_count, RngStream(cfg.seed).split(~std::uint64_t{0}), f);
  const AdaptiveResult res = fully ? run_fully_adaptive(f, basis, cfg, cv_count ? &cv : nullptr)
                                   : run_adaptive(f, basis, cfg, cv_count ? &cv : nullptr);
  nlohmann::json j = res.summary(cfg);
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& r : res.trace.records) {
    nlohmann::json row{{"k", r.k},
                       {"n", r.n},
                       {"m", r.m},
                       {"cumulative_samples", r.cumulative_samples},
                       {"deviation", r.deviation},
                       {"cond", std::isfinite(r.cond) ? nlohmann::json(r.cond) : nlohmann::json("inf")}};
    if (r.cv) row["cv_l2"] = r.cv->l2;
    trace.push_back(row);
  }
  j["trace"] = trace;
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive weighted least squares with optimal sampling";

  m.def("eval_orthonormal", [](const std::string& f, int degree, double t) {
    return eval_orthonormal(family_from_string(f), degree, t);
  }, py::arg("family"), py::arg("degree"), py::arg("t"));
  m.def("eval_all", [](const std::string& f, int max_degree, double t) {
    return eval_all_orthonormal(family_from_string(f), max_degree, t);
  }, py::arg("family"), py::arg("max_degree"), py::arg("t"));
  m.def("induced_density", [](const std::string& f, int degree, double t) {
    return induced_density(family_from_string(f), degree, t);
  }, py::arg("family"), py::arg("degree"), py::arg("t"));
  m.def("induced_cdf", [](const std::string& f, int degree, double t) {
    return induced_cdf(family_from_string(f), degree, t);
  }, py::arg("family"), py::arg("degree"), py::arg("t"));
  m.def("induced_quantile", [](const std::string& f, int degree, double p) {
    return induced_quantile(family_from_string(f), degree, p);
  }, py::arg("family"), py::arg("degree"), py::arg("p"));
  m.def("gauss_rule", [](const std::string& f, int q) {
    const GaussRule r = gauss_rule(family_from_string(f), q);
    return py::make_tuple(r.nodes, r.weights);
  }, py::arg("family"), py::arg("q"));
  m.def("polynomial_roots", [](const std::string& f, int degree) {
    return polynomial_roots(family_from_string(f), degree);
  }, py::arg("family"), py::arg("degree"));
  m.def("sample_induced", [](const std::string& f, int degree, std::size_t count, std::uint64_t seed) {
    RngStream rng(seed);
    Eigen::VectorXd out(static_cast<Eigen::Index>(count));
    for (auto& x : out) x = sample_induced(family_from_string(f), degree, rng);
    return out;
  }, py::arg("family"), py::arg("degree"), py::arg("count"), py::arg("seed") = 1);

  m.def("theta", &theta);
  m.def("budget", [](const std::string& rule, std::size_t n, double alpha, double s, std::size_t tau, double r) {
    return budget(rule_from(rule, alpha, s, tau, r), n);
  }, py::arg("rule"), py::arg("n"), py::arg("alpha") = 0.1, py::arg("s") = 2.0, py::arg("tau") = 0,
     py::arg("r") = 1.0);
  m.def("budget_bounds_ok", [](double alpha, double s, std::size_t k_max) {
    return budget_bounds_check(alpha, s, k_max).ok();
  }, py::arg("alpha"), py::arg("s"), py::arg("k_max"));

  py::class_<IndexSet>(m, "IndexSet")
      .def_static("root", &IndexSet::root, py::arg("dim"), py::arg("iteration") = 1)
      .def("add", [](const IndexSet& s, const Index& nu, int it) { return s.add(to_index(nu), it); },
           py::arg("index"), py::arg("iteration"))
      .def("__len__", &IndexSet::size)
      .def("__contains__", [](const IndexSet& s, const Index& nu) { return s.contains(to_index(nu)); })
      .def_property_readonly("dim", &IndexSet::dim)
      .def("inclusion_order", [](const IndexSet& s) { return to_lists(s.inclusion_order()); })
      .def("margin", [](const IndexSet& s) { return to_lists(s.margin()); })
      .def("reduced_margin", [](const IndexSet& s) { return to_lists(s.reduced_margin()); })
      .def("is_downward_closed", &IndexSet::is_downward_closed);

  m.def("bulk", [](const IndexSet& s, const std::map<Index, double>& estimates, double beta) {
    std::map<MultiIndex, double> e;
    for (const auto& [k, v] : estimates) e.emplace(MultiIndex(k), v);
    return to_lists(bulk(s, e, beta));
  }, py::arg("index_set"), py::arg("estimates"), py::arg("beta"));

  m.def("design_matrix", [](const std::string& f, const std::vector<Index>& indices, const Points& points) {
    const TensorBasis basis(family_from_string(f), static_cast<std::size_t>(points.cols()));
    return basis.design_matrix(from_lists(indices), points);
  }, py::arg("family"), py::arg("indices"), py::arg("points"));
  m.def("structured_sample", [](const std::string& f, std::size_t dim, const std::vector<Index>& indices,
                                std::size_t tau, std::uint64_t seed) {
    const TensorBasis basis(family_from_string(f), dim);
    return algo1_extend(SampleSet::structured(dim), {}, 0, from_lists(indices), tau, basis, RngStream(seed), 1)
        .points();
  }, py::arg("family"), py::arg("dim"), py::arg("indices"), py::arg("tau"), py::arg("seed") = 1);

  py::class_<AdaptiveConfig>(m, "AdaptiveConfig")
      .def(py::init<>())
      .def_readwrite("beta", &AdaptiveConfig::beta)
      .def_readwrite("alpha", &AdaptiveConfig::alpha)
      .def_readwrite("s", &AdaptiveConfig::s)
      .def_readwrite("k_max", &AdaptiveConfig::k_max)
      .def_readwrite("k_sg", &AdaptiveConfig::k_sg)
      .def_readwrite("xi", &AdaptiveConfig::xi)
      .def_readwrite("seed", &AdaptiveConfig::seed)
      .def_readwrite("topup_cap", &AdaptiveConfig::topup_cap)
      .def_readwrite("safeguard", &AdaptiveConfig::safeguard);

  m.def("adaptive_json", &adaptive_json, py::arg("u"), py::arg("family"), py::arg("dim"), py::arg("config"),
        py::arg("cv_count") = 0, py::arg("fully") = false);
  m.def("test_function", [](const std::vector<double>& x) { return test_function(x); }, py::arg("x"));

  m.def("command_json", [](const std::string& name, const std::string& config, const std::string& out) {
    const auto cfg = nlohmann::json::parse(config.empty() ? "{}" : config);
    nlohmann::json res;
    if (name == "cond") res = cmd_cond(cfg, out);
    else if (name == "compare-samplers") res = cmd_compare_samplers(cfg, out);
    else if (name == "adapt") res = cmd_adapt(cfg, out, false);
    else if (name == "fully-adapt") res = cmd_adapt(cfg, out, true);
    else if (name == "budget-table") res = cmd_budget_table(cfg, out);
    else if (name == "sampler-stats") res = cmd_sampler_stats(cfg, out);
    else if (name == "plots") res = cmd_plots(out);
    else throw std::invalid_argument("unknown command '" + name + "'");
    return res.dump();
  }, py::arg("name"), py::arg("config"), py::arg("out"));
}
