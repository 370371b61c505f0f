#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "adawls/experiments.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long long> replications;
  std::optional<long long> threads;
  std::string out;
};

json load_config(const Overrides& o) {
  json cfg = json::object();
  if (!o.config_path.empty()) {
    std::ifstream is(o.config_path);
    if (!is) throw std::runtime_error("cannot read config " + o.config_path);
    try {
      cfg = json::parse(is);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("config " + o.config_path + ": " + e.what());
    }
    if (!cfg.is_object()) throw std::runtime_error("config must be a JSON object");
  }
  if (o.seed) cfg["seed"] = *o.seed;
  if (o.replications) cfg["replications"] = *o.replications;
  if (o.threads) cfg["threads"] = *o.threads;
  return cfg;
}

fs::path output_dir(const Overrides& o, const json& cfg, const std::string& command) {
  if (!o.out.empty()) return o.out;
  if (cfg.contains("output_dir") && cfg["output_dir"].is_string()) return cfg["output_dir"].get<std::string>();
  if (const char* root = std::getenv("ADAWLS_OUTPUT_ROOT"); root && *root) return fs::path(root) / command;
  return fs::path("adawls-out") / command;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--replications", o.replications, "number of replications")->check(CLI::PositiveNumber);
  sub->add_option("--threads", o.threads, "worker threads for replications")->check(CLI::PositiveNumber);
  sub->add_option("-o,--out", o.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive weighted least-squares experiments"};
  app.require_subcommand(1);

  Overrides o;
  std::string run_dir;
  struct Command {
    const char* name;
    const char* help;
  };
  const Command commands[] = {
      {"cond", "Gramian conditioning along random growth sequences"},
      {"compare-samplers", "structured vs. i.i.d. sequential sampling"},
      {"adapt", "budget-driven adaptive approximation of the rational test function"},
      {"fully-adapt", "stability-driven adaptive approximation of the rational test function"},
      {"budget-table", "sample budgets and recycling statistics"},
      {"sampler-stats", "unrecycled-sample statistics and induced-sampler KS tests"},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c.name, c.help), o);
  auto* plots = app.add_subcommand("plots", "write matplotlib scripts for a run directory");
  plots->add_option("run_dir", run_dir, "directory holding experiment output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    json summary;
    if (name == "plots") {
      summary = adawls::cmd_plots(run_dir);
    } else {
      const json cfg = load_config(o);
      const fs::path out = output_dir(o, cfg, name);
      if (name == "cond") summary = adawls::cmd_cond(cfg, out);
      else if (name == "compare-samplers") summary = adawls::cmd_compare_samplers(cfg, out);
      else if (name == "adapt") summary = adawls::cmd_adapt(cfg, out, false);
      else if (name == "fully-adapt") summary = adawls::cmd_adapt(cfg, out, true);
      else if (name == "budget-table") summary = adawls::cmd_budget_table(cfg, out);
      else if (name == "sampler-stats") summary = adawls::cmd_sampler_stats(cfg, out);
      summary["output_dir"] = out.string();
    }
    std::cout << summary.dump(2) << '\n';
  } catch (const std::invalid_argument& e) {
    std::cerr << "adawls: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "adawls: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
