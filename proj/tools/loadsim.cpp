// Command-line front end: run scenarios, print resolved scenarios, and
// generate packing oracle fixtures.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include <CLI11.hpp>
#include <json.hpp>

#include "loadsim/binpack.hpp"
#include "loadsim/error.hpp"
#include "loadsim/experiment.hpp"
#include "loadsim/rng.hpp"
#include "loadsim/scenario.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitIntegrity = 3;

struct Overrides {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool trace = false;
  std::vector<std::string> policies;
  std::optional<std::string> m_list;
  std::optional<std::size_t> replicates;
};

// Flags win over file values.
loadsim::Scenario resolve(const Overrides& o) {
  loadsim::Scenario s = loadsim::load_scenario(o.scenario_path);
  if (o.seed) s.master_seed = *o.seed;
  if (o.out) s.out_dir = *o.out;
  if (o.trace) s.trace = true;
  if (!o.policies.empty()) {
    s.policies.clear();
    for (const auto& p : o.policies) s.policies.push_back(loadsim::canonical_policy_name(p));
  }
  if (o.m_list) {
    // Reuse the scenario grammar so the flag accepts what the file accepts.
    s.m_grid = loadsim::parse_scenario("workload = qtm\npolicy = af\nm = " + *o.m_list).m_grid;
  }
  if (o.replicates) {
    if (*o.replicates == 0) throw loadsim::ParseError(0, "--replicates must be >= 1");
    s.replicates = *o.replicates;
  }
  return s;
}

void print_table(const std::vector<loadsim::ExperimentResult>& results) {
  std::printf("%-12s %4s %4s %12s %12s %14s %10s %8s\n", "policy", "m", "reps", "mean_Tp", "std_Tp", "mean_Cp",
              "max_in", "idle");
  for (const auto& r : results) {
    std::printf("%-12s %4zu %4zu %12.4f %12.4f %14.4f %10.1f %8.4f\n", r.policy.c_str(), r.m, r.replicates,
                r.mean_makespan, r.std_makespan, r.mean_cost, r.max_inbound_mean, r.idle_fraction_mean);
  }
}

int cmd_run(const Overrides& o) {
  const loadsim::Scenario s = resolve(o);
  const std::filesystem::path out(s.out_dir);
  std::optional<std::filesystem::path> trace_dir;
  if (s.trace) trace_dir = out / "trace";
  const auto report = loadsim::run_experiment(s, loadsim::resolve_workers(s), trace_dir);
  loadsim::write_report(report, out);
  print_table(report.results);
  std::printf("wrote %s\n", (out / "results.csv").string().c_str());
  return 0;
}

int cmd_explain(const Overrides& o) {
  std::cout << loadsim::explain(resolve(o));
  return 0;
}

int cmd_oracle(std::size_t count, std::uint64_t seed, std::size_t max_items, std::size_t max_bins,
               const std::string& out_path) {
  loadsim::SplitMix64 rng(seed);
  std::uniform_int_distribution<std::size_t> items(1, max_items);
  std::uniform_int_distribution<std::size_t> bins(1, max_bins);
  std::uniform_real_distribution<double> weight(0.1, 10.0);
  const double speed_grid[] = {0.8, 1.0, 1.4, 2.4};
  nlohmann::json fixtures = nlohmann::json::array();
  std::size_t worse = 0;
  for (std::size_t i = 0; i < count; ++i) {
    loadsim::PackingInstance inst;
    const std::size_t n = items(rng);
    const std::size_t m = bins(rng);
    for (std::size_t k = 0; k < n; ++k) inst.weights.push_back(weight(rng));
    const bool unit = i % 2 == 0;
    for (std::size_t b = 0; b < m; ++b) inst.speeds.push_back(unit ? 1.0 : speed_grid[rng() % 4]);
    const auto lpt = loadsim::lpt_pack(inst);
    const auto opt = loadsim::brute_force_pack(inst);
    worse += lpt.predicted_makespan > opt.predicted_makespan;
    fixtures.push_back({{"instance", inst}, {"lpt", lpt}, {"optimal", opt}});
  }
  if (out_path.empty()) {
    std::cout << fixtures.dump(1) << '\n';
  } else {
    std::ofstream file(out_path);
    if (!file) throw loadsim::Error("cannot write " + out_path);
    file << fixtures.dump(1) << '\n';
  }
  std::fprintf(stderr, "%zu instances, LPT above optimum on %zu\n", count, worse);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-event comparison of master-slave factoring and multiagent loop scheduling"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Master seed (replicate r uses seed + r)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--trace", o.trace, "Also write trace/<run-id>.jsonl per run");
    sub->add_option("--policy", o.policies, "Policy name; repeatable, replaces the file's list");
    sub->add_option("--m", o.m_list, "Comma-separated processor counts");
    sub->add_option("--replicates", o.replicates, "Replicates per (policy, m)");
  };
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write results.csv / results.json");
  add_common(run);
  CLI::App* explain = app.add_subcommand("explain", "Print the scenario with every default resolved");
  add_common(explain);

  std::size_t count = 500;
  std::uint64_t oracle_seed = 1;
  std::size_t max_items = 12;
  std::size_t max_bins = 4;
  std::string oracle_out;
  CLI::App* oracle = app.add_subcommand("oracle", "Compare LPT packing against the exhaustive optimum");
  oracle->add_option("--count", count, "Number of random instances");
  oracle->add_option("--seed", oracle_seed, "Instance generator seed");
  oracle->add_option("--max-items", max_items, "Items per instance, at most")->check(CLI::Range(1, 14));
  oracle->add_option("--max-bins", max_bins, "Bins per instance, at most")->check(CLI::Range(1, 4));
  oracle->add_option("--out", oracle_out, "Write fixtures here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }

  try {
    if (*run) return cmd_run(o);
    if (*explain) return cmd_explain(o);
    return cmd_oracle(count, oracle_seed, max_items, max_bins, oracle_out);
  } catch (const loadsim::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitParse;
  } catch (const loadsim::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIntegrity;
  }
}
