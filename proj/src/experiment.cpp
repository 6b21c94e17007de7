#include "loadsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "loadsim/error.hpp"
#include "loadsim/multiagent.hpp"

namespace loadsim {

std::string RunSpec::id() const {
  std::string name;
  for (char c : policy) {
    if (c == ':') continue;
    name += c == '=' ? '-' : c;
  }
  if (name.rfind("fixedc-", 0) == 0) name = "fixed-c" + name.substr(7);
  return name + "_m" + std::to_string(m) + "_r" + std::to_string(replicate);
}

std::vector<RunSpec> plan_runs(const Scenario& scenario) {
  std::vector<std::string> policies = scenario.policies;
  std::sort(policies.begin(), policies.end());
  policies.erase(std::unique(policies.begin(), policies.end()), policies.end());
  std::vector<std::size_t> grid = scenario.m_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<RunSpec> out;
  for (const std::string& policy : policies) {
    for (std::size_t m : grid) {
      for (std::size_t r = 0; r < scenario.replicates; ++r) {
        out.push_back(RunSpec{policy, m, r, scenario.master_seed + r});
      }
    }
  }
  return out;
}

RunOutcome execute_run(const Scenario& scenario, const RunSpec& spec,
                       const std::optional<std::filesystem::path>& trace_path) {
  const TimeSteppedWorkload workload = build_workload(scenario.workload);
  const PlatformGraph platform = build_platform(scenario.platform, spec.m, spec.seed);
  std::unique_ptr<Policy> policy = make_policy(spec.policy, scenario.multiagent);
  RunOptions options;
  options.record_events = trace_path.has_value();
  RunResult result = simulate(workload, platform, *policy, scenario.platform.congestion,
                              scenario.platform.perturbation, spec.seed, options);
  RunOutcome out;
  out.spec = spec;
  out.metrics = std::move(result.metrics);
  if (const auto* agents = dynamic_cast<const MultiagentPolicy*>(policy.get())) {
    out.rounds = agents->rounds().size();
    out.agreement_checks = agents->agreement_checks();
  }
  if (trace_path) {
    std::ofstream file(*trace_path);
    if (!file) throw Error("cannot write trace file " + trace_path->string());
    result.trace.write_jsonl(file);
  }
  return out;
}

std::size_t resolve_workers(const Scenario& scenario) {
  if (const char* env = std::getenv("LOADSIM_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ParseError(0, std::string("LOADSIM_WORKERS must be a positive integer, got '") + env + "'");
  }
  if (scenario.workers > 0) return scenario.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentReport run_experiment(const Scenario& scenario, std::size_t workers,
                                const std::optional<std::filesystem::path>& trace_dir) {
  const std::vector<RunSpec> plan = plan_runs(scenario);
  if (trace_dir) std::filesystem::create_directories(*trace_dir);
  std::vector<std::optional<RunOutcome>> slots(plan.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= plan.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        std::optional<std::filesystem::path> path;
        if (trace_dir) path = *trace_dir / (plan[i].id() + ".jsonl");
        slots[i] = execute_run(scenario, plan[i], path);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, plan.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentReport report;
  std::map<std::pair<std::string, std::size_t>, std::vector<ReplicateMetrics>> groups;
  for (auto& slot : slots) {
    const RunOutcome& run = *slot;
    groups[{run.spec.policy, run.spec.m}].push_back(ReplicateMetrics{
        run.spec.policy, run.spec.m, run.spec.seed, run.metrics.makespan, run.metrics.cost,
        static_cast<double>(run.metrics.max_inbound), run.metrics.idle_fraction()});
    report.runs.push_back(std::move(*slot));
  }
  for (const auto& [key, reps] : groups) report.results.push_back(aggregate(reps));
  return report;
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "results.csv");
  if (!csv) throw Error("cannot write " + (dir / "results.csv").string());
  write_csv(csv, report.results);
  std::ofstream json(dir / "results.json");
  if (!json) throw Error("cannot write " + (dir / "results.json").string());
  json << to_json(report.results).dump(2) << '\n';
}

}  // namespace loadsim
