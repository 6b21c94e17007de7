#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loadsim/metrics.hpp"
#include "loadsim/scenario.hpp"
#include "loadsim/trace.hpp"

namespace loadsim {

struct RunSpec {
  std::string policy;
  std::size_t m = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;  // master_seed + replicate

  // File-system friendly, e.g. "af_m32_r0" or "fixed-c10_m4_r2".
  std::string id() const;
};

struct RunOutcome {
  RunSpec spec;
  RunMetrics metrics;
  // Multiagent only.
  std::size_t rounds = 0;
  std::size_t agreement_checks = 0;
};

// Every (policy, m, replicate) combination, sorted by policy name, then m,
// then replicate.
std::vector<RunSpec> plan_runs(const Scenario& scenario);

// One simulation. With trace_path set, the event log is written there.
RunOutcome execute_run(const Scenario& scenario, const RunSpec& spec,
                       const std::optional<std::filesystem::path>& trace_path = std::nullopt);

struct ExperimentReport {
  std::vector<RunOutcome> runs;            // plan order
  std::vector<ExperimentResult> results;   // sorted by (policy, m)
};

// LOADSIM_WORKERS, then the scenario's worker count, then the hardware.
std::size_t resolve_workers(const Scenario& scenario);

// Runs the plan on `workers` threads. Output order never depends on which
// run finishes first. With trace_dir set, each run writes <id>.jsonl there.
ExperimentReport run_experiment(const Scenario& scenario, std::size_t workers,
                                const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

// results.csv and results.json under dir.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace loadsim
