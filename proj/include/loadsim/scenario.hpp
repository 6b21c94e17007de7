#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "loadsim/engine.hpp"
#include "loadsim/multiagent.hpp"
#include "loadsim/platform.hpp"
#include "loadsim/workload.hpp"

namespace loadsim {

enum class WorkloadType { Qtm, Uniform, Lognormal };

struct WorkloadSpec {
  WorkloadType type = WorkloadType::Qtm;
  std::size_t n = 501;
  std::size_t steps = 100;
  QtmParams qtm;
  double t = 1.0;  // uniform
  double median = 1.0;
  double sigma = 0.25;
  std::uint64_t seed = 1;
  double sequential_overhead = 0.0;
  std::size_t data_size = kDefaultDataSize;
};

enum class SpeedPreset { Homogeneous, Heterogeneous };

struct PlatformSpec {
  Topology topology = Topology::SwitchedStar;
  bool ring = false;  // Explicit topology preset
  SpeedPreset speeds = SpeedPreset::Heterogeneous;
  double alpha = kStarAlpha;
  double beta = kStarBeta;
  CongestionPolicy congestion{true, 5e-4};
  PerturbationModel perturbation = RandomBusy{1.0, 0.1, true};
};

struct Scenario {
  WorkloadSpec workload;
  PlatformSpec platform;
  std::vector<std::string> policies;
  std::vector<std::size_t> m_grid{2, 4, 8, 16, 32, 64};
  std::size_t replicates = 5;
  std::uint64_t master_seed = 1;
  std::size_t workers = 0;  // 0: one per hardware thread
  MultiagentConfig multiagent;
  std::string out_dir = "out";
  bool trace = false;
};

// INI-like text: optional top-level shorthands (workload = qtm:n=501,steps=100,
// policy = af, m = 4, ...) followed by [workload], [platform], [run],
// [multiagent] and [output] sections. '#' starts a comment.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

// The fully resolved scenario in the same grammar, defaults included.
std::string explain(const Scenario& scenario);

// "static", "fixed:c=N", "fac", "wf", "awf", "af", "multiagent" (alias "ma").
// Returns the canonical spelling; throws ParseError on anything else.
std::string canonical_policy_name(const std::string& name);
std::unique_ptr<Policy> make_policy(const std::string& name, const MultiagentConfig& multiagent);

TimeSteppedWorkload build_workload(const WorkloadSpec& spec);
PlatformGraph build_platform(const PlatformSpec& spec, std::size_t m, std::uint64_t seed);

}  // namespace loadsim
