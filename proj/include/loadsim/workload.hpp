#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace loadsim {

using JobId = std::uint32_t;

inline constexpr std::size_t kDefaultDataSize = 1024;

struct Job {
  JobId id = 0;
  int loop_id = 0;
  // Seconds on a unit-speed processor. Policies never read this directly;
  // they only see realized durations.
  double base_cost = 0.0;
  std::size_t data_size = kDefaultDataSize;
};

// Half-open run of job ids [begin, end).
struct JobRange {
  JobId begin = 0;
  JobId end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return end == begin; }
  friend bool operator==(const JobRange&, const JobRange&) = default;
};

// Parallel loop as a DAG: job vertices 0..n-1, then the sequential
// source s0 = n and sink s1 = n + 1.
struct JobDag {
  std::size_t num_jobs = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t vertex_count() const noexcept { return num_jobs + 2; }
  std::size_t source() const noexcept { return num_jobs; }
  std::size_t sink() const noexcept { return num_jobs + 1; }
};

JobDag build_parallel_loop_dag(std::size_t n);

bool is_acyclic(const JobDag& dag);

// Largest antichain among the job vertices (Dilworth via bipartite
// matching on the transitive closure). Quadratic memory; meant for checks.
std::size_t job_width(const JobDag& dag);

// Cost models ----------------------------------------------------------

struct UniformCost {
  double t = 1.0;
};

// Independent lognormal draw per (iterate, step).
struct LognormalCost {
  double median = 1.0;
  double sigma = 0.25;
};

// Heavy QTM-style loop: base * (1 + amplitude * g(i, t)).
struct FieldCost {
  double base = 1.0;
  double amplitude = 0.0;
};

// Fixed per-iterate costs, identical in every step.
struct ExplicitCost {
  std::vector<double> costs;
};

using CostModel = std::variant<UniformCost, LognormalCost, FieldCost, ExplicitCost>;

struct LoopSpec {
  std::string name;
  std::size_t n = 1;
  CostModel cost = UniformCost{};
};

// Generator inputs for the QTM-like five-loop step.
struct QtmParams {
  std::size_t n_particles = 501;
  double heavy_loop_base = 0.02;
  double nonuniformity = 0.5;
  double light_loop_base = 0.001;
};

inline constexpr std::size_t kQtmLoopsPerStep = 5;
inline constexpr std::size_t kQtmHeavyLoops = 3;

// Smooth pseudo-random field in [-1, 1]: three travelling sinusoids with
// seed-derived phases plus a hashed noise term.
double qtm_field(std::size_t i, std::size_t n, std::size_t step, std::uint64_t seed);

class TimeSteppedWorkload {
 public:
  TimeSteppedWorkload(std::size_t num_steps, std::vector<LoopSpec> loops,
                      double sequential_overhead, std::uint64_t seed,
                      std::size_t data_size = kDefaultDataSize);

  std::size_t num_steps() const noexcept { return num_steps_; }
  const std::vector<LoopSpec>& loops() const noexcept { return loops_; }
  double sequential_overhead() const noexcept { return sequential_overhead_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t data_size() const noexcept { return data_size_; }

  // Pure function of (seed, step, loop, i); nothing is materialised up front.
  double base_cost(std::size_t step, std::size_t loop, std::size_t i) const;
  std::vector<Job> jobs(std::size_t step, std::size_t loop) const;

  std::size_t jobs_per_step() const noexcept;
  std::size_t total_jobs() const noexcept { return jobs_per_step() * num_steps_; }

 private:
  std::size_t num_steps_;
  std::vector<LoopSpec> loops_;
  double sequential_overhead_;
  std::uint64_t seed_;
  std::size_t data_size_;
};

TimeSteppedWorkload generate_qtm_workload(std::size_t n_particles, std::size_t num_steps,
                                          const QtmParams& params, std::uint64_t seed,
                                          double sequential_overhead = 0.0,
                                          std::size_t data_size = kDefaultDataSize);

// Single-loop workloads used by the formula checks and unit tests.
TimeSteppedWorkload make_uniform_workload(std::size_t n, double t, std::size_t num_steps = 1,
                                          double sequential_overhead = 0.0);
TimeSteppedWorkload make_explicit_workload(std::vector<double> costs, std::size_t num_steps = 1,
                                           double sequential_overhead = 0.0);

double loop_total_cost(std::span<const Job> loop);

}  // namespace loadsim
