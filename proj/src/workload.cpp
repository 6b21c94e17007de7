#include "loadsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "loadsim/error.hpp"
#include "loadsim/rng.hpp"

namespace loadsim {

JobDag build_parallel_loop_dag(std::size_t n) {
  if (n == 0) throw InvalidWorkload("parallel loop needs at least one iterate");
  JobDag dag;
  dag.num_jobs = n;
  dag.edges.reserve(2 * n);
  for (std::size_t i = 0; i < n; ++i) dag.edges.emplace_back(dag.source(), i);
  for (std::size_t i = 0; i < n; ++i) dag.edges.emplace_back(i, dag.sink());
  return dag;
}

namespace {

std::vector<std::vector<std::size_t>> adjacency(const JobDag& dag) {
  std::vector<std::vector<std::size_t>> adj(dag.vertex_count());
  for (const auto& [from, to] : dag.edges) {
    if (from >= dag.vertex_count() || to >= dag.vertex_count()) {
      throw InvalidWorkload("DAG edge references a missing vertex");
    }
    adj[from].push_back(to);
  }
  return adj;
}

}  // namespace

bool is_acyclic(const JobDag& dag) {
  const auto adj = adjacency(dag);
  std::vector<std::size_t> indegree(dag.vertex_count(), 0);
  for (const auto& [from, to] : dag.edges) ++indegree[to];
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < indegree.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t w : adj[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  return visited == dag.vertex_count();
}

std::size_t job_width(const JobDag& dag) {
  if (!is_acyclic(dag)) throw InvalidWorkload("width is only defined for a DAG");
  const auto adj = adjacency(dag);
  const std::size_t v_count = dag.vertex_count();
  const std::size_t n = dag.num_jobs;

  // reach[u][v]: v reachable from u (u != v).
  std::vector<std::vector<char>> reach(v_count, std::vector<char>(v_count, 0));
  for (std::size_t s = 0; s < v_count; ++s) {
    std::vector<std::size_t> stack(adj[s].begin(), adj[s].end());
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (reach[s][v]) continue;
      reach[s][v] = 1;
      for (std::size_t w : adj[v]) stack.push_back(w);
    }
  }

  // Minimum chain cover over job vertices = n - maximum matching.
  std::vector<std::ptrdiff_t> match_right(n, -1);
  std::vector<char> seen;
  auto augment = [&](auto&& self, std::size_t u) -> bool {
    for (std::size_t v = 0; v < n; ++v) {
      if (!reach[u][v] || seen[v]) continue;
      seen[v] = 1;
      if (match_right[v] < 0 || self(self, static_cast<std::size_t>(match_right[v]))) {
        match_right[v] = static_cast<std::ptrdiff_t>(u);
        return true;
      }
    }
    return false;
  };
  std::size_t matching = 0;
  for (std::size_t u = 0; u < n; ++u) {
    seen.assign(n, 0);
    if (augment(augment, u)) ++matching;
  }
  return n - matching;
}

double qtm_field(std::size_t i, std::size_t n, std::size_t step, std::uint64_t seed) {
  // Spatial wavenumbers in cycles per loop, temporal drift in rad/step.
  constexpr double kCycles[3] = {1.0, 2.5, 6.0};
  constexpr double kDrift[3] = {0.21, 0.37, 0.53};
  constexpr double kAmplitude[3] = {0.40, 0.25, 0.15};
  constexpr double kNoise = 0.20;

  const double x = n > 1 ? static_cast<double>(i) / static_cast<double>(n) : 0.0;
  const double t = static_cast<double>(step);
  double g = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double phase = 2.0 * std::numbers::pi * unit_from_bits(hash_combine(seed, k));
    g += kAmplitude[k] * std::sin(2.0 * std::numbers::pi * kCycles[k] * x + kDrift[k] * t + phase);
  }
  const std::uint64_t bits = hash_combine(hash_combine(seed, 0x6e6f697365ULL + step), i);
  g += kNoise * (2.0 * unit_from_bits(bits) - 1.0);
  return std::clamp(g, -1.0, 1.0);
}

namespace {

void validate_loop(const LoopSpec& loop) {
  if (loop.n == 0) throw InvalidWorkload("loop '" + loop.name + "' has no iterates");
  std::visit(
      [&](const auto& model) {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, UniformCost>) {
          if (!(model.t > 0.0)) throw InvalidWorkload("uniform cost must be positive");
        } else if constexpr (std::is_same_v<T, LognormalCost>) {
          if (!(model.median > 0.0) || !(model.sigma >= 0.0)) {
            throw InvalidWorkload("lognormal cost needs median > 0 and sigma >= 0");
          }
        } else if constexpr (std::is_same_v<T, FieldCost>) {
          if (!(model.base > 0.0)) throw InvalidWorkload("field base cost must be positive");
          if (!(model.amplitude >= 0.0 && model.amplitude < 1.0)) {
            throw InvalidWorkload("nonuniformity must lie in [0, 1)");
          }
        } else {
          if (model.costs.size() != loop.n) {
            throw InvalidWorkload("explicit cost list length differs from loop size");
          }
          for (double c : model.costs) {
            if (!(c > 0.0)) throw InvalidWorkload("explicit costs must be positive");
          }
        }
      },
      loop.cost);
}

}  // namespace

TimeSteppedWorkload::TimeSteppedWorkload(std::size_t num_steps, std::vector<LoopSpec> loops,
                                         double sequential_overhead, std::uint64_t seed,
                                         std::size_t data_size)
    : num_steps_(num_steps),
      loops_(std::move(loops)),
      sequential_overhead_(sequential_overhead),
      seed_(seed),
      data_size_(data_size) {
  if (num_steps_ == 0) throw InvalidWorkload("workload needs at least one time step");
  if (loops_.empty()) throw InvalidWorkload("workload needs at least one loop per step");
  if (!(sequential_overhead_ >= 0.0)) throw InvalidWorkload("sequential overhead must be >= 0");
  for (const auto& loop : loops_) validate_loop(loop);
}

double TimeSteppedWorkload::base_cost(std::size_t step, std::size_t loop, std::size_t i) const {
  const LoopSpec& spec = loops_.at(loop);
  if (i >= spec.n) throw InvalidWorkload("iterate index out of range");
  const std::uint64_t loop_seed = hash_combine(seed_, loop);
  return std::visit(
      [&](const auto& model) -> double {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, UniformCost>) {
          return model.t;
        } else if constexpr (std::is_same_v<T, LognormalCost>) {
          SplitMix64 engine(hash_combine(hash_combine(loop_seed, step), i));
          std::lognormal_distribution<double> dist(std::log(model.median), model.sigma);
          return dist(engine);
        } else if constexpr (std::is_same_v<T, FieldCost>) {
          return model.base * (1.0 + model.amplitude * qtm_field(i, spec.n, step, loop_seed));
        } else {
          return model.costs[i];
        }
      },
      spec.cost);
}

std::vector<Job> TimeSteppedWorkload::jobs(std::size_t step, std::size_t loop) const {
  const LoopSpec& spec = loops_.at(loop);
  std::vector<Job> out(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    out[i] = Job{static_cast<JobId>(i), static_cast<int>(loop), base_cost(step, loop, i), data_size_};
  }
  return out;
}

std::size_t TimeSteppedWorkload::jobs_per_step() const noexcept {
  std::size_t total = 0;
  for (const auto& loop : loops_) total += loop.n;
  return total;
}

TimeSteppedWorkload generate_qtm_workload(std::size_t n_particles, std::size_t num_steps,
                                          const QtmParams& params, std::uint64_t seed,
                                          double sequential_overhead, std::size_t data_size) {
  if (n_particles == 0) throw InvalidWorkload("QTM workload needs at least one pseudoparticle");
  if (!(params.heavy_loop_base > 0.0) || !(params.light_loop_base > 0.0)) {
    throw InvalidWorkload("QTM loop base costs must be positive");
  }
  if (!(params.nonuniformity >= 0.0 && params.nonuniformity < 1.0)) {
    throw InvalidWorkload("nonuniformity must lie in [0, 1)");
  }
  std::vector<LoopSpec> loops;
  loops.reserve(kQtmLoopsPerStep);
  for (std::size_t k = 0; k < kQtmLoopsPerStep; ++k) {
    LoopSpec loop;
    loop.name = "loop" + std::to_string(k + 1);
    loop.n = n_particles;
    if (k < kQtmHeavyLoops) {
      loop.cost = FieldCost{params.heavy_loop_base, params.nonuniformity};
    } else {
      loop.cost = UniformCost{params.light_loop_base};
    }
    loops.push_back(std::move(loop));
  }
  return TimeSteppedWorkload(num_steps, std::move(loops), sequential_overhead, seed, data_size);
}

TimeSteppedWorkload make_uniform_workload(std::size_t n, double t, std::size_t num_steps,
                                          double sequential_overhead) {
  return TimeSteppedWorkload(num_steps, {LoopSpec{"loop", n, UniformCost{t}}}, sequential_overhead, 0);
}

TimeSteppedWorkload make_explicit_workload(std::vector<double> costs, std::size_t num_steps,
                                           double sequential_overhead) {
  const std::size_t n = costs.size();
  return TimeSteppedWorkload(num_steps, {LoopSpec{"loop", n, ExplicitCost{std::move(costs)}}},
                             sequential_overhead, 0);
}

double loop_total_cost(std::span<const Job> loop) {
  double total = 0.0;
  for (const Job& job : loop) total += job.base_cost;
  return total;
}

}  // namespace loadsim
