#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "loadsim/workload.hpp"

namespace loadsim {

using ProcId = std::uint32_t;

struct Processor {
  ProcId id = 0;
  // A unit-speed processor executes base_cost seconds of work in base_cost seconds.
  double speed = 1.0;
};

// Undirected link between graph vertices. Processors are vertices 0..m-1;
// any further vertices are switches that never compute.
struct Link {
  std::size_t u = 0;
  std::size_t v = 0;
  double alpha = 0.0;  // latency, seconds
  double beta = 0.0;   // inverse bandwidth, seconds per byte
};

enum class Topology { FullyConnected, SwitchedStar, Explicit };

inline constexpr double kStarAlpha = 5e-4;
inline constexpr double kStarBeta = 1e-7;

class PlatformGraph {
 public:
  PlatformGraph(std::vector<double> speeds, std::size_t num_vertices, std::vector<Link> links,
                Topology topology = Topology::Explicit);

  static PlatformGraph fully_connected(std::vector<double> speeds, double alpha, double beta);
  // All processors hang off one switch vertex (index m).
  static PlatformGraph switched_star(std::vector<double> speeds, double alpha = kStarAlpha,
                                     double beta = kStarBeta);
  static PlatformGraph ring(std::vector<double> speeds, double alpha, double beta);

  std::size_t size() const noexcept { return processors_.size(); }
  std::size_t vertex_count() const noexcept { return adjacency_.size(); }
  const Processor& processor(ProcId id) const;
  std::span<const Processor> processors() const noexcept { return processors_; }
  std::span<const Link> links() const noexcept { return links_; }
  Topology topology() const noexcept { return topology_; }

  // Link indices from src to dst along a minimum-hop route; ties go to the
  // lowest-numbered next vertex.
  std::vector<std::size_t> route(std::size_t src, std::size_t dst) const;

  // Cached route between processors, canonical orientation (lower id first).
  const std::vector<std::size_t>& canonical_route(ProcId a, ProcId b) const;

 private:
  std::vector<Processor> processors_;
  std::vector<Link> links_;
  Topology topology_;
  // (neighbour vertex, link index), sorted by neighbour.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
  std::vector<std::vector<std::size_t>> routes_;  // m*m, canonical
};

std::vector<std::size_t> shortest_hop_path(ProcId src, ProcId dst, const PlatformGraph& platform);

// Sum of (alpha + size*beta) over the route; zero for src == dst. Summed
// along the canonical orientation so the result is symmetric bit for bit.
double message_delay(ProcId src, ProcId dst, std::size_t size, const PlatformGraph& platform);

std::vector<double> homogeneous_speeds(std::size_t m, double speed = 1.0);
// Each processor draws uniformly from {0.8, 1.0, 1.4, 2.4}.
std::vector<double> heterogeneous_speeds(std::size_t m, std::uint64_t seed);

// Perturbations -------------------------------------------------------------

struct NoPerturbation {};

// Poisson arrivals of busy periods per processor. Durations are either fixed
// or exponential with the given mean.
struct RandomBusy {
  double rate = 0.0;  // events per second per processor
  double mean_duration = 0.0;
  bool exponential_duration = false;
};

using PerturbationModel = std::variant<NoPerturbation, RandomBusy>;

void validate(const PerturbationModel& model);

struct BusyInterval {
  double start = 0.0;
  double end = 0.0;
};

// Lazily generated busy periods for one processor. Queries must come in
// nondecreasing start order, which holds because a processor runs one job
// at a time.
class BusyTimeline {
 public:
  BusyTimeline(const PerturbationModel& model, std::uint64_t seed);

  bool active() const noexcept { return busy_.has_value(); }

  // Wall-clock duration of `work` seconds of computation begun at `start`.
  // Busy periods overlapping the run are appended to `overlaps`, clipped to
  // the part that actually delayed the computation.
  double stretch(double start, double work, std::vector<BusyInterval>* overlaps = nullptr);

 private:
  const BusyInterval& front_after(double t);

  std::optional<RandomBusy> busy_;
  std::mt19937_64 rng_;
  std::deque<BusyInterval> pending_;
  double horizon_ = 0.0;
};

double realize_execution_time(const Job& job, const Processor& proc, double start_time,
                              BusyTimeline& timeline, std::vector<BusyInterval>* overlaps = nullptr);

struct CongestionPolicy {
  // Messages are sent and received one at a time by the endpoint's CPU.
  bool serial = true;
  double overhead = 0.0;  // seconds per message, per endpoint
};

}  // namespace loadsim
