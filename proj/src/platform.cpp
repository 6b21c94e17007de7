#include "loadsim/platform.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "loadsim/error.hpp"
#include "loadsim/rng.hpp"

namespace loadsim {

PlatformGraph::PlatformGraph(std::vector<double> speeds, std::size_t num_vertices,
                             std::vector<Link> links, Topology topology)
    : links_(std::move(links)), topology_(topology) {
  if (speeds.empty()) throw PlatformError("platform needs at least one processor");
  if (num_vertices < speeds.size()) throw PlatformError("fewer vertices than processors");
  processors_.reserve(speeds.size());
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (!(speeds[i] > 0.0)) throw PlatformError("processor speeds must be positive");
    processors_.push_back(Processor{static_cast<ProcId>(i), speeds[i]});
  }
  adjacency_.resize(num_vertices);
  for (std::size_t k = 0; k < links_.size(); ++k) {
    const Link& link = links_[k];
    if (link.u >= num_vertices || link.v >= num_vertices || link.u == link.v) {
      throw PlatformError("link endpoints must be two distinct existing vertices");
    }
    if (!(link.alpha >= 0.0) || !(link.beta >= 0.0)) {
      throw PlatformError("link latency and inverse bandwidth must be >= 0");
    }
    adjacency_[link.u].emplace_back(link.v, k);
    adjacency_[link.v].emplace_back(link.u, k);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

  std::vector<char> seen(num_vertices, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& [w, link] : adjacency_[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != num_vertices) throw PlatformError("platform graph is disconnected");

  const std::size_t m = processors_.size();
  routes_.resize(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) routes_[a * m + b] = route(a, b);
  }
}

PlatformGraph PlatformGraph::fully_connected(std::vector<double> speeds, double alpha, double beta) {
  const std::size_t m = speeds.size();
  std::vector<Link> links;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) links.push_back(Link{a, b, alpha, beta});
  }
  return PlatformGraph(std::move(speeds), m, std::move(links), Topology::FullyConnected);
}

PlatformGraph PlatformGraph::switched_star(std::vector<double> speeds, double alpha, double beta) {
  const std::size_t m = speeds.size();
  std::vector<Link> links;
  for (std::size_t a = 0; a < m; ++a) links.push_back(Link{a, m, alpha, beta});
  return PlatformGraph(std::move(speeds), m + 1, std::move(links), Topology::SwitchedStar);
}

PlatformGraph PlatformGraph::ring(std::vector<double> speeds, double alpha, double beta) {
  const std::size_t m = speeds.size();
  std::vector<Link> links;
  if (m == 2) links.push_back(Link{0, 1, alpha, beta});
  if (m > 2) {
    for (std::size_t a = 0; a < m; ++a) links.push_back(Link{a, (a + 1) % m, alpha, beta});
  }
  return PlatformGraph(std::move(speeds), m, std::move(links), Topology::Explicit);
}

const Processor& PlatformGraph::processor(ProcId id) const {
  if (id >= processors_.size()) throw PlatformError("no processor with id " + std::to_string(id));
  return processors_[id];
}

std::vector<std::size_t> PlatformGraph::route(std::size_t src, std::size_t dst) const {
  const std::size_t n = adjacency_.size();
  if (src >= n || dst >= n) throw PlatformError("route endpoint out of range");
  if (src == dst) return {};

  // Hop distance to dst, then walk greedily from src choosing the
  // lowest-id neighbour one hop closer.
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> dist(n, kUnreached);
  std::queue<std::size_t> frontier;
  dist[dst] = 0;
  frontier.push(dst);
  while (!frontier.empty()) {
    const std::size_t v = frontier.front();
    frontier.pop();
    for (const auto& [w, link] : adjacency_[v]) {
      if (dist[w] == kUnreached) {
        dist[w] = dist[v] + 1;
        frontier.push(w);
      }
    }
  }
  if (dist[src] == kUnreached) {
    throw PlatformError("vertices " + std::to_string(src) + " and " + std::to_string(dst) +
                        " are disconnected");
  }
  std::vector<std::size_t> path;
  path.reserve(dist[src]);
  std::size_t at = src;
  while (at != dst) {
    for (const auto& [w, link] : adjacency_[at]) {
      if (dist[w] + 1 == dist[at]) {
        path.push_back(link);
        at = w;
        break;
      }
    }
  }
  return path;
}

const std::vector<std::size_t>& PlatformGraph::canonical_route(ProcId a, ProcId b) const {
  const std::size_t m = processors_.size();
  if (a >= m || b >= m) throw PlatformError("processor id out of range");
  if (a > b) std::swap(a, b);
  return routes_[a * m + b];
}

std::vector<std::size_t> shortest_hop_path(ProcId src, ProcId dst, const PlatformGraph& platform) {
  if (src >= platform.size() || dst >= platform.size()) {
    throw PlatformError("processor id out of range");
  }
  return platform.route(src, dst);
}

double message_delay(ProcId src, ProcId dst, std::size_t size, const PlatformGraph& platform) {
  if (src == dst) {
    if (src >= platform.size()) throw PlatformError("processor id out of range");
    return 0.0;
  }
  double delay = 0.0;
  const auto links = platform.links();
  for (std::size_t k : platform.canonical_route(src, dst)) {
    delay += links[k].alpha + static_cast<double>(size) * links[k].beta;
  }
  return delay;
}

std::vector<double> homogeneous_speeds(std::size_t m, double speed) {
  return std::vector<double>(m, speed);
}

std::vector<double> heterogeneous_speeds(std::size_t m, std::uint64_t seed) {
  constexpr double kGrid[] = {0.8, 1.0, 1.4, 2.4};
  std::vector<double> speeds(m);
  for (std::size_t i = 0; i < m; ++i) {
    speeds[i] = kGrid[mix64(substream_seed(seed, i, "speed")) % 4];
  }
  return speeds;
}

void validate(const PerturbationModel& model) {
  if (const auto* busy = std::get_if<RandomBusy>(&model)) {
    if (!(busy->rate >= 0.0)) throw PlatformError("perturbation rate must be >= 0");
    if (!(busy->mean_duration > 0.0)) throw PlatformError("busy durations must be positive");
  }
}

BusyTimeline::BusyTimeline(const PerturbationModel& model, std::uint64_t seed) : rng_(seed) {
  validate(model);
  if (const auto* busy = std::get_if<RandomBusy>(&model); busy && busy->rate > 0.0) {
    busy_ = *busy;
  }
}

const BusyInterval& BusyTimeline::front_after(double t) {
  while (!pending_.empty() && pending_.front().end <= t) pending_.pop_front();
  while (pending_.empty()) {
    std::exponential_distribution<double> gap(busy_->rate);
    double duration = busy_->mean_duration;
    const double start = horizon_ + gap(rng_);
    if (busy_->exponential_duration) {
      duration = std::exponential_distribution<double>(1.0 / busy_->mean_duration)(rng_);
    }
    horizon_ = start + duration;
    if (horizon_ > t) pending_.push_back(BusyInterval{start, horizon_});
  }
  return pending_.front();
}

double BusyTimeline::stretch(double start, double work, std::vector<BusyInterval>* overlaps) {
  if (!busy_) return work;
  double t = start;
  double remaining = work;
  double delayed = 0.0;
  for (;;) {
    const BusyInterval iv = front_after(t);
    if (iv.start >= t + remaining) break;
    if (iv.start > t) {
      remaining -= iv.start - t;
      t = iv.start;
    }
    delayed += iv.end - t;
    if (overlaps) overlaps->push_back(BusyInterval{t, iv.end});
    t = iv.end;
    pending_.pop_front();
  }
  return work + delayed;
}

double realize_execution_time(const Job& job, const Processor& proc, double start_time,
                              BusyTimeline& timeline, std::vector<BusyInterval>* overlaps) {
  return timeline.stretch(start_time, job.base_cost / proc.speed, overlaps);
}

}  // namespace loadsim
