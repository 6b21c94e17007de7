#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "loadsim/engine.hpp"

namespace loadsim {

// Chunk-size rules of the factoring family ---------------------------------

struct StaticChunking {};
struct FixedSize {
  std::size_t c = 1;
};
struct Factoring {};
// Empty weights mean "proportional to the platform's configured speeds".
struct WeightedFactoring {
  std::vector<double> weights;
};
struct AdaptiveWeightedFactoring {};
struct AdaptiveFactoring {};

using ChunkPolicy = std::variant<StaticChunking, FixedSize, Factoring, WeightedFactoring,
                                 AdaptiveWeightedFactoring, AdaptiveFactoring>;

std::string chunk_policy_name(const ChunkPolicy& policy);

// Control message sizes, bytes.
inline constexpr std::size_t kRequestBytes = 64;
inline constexpr std::size_t kAssignmentBytes = 64;
inline constexpr std::size_t kBytesPerJobId = 16;
inline constexpr std::size_t kReportBytes = 128;

// Welford accumulator.
class RunningStats {
 public:
  void add(double x) noexcept;
  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  // Sample variance; zero until there are two observations.
  double variance() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct TransferDirective {
  ProcId donor = 0;
  ProcId receiver = 0;
  JobRange jobs;

  bool empty() const noexcept { return jobs.empty(); }
};

// The master's bookkeeping for one run. Chunk rules live here; the
// simulated message exchange lives in MasterSlavePolicy.
class MasterState {
 public:
  MasterState(std::size_t m, ChunkPolicy policy, std::vector<double> speeds = {});

  std::size_t size() const noexcept { return slaves_.size(); }
  const ChunkPolicy& policy() const noexcept { return policy_; }

  // Resets the loop bookkeeping. Per-iterate statistics persist per loop id.
  void begin_loop(std::size_t loop_id, std::size_t n);
  // Adaptive weighted factoring refreshes its weights here.
  void begin_step();

  std::size_t remaining() const noexcept { return remaining_; }
  std::size_t assigned() const noexcept { return assigned_; }
  std::size_t loop_size() const noexcept { return n_; }

  JobRange next_chunk(ProcId slave);
  void report_completion(ProcId slave, JobRange chunk, double elapsed);
  // Picks the slave with the latest predicted finish and asks it for half
  // of its unstarted iterates. Empty when nobody has two or more left.
  TransferDirective endgame_giveup(ProcId idle_slave);
  // Applies a give-up once the donor has acted; `moved` is the tail of the
  // donor's chunk that actually changed hands (possibly empty).
  void apply_transfer(const TransferDirective& directive, JobRange moved);

  // Progress of a slave through its outstanding chunk.
  void record_progress(ProcId slave, JobId next_unstarted);

  std::optional<JobRange> outstanding(ProcId slave) const;
  std::size_t unstarted(ProcId slave) const;
  const RunningStats& stats(ProcId slave) const;
  std::size_t chunks_served(ProcId slave) const;
  // Current weights in effect for the weighted rules (sum to one).
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  struct SlaveRecord {
    std::optional<JobRange> outstanding;
    JobId progress = 0;
    bool giving = false;
    bool awaiting_transfer = false;
    std::size_t chunks_served = 0;
  };

  void check(ProcId slave) const;
  std::size_t chunk_size(ProcId slave);
  double mean_or_fallback(ProcId slave) const;
  std::vector<double> inverse_mean_weights() const;

  ChunkPolicy policy_;
  std::vector<SlaveRecord> slaves_;
  std::vector<double> weights_;
  // stats_[loop_id][slave], accumulated over the run.
  std::vector<std::vector<RunningStats>> stats_;
  std::vector<std::vector<RunningStats>> step_stats_;
  std::size_t loop_id_ = 0;
  std::size_t n_ = 0;
  std::size_t remaining_ = 0;
  std::size_t assigned_ = 0;
  std::size_t batch_left_ = 0;
  std::size_t batch_remaining_ = 0;
  std::size_t batch_chunk_ = 0;
};

// Master-slave execution: processor 0 is the master and also computes.
// It serves queued requests before starting its next iterate.
class MasterSlavePolicy : public Policy {
 public:
  explicit MasterSlavePolicy(ChunkPolicy policy);

  std::string name() const override;
  void begin_run(Engine& engine, const TimeSteppedWorkload& workload) override;
  void begin_loop(Engine& engine) override;
  void on_message(Engine& engine, ProcId proc, const Message& msg) override;
  void on_idle(Engine& engine, ProcId proc) override;
  void on_batch_complete(Engine& engine, ProcId proc, std::span<const JobId> jobs,
                         std::span<const double> seconds) override;
  bool loop_done() const override;

  const MasterState& state() const { return *state_; }

 private:
  static constexpr ProcId kMaster = 0;

  struct Local {
    JobRange chunk;
    JobId cursor = 0;
    bool has_chunk = false;
    double started_at = 0.0;
    double finished_at = 0.0;
    bool awaiting = false;
    bool finished = false;
  };

  void take_chunk(ProcId proc, JobRange chunk);
  void serve(Engine& engine, ProcId requester);
  void serve_master(Engine& engine);
  void give_up(Engine& engine, ProcId donor, const TransferDirective& directive);
  void send(Engine& engine, ProcId src, ProcId dst, MessageKind kind, std::size_t bytes,
            JobRange jobs = {}, double value = 0.0);

  ChunkPolicy chunk_policy_;
  std::optional<MasterState> state_;
  std::vector<Local> local_;
  std::size_t loops_per_step_ = 1;
  std::size_t data_size_ = kDefaultDataSize;
};

}  // namespace loadsim
