#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "loadsim/binpack.hpp"
#include "loadsim/engine.hpp"

namespace loadsim {

// Building blocks -----------------------------------------------------------

// Agent k owns [k*ceil(n/m), min((k+1)*ceil(n/m), n)); trailing blocks may be empty.
std::vector<JobRange> initial_partition(std::size_t n, std::size_t m);

// s offsets at stride floor(size/s), starting at 0. s is clamped to
// [1, size]; an empty block yields no offsets.
std::vector<std::size_t> select_sample_offsets(std::size_t block_size, std::size_t s);
std::vector<JobId> select_sample_indices(JobRange block, std::size_t s);

// max(3, ceil(size/20)), never more than the block holds.
std::size_t default_sample_size(std::size_t block_size);

struct FitMethod {
  enum class Kind { Linear, PolyLS };
  Kind kind = Kind::Linear;
  int degree = 2;  // PolyLS only

  std::string to_string() const;
  friend bool operator==(const FitMethod&, const FitMethod&) = default;
};

// "linear" or "poly:k".
FitMethod parse_fit_method(const std::string& text);

struct Sample {
  double index = 0.0;
  double seconds = 0.0;
};

inline constexpr double kPredictionFloor = 1e-9;

class CostProfile {
 public:
  double predict(double index) const;
  FitMethod method() const noexcept { return method_; }

 private:
  friend CostProfile fit_cost_profile(std::span<const Sample> samples, FitMethod method);

  FitMethod method_;
  std::vector<Sample> knots_;        // Linear: sorted by index
  std::vector<double> coefficients_;  // PolyLS: in the scaled variable
  double center_ = 0.0;
  double scale_ = 1.0;
};

// Linear: piecewise-linear through the samples, flat beyond the ends.
// PolyLS: least squares; the degree must be below the sample count.
CostProfile fit_cost_profile(std::span<const Sample> samples, FitMethod method);

// speed_k = t_ref,0 / t_ref,k. Every agent must have reported.
std::vector<double> normalize_speeds(std::span<const std::optional<double>> reference_times);

// Control message sizes for the agent protocol, bytes.
inline constexpr std::size_t kShareHeaderBytes = 64;
inline constexpr std::size_t kBytesPerPrediction = 8;
inline constexpr std::size_t kTransferHeaderBytes = 64;

struct ShareOutcome {
  // views[agent][source]: what `agent` holds from `source` afterwards.
  std::vector<std::vector<std::vector<double>>> views;
  // Time at which each agent held the complete view.
  std::vector<double> elapsed;
  std::size_t messages = 0;
  std::vector<std::size_t> inbound;
  std::vector<std::size_t> outbound;
};

// Every agent sends its payload to every other agent over the platform.
ShareOutcome all_to_all_share(const std::vector<std::vector<double>>& payloads,
                              const PlatformGraph& platform, CongestionPolicy congestion);

// Predicted cost of every job in unit-speed seconds, plus its current owner.
struct GlobalView {
  std::vector<double> weights;
  std::vector<ProcId> owner;

  friend bool operator==(const GlobalView&, const GlobalView&) = default;
};

struct JobTransfer {
  JobId job = 0;
  ProcId from = 0;
  ProcId to = 0;

  friend bool operator==(const JobTransfer&, const JobTransfer&) = default;
};

struct Reallocation {
  Assignment assignment;  // bin_of indexed by job id
  std::vector<JobTransfer> transfers;

  friend bool operator==(const Reallocation&, const Reallocation&) = default;
};

// Packs the jobs onto agents with LPT. Executed jobs stay pinned where they
// ran. Bins with identical speeds are relabelled to keep as many jobs as
// possible in place, and the current placement is kept outright when the
// packing does not predict a shorter makespan.
Reallocation global_reallocate(const GlobalView& view, std::span<const double> speeds,
                               std::span<const std::uint8_t> executed);

// The protocol ------------------------------------------------------------

enum class RoundPhase { InitialPartition, Sampling, ResultShare, Normalize, Reallocate, Execute };
std::string to_string(RoundPhase phase);

struct MultiagentConfig {
  std::size_t sample_size = 0;  // 0: default_sample_size
  FitMethod fit;
  std::size_t resample_period = 10;
  // Between samplings, share each agent's observed actual/predicted ratio
  // and re-pack with the corrected speeds.
  bool rescale = false;
};

struct RoundRecord {
  std::size_t step = 0;
  std::size_t loop = 0;
  std::vector<RoundPhase> phases;
  std::size_t transfers = 0;
  double predicted_makespan = 0.0;
};

// One protocol round per parallel loop instance. Agents talk only to each
// other; there is no coordinator.
class MultiagentPolicy : public Policy {
 public:
  explicit MultiagentPolicy(MultiagentConfig config = {});

  std::string name() const override { return "multiagent"; }
  void begin_run(Engine& engine, const TimeSteppedWorkload& workload) override;
  void begin_loop(Engine& engine) override;
  void on_message(Engine& engine, ProcId proc, const Message& msg) override;
  void on_idle(Engine& engine, ProcId proc) override;
  void on_batch_complete(Engine& engine, ProcId proc, std::span<const JobId> jobs,
                         std::span<const double> seconds) override;
  bool loop_done() const override;
  void end_loop(Engine& engine) override;

  const MultiagentConfig& config() const noexcept { return config_; }
  const std::vector<RoundRecord>& rounds() const noexcept { return rounds_; }
  std::size_t agreement_checks() const noexcept { return agreement_checks_; }
  // Global view as held by agent 0 after the latest reallocation of a loop.
  const GlobalView& view(std::size_t loop) const { return loops_.at(loop).view; }
  const std::vector<double>& speed_table(std::size_t loop) const { return loops_.at(loop).speeds; }

 private:
  struct SharePayload;
  enum class Stage { WaitScatter, Start, Sampling, WaitShares, Executing, Done };

  struct Agent {
    Stage stage = Stage::Start;
    std::vector<JobId> owned;
    std::vector<JobId> samples;
    std::vector<double> sample_seconds;
    std::optional<double> reference_seconds;
    std::size_t batches_in_flight = 0;
    std::vector<std::shared_ptr<const SharePayload>> received;
    std::size_t received_count = 0;
    std::ptrdiff_t transfers_pending = 0;  // may dip below zero before the decision
    std::vector<JobId> queue;
    std::shared_ptr<const Reallocation> decision;
    std::shared_ptr<const std::vector<double>> weights;
    std::vector<double> speeds;
    double actual = 0.0;
    double predicted = 0.0;
  };

  struct LoopState {
    bool initialized = false;
    GlobalView view;
    std::vector<double> speeds;
    std::vector<std::shared_ptr<const Reallocation>> decisions;
    std::vector<double> ratio;  // last observed actual/predicted per agent
  };

  void start(Engine& engine, ProcId proc);
  void finish_sampling(Engine& engine, ProcId proc);
  void broadcast(Engine& engine, ProcId proc, std::shared_ptr<const SharePayload> payload,
                 MessageKind kind);
  void reallocate(Engine& engine, ProcId proc);
  void enter_execute(Engine& engine, ProcId proc, const Reallocation& decision);
  JobId reference_job() const;

  MultiagentConfig config_;
  std::size_t m_ = 0;
  std::size_t data_size_ = kDefaultDataSize;
  std::vector<LoopState> loops_;
  std::vector<Agent> agents_;
  LoopState* current_ = nullptr;
  std::size_t n_ = 0;
  bool sampling_ = false;
  bool exchange_ = false;
  RoundRecord round_;
  std::vector<RoundRecord> rounds_;
  std::size_t agreement_checks_ = 0;
};

}  // namespace loadsim
