#pragma once

#include <any>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "loadsim/platform.hpp"
#include "loadsim/trace.hpp"
#include "loadsim/workload.hpp"

namespace loadsim {

struct Message {
  MessageKind kind = MessageKind::Request;
  ProcId src = 0;
  ProcId dst = 0;
  std::size_t bytes = 0;
  std::vector<JobId> jobs;
  double value = 0.0;
  std::uint64_t tag = 0;
  std::any payload;
};

class Engine;

// A scheduling policy reacts to processor-level callbacks. It commits work
// through Engine::send / Engine::execute, and only for processors that are
// currently free (the processor passed to the callback).
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  virtual void begin_run(Engine& /*engine*/, const TimeSteppedWorkload& /*workload*/) {}
  virtual void begin_loop(Engine& engine) = 0;
  virtual void on_message(Engine& engine, ProcId proc, const Message& msg) = 0;
  virtual void on_idle(Engine& engine, ProcId proc) = 0;
  virtual void on_batch_complete(Engine& /*engine*/, ProcId /*proc*/, std::span<const JobId> /*jobs*/,
                                 std::span<const double> /*seconds*/) {}
  virtual bool loop_done() const = 0;
  virtual void end_loop(Engine& /*engine*/) {}
};

struct RunOptions {
  bool record_events = false;
};

struct RunResult {
  RunMetrics metrics;
  Trace trace;
};

// Single-threaded virtual-time engine. Events are ordered by (time,
// insertion sequence); a run is a pure function of its inputs.
class Engine {
 public:
  Engine(const PlatformGraph& platform, CongestionPolicy congestion,
         const PerturbationModel& perturbation, std::uint64_t seed, RunOptions options = {});

  RunResult run(const TimeSteppedWorkload& workload, Policy& policy);
  // A single round with no jobs, for communication-only protocols.
  RunResult run_exchange(Policy& policy);

  double now() const noexcept { return now_; }
  std::size_t size() const noexcept { return procs_.size(); }
  const PlatformGraph& platform() const noexcept { return platform_; }
  const CongestionPolicy& congestion() const noexcept { return congestion_; }
  std::size_t step() const noexcept { return step_; }
  std::size_t loop_index() const noexcept { return loop_; }
  std::size_t loop_size() const noexcept { return jobs_.size(); }
  std::size_t job_data_size() const noexcept { return data_size_; }
  bool busy(ProcId proc) const;

  // Commits a message on src's timeline. With serial congestion the sender's
  // CPU spends `overhead` per message; the receiver spends the same before
  // the policy sees it.
  void send(Message msg);
  // Commits the jobs back to back on proc's timeline.
  void execute(ProcId proc, std::span<const JobId> jobs);
  // Re-runs a job already owned elsewhere; timed like a job but not counted
  // as an execution of it.
  void execute_replica(ProcId proc, JobId job);

  // Conservation ledger, accumulated in the same order as the trace.
  double realized_work() const;

 private:
  enum class Kind : std::uint8_t { Arrive, Deliver, BatchDone, CpuFree, Wake, PerturbStart, PerturbEnd };

  struct Queued {
    double time;
    std::uint64_t seq;
    Kind kind;
    ProcId proc;
    std::uint32_t slot;
  };
  struct Later {
    bool operator()(const Queued& a, const Queued& b) const noexcept {
      if (a.time != b.time) return a.time > b.time;
      return a.seq > b.seq;
    }
  };

  struct Batch {
    std::vector<JobId> jobs;
    std::vector<double> seconds;
    bool replica = false;
  };

  struct ProcState {
    double ready_at = 0.0;
    double free_event_at = -1.0;
    bool handling = false;
    std::deque<std::uint32_t> inbox;
    double realized = 0.0;
    std::size_t executed = 0;
  };

  void push(double time, Kind kind, ProcId proc, std::uint32_t slot = 0);
  std::uint32_t store(Message msg);
  Message take_message(std::uint32_t slot);
  std::uint32_t store(Batch batch);
  Batch take_batch(std::uint32_t slot);

  void require_free(ProcId proc, const char* what) const;
  void commit_batch(ProcId proc, std::span<const JobId> jobs, bool replica);
  void begin_handle(ProcId proc);
  void dispatch(ProcId proc);
  void process(const Queued& ev);
  void run_loop(Policy& policy);

  const PlatformGraph& platform_;
  CongestionPolicy congestion_;
  RunOptions options_;
  Policy* policy_ = nullptr;

  double now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Queued, std::vector<Queued>, Later> queue_;
  std::vector<ProcState> procs_;
  std::vector<BusyTimeline> timelines_;
  std::vector<Message> messages_;
  std::vector<std::uint32_t> free_messages_;
  std::vector<Batch> batches_;
  std::vector<std::uint32_t> free_batches_;
  std::vector<BusyInterval> overlaps_;

  std::size_t step_ = 0;
  std::size_t loop_ = 0;
  std::size_t data_size_ = kDefaultDataSize;
  std::vector<Job> jobs_;
  std::vector<std::uint8_t> executed_;
  std::size_t jobs_executed_ = 0;
  std::size_t jobs_expected_ = 0;
  Trace trace_;
};

RunResult simulate(const TimeSteppedWorkload& workload, const PlatformGraph& platform, Policy& policy,
                   CongestionPolicy congestion, const PerturbationModel& perturbation,
                   std::uint64_t seed, RunOptions options = {});

}  // namespace loadsim
