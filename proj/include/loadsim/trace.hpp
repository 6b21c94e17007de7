#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "loadsim/platform.hpp"
#include "loadsim/workload.hpp"

namespace loadsim {

enum class IntervalKind : std::uint8_t { Compute, Communicate, Sequential, Idle };

std::string_view to_string(IntervalKind kind);

struct Interval {
  double start = 0.0;
  double end = 0.0;
  // Seconds credited to the interval. For compute this is the realized job
  // time exactly as handed out by the engine, not end - start.
  double seconds = 0.0;
  IntervalKind kind = IntervalKind::Idle;
  bool replica = false;
};

enum class MessageKind : std::uint8_t {
  Request,
  Assignment,
  Report,
  Directive,
  Transfer,
  Done,
  Scatter,
  Share,
  Ratio,
};

std::string_view to_string(MessageKind kind);

enum class EventKind : std::uint8_t {
  JobBatchComplete,
  MessageDelivered,
  PerturbationStart,
  PerturbationEnd,
  StepBoundary,
};

std::string_view to_string(EventKind kind);

struct EventRecord {
  double time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::StepBoundary;
  ProcId proc = 0;
  ProcId peer = 0;
  std::uint32_t step = 0;
  std::uint32_t loop = 0;
  MessageKind message = MessageKind::Request;
  std::size_t bytes = 0;
  bool replica = false;
  std::vector<JobId> jobs;
};

class Trace {
 public:
  Trace() = default;
  Trace(std::size_t num_procs, bool record_events);

  std::size_t size() const noexcept { return intervals_.size(); }
  bool recording() const noexcept { return record_events_; }

  // Appends a busy interval. Intervals on one processor must arrive in time
  // order without overlap; anything else is an integrity error.
  void record_interval(ProcId proc, double start, double end, IntervalKind kind,
                       double seconds, bool replica = false);
  void account_send(ProcId src, std::size_t bytes);
  void account_delivery(ProcId dst);
  void log(EventRecord record);

  // Fills the gaps with idle intervals so each processor tiles [0, makespan].
  void finalize(double makespan);

  std::span<const Interval> intervals(ProcId proc) const { return intervals_.at(proc); }
  std::span<const EventRecord> events() const noexcept { return events_; }
  std::size_t inbound(ProcId proc) const { return inbound_.at(proc); }
  std::size_t outbound(ProcId proc) const { return outbound_.at(proc); }
  std::size_t total_messages() const noexcept { return total_messages_; }
  std::size_t total_bytes() const noexcept { return total_bytes_; }

  double seconds(ProcId proc, IntervalKind kind) const;

  // One JSON object per line, in processing order.
  void write_jsonl(std::ostream& out) const;

 private:
  bool record_events_ = false;
  std::vector<std::vector<Interval>> intervals_;
  std::vector<std::size_t> inbound_;
  std::vector<std::size_t> outbound_;
  std::size_t total_messages_ = 0;
  std::size_t total_bytes_ = 0;
  std::vector<EventRecord> events_;
};

struct RunMetrics {
  std::size_t m = 0;
  double makespan = 0.0;  // T_P
  double cost = 0.0;      // C_P = m * T_P
  std::vector<double> idle;
  std::vector<std::size_t> inbound;
  std::size_t max_inbound = 0;
  ProcId max_inbound_proc = 0;
  std::size_t total_messages = 0;
  std::size_t total_bytes = 0;
  // Conservation ledger; see Engine.
  double busy_compute = 0.0;
  double realized_work = 0.0;
  std::size_t jobs_executed = 0;
  std::size_t jobs_expected = 0;

  double idle_fraction() const;
  double median_inbound() const;
};

RunMetrics collect_metrics(const Trace& trace, double makespan);

}  // namespace loadsim
