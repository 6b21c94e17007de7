#include "loadsim/engine.hpp"

#include <algorithm>

#include "loadsim/error.hpp"
#include "loadsim/rng.hpp"

namespace loadsim {

Engine::Engine(const PlatformGraph& platform, CongestionPolicy congestion,
               const PerturbationModel& perturbation, std::uint64_t seed, RunOptions options)
    : platform_(platform),
      congestion_(congestion),
      options_(options),
      procs_(platform.size()),
      trace_(platform.size(), options.record_events) {
  if (!(congestion_.overhead >= 0.0)) throw PlatformError("message overhead must be >= 0");
  timelines_.reserve(platform.size());
  for (std::size_t p = 0; p < platform.size(); ++p) {
    timelines_.emplace_back(perturbation, substream_seed(seed, p, "perturbation"));
  }
}

bool Engine::busy(ProcId proc) const {
  const ProcState& ps = procs_.at(proc);
  return ps.handling || ps.ready_at > now_;
}

void Engine::push(double time, Kind kind, ProcId proc, std::uint32_t slot) {
  queue_.push(Queued{time, next_seq_++, kind, proc, slot});
}

std::uint32_t Engine::store(Message msg) {
  if (!free_messages_.empty()) {
    const std::uint32_t slot = free_messages_.back();
    free_messages_.pop_back();
    messages_[slot] = std::move(msg);
    return slot;
  }
  messages_.push_back(std::move(msg));
  return static_cast<std::uint32_t>(messages_.size() - 1);
}

Message Engine::take_message(std::uint32_t slot) {
  Message msg = std::move(messages_[slot]);
  free_messages_.push_back(slot);
  return msg;
}

std::uint32_t Engine::store(Batch batch) {
  if (!free_batches_.empty()) {
    const std::uint32_t slot = free_batches_.back();
    free_batches_.pop_back();
    batches_[slot] = std::move(batch);
    return slot;
  }
  batches_.push_back(std::move(batch));
  return static_cast<std::uint32_t>(batches_.size() - 1);
}

Engine::Batch Engine::take_batch(std::uint32_t slot) {
  Batch batch = std::move(batches_[slot]);
  free_batches_.push_back(slot);
  return batch;
}

void Engine::require_free(ProcId proc, const char* what) const {
  if (proc >= procs_.size()) throw IntegrityError(std::string(what) + ": unknown processor");
  if (procs_[proc].handling) {
    throw IntegrityError(std::string(what) + ": processor is mid-receive");
  }
}

void Engine::send(Message msg) {
  require_free(msg.src, "send");
  if (msg.dst >= procs_.size()) throw IntegrityError("send: unknown destination");
  ProcState& ps = procs_[msg.src];
  const double start = std::max(now_, ps.ready_at);
  double arrival = start;
  if (msg.src != msg.dst) {
    const double overhead = congestion_.overhead;
    double depart = start;
    if (congestion_.serial && overhead > 0.0) {
      trace_.record_interval(msg.src, start, start + overhead, IntervalKind::Communicate, overhead);
      ps.ready_at = start + overhead;
      depart = ps.ready_at;
    }
    arrival = depart + message_delay(msg.src, msg.dst, msg.bytes, platform_);
    if (!congestion_.serial) arrival += 2.0 * overhead;
    trace_.account_send(msg.src, msg.bytes);
  }
  const ProcId dst = msg.dst;
  push(arrival, Kind::Arrive, dst, store(std::move(msg)));
}

void Engine::execute(ProcId proc, std::span<const JobId> jobs) { commit_batch(proc, jobs, false); }

void Engine::execute_replica(ProcId proc, JobId job) {
  const JobId one[] = {job};
  commit_batch(proc, one, true);
}

void Engine::commit_batch(ProcId proc, std::span<const JobId> jobs, bool replica) {
  require_free(proc, "execute");
  if (jobs.empty()) return;
  ProcState& ps = procs_[proc];
  const Processor& cpu = platform_.processor(proc);
  BusyTimeline& timeline = timelines_[proc];
  const bool log_perturbations = options_.record_events && timeline.active();

  Batch batch;
  batch.replica = replica;
  batch.jobs.assign(jobs.begin(), jobs.end());
  batch.seconds.reserve(jobs.size());
  double t = std::max(now_, ps.ready_at);
  for (JobId id : jobs) {
    if (id >= jobs_.size()) {
      throw IntegrityError("job " + std::to_string(id) + " does not exist in loop " +
                           std::to_string(loop_));
    }
    if (!replica) {
      if (executed_[id]) {
        throw IntegrityError("job " + std::to_string(id) + " of loop " + std::to_string(loop_) +
                             " assigned twice");
      }
      executed_[id] = 1;
      ++jobs_executed_;
      ++ps.executed;
    }
    overlaps_.clear();
    const double seconds =
        realize_execution_time(jobs_[id], cpu, t, timeline, log_perturbations ? &overlaps_ : nullptr);
    trace_.record_interval(proc, t, t + seconds, IntervalKind::Compute, seconds, replica);
    ps.realized += seconds;
    for (const BusyInterval& iv : overlaps_) {
      push(iv.start, Kind::PerturbStart, proc);
      push(iv.end, Kind::PerturbEnd, proc);
    }
    batch.seconds.push_back(seconds);
    t += seconds;
  }
  ps.ready_at = t;
  ps.free_event_at = t;  // BatchDone doubles as the CPU-free notification
  push(t, Kind::BatchDone, proc, store(std::move(batch)));
}

void Engine::begin_handle(ProcId proc) {
  ProcState& ps = procs_[proc];
  const std::uint32_t slot = ps.inbox.front();
  ps.inbox.pop_front();
  const bool local = messages_[slot].src == proc;
  const double cost = (congestion_.serial && !local) ? congestion_.overhead : 0.0;
  if (cost > 0.0) {
    trace_.record_interval(proc, now_, now_ + cost, IntervalKind::Communicate, cost);
  }
  ps.handling = true;
  ps.ready_at = now_ + cost;
  push(now_ + cost, Kind::Deliver, proc, slot);
}

void Engine::dispatch(ProcId proc) {
  ProcState& ps = procs_[proc];
  if (ps.handling) return;
  auto schedule_free = [&] {
    if (ps.free_event_at != ps.ready_at) {
      ps.free_event_at = ps.ready_at;
      push(ps.ready_at, Kind::CpuFree, proc);
    }
  };
  if (ps.ready_at > now_) {
    schedule_free();
    return;
  }
  if (!ps.inbox.empty()) {
    begin_handle(proc);
    return;
  }
  policy_->on_idle(*this, proc);
  if (ps.ready_at > now_) {
    schedule_free();
  } else if (!ps.inbox.empty()) {
    begin_handle(proc);
  }
}

void Engine::process(const Queued& ev) {
  ProcState& ps = procs_[ev.proc];
  switch (ev.kind) {
    case Kind::Arrive:
      ps.inbox.push_back(ev.slot);
      if (!busy(ev.proc)) begin_handle(ev.proc);
      break;
    case Kind::Deliver: {
      ps.handling = false;
      Message msg = take_message(ev.slot);
      if (msg.src != ev.proc) trace_.account_delivery(ev.proc);
      if (trace_.recording()) {
        EventRecord rec;
        rec.time = now_;
        rec.sequence = ev.seq;
        rec.kind = EventKind::MessageDelivered;
        rec.proc = ev.proc;
        rec.peer = msg.src;
        rec.step = static_cast<std::uint32_t>(step_);
        rec.loop = static_cast<std::uint32_t>(loop_);
        rec.message = msg.kind;
        rec.bytes = msg.bytes;
        rec.jobs = msg.jobs;
        trace_.log(std::move(rec));
      }
      policy_->on_message(*this, ev.proc, msg);
      dispatch(ev.proc);
      break;
    }
    case Kind::BatchDone: {
      Batch batch = take_batch(ev.slot);
      if (trace_.recording()) {
        EventRecord rec;
        rec.time = now_;
        rec.sequence = ev.seq;
        rec.kind = EventKind::JobBatchComplete;
        rec.proc = ev.proc;
        rec.step = static_cast<std::uint32_t>(step_);
        rec.loop = static_cast<std::uint32_t>(loop_);
        rec.replica = batch.replica;
        rec.jobs = batch.jobs;
        trace_.log(std::move(rec));
      }
      policy_->on_batch_complete(*this, ev.proc, batch.jobs, batch.seconds);
      if (ps.free_event_at == now_ && ps.ready_at == now_) {
        ps.free_event_at = -1.0;
        dispatch(ev.proc);
      }
      break;
    }
    case Kind::CpuFree:
      if (ps.free_event_at == now_) ps.free_event_at = -1.0;
      dispatch(ev.proc);
      break;
    case Kind::Wake:
      dispatch(ev.proc);
      break;
    case Kind::PerturbStart:
    case Kind::PerturbEnd: {
      EventRecord rec;
      rec.time = now_;
      rec.sequence = ev.seq;
      rec.kind = ev.kind == Kind::PerturbStart ? EventKind::PerturbationStart : EventKind::PerturbationEnd;
      rec.proc = ev.proc;
      trace_.log(std::move(rec));
      break;
    }
  }
}

void Engine::run_loop(Policy& policy) {
  policy.begin_loop(*this);
  for (ProcId p = 0; p < procs_.size(); ++p) push(now_, Kind::Wake, p);
  while (!queue_.empty()) {
    const Queued ev = queue_.top();
    queue_.pop();
    if (ev.time < now_) throw IntegrityError("event queue went back in time");
    now_ = ev.time;
    process(ev);
  }
}

RunResult Engine::run(const TimeSteppedWorkload& workload, Policy& policy) {
  if (policy_ != nullptr) throw IntegrityError("an Engine instance runs exactly once");
  policy_ = &policy;
  data_size_ = workload.data_size();
  jobs_expected_ = workload.total_jobs();
  policy.begin_run(*this, workload);

  double t = 0.0;
  for (std::size_t step = 0; step < workload.num_steps(); ++step) {
    step_ = step;
    now_ = t;
    if (trace_.recording()) {
      EventRecord rec;
      rec.time = t;
      rec.sequence = next_seq_++;
      rec.kind = EventKind::StepBoundary;
      rec.step = static_cast<std::uint32_t>(step);
      trace_.log(std::move(rec));
    }
    // Sequential s0/s1 portion: processor 0 works, everyone else waits.
    if (workload.sequential_overhead() > 0.0) {
      const double seq = workload.sequential_overhead();
      trace_.record_interval(0, t, t + seq, IntervalKind::Sequential, seq);
      t += seq;
    }
    for (std::size_t loop = 0; loop < workload.loops().size(); ++loop) {
      loop_ = loop;
      jobs_ = workload.jobs(step, loop);
      executed_.assign(jobs_.size(), 0);
      now_ = t;
      for (ProcState& ps : procs_) {
        ps.ready_at = std::max(ps.ready_at, t);
        ps.free_event_at = -1.0;
      }
      run_loop(policy);
      if (!policy.loop_done()) {
        throw IntegrityError(policy.name() + " stalled in step " + std::to_string(step) + ", loop " +
                             std::to_string(loop));
      }
      for (std::size_t i = 0; i < executed_.size(); ++i) {
        if (!executed_[i]) {
          throw IntegrityError("job " + std::to_string(i) + " of step " + std::to_string(step) +
                               ", loop " + std::to_string(loop) + " never executed");
        }
      }
      double end = now_;
      for (const ProcState& ps : procs_) end = std::max(end, ps.ready_at);
      t = end;
      policy.end_loop(*this);
    }
  }

  trace_.finalize(t);
  RunResult result;
  result.metrics = collect_metrics(trace_, t);
  result.metrics.realized_work = realized_work();
  result.metrics.jobs_executed = jobs_executed_;
  result.metrics.jobs_expected = jobs_expected_;
  result.trace = std::move(trace_);
  return result;
}

RunResult Engine::run_exchange(Policy& policy) {
  if (policy_ != nullptr) throw IntegrityError("an Engine instance runs exactly once");
  policy_ = &policy;
  jobs_.clear();
  executed_.clear();
  run_loop(policy);
  if (!policy.loop_done()) throw IntegrityError(policy.name() + " stalled");
  double end = now_;
  for (const ProcState& ps : procs_) end = std::max(end, ps.ready_at);
  trace_.finalize(end);
  RunResult result;
  result.metrics = collect_metrics(trace_, end);
  result.trace = std::move(trace_);
  return result;
}

double Engine::realized_work() const {
  double total = 0.0;
  for (const ProcState& ps : procs_) total += ps.realized;
  return total;
}

RunResult simulate(const TimeSteppedWorkload& workload, const PlatformGraph& platform, Policy& policy,
                   CongestionPolicy congestion, const PerturbationModel& perturbation,
                   std::uint64_t seed, RunOptions options) {
  Engine engine(platform, congestion, perturbation, seed, options);
  return engine.run(workload, policy);
}

}  // namespace loadsim
