#include "loadsim/trace.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>

#include "loadsim/error.hpp"

namespace loadsim {

std::string_view to_string(IntervalKind kind) {
  switch (kind) {
    case IntervalKind::Compute: return "compute";
    case IntervalKind::Communicate: return "communicate";
    case IntervalKind::Sequential: return "sequential";
    case IntervalKind::Idle: return "idle";
  }
  return "?";
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Request: return "request";
    case MessageKind::Assignment: return "assignment";
    case MessageKind::Report: return "report";
    case MessageKind::Directive: return "directive";
    case MessageKind::Transfer: return "transfer";
    case MessageKind::Done: return "done";
    case MessageKind::Scatter: return "scatter";
    case MessageKind::Share: return "share";
    case MessageKind::Ratio: return "ratio";
  }
  return "?";
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::JobBatchComplete: return "JobBatchComplete";
    case EventKind::MessageDelivered: return "MessageDelivered";
    case EventKind::PerturbationStart: return "PerturbationStart";
    case EventKind::PerturbationEnd: return "PerturbationEnd";
    case EventKind::StepBoundary: return "StepBoundary";
  }
  return "?";
}

Trace::Trace(std::size_t num_procs, bool record_events)
    : record_events_(record_events),
      intervals_(num_procs),
      inbound_(num_procs, 0),
      outbound_(num_procs, 0) {}

void Trace::record_interval(ProcId proc, double start, double end, IntervalKind kind,
                            double seconds, bool replica) {
  if (proc >= intervals_.size()) throw IntegrityError("interval for unknown processor");
  if (!(end >= start)) throw IntegrityError("interval ends before it starts");
  auto& list = intervals_[proc];
  if (!list.empty() && start < list.back().end) {
    throw IntegrityError("overlapping busy intervals on processor " + std::to_string(proc));
  }
  list.push_back(Interval{start, end, seconds, kind, replica});
}

void Trace::account_send(ProcId src, std::size_t bytes) {
  ++outbound_.at(src);
  ++total_messages_;
  total_bytes_ += bytes;
}

void Trace::account_delivery(ProcId dst) { ++inbound_.at(dst); }

void Trace::log(EventRecord record) {
  if (record_events_) events_.push_back(std::move(record));
}

void Trace::finalize(double makespan) {
  for (std::size_t p = 0; p < intervals_.size(); ++p) {
    auto& list = intervals_[p];
    std::vector<Interval> tiled;
    tiled.reserve(list.size() * 2 + 1);
    double cursor = 0.0;
    for (const Interval& iv : list) {
      if (iv.start > cursor) {
        tiled.push_back(Interval{cursor, iv.start, iv.start - cursor, IntervalKind::Idle, false});
      }
      tiled.push_back(iv);
      cursor = iv.end;
    }
    if (cursor > makespan) {
      throw IntegrityError("processor " + std::to_string(p) + " busy past the makespan");
    }
    if (makespan > cursor) {
      tiled.push_back(Interval{cursor, makespan, makespan - cursor, IntervalKind::Idle, false});
    }
    list = std::move(tiled);
  }
}

double Trace::seconds(ProcId proc, IntervalKind kind) const {
  double total = 0.0;
  for (const Interval& iv : intervals_.at(proc)) {
    if (iv.kind == kind) total += iv.seconds;
  }
  return total;
}

void Trace::write_jsonl(std::ostream& out) const {
  for (const EventRecord& ev : events_) {
    nlohmann::ordered_json j;
    j["t"] = ev.time;
    j["seq"] = ev.sequence;
    j["kind"] = to_string(ev.kind);
    j["proc"] = ev.proc;
    switch (ev.kind) {
      case EventKind::JobBatchComplete:
        j["step"] = ev.step;
        j["loop"] = ev.loop;
        j["jobs"] = ev.jobs;
        if (ev.replica) j["replica"] = true;
        break;
      case EventKind::MessageDelivered:
        j["src"] = ev.peer;
        j["msg"] = to_string(ev.message);
        j["bytes"] = ev.bytes;
        if (!ev.jobs.empty()) j["jobs"] = ev.jobs;
        break;
      case EventKind::StepBoundary:
        j["step"] = ev.step;
        break;
      case EventKind::PerturbationStart:
      case EventKind::PerturbationEnd:
        break;
    }
    out << j.dump() << '\n';
  }
}

double RunMetrics::idle_fraction() const {
  if (m == 0 || makespan <= 0.0) return 0.0;
  double total = 0.0;
  for (double v : idle) total += v;
  return total / (static_cast<double>(m) * makespan);
}

double RunMetrics::median_inbound() const {
  if (inbound.empty()) return 0.0;
  std::vector<std::size_t> sorted(inbound);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  if (sorted.size() % 2 == 1) return static_cast<double>(sorted[mid]);
  return 0.5 * static_cast<double>(sorted[mid - 1] + sorted[mid]);
}

RunMetrics collect_metrics(const Trace& trace, double makespan) {
  RunMetrics metrics;
  metrics.m = trace.size();
  metrics.makespan = makespan;
  metrics.cost = static_cast<double>(metrics.m) * makespan;
  metrics.idle.resize(metrics.m);
  metrics.inbound.resize(metrics.m);
  for (ProcId p = 0; p < metrics.m; ++p) {
    metrics.idle[p] = trace.seconds(p, IntervalKind::Idle);
    metrics.inbound[p] = trace.inbound(p);
    metrics.busy_compute += trace.seconds(p, IntervalKind::Compute);
    if (metrics.inbound[p] > metrics.max_inbound) {
      metrics.max_inbound = metrics.inbound[p];
      metrics.max_inbound_proc = p;
    }
  }
  metrics.total_messages = trace.total_messages();
  metrics.total_bytes = trace.total_bytes();
  return metrics;
}

}  // namespace loadsim
