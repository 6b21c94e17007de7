#include "loadsim/master_slave.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "loadsim/error.hpp"

namespace loadsim {

std::string chunk_policy_name(const ChunkPolicy& policy) {
  struct Namer {
    std::string operator()(const StaticChunking&) const { return "static"; }
    std::string operator()(const FixedSize& p) const { return "fixed:c=" + std::to_string(p.c); }
    std::string operator()(const Factoring&) const { return "fac"; }
    std::string operator()(const WeightedFactoring&) const { return "wf"; }
    std::string operator()(const AdaptiveWeightedFactoring&) const { return "awf"; }
    std::string operator()(const AdaptiveFactoring&) const { return "af"; }
  };
  return std::visit(Namer{}, policy);
}

void RunningStats::add(double x) noexcept {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const noexcept {
  return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

namespace {

std::vector<double> normalized(std::vector<double> w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

MasterState::MasterState(std::size_t m, ChunkPolicy policy, std::vector<double> speeds)
    : policy_(std::move(policy)), slaves_(m) {
  if (m == 0) throw IntegrityError("master-slave needs at least one processor");
  if (const auto* fixed = std::get_if<FixedSize>(&policy_); fixed && fixed->c == 0) {
    throw IntegrityError("fixed chunk size must be at least 1");
  }
  std::vector<double> base(m, 1.0);
  if (const auto* wf = std::get_if<WeightedFactoring>(&policy_); wf && !wf->weights.empty()) {
    base = wf->weights;
  } else if (speeds.size() == m &&
             (std::holds_alternative<WeightedFactoring>(policy_) ||
              std::holds_alternative<AdaptiveWeightedFactoring>(policy_))) {
    base = speeds;
  }
  if (base.size() != m) throw IntegrityError("one weight per processor is required");
  for (double w : base) {
    if (!(w > 0.0)) throw IntegrityError("factoring weights must be positive");
  }
  weights_ = normalized(std::move(base));
}

void MasterState::check(ProcId slave) const {
  if (slave >= slaves_.size()) throw IntegrityError("unknown slave " + std::to_string(slave));
}

void MasterState::begin_loop(std::size_t loop_id, std::size_t n) {
  loop_id_ = loop_id;
  n_ = n;
  remaining_ = n;
  assigned_ = 0;
  batch_left_ = 0;
  for (auto& rec : slaves_) rec = SlaveRecord{};
  if (stats_.size() <= loop_id) {
    stats_.resize(loop_id + 1, std::vector<RunningStats>(slaves_.size()));
    step_stats_.resize(loop_id + 1, std::vector<RunningStats>(slaves_.size()));
  }
}

void MasterState::begin_step() {
  if (!std::holds_alternative<AdaptiveWeightedFactoring>(policy_)) return;
  // Pool the previous step's per-iterate means over all loops; a slave's
  // relative rate is what the weights capture.
  std::vector<double> ratio(slaves_.size(), 0.0);
  std::vector<std::size_t> seen(slaves_.size(), 0);
  for (const auto& per_loop : step_stats_) {
    double known = 0.0;
    std::size_t count = 0;
    for (const auto& s : per_loop) {
      if (s.count() > 0) {
        known += s.mean();
        ++count;
      }
    }
    if (count == 0) continue;
    const double loop_mean = known / static_cast<double>(count);
    for (std::size_t j = 0; j < per_loop.size(); ++j) {
      if (per_loop[j].count() > 0) {
        ratio[j] += per_loop[j].mean() / loop_mean;
        ++seen[j];
      }
    }
  }
  double known = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < ratio.size(); ++j) {
    if (seen[j] > 0) {
      ratio[j] /= static_cast<double>(seen[j]);
      known += ratio[j];
      ++count;
    }
  }
  if (count > 0) {
    std::vector<double> w(slaves_.size());
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double mu = seen[j] > 0 ? ratio[j] : known / static_cast<double>(count);
      w[j] = 1.0 / mu;
    }
    weights_ = normalized(std::move(w));
  }
  for (auto& per_loop : step_stats_) {
    for (auto& s : per_loop) s = RunningStats{};
  }
}

double MasterState::mean_or_fallback(ProcId slave) const {
  const auto& per_loop = stats_.at(loop_id_);
  if (per_loop[slave].count() > 0) return per_loop[slave].mean();
  double known = 0.0;
  std::size_t count = 0;
  for (const auto& s : per_loop) {
    if (s.count() > 0) {
      known += s.mean();
      ++count;
    }
  }
  return count > 0 ? known / static_cast<double>(count) : 1.0;
}

std::vector<double> MasterState::inverse_mean_weights() const {
  std::vector<double> w(slaves_.size());
  for (ProcId j = 0; j < w.size(); ++j) w[j] = 1.0 / mean_or_fallback(j);
  return normalized(std::move(w));
}

std::size_t MasterState::chunk_size(ProcId slave) {
  const std::size_t m = slaves_.size();
  std::size_t c = 0;
  if (std::holds_alternative<StaticChunking>(policy_)) {
    c = (n_ + m - 1) / m;
  } else if (const auto* fixed = std::get_if<FixedSize>(&policy_)) {
    c = fixed->c;
  } else if (std::holds_alternative<Factoring>(policy_)) {
    if (batch_left_ == 0) {
      batch_chunk_ = std::max<std::size_t>(1, (remaining_ + 2 * m - 1) / (2 * m));
      batch_left_ = m;
    }
    --batch_left_;
    c = batch_chunk_;
  } else {
    if (batch_left_ == 0) {
      batch_remaining_ = remaining_;
      batch_left_ = m;
      if (std::holds_alternative<AdaptiveFactoring>(policy_)) weights_ = inverse_mean_weights();
    }
    --batch_left_;
    const double share = 0.5 * static_cast<double>(batch_remaining_) * weights_[slave];
    c = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(share - 1e-9)));
  }
  return std::min(c, remaining_);
}

JobRange MasterState::next_chunk(ProcId slave) {
  check(slave);
  if (remaining_ == 0) return {};
  SlaveRecord& rec = slaves_[slave];
  if (rec.outstanding) {
    throw IntegrityError("slave " + std::to_string(slave) + " already holds a chunk");
  }
  const std::size_t c = chunk_size(slave);
  const auto begin = static_cast<JobId>(n_ - remaining_);
  const JobRange chunk{begin, static_cast<JobId>(begin + c)};
  remaining_ -= c;
  assigned_ += c;
  rec.outstanding = chunk;
  rec.progress = chunk.begin;
  ++rec.chunks_served;
  return chunk;
}

void MasterState::report_completion(ProcId slave, JobRange chunk, double elapsed) {
  check(slave);
  SlaveRecord& rec = slaves_[slave];
  if (!rec.outstanding || !(*rec.outstanding == chunk)) {
    throw IntegrityError("slave " + std::to_string(slave) + " reported a chunk it does not hold");
  }
  if (!chunk.empty()) {
    const double per_iterate = elapsed / static_cast<double>(chunk.size());
    stats_[loop_id_][slave].add(per_iterate);
    step_stats_[loop_id_][slave].add(per_iterate);
  }
  rec.outstanding.reset();
}

std::size_t MasterState::unstarted(ProcId slave) const {
  check(slave);
  const SlaveRecord& rec = slaves_[slave];
  if (!rec.outstanding) return 0;
  const JobId from = std::max(rec.progress, rec.outstanding->begin);
  return rec.outstanding->end > from ? rec.outstanding->end - from : 0;
}

TransferDirective MasterState::endgame_giveup(ProcId idle_slave) {
  check(idle_slave);
  TransferDirective directive{idle_slave, idle_slave, {}};
  if (remaining_ > 0) return directive;
  std::optional<ProcId> donor;
  double latest = 0.0;
  for (ProcId s = 0; s < slaves_.size(); ++s) {
    if (s == idle_slave || slaves_[s].giving) continue;
    const std::size_t left = unstarted(s);
    if (left < 2) continue;
    const double finish = static_cast<double>(left) * mean_or_fallback(s);
    if (!donor || finish > latest) {
      donor = s;
      latest = finish;
    }
  }
  if (!donor) return directive;
  const std::size_t give = std::max<std::size_t>(1, unstarted(*donor) / 2);
  const JobId end = slaves_[*donor].outstanding->end;
  directive.donor = *donor;
  directive.jobs = JobRange{static_cast<JobId>(end - give), end};
  slaves_[*donor].giving = true;
  slaves_[idle_slave].awaiting_transfer = true;
  return directive;
}

void MasterState::apply_transfer(const TransferDirective& directive, JobRange moved) {
  check(directive.donor);
  check(directive.receiver);
  SlaveRecord& donor = slaves_[directive.donor];
  SlaveRecord& receiver = slaves_[directive.receiver];
  donor.giving = false;
  receiver.awaiting_transfer = false;
  if (moved.empty()) return;
  if (!donor.outstanding || donor.outstanding->end != moved.end || moved.begin < donor.progress ||
      moved.begin < donor.outstanding->begin) {
    throw IntegrityError("give-up moves jobs the donor does not hold unstarted");
  }
  if (receiver.outstanding) throw IntegrityError("give-up receiver already holds a chunk");
  donor.outstanding->end = moved.begin;
  receiver.outstanding = moved;
  receiver.progress = moved.begin;
}

void MasterState::record_progress(ProcId slave, JobId next_unstarted) {
  check(slave);
  slaves_[slave].progress = next_unstarted;
}

std::optional<JobRange> MasterState::outstanding(ProcId slave) const {
  check(slave);
  return slaves_[slave].outstanding;
}

const RunningStats& MasterState::stats(ProcId slave) const {
  check(slave);
  return stats_.at(loop_id_)[slave];
}

std::size_t MasterState::chunks_served(ProcId slave) const {
  check(slave);
  return slaves_[slave].chunks_served;
}

// Simulated protocol -----------------------------------------------------

namespace {

std::vector<JobId> ids(JobRange range) {
  std::vector<JobId> out(range.size());
  std::iota(out.begin(), out.end(), range.begin);
  return out;
}

}  // namespace

MasterSlavePolicy::MasterSlavePolicy(ChunkPolicy policy) : chunk_policy_(std::move(policy)) {}

std::string MasterSlavePolicy::name() const { return chunk_policy_name(chunk_policy_); }

void MasterSlavePolicy::begin_run(Engine& engine, const TimeSteppedWorkload& workload) {
  std::vector<double> speeds;
  for (const Processor& p : engine.platform().processors()) speeds.push_back(p.speed);
  state_.emplace(engine.size(), chunk_policy_, std::move(speeds));
  local_.assign(engine.size(), Local{});
  loops_per_step_ = workload.loops().size();
  data_size_ = workload.data_size();
}

void MasterSlavePolicy::send(Engine& engine, ProcId src, ProcId dst, MessageKind kind,
                             std::size_t bytes, JobRange jobs, double value) {
  Message msg;
  msg.kind = kind;
  msg.src = src;
  msg.dst = dst;
  msg.bytes = bytes;
  msg.value = value;
  if (kind == MessageKind::Assignment || kind == MessageKind::Transfer || kind == MessageKind::Directive) {
    msg.jobs = ids(jobs);
  }
  msg.payload = jobs;
  engine.send(std::move(msg));
}

void MasterSlavePolicy::begin_loop(Engine& engine) {
  if (engine.loop_index() == 0) state_->begin_step();
  state_->begin_loop(engine.loop_index(), engine.loop_size());
  local_.assign(engine.size(), Local{});
  for (ProcId s = 1; s < engine.size(); ++s) {
    send(engine, s, kMaster, MessageKind::Request, kRequestBytes);
    local_[s].awaiting = true;
  }
}

void MasterSlavePolicy::take_chunk(ProcId proc, JobRange chunk) {
  Local& local = local_[proc];
  local.chunk = chunk;
  local.cursor = chunk.begin;
  local.has_chunk = !chunk.empty();
  local.started_at = 0.0;
  local.finished_at = 0.0;
}

void MasterSlavePolicy::serve(Engine& engine, ProcId requester) {
  if (state_->remaining() > 0) {
    const JobRange chunk = state_->next_chunk(requester);
    send(engine, kMaster, requester, MessageKind::Assignment,
         kAssignmentBytes + kBytesPerJobId * chunk.size(), chunk);
    return;
  }
  const TransferDirective directive = state_->endgame_giveup(requester);
  if (directive.empty()) {
    send(engine, kMaster, requester, MessageKind::Done, kRequestBytes);
  } else if (directive.donor == kMaster) {
    give_up(engine, kMaster, directive);
  } else {
    Message msg;
    msg.kind = MessageKind::Directive;
    msg.src = kMaster;
    msg.dst = directive.donor;
    msg.bytes = kAssignmentBytes + kBytesPerJobId * directive.jobs.size();
    msg.jobs = ids(directive.jobs);
    msg.payload = directive;
    engine.send(std::move(msg));
  }
}

void MasterSlavePolicy::serve_master(Engine& engine) {
  Local& local = local_[kMaster];
  if (state_->remaining() > 0) {
    take_chunk(kMaster, state_->next_chunk(kMaster));
    return;
  }
  const TransferDirective directive = state_->endgame_giveup(kMaster);
  if (directive.empty()) {
    local.finished = true;
    return;
  }
  Message msg;
  msg.kind = MessageKind::Directive;
  msg.src = kMaster;
  msg.dst = directive.donor;
  msg.bytes = kAssignmentBytes + kBytesPerJobId * directive.jobs.size();
  msg.jobs = ids(directive.jobs);
  msg.payload = directive;
  engine.send(std::move(msg));
  local.awaiting = true;
}

void MasterSlavePolicy::give_up(Engine& engine, ProcId donor, const TransferDirective& directive) {
  Local& local = local_[donor];
  JobRange moved{};
  if (local.has_chunk && local.chunk.end == directive.jobs.end) {
    const JobId from = std::max(directive.jobs.begin, local.cursor);
    if (from < directive.jobs.end) moved = JobRange{from, directive.jobs.end};
  }
  state_->apply_transfer(directive, moved);
  if (!moved.empty()) local.chunk.end = moved.begin;
  send(engine, donor, directive.receiver, MessageKind::Transfer,
       kAssignmentBytes + data_size_ * moved.size(), moved);
}

void MasterSlavePolicy::on_message(Engine& engine, ProcId proc, const Message& msg) {
  Local& local = local_[proc];
  switch (msg.kind) {
    case MessageKind::Request:
      serve(engine, msg.src);
      break;
    case MessageKind::Report:
      state_->report_completion(msg.src, std::any_cast<JobRange>(msg.payload), msg.value);
      serve(engine, msg.src);
      break;
    case MessageKind::Assignment: {
      local.awaiting = false;
      const auto chunk = std::any_cast<JobRange>(msg.payload);
      if (chunk.empty()) {
        local.finished = true;
      } else {
        take_chunk(proc, chunk);
      }
      break;
    }
    case MessageKind::Done:
      local.awaiting = false;
      local.finished = true;
      break;
    case MessageKind::Directive:
      give_up(engine, proc, std::any_cast<TransferDirective>(msg.payload));
      break;
    case MessageKind::Transfer: {
      local.awaiting = false;
      const auto moved = std::any_cast<JobRange>(msg.payload);
      if (!moved.empty()) {
        take_chunk(proc, moved);
      } else if (proc != kMaster) {
        send(engine, proc, kMaster, MessageKind::Request, kRequestBytes);
        local.awaiting = true;
      }
      break;
    }
    default:
      throw IntegrityError("master-slave received an unexpected message kind");
  }
}

void MasterSlavePolicy::on_idle(Engine& engine, ProcId proc) {
  Local& local = local_[proc];
  for (;;) {
    if (local.has_chunk) {
      if (local.cursor < local.chunk.end) {
        if (local.cursor == local.chunk.begin) local.started_at = engine.now();
        const JobId job[] = {local.cursor++};
        state_->record_progress(proc, local.cursor);
        engine.execute(proc, job);
        return;
      }
      const JobRange chunk = local.chunk;
      const double elapsed = local.finished_at - local.started_at;
      local.has_chunk = false;
      if (proc == kMaster) {
        state_->report_completion(kMaster, chunk, elapsed);
      } else {
        send(engine, proc, kMaster, MessageKind::Report, kReportBytes, chunk, elapsed);
        local.awaiting = true;
        return;
      }
    }
    if (proc != kMaster || local.awaiting || local.finished) return;
    serve_master(engine);
    if (!local.has_chunk) return;
  }
}

void MasterSlavePolicy::on_batch_complete(Engine& engine, ProcId proc, std::span<const JobId>,
                                          std::span<const double>) {
  local_[proc].finished_at = engine.now();
}

bool MasterSlavePolicy::loop_done() const {
  if (state_->remaining() > 0) return false;
  for (ProcId p = 0; p < local_.size(); ++p) {
    if (local_[p].has_chunk || local_[p].awaiting || state_->outstanding(p)) return false;
  }
  return true;
}

}  // namespace loadsim
