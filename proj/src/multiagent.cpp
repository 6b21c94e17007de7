#include "loadsim/multiagent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <Eigen/Dense>

#include "loadsim/error.hpp"

namespace loadsim {

std::vector<JobRange> initial_partition(std::size_t n, std::size_t m) {
  if (n == 0 || m == 0) throw InvalidWorkload("initial partition needs n >= 1 and m >= 1");
  const std::size_t block = (n + m - 1) / m;
  std::vector<JobRange> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t begin = std::min(k * block, n);
    const std::size_t end = std::min(begin + block, n);
    out[k] = JobRange{static_cast<JobId>(begin), static_cast<JobId>(end)};
  }
  return out;
}

std::vector<std::size_t> select_sample_offsets(std::size_t block_size, std::size_t s) {
  if (block_size == 0) return {};
  s = std::clamp<std::size_t>(s, 1, block_size);
  const std::size_t stride = block_size / s;
  std::vector<std::size_t> out(s);
  for (std::size_t i = 0; i < s; ++i) out[i] = i * stride;
  return out;
}

std::vector<JobId> select_sample_indices(JobRange block, std::size_t s) {
  std::vector<JobId> out;
  for (std::size_t off : select_sample_offsets(block.size(), s)) {
    out.push_back(static_cast<JobId>(block.begin + off));
  }
  return out;
}

std::size_t default_sample_size(std::size_t block_size) {
  return std::min(block_size, std::max<std::size_t>(3, (block_size + 19) / 20));
}

std::string FitMethod::to_string() const {
  return kind == Kind::Linear ? "linear" : "poly:" + std::to_string(degree);
}

FitMethod parse_fit_method(const std::string& text) {
  if (text == "linear") return FitMethod{};
  if (text.rfind("poly:", 0) == 0) {
    const std::string digits = text.substr(5);
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit) && digits.size() < 4) {
      return FitMethod{FitMethod::Kind::PolyLS, std::stoi(digits)};
    }
  }
  throw ProfileError("fit method must be 'linear' or 'poly:k', got '" + text + "'");
}

double CostProfile::predict(double index) const {
  double y = 0.0;
  if (method_.kind == FitMethod::Kind::Linear) {
    if (index <= knots_.front().index) {
      y = knots_.front().seconds;
    } else if (index >= knots_.back().index) {
      y = knots_.back().seconds;
    } else {
      const auto hi = std::upper_bound(knots_.begin(), knots_.end(), index,
                                       [](double x, const Sample& s) { return x < s.index; });
      const auto lo = hi - 1;
      if (index == lo->index) {
        y = lo->seconds;
      } else {
        const double frac = (index - lo->index) / (hi->index - lo->index);
        y = lo->seconds + frac * (hi->seconds - lo->seconds);
      }
    }
  } else {
    const double x = (index - center_) / scale_;
    for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) y = y * x + *it;
  }
  return std::max(y, kPredictionFloor);
}

CostProfile fit_cost_profile(std::span<const Sample> samples, FitMethod method) {
  if (samples.empty()) throw ProfileError("cannot fit a cost profile to zero samples");
  CostProfile profile;
  profile.method_ = method;
  if (method.kind == FitMethod::Kind::Linear) {
    std::vector<Sample> sorted(samples.begin(), samples.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Sample& a, const Sample& b) { return a.index < b.index; });
    // Repeated indices collapse to their mean.
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < sorted.size() && sorted[j].index == sorted[i].index) sum += sorted[j++].seconds;
      profile.knots_.push_back(Sample{sorted[i].index, sum / static_cast<double>(j - i)});
      i = j;
    }
    return profile;
  }
  if (method.degree < 0 || static_cast<std::size_t>(method.degree) >= samples.size()) {
    throw ProfileError("polynomial degree must be below the sample count");
  }
  double lo = samples[0].index;
  double hi = samples[0].index;
  for (const Sample& s : samples) {
    lo = std::min(lo, s.index);
    hi = std::max(hi, s.index);
  }
  profile.center_ = 0.5 * (lo + hi);
  profile.scale_ = hi > lo ? 0.5 * (hi - lo) : 1.0;
  const auto rows = static_cast<Eigen::Index>(samples.size());
  const auto cols = static_cast<Eigen::Index>(method.degree + 1);
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double x = (samples[r].index - profile.center_) / profile.scale_;
    double p = 1.0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      a(r, c) = p;
      p *= x;
    }
    b(r) = samples[r].seconds;
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  profile.coefficients_.assign(coef.data(), coef.data() + coef.size());
  return profile;
}

std::vector<double> normalize_speeds(std::span<const std::optional<double>> reference_times) {
  std::vector<double> out(reference_times.size());
  for (std::size_t k = 0; k < reference_times.size(); ++k) {
    if (!reference_times[k] || !(*reference_times[k] > 0.0)) {
      throw ProtocolError("agent " + std::to_string(k) + " did not share a reference time");
    }
  }
  for (std::size_t k = 0; k < reference_times.size(); ++k) {
    out[k] = *reference_times[0] / *reference_times[k];
  }
  return out;
}

// All-to-all exchange -------------------------------------------------------

namespace {

class SharePolicy : public Policy {
 public:
  explicit SharePolicy(const std::vector<std::vector<double>>& payloads)
      : payloads_(payloads),
        views_(payloads.size(), std::vector<std::vector<double>>(payloads.size())),
        received_(payloads.size(), 0),
        elapsed_(payloads.size(), 0.0) {
    for (std::size_t k = 0; k < payloads.size(); ++k) views_[k][k] = payloads[k];
  }

  std::string name() const override { return "all-to-all"; }
  void begin_loop(Engine& engine) override {
    for (ProcId k = 0; k < engine.size(); ++k) {
      for (ProcId d = 0; d < engine.size(); ++d) {
        if (d == k) continue;
        Message msg;
        msg.kind = MessageKind::Share;
        msg.src = k;
        msg.dst = d;
        msg.bytes = kShareHeaderBytes + kBytesPerPrediction * payloads_[k].size();
        msg.payload = &payloads_[k];
        engine.send(std::move(msg));
      }
    }
  }
  void on_message(Engine& engine, ProcId proc, const Message& msg) override {
    views_[proc][msg.src] = *std::any_cast<const std::vector<double>*>(msg.payload);
    ++received_[proc];
    elapsed_[proc] = engine.now();
  }
  void on_idle(Engine&, ProcId) override {}
  bool loop_done() const override {
    return std::all_of(received_.begin(), received_.end(),
                       [&](std::size_t r) { return r + 1 == payloads_.size(); });
  }

  const std::vector<std::vector<double>>& payloads_;
  std::vector<std::vector<std::vector<double>>> views_;
  std::vector<std::size_t> received_;
  std::vector<double> elapsed_;
};

}  // namespace

ShareOutcome all_to_all_share(const std::vector<std::vector<double>>& payloads,
                              const PlatformGraph& platform, CongestionPolicy congestion) {
  if (payloads.size() != platform.size()) {
    throw ProtocolError("one payload per agent is required");
  }
  SharePolicy policy(payloads);
  Engine engine(platform, congestion, NoPerturbation{}, 0);
  RunResult result = engine.run_exchange(policy);
  ShareOutcome out;
  out.views = std::move(policy.views_);
  out.elapsed = std::move(policy.elapsed_);
  out.messages = result.metrics.total_messages;
  for (ProcId p = 0; p < platform.size(); ++p) {
    out.inbound.push_back(result.trace.inbound(p));
    out.outbound.push_back(result.trace.outbound(p));
  }
  return out;
}

// Reallocation --------------------------------------------------------------

Reallocation global_reallocate(const GlobalView& view, std::span<const double> speeds,
                               std::span<const std::uint8_t> executed) {
  const std::size_t n = view.weights.size();
  const std::size_t m = speeds.size();
  if (view.owner.size() != n || (!executed.empty() && executed.size() != n)) {
    throw ProtocolError("global view is inconsistent");
  }
  for (ProcId o : view.owner) {
    if (o >= m) throw ProtocolError("global view names an unknown agent");
  }
  auto done = [&](std::size_t j) { return !executed.empty() && executed[j] != 0; };

  PackingInstance instance;
  instance.speeds.assign(speeds.begin(), speeds.end());
  std::vector<JobId> items;
  for (std::size_t j = 0; j < n; ++j) {
    if (done(j)) continue;
    items.push_back(static_cast<JobId>(j));
    instance.weights.push_back(view.weights[j]);
  }
  Assignment packed = lpt_pack(instance);

  // Bins with equal speeds are interchangeable; map each packed bin to the
  // equal-speed agent already holding most of its weight.
  std::vector<std::size_t> by_speed(m);
  std::iota(by_speed.begin(), by_speed.end(), 0);
  std::stable_sort(by_speed.begin(), by_speed.end(),
                   [&](std::size_t a, std::size_t b) { return speeds[a] < speeds[b]; });
  std::vector<std::size_t> relabel(m);
  std::iota(relabel.begin(), relabel.end(), 0);
  for (std::size_t g = 0; g < m;) {
    std::size_t h = g;
    while (h < m && speeds[by_speed[h]] == speeds[by_speed[g]]) ++h;
    if (h - g > 1) {
      std::vector<std::size_t> group(by_speed.begin() + g, by_speed.begin() + h);
      std::sort(group.begin(), group.end());
      std::map<std::pair<std::size_t, std::size_t>, double> kept;  // (bin, agent) -> weight
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::size_t bin = packed.bin_of[i];
        const ProcId owner = view.owner[items[i]];
        if (speeds[bin] == speeds[group[0]] && speeds[owner] == speeds[group[0]]) {
          kept[{bin, owner}] += instance.weights[i];
        }
      }
      std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
      for (const auto& [key, w] : kept) pairs.emplace_back(w, key.first, key.second);
      std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        return std::get<0>(a) > std::get<0>(b);
      });
      std::map<std::size_t, std::size_t> bin_to_agent;
      std::vector<bool> agent_taken(m, false);
      for (const auto& [w, bin, agent] : pairs) {
        if (bin_to_agent.count(bin) || agent_taken[agent]) continue;
        bin_to_agent[bin] = agent;
        agent_taken[agent] = true;
      }
      std::size_t next = 0;
      for (std::size_t bin : group) {
        if (bin_to_agent.count(bin)) continue;
        while (agent_taken[group[next]]) ++next;
        bin_to_agent[bin] = group[next];
        agent_taken[group[next]] = true;
      }
      for (const auto& [bin, agent] : bin_to_agent) relabel[bin] = agent;
    }
    g = h;
  }
  for (std::size_t& bin : packed.bin_of) bin = relabel[bin];

  std::vector<std::size_t> current(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) current[i] = view.owner[items[i]];
  const double current_makespan = predicted_makespan(instance, current);
  if (!(packed.predicted_makespan < current_makespan)) {
    packed.bin_of = current;
    packed.predicted_makespan = current_makespan;
  }

  Reallocation out;
  out.assignment.bin_of.assign(view.owner.begin(), view.owner.end());
  out.assignment.predicted_makespan = packed.predicted_makespan;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const JobId job = items[i];
    out.assignment.bin_of[job] = packed.bin_of[i];
    if (packed.bin_of[i] != view.owner[job]) {
      out.transfers.push_back(JobTransfer{job, view.owner[job], static_cast<ProcId>(packed.bin_of[i])});
    }
  }
  return out;
}

std::string to_string(RoundPhase phase) {
  switch (phase) {
    case RoundPhase::InitialPartition: return "initial_partition";
    case RoundPhase::Sampling: return "sampling";
    case RoundPhase::ResultShare: return "result_share";
    case RoundPhase::Normalize: return "normalize";
    case RoundPhase::Reallocate: return "reallocate";
    case RoundPhase::Execute: return "execute";
  }
  return "unknown";
}

// Protocol ------------------------------------------------------------------

struct MultiagentPolicy::SharePayload {
  // Sampling rounds: predicted seconds on the sender for each job it owns,
  // in id order. Ratio rounds: the sender's actual/predicted ratio.
  std::vector<double> values;
  std::optional<double> reference;
};

MultiagentPolicy::MultiagentPolicy(MultiagentConfig config) : config_(std::move(config)) {
  if (config_.resample_period == 0) throw ProtocolError("resample period must be at least 1");
}

void MultiagentPolicy::begin_run(Engine& engine, const TimeSteppedWorkload& workload) {
  m_ = engine.size();
  data_size_ = workload.data_size();
  loops_.assign(workload.loops().size(), LoopState{});
  agents_.assign(m_, Agent{});
  rounds_.clear();
  agreement_checks_ = 0;
}

JobId MultiagentPolicy::reference_job() const {
  return agents_[0].owned.empty() ? 0 : agents_[0].owned.front();
}

void MultiagentPolicy::begin_loop(Engine& engine) {
  LoopState& loop = loops_.at(engine.loop_index());
  current_ = &loop;
  n_ = engine.loop_size();
  const bool first = !loop.initialized;
  sampling_ = first || engine.step() % config_.resample_period == 0;
  exchange_ = !sampling_ && config_.rescale && m_ > 1;

  round_ = RoundRecord{engine.step(), engine.loop_index(), {}, 0, 0.0};
  if (first) round_.phases.push_back(RoundPhase::InitialPartition);
  if (sampling_) {
    round_.phases.insert(round_.phases.end(),
                         {RoundPhase::Sampling, RoundPhase::ResultShare, RoundPhase::Normalize});
  } else if (exchange_) {
    round_.phases.push_back(RoundPhase::ResultShare);
  }
  round_.phases.insert(round_.phases.end(), {RoundPhase::Reallocate, RoundPhase::Execute});

  if (first) {
    loop.view.owner.assign(n_, 0);
    const auto blocks = initial_partition(n_, m_);
    for (ProcId k = 0; k < m_; ++k) {
      for (JobId j = blocks[k].begin; j < blocks[k].end; ++j) loop.view.owner[j] = k;
    }
    loop.view.weights.assign(n_, 0.0);
    loop.speeds.assign(m_, 1.0);
    loop.decisions.assign(m_, nullptr);
    loop.ratio.assign(m_, 1.0);
    loop.initialized = true;
  }

  for (ProcId k = 0; k < m_; ++k) {
    Agent& a = agents_[k];
    a = Agent{};
    a.received.assign(m_, nullptr);
    a.decision = loop.decisions[k];
  }
  for (JobId j = 0; j < n_; ++j) agents_[loop.view.owner[j]].owned.push_back(j);
  if (sampling_) {
    for (Agent& a : agents_) {
      const std::size_t s = config_.sample_size ? config_.sample_size : default_sample_size(a.owned.size());
      for (std::size_t off : select_sample_offsets(a.owned.size(), s)) a.samples.push_back(a.owned[off]);
    }
  }

  if (first && m_ > 1) {
    // One-to-all personalized scatter of the blocks (and the reference
    // job's data) from processor 0.
    for (ProcId k = 1; k < m_; ++k) {
      agents_[k].stage = Stage::WaitScatter;
      Message msg;
      msg.kind = MessageKind::Scatter;
      msg.src = 0;
      msg.dst = k;
      msg.bytes = kTransferHeaderBytes + data_size_ * (agents_[k].owned.size() + 1);
      msg.jobs = agents_[k].owned;
      engine.send(std::move(msg));
    }
  }
}

void MultiagentPolicy::broadcast(Engine& engine, ProcId proc, std::shared_ptr<const SharePayload> payload,
                                 MessageKind kind) {
  agents_[proc].received[proc] = payload;
  const std::size_t bytes =
      kShareHeaderBytes + kBytesPerPrediction * (payload->values.size() + (payload->reference ? 1 : 0));
  for (ProcId d = 0; d < m_; ++d) {
    if (d == proc) continue;
    Message msg;
    msg.kind = kind;
    msg.src = proc;
    msg.dst = d;
    msg.bytes = bytes;
    msg.payload = payload;
    engine.send(std::move(msg));
  }
  agents_[proc].stage = Stage::WaitShares;
}

void MultiagentPolicy::start(Engine& engine, ProcId proc) {
  Agent& a = agents_[proc];
  if (sampling_) {
    a.stage = Stage::Sampling;
    if (!a.samples.empty()) {
      engine.execute(proc, a.samples);
      ++a.batches_in_flight;
    }
    if (proc != 0 || a.owned.empty()) {
      engine.execute_replica(proc, reference_job());
      ++a.batches_in_flight;
    }
    return;
  }
  if (exchange_) {
    auto payload = std::make_shared<SharePayload>();
    payload->values.push_back(current_->ratio[proc]);
    broadcast(engine, proc, std::move(payload), MessageKind::Ratio);
    return;
  }
  enter_execute(engine, proc, *a.decision);
}

void MultiagentPolicy::finish_sampling(Engine& engine, ProcId proc) {
  Agent& a = agents_[proc];
  auto payload = std::make_shared<SharePayload>();
  payload->reference = a.reference_seconds;
  if (!a.samples.empty()) {
    std::vector<Sample> samples;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      samples.push_back(Sample{static_cast<double>(a.samples[i]), a.sample_seconds[i]});
    }
    FitMethod method = config_.fit;
    if (method.kind == FitMethod::Kind::PolyLS) {
      method.degree = std::min<int>(method.degree, static_cast<int>(samples.size()) - 1);
    }
    const CostProfile profile = fit_cost_profile(samples, method);
    std::size_t next_sample = 0;
    payload->values.reserve(a.owned.size());
    for (JobId j : a.owned) {
      if (next_sample < a.samples.size() && a.samples[next_sample] == j) {
        payload->values.push_back(a.sample_seconds[next_sample++]);
      } else {
        payload->values.push_back(profile.predict(static_cast<double>(j)));
      }
    }
  }
  broadcast(engine, proc, std::move(payload), MessageKind::Share);
}

void MultiagentPolicy::reallocate(Engine& engine, ProcId proc) {
  Agent& a = agents_[proc];
  auto weights = std::make_shared<std::vector<double>>(n_, 0.0);
  std::vector<std::uint8_t> executed;
  if (sampling_) {
    std::vector<std::optional<double>> refs(m_);
    for (ProcId k = 0; k < m_; ++k) refs[k] = a.received[k]->reference;
    a.speeds = normalize_speeds(refs);
    executed.assign(n_, 0);
    for (ProcId k = 0; k < m_; ++k) {
      // Owner lists and sample positions are common knowledge; only the
      // values travel.
      const std::vector<JobId>& owned = agents_[k].owned;
      const std::vector<double>& values = a.received[k]->values;
      if (!owned.empty() && values.size() != owned.size()) {
        throw ProtocolError("agent " + std::to_string(k) + " shared a malformed prediction vector");
      }
      for (std::size_t i = 0; i < owned.size(); ++i) (*weights)[owned[i]] = values[i] * a.speeds[k];
      for (JobId j : agents_[k].samples) executed[j] = 1;
    }
  } else {
    *weights = current_->view.weights;
    a.speeds = current_->speeds;
    for (ProcId k = 0; k < m_; ++k) a.speeds[k] /= a.received[k]->values.at(0);
  }
  a.weights = weights;
  GlobalView view{*weights, current_->view.owner};
  a.decision = std::make_shared<const Reallocation>(global_reallocate(view, a.speeds, executed));
  enter_execute(engine, proc, *a.decision);
}

void MultiagentPolicy::enter_execute(Engine& engine, ProcId proc, const Reallocation& decision) {
  Agent& a = agents_[proc];
  if (!a.weights) {
    a.weights = std::make_shared<std::vector<double>>(current_->view.weights);
    a.speeds = current_->speeds;
  }
  const std::vector<ProcId>& owner = current_->view.owner;
  std::vector<std::vector<JobId>> outgoing(m_);
  std::vector<std::uint8_t> sends_to_me(m_, 0);
  std::vector<JobId> mine;
  std::size_t next_sample = 0;
  for (JobId j = 0; j < n_; ++j) {
    const ProcId to = static_cast<ProcId>(decision.assignment.bin_of[j]);
    if (owner[j] == proc && to != proc) outgoing[to].push_back(j);
    if (to == proc && owner[j] != proc) sends_to_me[owner[j]] = 1;
    if (to == proc && owner[j] == proc) {
      while (next_sample < a.samples.size() && a.samples[next_sample] < j) ++next_sample;
      if (next_sample < a.samples.size() && a.samples[next_sample] == j) continue;
      mine.push_back(j);
    }
  }
  for (ProcId to = 0; to < m_; ++to) {
    if (outgoing[to].empty()) continue;
    Message msg;
    msg.kind = MessageKind::Transfer;
    msg.src = proc;
    msg.dst = to;
    msg.bytes = kTransferHeaderBytes + data_size_ * outgoing[to].size();
    msg.jobs = std::move(outgoing[to]);
    engine.send(std::move(msg));
  }
  a.transfers_pending += std::count(sends_to_me.begin(), sends_to_me.end(), 1);
  mine.insert(mine.end(), a.queue.begin(), a.queue.end());
  a.queue = std::move(mine);
  a.stage = Stage::Executing;
}

void MultiagentPolicy::on_message(Engine&, ProcId proc, const Message& msg) {
  Agent& a = agents_[proc];
  switch (msg.kind) {
    case MessageKind::Scatter:
      a.stage = Stage::Start;
      break;
    case MessageKind::Share:
    case MessageKind::Ratio:
      a.received[msg.src] = std::any_cast<std::shared_ptr<const SharePayload>>(msg.payload);
      ++a.received_count;
      break;
    case MessageKind::Transfer:
      a.queue.insert(a.queue.end(), msg.jobs.begin(), msg.jobs.end());
      --a.transfers_pending;
      break;
    default:
      throw ProtocolError("agent received an unexpected message kind");
  }
}

void MultiagentPolicy::on_idle(Engine& engine, ProcId proc) {
  Agent& a = agents_[proc];
  // Advance through stages until the agent commits work or has to wait.
  for (;;) {
    const Stage before = a.stage;
    switch (a.stage) {
      case Stage::WaitScatter:
      case Stage::Done:
        return;
      case Stage::Start:
        start(engine, proc);
        break;
      case Stage::Sampling:
        if (a.batches_in_flight == 0) finish_sampling(engine, proc);
        break;
      case Stage::WaitShares:
        if (a.received_count + 1 == m_) reallocate(engine, proc);
        break;
      case Stage::Executing:
        if (!a.queue.empty()) {
          engine.execute(proc, a.queue);
          a.queue.clear();
        } else if (a.transfers_pending == 0) {
          a.stage = Stage::Done;
        }
        break;
    }
    if (engine.busy(proc) || a.stage == before) return;
  }
}

void MultiagentPolicy::on_batch_complete(Engine&, ProcId proc, std::span<const JobId> jobs,
                                         std::span<const double> seconds) {
  Agent& a = agents_[proc];
  if (a.stage == Stage::Sampling) {
    if (a.sample_seconds.size() < a.samples.size()) {
      a.sample_seconds.assign(seconds.begin(), seconds.end());
      if (proc == 0) a.reference_seconds = seconds.front();
    } else {
      a.reference_seconds = seconds.front();
    }
    --a.batches_in_flight;
    return;
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    a.actual += seconds[i];
    a.predicted += (*a.weights)[jobs[i]] / a.speeds[proc];
  }
}

bool MultiagentPolicy::loop_done() const {
  return std::all_of(agents_.begin(), agents_.end(), [](const Agent& a) { return a.stage == Stage::Done; });
}

void MultiagentPolicy::end_loop(Engine&) {
  // Every agent solved the same packing on its own copy of the view; they
  // must agree bit for bit.
  ++agreement_checks_;
  const Reallocation& reference = *agents_[0].decision;
  for (ProcId k = 1; k < m_; ++k) {
    if (agents_[k].decision != agents_[0].decision && !(*agents_[k].decision == reference)) {
      throw ProtocolError("agents disagree on the reallocation (agent " + std::to_string(k) + ")");
    }
  }
  LoopState& loop = *current_;
  std::size_t moved = 0;
  for (JobId j = 0; j < n_; ++j) moved += reference.assignment.bin_of[j] != loop.view.owner[j];
  if (sampling_ || exchange_) {
    loop.view.weights = *agents_[0].weights;
    loop.speeds = agents_[0].speeds;
  }
  for (JobId j = 0; j < n_; ++j) loop.view.owner[j] = static_cast<ProcId>(reference.assignment.bin_of[j]);
  for (ProcId k = 0; k < m_; ++k) {
    loop.decisions[k] = agents_[k].decision;
    loop.ratio[k] = agents_[k].predicted > 0.0 ? agents_[k].actual / agents_[k].predicted : 1.0;
  }
  round_.transfers = moved;
  round_.predicted_makespan = reference.assignment.predicted_makespan;
  rounds_.push_back(std::move(round_));
}

}  // namespace loadsim
