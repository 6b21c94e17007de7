#include <doctest.h>

#include <functional>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "loadsim/engine.hpp"
#include "loadsim/error.hpp"
#include "loadsim/master_slave.hpp"

using namespace loadsim;

namespace {

PlatformGraph zero_comm(std::size_t m) { return PlatformGraph::fully_connected(homogeneous_speeds(m), 0.0, 0.0); }

RunResult run_static(const TimeSteppedWorkload& w, const PlatformGraph& g) {
  MasterSlavePolicy policy(StaticChunking{});
  return simulate(w, g, policy, CongestionPolicy{true, 0.0}, NoPerturbation{}, 1);
}

// Hooks supplied per test; everything else is a no-op.
struct Scripted : Policy {
  std::function<void(Engine&)> begin;
  std::function<void(Engine&, ProcId)> idle;
  std::function<void(Engine&, ProcId, const Message&)> message;
  std::function<bool()> done;

  std::string name() const override { return "scripted"; }
  void begin_loop(Engine& e) override {
    if (begin) begin(e);
  }
  void on_message(Engine& e, ProcId p, const Message& m) override {
    if (message) message(e, p, m);
  }
  void on_idle(Engine& e, ProcId p) override {
    if (idle) idle(e, p);
  }
  bool loop_done() const override { return done(); }
};

RunResult factoring_run(std::uint64_t seed, bool record) {
  const auto w = generate_qtm_workload(60, 3, QtmParams{}, 4, 0.01);
  const auto g = PlatformGraph::switched_star(heterogeneous_speeds(4, 2));
  MasterSlavePolicy policy(Factoring{});
  return simulate(w, g, policy, CongestionPolicy{true, 5e-4}, RandomBusy{1.0, 0.1, true}, seed,
                  RunOptions{record});
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("static chunking of 100 unit jobs on four processors") {
    const auto r = run_static(make_uniform_workload(100, 1.0), zero_comm(4));
    CHECK(r.metrics.makespan == 25.0);
    CHECK(r.metrics.cost == 100.0);
    CHECK(r.metrics.jobs_executed == 100);
  }

  TEST_CASE("one job per processor finishes with the longest job") {
    const auto r = run_static(make_explicit_workload({1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 1.0, 2.0}), zero_comm(8));
    CHECK(r.metrics.makespan == 3.5);
  }

  TEST_CASE("sequential overhead elapses once per step") {
    const auto r = run_static(make_uniform_workload(4, 5.0, 2, 1.0), zero_comm(4));
    CHECK(r.metrics.makespan == derived()["two_steps_seq1_loop5"].get<double>());
  }

  TEST_CASE("serial sends are spaced by the per-message overhead") {
    const auto g = zero_comm(2);
    std::vector<double> arrivals;
    Scripted s;
    bool ran = false;
    s.begin = [&](Engine& e) {
      e.send(Message{MessageKind::Report, 0, 1, 64});
      e.send(Message{MessageKind::Report, 0, 1, 64});
    };
    s.message = [&](Engine& e, ProcId, const Message&) { arrivals.push_back(e.now()); };
    s.idle = [&](Engine& e, ProcId p) {
      if (p == 0 && !ran) {
        const JobId j[] = {0};
        e.execute(0, j);
        ran = true;
      }
    };
    s.done = [&] { return ran && arrivals.size() == 2; };
    simulate(make_uniform_workload(1, 1.0), g, s, CongestionPolicy{true, 0.01}, NoPerturbation{}, 1);
    REQUIRE(arrivals.size() == 2);
    CHECK(arrivals[1] - arrivals[0] >= 0.01 - 1e-12);
  }

  TEST_CASE("double assignment fails fast") {
    Scripted s;
    s.idle = [](Engine& e, ProcId p) {
      const JobId j[] = {0};
      e.execute(p, j);
    };
    s.done = [] { return false; };
    CHECK_THROWS_AS(simulate(make_uniform_workload(4, 1.0), zero_comm(2), s, {}, NoPerturbation{}, 1),
                    IntegrityError);
  }

  TEST_CASE("unknown job fails fast") {
    Scripted s;
    s.idle = [](Engine& e, ProcId p) {
      const JobId j[] = {99};
      e.execute(p, j);
    };
    s.done = [] { return false; };
    CHECK_THROWS_AS(simulate(make_uniform_workload(4, 1.0), zero_comm(1), s, {}, NoPerturbation{}, 1),
                    IntegrityError);
  }

  TEST_CASE("a policy that never finishes is reported as stalled") {
    Scripted s;
    s.done = [] { return false; };
    CHECK_THROWS_AS(simulate(make_uniform_workload(4, 1.0), zero_comm(2), s, {}, NoPerturbation{}, 1),
                    IntegrityError);
  }

  TEST_CASE("overlapping busy intervals are an integrity error") {
    Trace t(1, false);
    t.record_interval(0, 0.0, 1.0, IntervalKind::Compute, 1.0);
    CHECK_THROWS_AS(t.record_interval(0, 0.5, 1.5, IntervalKind::Compute, 1.0), IntegrityError);
    CHECK_THROWS_AS(t.record_interval(0, 2.0, 1.5, IntervalKind::Compute, 1.0), IntegrityError);
  }

  TEST_CASE("busy then idle tiles the makespan") {
    Trace t(1, false);
    t.record_interval(0, 0.0, 1.0, IntervalKind::Compute, 1.0);
    t.finalize(2.0);
    const auto iv = t.intervals(0);
    REQUIRE(iv.size() == 2);
    CHECK(iv[1].kind == IntervalKind::Idle);
    CHECK(iv[1].start == 1.0);
    CHECK(iv[1].end == 2.0);
    const auto metrics = collect_metrics(t, 2.0);
    CHECK(metrics.max_inbound == 0);
    CHECK(metrics.idle[0] == 1.0);
  }

  TEST_CASE("perturbed factoring run keeps the books straight") {
    const auto r = factoring_run(17, true);
    const auto& m = r.metrics;
    CHECK(m.cost == static_cast<double>(m.m) * m.makespan);
    CHECK(m.busy_compute == m.realized_work);
    CHECK(m.jobs_executed == m.jobs_expected);
    CHECK(m.jobs_expected == 60u * 5u * 3u);

    for (ProcId p = 0; p < m.m; ++p) {
      const auto iv = r.trace.intervals(p);
      REQUIRE_FALSE(iv.empty());
      CHECK(iv.front().start == 0.0);
      CHECK(iv.back().end == m.makespan);
      for (std::size_t k = 1; k < iv.size(); ++k) REQUIRE(iv[k].start == iv[k - 1].end);
    }

    // every job once per (step, loop)
    std::vector<std::vector<std::vector<int>>> seen(3, std::vector<std::vector<int>>(5, std::vector<int>(60, 0)));
    for (const auto& ev : r.trace.events()) {
      if (ev.kind != EventKind::JobBatchComplete || ev.replica) continue;
      for (JobId j : ev.jobs) ++seen.at(ev.step).at(ev.loop).at(j);
    }
    for (const auto& step : seen) {
      for (const auto& loop : step) {
        for (int c : loop) REQUIRE(c == 1);
      }
    }
  }

  TEST_CASE("identical inputs give identical traces") {
    const auto a = factoring_run(5, true);
    const auto b = factoring_run(5, true);
    std::ostringstream sa, sb;
    a.trace.write_jsonl(sa);
    b.trace.write_jsonl(sb);
    CHECK(sa.str() == sb.str());
    CHECK(a.metrics.makespan == b.metrics.makespan);
    CHECK(a.metrics.total_bytes == b.metrics.total_bytes);
    const auto c = factoring_run(6, true);
    CHECK(c.metrics.makespan != a.metrics.makespan);
  }

  TEST_CASE("events are ordered in time") {
    const auto r = factoring_run(3, true);
    const auto ev = r.trace.events();
    for (std::size_t k = 1; k < ev.size(); ++k) REQUIRE(ev[k].time >= ev[k - 1].time);
  }
}
