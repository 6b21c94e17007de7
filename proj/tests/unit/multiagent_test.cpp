#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <map>
#include <random>
#include <tuple>
#include <vector>

#include "fixtures.hpp"
#include "loadsim/error.hpp"
#include "loadsim/multiagent.hpp"

using namespace loadsim;

namespace {

std::vector<std::size_t> block_sizes(std::size_t n, std::size_t m) {
  std::vector<std::size_t> out;
  for (const JobRange& b : initial_partition(n, m)) out.push_back(b.size());
  return out;
}

struct MaRun {
  RunResult result;
  std::vector<RoundRecord> rounds;
  std::size_t checks = 0;
  GlobalView view;
  std::vector<double> speeds;
};

MaRun run_ma(const TimeSteppedWorkload& w, const PlatformGraph& g, MultiagentConfig cfg,
             const PerturbationModel& perturbation, std::uint64_t seed, bool record = false) {
  MultiagentPolicy policy(cfg);
  MaRun out{simulate(w, g, policy, CongestionPolicy{true, 5e-4}, perturbation, seed, RunOptions{record}),
            policy.rounds(), policy.agreement_checks(), policy.view(0), policy.speed_table(0)};
  return out;
}

}  // namespace

TEST_SUITE("multiagent") {
  TEST_CASE("initial partition") {
    const auto& d = derived();
    CHECK(block_sizes(6, 3) == d["partition_n6_m3"].get<std::vector<std::size_t>>());
    CHECK(block_sizes(10, 3) == d["partition_n10_m3"].get<std::vector<std::size_t>>());
    CHECK(block_sizes(501, 32) == d["partition_n501_m32"].get<std::vector<std::size_t>>());
    const auto blocks = initial_partition(6, 3);
    CHECK(blocks[0] == JobRange{0, 2});
    CHECK(blocks[2] == JobRange{4, 6});
  }

  TEST_CASE("partition blocks are disjoint and cover the loop") {
    for (std::size_t n = 1; n <= 70; ++n) {
      for (std::size_t m = 1; m <= 12; ++m) {
        const auto blocks = initial_partition(n, m);
        REQUIRE(blocks.size() == m);
        JobId next = 0;
        for (const JobRange& b : blocks) {
          if (b.empty()) continue;
          REQUIRE(b.begin == next);
          next = b.end;
        }
        REQUIRE(next == n);
      }
    }
  }

  TEST_CASE("sample offsets") {
    const auto& d = derived();
    CHECK(select_sample_offsets(100, 5) == d["offsets_100_5"].get<std::vector<std::size_t>>());
    CHECK(select_sample_offsets(5, 2) == d["offsets_5_2"].get<std::vector<std::size_t>>());
    CHECK(select_sample_offsets(4, 4) == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(select_sample_offsets(3, 9) == std::vector<std::size_t>{0, 1, 2});
    CHECK(select_sample_offsets(0, 3).empty());
    CHECK(select_sample_indices(JobRange{16, 32}, 4) == std::vector<JobId>{16, 20, 24, 28});
    CHECK(default_sample_size(501) == 26);
    CHECK(default_sample_size(16) == 3);
    CHECK(default_sample_size(2) == 2);
  }

  TEST_CASE("linear profile") {
    const Sample s[] = {{0, 1.0}, {20, 3.0}};
    const auto p = fit_cost_profile(s, FitMethod{});
    CHECK(p.predict(10) == 2.0);
    CHECK(p.predict(0) == 1.0);
    CHECK(p.predict(20) == 3.0);
    CHECK(p.predict(-5) == 1.0);
    CHECK(p.predict(99) == 3.0);
  }

  TEST_CASE("constant samples give a constant profile") {
    const Sample s[] = {{0, 2.5}, {3, 2.5}, {7, 2.5}, {11, 2.5}};
    const auto lin = fit_cost_profile(s, FitMethod{});
    const auto poly = fit_cost_profile(s, FitMethod{FitMethod::Kind::PolyLS, 2});
    for (double x : {0.0, 1.5, 7.0, 20.0}) {
      CHECK(lin.predict(x) == 2.5);
      CHECK(poly.predict(x) == doctest::Approx(2.5).epsilon(1e-12));
    }
  }

  TEST_CASE("quadratic recovered exactly") {
    std::vector<Sample> s;
    for (double i : {0.0, 3.0, 5.0, 9.0}) s.push_back({i, 1.0 + i * i});
    const auto p = fit_cost_profile(s, FitMethod{FitMethod::Kind::PolyLS, 2});
    for (double i = 0.0; i <= 10.0; i += 0.5) CHECK(std::abs(p.predict(i) - (1.0 + i * i)) <= 1e-9);
  }

  TEST_CASE("predictions respect the floor") {
    const Sample s[] = {{0, 1.0}, {1, 0.0}, {2, 1.0}};
    const auto p = fit_cost_profile(s, FitMethod{FitMethod::Kind::PolyLS, 1});
    for (double x = -100; x <= 100; x += 1.0) REQUIRE(p.predict(x) >= kPredictionFloor);
    const Sample neg[] = {{0, 1.0}, {10, -5.0}};
    CHECK(fit_cost_profile(neg, FitMethod{}).predict(10) == kPredictionFloor);
  }

  TEST_CASE("fit errors and names") {
    CHECK_THROWS_AS(fit_cost_profile(std::span<const Sample>{}, FitMethod{}), ProfileError);
    const Sample two[] = {{0, 1.0}, {1, 2.0}};
    CHECK_THROWS_AS(fit_cost_profile(two, FitMethod{FitMethod::Kind::PolyLS, 2}), ProfileError);
    CHECK(parse_fit_method("linear") == FitMethod{});
    CHECK(parse_fit_method("poly:3") == FitMethod{FitMethod::Kind::PolyLS, 3});
    CHECK(parse_fit_method("poly:3").to_string() == "poly:3");
    CHECK_THROWS_AS(parse_fit_method("cubic"), ProfileError);
  }

  TEST_CASE("speed normalization") {
    const std::optional<double> a[] = {2.0, 1.0};
    CHECK(normalize_speeds(a) == std::vector<double>{1.0, 2.0});
    const std::optional<double> b[] = {3.0, 3.0, 3.0};
    CHECK(normalize_speeds(b) == std::vector<double>{1.0, 1.0, 1.0});
    const std::optional<double> c[] = {1.0, 1.0, 4.0};
    CHECK(normalize_speeds(c)[2] == 0.25);
    const std::optional<double> missing[] = {1.0, std::nullopt};
    CHECK_THROWS_AS(normalize_speeds(missing), ProtocolError);
  }

  TEST_CASE("all-to-all sharing") {
    const auto one = all_to_all_share({{1.0}}, PlatformGraph::switched_star(homogeneous_speeds(1)), {});
    CHECK(one.messages == 0);
    CHECK(one.elapsed == std::vector<double>{0.0});

    const auto star = PlatformGraph::switched_star(homogeneous_speeds(4));
    const std::vector<std::vector<double>> payloads{{1.0}, {2.0, 2.5}, {3.0}, {4.0}};
    const auto four = all_to_all_share(payloads, star, CongestionPolicy{true, 5e-4});
    CHECK(four.messages == derived()["share_messages_m4"].get<std::size_t>());
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(four.inbound[k] == 3);
      CHECK(four.outbound[k] == 3);
      CHECK(four.views[k] == payloads);
      CHECK(four.elapsed[k] > 0.0);
    }

    const auto flat = PlatformGraph::fully_connected(homogeneous_speeds(4), 0.0, 0.0);
    const auto free = all_to_all_share(payloads, flat, CongestionPolicy{true, 0.0});
    for (double e : free.elapsed) CHECK(e == 0.0);
    const auto taxed = all_to_all_share(payloads, flat, CongestionPolicy{true, 0.01});
    // only the per-message overhead at both endpoints remains
    for (double e : taxed.elapsed) CHECK(e == doctest::Approx(2 * 3 * 0.01).epsilon(1e-12));
  }

  TEST_CASE("balanced blocks stay put") {
    const GlobalView view{{1, 1, 1, 1, 1, 1}, {0, 0, 1, 1, 2, 2}};
    const double speeds[] = {1.0, 1.0, 1.0};
    const std::vector<std::uint8_t> executed(6, 0);
    CHECK(global_reallocate(view, speeds, executed).transfers.empty());
  }

  TEST_CASE("one heavy job pushes a light one across") {
    const GlobalView view{{4, 1, 1, 1}, {0, 1, 1, 0}};
    const double speeds[] = {1.0, 1.0};
    const std::vector<std::uint8_t> executed(4, 0);
    const auto r = global_reallocate(view, speeds, executed);
    REQUIRE(r.transfers.size() == 1);
    CHECK(r.transfers[0] == JobTransfer{3, 0, 1});
    CHECK(r.assignment.predicted_makespan == 4.0);
  }

  TEST_CASE("fast agent takes two thirds of uniform work") {
    const GlobalView view{std::vector<double>(9, 1.0), {0, 0, 0, 0, 0, 1, 1, 1, 1}};
    const double speeds[] = {2.0, 1.0};
    const std::vector<std::uint8_t> executed(9, 0);
    const auto r = global_reallocate(view, speeds, executed);
    const auto expected = derived()["reallocate_9_units_speeds_2_1"].get<std::vector<std::size_t>>();
    CHECK(std::count(r.assignment.bin_of.begin(), r.assignment.bin_of.end(), 0u) == expected[0]);
    CHECK(std::count(r.assignment.bin_of.begin(), r.assignment.bin_of.end(), 1u) == expected[1]);
  }

  TEST_CASE("executed jobs never move and each job moves at most once") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> w(0.1, 3.0);
    for (int k = 0; k < 40; ++k) {
      const std::size_t n = 30, m = 4;
      GlobalView view;
      std::vector<std::uint8_t> executed(n);
      for (std::size_t j = 0; j < n; ++j) {
        view.weights.push_back(w(rng));
        view.owner.push_back(static_cast<ProcId>(rng() % m));
        executed[j] = rng() % 4 == 0;
      }
      const double speeds[] = {1.0, 2.4, 0.8, 1.4};
      const auto r = global_reallocate(view, speeds, executed);
      REQUIRE(r == global_reallocate(view, speeds, executed));
      std::vector<int> moved(n, 0);
      for (const auto& t : r.transfers) {
        REQUIRE_FALSE(executed[t.job]);
        REQUIRE(t.from == view.owner[t.job]);
        REQUIRE(t.to == r.assignment.bin_of[t.job]);
        REQUIRE(++moved[t.job] == 1);
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (executed[j]) REQUIRE(r.assignment.bin_of[j] == view.owner[j]);
      }
    }
  }

  TEST_CASE("inconsistent views are rejected") {
    const GlobalView bad{{1, 1}, {0}};
    const double speeds[] = {1.0};
    const std::vector<std::uint8_t> executed(2, 0);
    CHECK_THROWS_AS(global_reallocate(bad, speeds, executed), ProtocolError);
  }

  TEST_CASE("round phase schedule") {
    const auto w = generate_qtm_workload(40, 12, QtmParams{}, 2);
    const auto g = PlatformGraph::switched_star(heterogeneous_speeds(4, 3));
    const auto run = run_ma(w, g, MultiagentConfig{}, RandomBusy{1.0, 0.1, true}, 3);
    REQUIRE(run.rounds.size() == 12 * 5);
    using P = RoundPhase;
    const auto& first = run.rounds[0];
    CHECK(first.step == 0);
    CHECK(first.phases ==
          std::vector<P>{P::InitialPartition, P::Sampling, P::ResultShare, P::Normalize, P::Reallocate, P::Execute});
    const auto& t5 = run.rounds[5 * 5];
    CHECK(t5.step == 5);
    CHECK(t5.phases == std::vector<P>{P::Reallocate, P::Execute});
    CHECK(t5.transfers == 0);
    const auto& t10 = run.rounds[10 * 5 + 1];
    CHECK(t10.step == 10);
    CHECK(t10.phases == std::vector<P>{P::Sampling, P::ResultShare, P::Normalize, P::Reallocate, P::Execute});
    CHECK(to_string(P::ResultShare) == "result_share");
  }

  TEST_CASE("rescale rounds re-share") {
    const auto w = generate_qtm_workload(40, 3, QtmParams{}, 2);
    const auto g = PlatformGraph::switched_star(heterogeneous_speeds(4, 3));
    MultiagentConfig cfg;
    cfg.rescale = true;
    const auto run = run_ma(w, g, cfg, RandomBusy{1.0, 0.1, true}, 3);
    using P = RoundPhase;
    CHECK(run.rounds[5].phases == std::vector<P>{P::ResultShare, P::Reallocate, P::Execute});
    CHECK(run.result.metrics.jobs_executed == run.result.metrics.jobs_expected);
  }

  TEST_CASE("agents agree every round and the books balance") {
    const auto w = generate_qtm_workload(60, 6, QtmParams{}, 8);
    for (std::size_t m : {1u, 2u, 5u, 8u}) {
      const auto g = PlatformGraph::switched_star(heterogeneous_speeds(m, 6));
      MultiagentConfig cfg;
      cfg.resample_period = 3;
      const auto run = run_ma(w, g, cfg, RandomBusy{1.0, 0.1, true}, 4);
      const auto& mx = run.result.metrics;
      CHECK(run.checks == run.rounds.size());
      CHECK(mx.jobs_executed == mx.jobs_expected);
      CHECK(mx.busy_compute == mx.realized_work);
      CHECK(mx.cost == static_cast<double>(m) * mx.makespan);
    }
  }

  TEST_CASE("sampled jobs are not executed twice") {
    const auto w = generate_qtm_workload(50, 4, QtmParams{}, 8);
    const auto g = PlatformGraph::switched_star(heterogeneous_speeds(6, 2));
    MultiagentConfig cfg;
    cfg.resample_period = 2;
    const auto run = run_ma(w, g, cfg, RandomBusy{1.0, 0.1, true}, 4, true);
    std::map<std::tuple<std::uint32_t, std::uint32_t, JobId>, int> count;
    std::size_t replicas = 0;
    for (const auto& ev : run.result.trace.events()) {
      if (ev.kind != EventKind::JobBatchComplete) continue;
      if (ev.replica) {
        ++replicas;
        continue;
      }
      for (JobId j : ev.jobs) ++count[{ev.step, ev.loop, j}];
    }
    CHECK(count.size() == 50u * 5u * 4u);
    for (const auto& [key, c] : count) REQUIRE(c == 1);
    CHECK(replicas > 0);
  }

  TEST_CASE("no agent becomes a hotspot") {
    const auto w = generate_qtm_workload(100, 5, QtmParams{}, 1);
    const auto g = PlatformGraph::switched_star(heterogeneous_speeds(16, 1));
    const auto run = run_ma(w, g, MultiagentConfig{}, RandomBusy{1.0, 0.1, true}, 1);
    const auto& mx = run.result.metrics;
    CHECK(static_cast<double>(mx.max_inbound) <= 2.0 * mx.median_inbound());
  }

  TEST_CASE("flat field is predicted exactly") {
    QtmParams p;
    p.nonuniformity = 0.0;
    const auto w = generate_qtm_workload(64, 2, p, 1);
    const auto speeds = heterogeneous_speeds(4, 9);
    const auto g = PlatformGraph::switched_star(speeds);
    const auto run = run_ma(w, g, MultiagentConfig{}, NoPerturbation{}, 1);
    REQUIRE(run.view.weights.size() == 64);
    for (double wt : run.view.weights) CHECK(std::abs(wt * speeds[0] - p.heavy_loop_base) <= 1e-9);
    for (std::size_t k = 0; k < 4; ++k) CHECK(run.speeds[k] == doctest::Approx(speeds[k] / speeds[0]).epsilon(1e-12));
  }

  TEST_CASE("runs are reproducible") {
    const auto w = generate_qtm_workload(40, 4, QtmParams{}, 2);
    const auto g = PlatformGraph::switched_star(heterogeneous_speeds(4, 3));
    const auto a = run_ma(w, g, MultiagentConfig{}, RandomBusy{1.0, 0.1, true}, 9);
    const auto b = run_ma(w, g, MultiagentConfig{}, RandomBusy{1.0, 0.1, true}, 9);
    CHECK(a.result.metrics.makespan == b.result.metrics.makespan);
    CHECK(a.result.metrics.total_bytes == b.result.metrics.total_bytes);
  }
}
