#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "loadsim/error.hpp"
#include "loadsim/workload.hpp"

using namespace loadsim;

TEST_SUITE("workload") {
  TEST_CASE("smallest loop DAG") {
    const JobDag dag = build_parallel_loop_dag(1);
    CHECK(dag.vertex_count() == 3);
    REQUIRE(dag.edges.size() == 2);
    CHECK(std::count(dag.edges.begin(), dag.edges.end(), std::make_pair(dag.source(), std::size_t{0})) == 1);
    CHECK(std::count(dag.edges.begin(), dag.edges.end(), std::make_pair(std::size_t{0}, dag.sink())) == 1);
  }

  TEST_CASE("loop DAG of four and of 501") {
    const JobDag four = build_parallel_loop_dag(4);
    CHECK(four.vertex_count() == 6);
    CHECK(four.edges.size() == 8);
    CHECK(job_width(four) == 4);
    const JobDag qtm = build_parallel_loop_dag(501);
    CHECK(qtm.vertex_count() == 503);
    CHECK(qtm.edges.size() == 1002);
  }

  TEST_CASE("empty loop is rejected") { CHECK_THROWS_AS(build_parallel_loop_dag(0), InvalidWorkload); }

  TEST_CASE("every job hangs between source and sink") {
    const JobDag dag = build_parallel_loop_dag(7);
    for (std::size_t j = 0; j < 7; ++j) {
      CHECK(std::count(dag.edges.begin(), dag.edges.end(), std::make_pair(dag.source(), j)) == 1);
      CHECK(std::count(dag.edges.begin(), dag.edges.end(), std::make_pair(j, dag.sink())) == 1);
    }
  }

  TEST_CASE("acyclic with width n for n up to 100") {
    for (std::size_t n = 1; n <= 100; ++n) {
      const JobDag dag = build_parallel_loop_dag(n);
      REQUIRE(is_acyclic(dag));
      REQUIRE(job_width(dag) == n);
    }
  }

  TEST_CASE("a chain has width one and a cycle is detected") {
    JobDag chain{3, {{3, 0}, {0, 1}, {1, 2}, {2, 4}}};
    CHECK(is_acyclic(chain));
    CHECK(job_width(chain) == 1);
    JobDag cyclic{2, {{0, 1}, {1, 0}}};
    CHECK_FALSE(is_acyclic(cyclic));
  }

  TEST_CASE("QTM step structure") {
    const auto w = generate_qtm_workload(10, 1, QtmParams{}, 3);
    CHECK(w.loops().size() == 5);
    CHECK(w.jobs_per_step() == 50);
    std::size_t total = 0;
    for (std::size_t l = 0; l < 5; ++l) total += w.jobs(0, l).size();
    CHECK(total == 50);
  }

  TEST_CASE("QTM job count at full size") {
    const auto w = generate_qtm_workload(501, 10000, QtmParams{}, 3);
    CHECK(w.total_jobs() == 501u * 5u * 10000u);
  }

  TEST_CASE("flat field gives exactly the heavy base") {
    QtmParams p;
    p.nonuniformity = 0.0;
    p.heavy_loop_base = 0.02;
    const auto w = generate_qtm_workload(64, 3, p, 9);
    for (std::size_t step = 0; step < 3; ++step) {
      for (const Job& j : w.jobs(step, 0)) CHECK(j.base_cost == 0.02);
    }
  }

  TEST_CASE("heavy costs stay in the amplitude band and light loops are uniform") {
    QtmParams p;
    p.heavy_loop_base = 0.02;
    p.nonuniformity = 0.5;
    p.light_loop_base = 0.001;
    const auto w = generate_qtm_workload(101, 20, p, 77);
    for (std::size_t step = 0; step < 20; ++step) {
      for (std::size_t loop = 0; loop < 5; ++loop) {
        for (const Job& j : w.jobs(step, loop)) {
          REQUIRE(j.base_cost > 0.0);
          if (loop < kQtmHeavyLoops) {
            REQUIRE(j.base_cost >= 0.02 * 0.5);
            REQUIRE(j.base_cost <= 0.02 * 1.5);
          } else {
            REQUIRE(j.base_cost == 0.001);
          }
        }
      }
    }
  }

  TEST_CASE("field varies across iterates and across steps") {
    const auto w = generate_qtm_workload(101, 2, QtmParams{}, 5);
    CHECK(w.base_cost(0, 0, 10) != w.base_cost(0, 0, 60));
    CHECK(w.base_cost(0, 0, 10) != w.base_cost(1, 0, 10));
  }

  TEST_CASE("generation is a pure function of its arguments") {
    const auto a = generate_qtm_workload(50, 4, QtmParams{}, 42);
    const auto b = generate_qtm_workload(50, 4, QtmParams{}, 42);
    const auto c = generate_qtm_workload(50, 4, QtmParams{}, 43);
    bool differs = false;
    for (std::size_t step = 0; step < 4; ++step) {
      for (std::size_t loop = 0; loop < 5; ++loop) {
        for (std::size_t i = 0; i < 50; ++i) {
          REQUIRE(a.base_cost(step, loop, i) == b.base_cost(step, loop, i));
          differs |= a.base_cost(step, loop, i) != c.base_cost(step, loop, i);
        }
      }
    }
    CHECK(differs);
  }

  TEST_CASE("field stays within [-1, 1]") {
    for (std::size_t step = 0; step < 50; ++step) {
      for (std::size_t i = 0; i < 200; ++i) {
        const double g = qtm_field(i, 200, step, 11);
        REQUIRE(g >= -1.0);
        REQUIRE(g <= 1.0);
      }
    }
  }

  TEST_CASE("invalid parameters") {
    QtmParams p;
    p.nonuniformity = 1.0;
    CHECK_THROWS_AS(generate_qtm_workload(10, 1, p, 1), InvalidWorkload);
    p = QtmParams{};
    p.heavy_loop_base = 0.0;
    CHECK_THROWS_AS(generate_qtm_workload(10, 1, p, 1), InvalidWorkload);
    CHECK_THROWS_AS(generate_qtm_workload(0, 1, QtmParams{}, 1), InvalidWorkload);
    CHECK_THROWS_AS(generate_qtm_workload(10, 0, QtmParams{}, 1), InvalidWorkload);
    CHECK_THROWS_AS(make_uniform_workload(4, 1.0, 1, -1.0), InvalidWorkload);
  }

  TEST_CASE("loop totals") {
    CHECK(loop_total_cost(make_uniform_workload(10, 1.0).jobs(0, 0)) == 10.0);
    CHECK(loop_total_cost(make_explicit_workload({1.0, 2.0, 3.0}).jobs(0, 0)) == 6.0);
    QtmParams p;
    p.nonuniformity = 0.0;
    p.heavy_loop_base = 0.002;
    const auto w = generate_qtm_workload(501, 1, p, 1);
    CHECK(loop_total_cost(w.jobs(0, 0)) == doctest::Approx(derived()["qtm_flat_loop_total"].get<double>()).epsilon(1e-12));
  }

  TEST_CASE("jobs carry ids, loop and payload size") {
    const auto w = generate_qtm_workload(8, 1, QtmParams{}, 1, 0.0, 2048);
    const auto jobs = w.jobs(0, 2);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      CHECK(jobs[i].id == i);
      CHECK(jobs[i].loop_id == 2);
      CHECK(jobs[i].data_size == 2048);
    }
  }

  TEST_CASE("lognormal costs are positive and reproducible") {
    TimeSteppedWorkload w(2, {LoopSpec{"l", 100, LognormalCost{1.0, 0.5}}}, 0.0, 8);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(w.base_cost(1, 0, i) > 0.0);
      CHECK(w.base_cost(1, 0, i) == w.base_cost(1, 0, i));
    }
    CHECK(w.base_cost(0, 0, 3) != w.base_cost(1, 0, 3));
  }
}
