#include <doctest.h>

#include <vector>

#include "fixtures.hpp"
#include "loadsim/error.hpp"
#include "loadsim/platform.hpp"

using namespace loadsim;

TEST_SUITE("platform") {
  TEST_CASE("self delivery is free") {
    const auto star = PlatformGraph::switched_star(homogeneous_speeds(4));
    CHECK(message_delay(2, 2, 1 << 20, star) == 0.0);
    CHECK(shortest_hop_path(3, 3, star).empty());
  }

  TEST_CASE("one hop delay") {
    const auto g = PlatformGraph::fully_connected(homogeneous_speeds(2), 0.001, 1e-8);
    CHECK(message_delay(0, 1, 100000, g) == doctest::Approx(derived()["delay_1hop"].get<double>()).epsilon(1e-12));
    CHECK(shortest_hop_path(0, 1, g).size() == 1);
  }

  TEST_CASE("two hops without a bandwidth term") {
    const auto star = PlatformGraph::switched_star(homogeneous_speeds(3), 0.001, 0.0);
    const double expected = derived()["delay_2hop_zero_beta"].get<double>();
    CHECK(message_delay(0, 2, 1, star) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(message_delay(0, 2, 1 << 24, star) == doctest::Approx(expected).epsilon(1e-12));
  }

  TEST_CASE("ring of four routes through the lower neighbour") {
    const auto ring = PlatformGraph::ring(homogeneous_speeds(4), 1.0, 0.0);
    const auto path = shortest_hop_path(0, 2, ring);
    REQUIRE(path.size() == 2);
    const auto links = ring.links();
    const Link& first = links[path[0]];
    const Link& second = links[path[1]];
    // 0-1 then 1-2
    CHECK(((first.u == 0 && first.v == 1) || (first.u == 1 && first.v == 0)));
    CHECK(((second.u == 1 && second.v == 2) || (second.u == 2 && second.v == 1)));
  }

  TEST_CASE("fully connected pairs are single edges") {
    const auto g = PlatformGraph::fully_connected(homogeneous_speeds(6), 0.1, 0.0);
    for (ProcId a = 0; a < 6; ++a) {
      for (ProcId b = 0; b < 6; ++b) CHECK(shortest_hop_path(a, b, g).size() == (a == b ? 0u : 1u));
    }
  }

  TEST_CASE("delay is symmetric and monotone") {
    const auto ring = PlatformGraph::ring(heterogeneous_speeds(7, 3), 2e-4, 3e-8);
    const auto star = PlatformGraph::switched_star(heterogeneous_speeds(7, 3));
    for (const PlatformGraph* g : {&ring, &star}) {
      for (ProcId a = 0; a < 7; ++a) {
        for (ProcId b = 0; b < 7; ++b) {
          double prev = -1.0;
          for (std::size_t size : {0u, 1u, 64u, 4096u, 1u << 20}) {
            const double d = message_delay(a, b, size, *g);
            REQUIRE(d == message_delay(b, a, size, *g));
            REQUIRE(d >= prev);
            prev = d;
          }
        }
      }
    }
    // more hops never cost less on a uniform ring
    CHECK(message_delay(0, 1, 100, ring) < message_delay(0, 2, 100, ring));
    CHECK(message_delay(0, 2, 100, ring) < message_delay(0, 3, 100, ring));
  }

  TEST_CASE("disconnected and malformed graphs are rejected") {
    CHECK_THROWS_AS(PlatformGraph({1.0, 1.0, 1.0}, 3, {Link{0, 1, 0.0, 0.0}}), PlatformError);
    CHECK_THROWS_AS(PlatformGraph({1.0, 0.0}, 2, {Link{0, 1, 0.0, 0.0}}), PlatformError);
    CHECK_THROWS_AS(PlatformGraph({}, 0, {}), PlatformError);
    CHECK_THROWS_AS(PlatformGraph({1.0, 1.0}, 2, {Link{0, 1, -1.0, 0.0}}), PlatformError);
  }

  TEST_CASE("speed presets") {
    CHECK(homogeneous_speeds(3) == std::vector<double>{1.0, 1.0, 1.0});
    const auto a = heterogeneous_speeds(16, 5);
    CHECK(a == heterogeneous_speeds(16, 5));
    for (double s : a) {
      CHECK(s >= 0.8);
      CHECK(s <= 2.4);
    }
  }

  TEST_CASE("execution time without perturbation") {
    BusyTimeline quiet(NoPerturbation{}, 1);
    CHECK(realize_execution_time(Job{0, 0, 2.0}, Processor{0, 2.0}, 0.0, quiet) == 1.0);
    CHECK(realize_execution_time(Job{0, 0, 1.0}, Processor{0, 1.0}, 7.0, quiet) == 1.0);
    CHECK(realize_execution_time(Job{0, 0, 1.0}, Processor{0, 0.8}, 0.0, quiet) ==
          derived()["realize_speed_08"].get<double>());
  }

  TEST_CASE("busy intervals only ever stretch work") {
    BusyTimeline busy(RandomBusy{2.0, 0.05, true}, 9);
    BusyTimeline twin(RandomBusy{2.0, 0.05, true}, 9);
    double t = 0.0;
    for (int k = 0; k < 500; ++k) {
      std::vector<BusyInterval> overlaps;
      const double d = realize_execution_time(Job{0, 0, 0.01}, Processor{0, 1.0}, t, busy, &overlaps);
      REQUIRE(d >= 0.01);
      double stolen = 0.0;
      for (const auto& o : overlaps) stolen += o.end - o.start;
      REQUIRE(d == doctest::Approx(0.01 + stolen));
      REQUIRE(d == realize_execution_time(Job{0, 0, 0.01}, Processor{0, 1.0}, t, twin));
      t += d;
    }
  }

  TEST_CASE("perturbation parameters are validated") {
    CHECK_THROWS_AS(validate(RandomBusy{-1.0, 0.1, false}), PlatformError);
    CHECK_THROWS_AS(validate(RandomBusy{1.0, 0.0, false}), PlatformError);
    CHECK_NOTHROW(validate(NoPerturbation{}));
  }
}
