#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace loadsim {

// The per-replicate numbers that feed a results row.
struct ReplicateMetrics {
  std::string policy;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double makespan = 0.0;
  double cost = 0.0;
  double max_inbound = 0.0;
  double idle_fraction = 0.0;
};

struct ExperimentResult {
  std::string policy;
  std::size_t m = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> makespan;
  std::vector<double> cost;
  std::vector<double> max_inbound;
  std::vector<double> idle_fraction;

  std::size_t replicates = 0;
  double mean_makespan = 0.0;
  double std_makespan = 0.0;
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double max_inbound_mean = 0.0;
  double idle_fraction_mean = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Mean and sample standard deviation (n - 1). The sum runs over sorted
// values, so the result does not depend on replicate order.
MeanStd mean_std(std::span<const double> values);

ExperimentResult aggregate(std::span<const ReplicateMetrics> replicates);

// Smallest grid m where the candidate's mean cost drops below the
// baseline's after being above or equal at the previous grid point. When
// the candidate is cheaper at the first grid point, that point is returned.
std::optional<std::size_t> find_crossover(std::span<const ExperimentResult> baseline,
                                          std::span<const ExperimentResult> candidate);

inline constexpr const char* kCsvHeader =
    "policy,m,replicates,mean_Tp,std_Tp,mean_Cp,std_Cp,max_inbound_mean,idle_frac_mean";

// Rows as given; callers sort them.
void write_csv(std::ostream& out, std::span<const ExperimentResult> results);
// Reads the summary columns back (per-replicate lists are not in the CSV).
std::vector<ExperimentResult> parse_csv(std::istream& in);

nlohmann::ordered_json to_json(std::span<const ExperimentResult> results);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace loadsim
