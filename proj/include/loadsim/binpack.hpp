#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

namespace loadsim {

// Items with unit-speed weights packed onto bins with speeds. A pinned item
// stays on its bin and contributes its weight to that bin's load.
struct PackingInstance {
  std::vector<double> weights;
  std::vector<double> speeds;
  std::vector<std::optional<std::size_t>> pins;  // empty, or one entry per item

  void validate() const;
};

struct Assignment {
  std::vector<std::size_t> bin_of;
  double predicted_makespan = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Largest weight first, each item onto the bin that finishes it earliest.
// Ties: lower item id first, then lower bin id.
Assignment lpt_pack(const PackingInstance& instance);

inline constexpr std::size_t kOracleMaxItems = 14;
inline constexpr std::size_t kOracleMaxBins = 4;

// Exhaustive search. Among optimal assignments the lexicographically
// smallest item->bin vector wins.
Assignment brute_force_pack(const PackingInstance& instance);

// max over bins of (sum of weights) / speed.
double predicted_makespan(const PackingInstance& instance, const std::vector<std::size_t>& bin_of);

void to_json(nlohmann::json& j, const PackingInstance& instance);
void from_json(const nlohmann::json& j, PackingInstance& instance);
void to_json(nlohmann::json& j, const Assignment& assignment);
void from_json(const nlohmann::json& j, Assignment& assignment);

}  // namespace loadsim
