#include "loadsim/binpack.hpp"

#include <algorithm>
#include <limits>

#include "loadsim/error.hpp"

namespace loadsim {

void PackingInstance::validate() const {
  if (speeds.empty()) throw InvalidInstance("packing instance has no bins");
  for (double s : speeds) {
    if (!(s > 0.0)) throw InvalidInstance("bin speeds must be positive");
  }
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInstance("item weights must be positive");
  }
  if (!pins.empty()) {
    if (pins.size() != weights.size()) throw InvalidInstance("pins must cover every item");
    for (const auto& pin : pins) {
      if (pin && *pin >= speeds.size()) throw InvalidInstance("item pinned to a missing bin");
    }
  }
}

namespace {

bool pinned(const PackingInstance& in, std::size_t item) {
  return !in.pins.empty() && in.pins[item].has_value();
}

}  // namespace

double predicted_makespan(const PackingInstance& instance, const std::vector<std::size_t>& bin_of) {
  std::vector<double> load(instance.speeds.size(), 0.0);
  for (std::size_t i = 0; i < bin_of.size(); ++i) load[bin_of[i]] += instance.weights[i];
  double makespan = 0.0;
  for (std::size_t b = 0; b < load.size(); ++b) makespan = std::max(makespan, load[b] / instance.speeds[b]);
  return makespan;
}

Assignment lpt_pack(const PackingInstance& instance) {
  instance.validate();
  const std::size_t n = instance.weights.size();
  const std::size_t bins = instance.speeds.size();
  Assignment out;
  out.bin_of.assign(n, 0);
  std::vector<double> load(bins, 0.0);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (pinned(instance, i)) {
      out.bin_of[i] = *instance.pins[i];
      load[out.bin_of[i]] += instance.weights[i];
    } else {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return instance.weights[a] > instance.weights[b];
  });
  for (std::size_t item : order) {
    const double w = instance.weights[item];
    std::size_t best = 0;
    double best_finish = (load[0] + w) / instance.speeds[0];
    for (std::size_t b = 1; b < bins; ++b) {
      const double finish = (load[b] + w) / instance.speeds[b];
      if (finish < best_finish) {
        best = b;
        best_finish = finish;
      }
    }
    out.bin_of[item] = best;
    load[best] += w;
  }
  out.predicted_makespan = predicted_makespan(instance, out.bin_of);
  return out;
}

Assignment brute_force_pack(const PackingInstance& instance) {
  instance.validate();
  const std::size_t n = instance.weights.size();
  const std::size_t bins = instance.speeds.size();
  if (n > kOracleMaxItems || bins > kOracleMaxBins) {
    throw OracleTooLarge("brute-force oracle is limited to 14 items and 4 bins");
  }
  // Depth-first over items in id order, bins ascending, so complete
  // assignments are visited lexicographically. A branch is cut once its
  // partial makespan reaches the incumbent: equal makespans never replace
  // an earlier (smaller) vector. Loads accumulate in item order, exactly as
  // predicted_makespan() sums them.
  Assignment best;
  best.predicted_makespan = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> current(n, 0);
  std::vector<double> load(bins, 0.0);
  auto search = [&](auto&& self, std::size_t item, double partial) -> void {
    if (partial >= best.predicted_makespan) return;
    if (item == n) {
      best.bin_of = current;
      best.predicted_makespan = partial;
      return;
    }
    const double w = instance.weights[item];
    const std::size_t lo = pinned(instance, item) ? *instance.pins[item] : 0;
    const std::size_t hi = pinned(instance, item) ? lo + 1 : bins;
    for (std::size_t b = lo; b < hi; ++b) {
      const double saved = load[b];
      load[b] = saved + w;
      current[item] = b;
      self(self, item + 1, std::max(partial, load[b] / instance.speeds[b]));
      load[b] = saved;
    }
  };
  search(search, 0, 0.0);
  return best;
}

void to_json(nlohmann::json& j, const PackingInstance& instance) {
  j = nlohmann::json{{"weights", instance.weights}, {"speeds", instance.speeds}};
  if (!instance.pins.empty()) {
    nlohmann::json pins = nlohmann::json::array();
    for (const auto& pin : instance.pins) pins.push_back(pin ? nlohmann::json(*pin) : nlohmann::json());
    j["pins"] = std::move(pins);
  }
}

void from_json(const nlohmann::json& j, PackingInstance& instance) {
  instance.weights = j.at("weights").get<std::vector<double>>();
  instance.speeds = j.at("speeds").get<std::vector<double>>();
  instance.pins.clear();
  if (j.contains("pins")) {
    for (const auto& pin : j.at("pins")) {
      instance.pins.push_back(pin.is_null() ? std::nullopt : std::optional<std::size_t>(pin.get<std::size_t>()));
    }
  }
}

void to_json(nlohmann::json& j, const Assignment& assignment) {
  j = nlohmann::json{{"bin_of", assignment.bin_of}, {"predicted_makespan", assignment.predicted_makespan}};
}

void from_json(const nlohmann::json& j, Assignment& assignment) {
  assignment.bin_of = j.at("bin_of").get<std::vector<std::size_t>>();
  assignment.predicted_makespan = j.at("predicted_makespan").get<double>();
}

}  // namespace loadsim
