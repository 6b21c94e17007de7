#include "loadsim/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "loadsim/error.hpp"

namespace loadsim {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw AggregationError("cannot aggregate zero replicates");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double v : sorted) sum += v;
  MeanStd out;
  out.mean = sum / static_cast<double>(sorted.size());
  if (sorted.size() > 1) {
    double ss = 0.0;
    for (double v : sorted) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(sorted.size() - 1));
  }
  // Guard against rounding pushing the mean outside the sample range.
  out.mean = std::clamp(out.mean, sorted.front(), sorted.back());
  return out;
}

ExperimentResult aggregate(std::span<const ReplicateMetrics> replicates) {
  if (replicates.empty()) throw AggregationError("cannot aggregate zero replicates");
  ExperimentResult out;
  out.policy = replicates.front().policy;
  out.m = replicates.front().m;
  for (const ReplicateMetrics& r : replicates) {
    if (r.policy != out.policy || r.m != out.m) {
      throw AggregationError("replicates mix configurations (" + out.policy + ", m=" +
                             std::to_string(out.m) + ") and (" + r.policy + ", m=" +
                             std::to_string(r.m) + ")");
    }
    out.seeds.push_back(r.seed);
    out.makespan.push_back(r.makespan);
    out.cost.push_back(r.cost);
    out.max_inbound.push_back(r.max_inbound);
    out.idle_fraction.push_back(r.idle_fraction);
  }
  out.replicates = replicates.size();
  const MeanStd tp = mean_std(out.makespan);
  const MeanStd cp = mean_std(out.cost);
  out.mean_makespan = tp.mean;
  out.std_makespan = tp.std;
  out.mean_cost = cp.mean;
  out.std_cost = cp.std;
  out.max_inbound_mean = mean_std(out.max_inbound).mean;
  out.idle_fraction_mean = mean_std(out.idle_fraction).mean;
  return out;
}

std::optional<std::size_t> find_crossover(std::span<const ExperimentResult> baseline,
                                          std::span<const ExperimentResult> candidate) {
  if (baseline.size() != candidate.size()) throw AggregationError("m-grids differ in length");
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    if (baseline[i].m != candidate[i].m) throw AggregationError("m-grids differ");
  }
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const bool cheaper = candidate[i].mean_cost < baseline[i].mean_cost;
    if (!cheaper) continue;
    if (i == 0 || !(candidate[i - 1].mean_cost < baseline[i - 1].mean_cost)) return baseline[i].m;
  }
  return std::nullopt;
}

void write_csv(std::ostream& out, std::span<const ExperimentResult> results) {
  out << kCsvHeader << '\n';
  for (const ExperimentResult& r : results) {
    out << r.policy << ',' << r.m << ',' << r.replicates << ',' << format_double(r.mean_makespan) << ','
        << format_double(r.std_makespan) << ',' << format_double(r.mean_cost) << ','
        << format_double(r.std_cost) << ',' << format_double(r.max_inbound_mean) << ','
        << format_double(r.idle_fraction_mean) << '\n';
  }
}

namespace {

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ParseError(line, "bad number '" + field + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& field, std::size_t line) {
  std::size_t v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
    throw ParseError(line, "bad count '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<ExperimentResult> parse_csv(std::istream& in) {
  std::string text;
  std::size_t line = 0;
  if (!std::getline(in, text) || text != kCsvHeader) throw ParseError(1, "unexpected CSV header");
  ++line;
  std::vector<ExperimentResult> out;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 9) throw ParseError(line, "expected 9 fields");
    ExperimentResult r;
    r.policy = fields[0];
    r.m = parse_count(fields[1], line);
    r.replicates = parse_count(fields[2], line);
    r.mean_makespan = parse_double(fields[3], line);
    r.std_makespan = parse_double(fields[4], line);
    r.mean_cost = parse_double(fields[5], line);
    r.std_cost = parse_double(fields[6], line);
    r.max_inbound_mean = parse_double(fields[7], line);
    r.idle_fraction_mean = parse_double(fields[8], line);
    out.push_back(std::move(r));
  }
  return out;
}

nlohmann::ordered_json to_json(std::span<const ExperimentResult> results) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const ExperimentResult& r : results) {
    nlohmann::ordered_json row;
    row["policy"] = r.policy;
    row["m"] = r.m;
    row["replicates"] = r.replicates;
    row["mean_Tp"] = r.mean_makespan;
    row["std_Tp"] = r.std_makespan;
    row["mean_Cp"] = r.mean_cost;
    row["std_Cp"] = r.std_cost;
    row["max_inbound_mean"] = r.max_inbound_mean;
    row["idle_frac_mean"] = r.idle_fraction_mean;
    row["seeds"] = r.seeds;
    row["Tp"] = r.makespan;
    row["Cp"] = r.cost;
    row["max_inbound"] = r.max_inbound;
    row["idle_frac"] = r.idle_fraction;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace loadsim
