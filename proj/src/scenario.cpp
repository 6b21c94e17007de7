#include "loadsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "loadsim/error.hpp"
#include "loadsim/master_slave.hpp"
#include "loadsim/metrics.hpp"

namespace loadsim {

namespace {

constexpr const char* kValidPolicies = "static, fixed:c=N, fac, wf, awf, af, multiagent (ma)";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& v, std::size_t line, const std::string& key) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ParseError(line, key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& v, std::size_t line, const std::string& key) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ParseError(line, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& v, std::size_t line, const std::string& key) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ParseError(line, key + ": expected true or false, got '" + v + "'");
}

double positive(double v, std::size_t line, const std::string& key) {
  if (!(v > 0.0)) throw ParseError(line, key + " must be > 0");
  return v;
}

double non_negative(double v, std::size_t line, const std::string& key) {
  if (!(v >= 0.0)) throw ParseError(line, key + " must be >= 0");
  return v;
}

std::size_t at_least_one(std::uint64_t v, std::size_t line, const std::string& key) {
  if (v < 1) throw ParseError(line, key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

class Parser {
 public:
  Scenario scenario;
  bool have_workload = false;
  bool have_policy = false;
  bool policy_from_list = false;

  void workload_key(const std::string& key, const std::string& v, std::size_t line) {
    WorkloadSpec& w = scenario.workload;
    have_workload = true;
    if (key == "type") {
      if (v == "qtm") w.type = WorkloadType::Qtm;
      else if (v == "uniform") w.type = WorkloadType::Uniform;
      else if (v == "lognormal") w.type = WorkloadType::Lognormal;
      else throw ParseError(line, "workload type must be qtm, uniform or lognormal");
    } else if (key == "n") {
      w.n = at_least_one(to_uint(v, line, key), line, key);
      w.qtm.n_particles = w.n;
    } else if (key == "steps") {
      w.steps = at_least_one(to_uint(v, line, key), line, key);
    } else if (key == "heavy_base") {
      w.qtm.heavy_loop_base = positive(to_double(v, line, key), line, key);
    } else if (key == "light_base") {
      w.qtm.light_loop_base = positive(to_double(v, line, key), line, key);
    } else if (key == "nonuniformity") {
      const double x = non_negative(to_double(v, line, key), line, key);
      if (!(x < 1.0)) throw ParseError(line, "nonuniformity must be < 1");
      w.qtm.nonuniformity = x;
    } else if (key == "t") {
      w.t = positive(to_double(v, line, key), line, key);
    } else if (key == "median") {
      w.median = positive(to_double(v, line, key), line, key);
    } else if (key == "sigma") {
      w.sigma = positive(to_double(v, line, key), line, key);
    } else if (key == "seed") {
      w.seed = to_uint(v, line, key);
    } else if (key == "sequential_overhead") {
      w.sequential_overhead = non_negative(to_double(v, line, key), line, key);
    } else if (key == "data_size") {
      w.data_size = static_cast<std::size_t>(to_uint(v, line, key));
    } else {
      unknown("workload", key, line);
    }
  }

  void workload_shorthand(const std::string& v, std::size_t line) {
    const auto colon = v.find(':');
    workload_key("type", trim(v.substr(0, colon)), line);
    if (colon == std::string::npos) return;
    for (const std::string& item : split(v.substr(colon + 1), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ParseError(line, "workload parameter '" + item + "' needs key=value");
      workload_key(trim(item.substr(0, eq)), trim(item.substr(eq + 1)), line);
    }
  }

  void platform_key(const std::string& key, const std::string& v, std::size_t line) {
    PlatformSpec& p = scenario.platform;
    if (key == "topology") {
      p.ring = false;
      if (v == "star") p.topology = Topology::SwitchedStar;
      else if (v == "full") p.topology = Topology::FullyConnected;
      else if (v == "ring") {
        p.topology = Topology::Explicit;
        p.ring = true;
      } else throw ParseError(line, "topology must be star, full or ring");
    } else if (key == "speeds") {
      if (v == "heterogeneous") p.speeds = SpeedPreset::Heterogeneous;
      else if (v == "homogeneous") p.speeds = SpeedPreset::Homogeneous;
      else throw ParseError(line, "speeds must be heterogeneous or homogeneous");
    } else if (key == "alpha") {
      p.alpha = non_negative(to_double(v, line, key), line, key);
    } else if (key == "beta") {
      p.beta = non_negative(to_double(v, line, key), line, key);
    } else if (key == "overhead") {
      p.congestion.overhead = non_negative(to_double(v, line, key), line, key);
    } else if (key == "serial") {
      p.congestion.serial = to_bool(v, line, key);
    } else if (key == "perturbation") {
      if (v == "none") p.perturbation = NoPerturbation{};
      else if (v == "busy") {
        if (!std::holds_alternative<RandomBusy>(p.perturbation)) p.perturbation = RandomBusy{1.0, 0.1, true};
      } else throw ParseError(line, "perturbation must be none or busy");
    } else if (key == "busy_rate" || key == "busy_duration" || key == "busy_distribution") {
      if (!std::holds_alternative<RandomBusy>(p.perturbation)) p.perturbation = RandomBusy{1.0, 0.1, true};
      auto& busy = std::get<RandomBusy>(p.perturbation);
      if (key == "busy_rate") busy.rate = non_negative(to_double(v, line, key), line, key);
      else if (key == "busy_duration") busy.mean_duration = positive(to_double(v, line, key), line, key);
      else if (v == "exponential") busy.exponential_duration = true;
      else if (v == "fixed") busy.exponential_duration = false;
      else throw ParseError(line, "busy_distribution must be fixed or exponential");
    } else {
      unknown("platform", key, line);
    }
  }

  void policies(const std::string& v, std::size_t line, bool append) {
    if (!append || !policy_from_list) scenario.policies.clear();
    policy_from_list = append;
    for (const std::string& name : split(v, ',')) {
      try {
        scenario.policies.push_back(canonical_policy_name(name));
      } catch (const ParseError& e) {
        throw ParseError(line, e.what());
      }
    }
    if (scenario.policies.empty()) throw ParseError(line, "empty policy list");
    have_policy = true;
  }

  void m_grid(const std::string& v, std::size_t line) {
    scenario.m_grid.clear();
    for (const std::string& item : split(v, ',')) {
      scenario.m_grid.push_back(at_least_one(to_uint(item, line, "m"), line, "m"));
    }
    if (scenario.m_grid.empty()) throw ParseError(line, "m needs at least one value");
  }

  void run_key(const std::string& key, const std::string& v, std::size_t line) {
    if (key == "policy") {
      policies(v, line, true);
    } else if (key == "policies") {
      policies(v, line, false);
    } else if (key == "m") {
      m_grid(v, line);
    } else if (key == "replicates") {
      scenario.replicates = at_least_one(to_uint(v, line, key), line, key);
    } else if (key == "master_seed" || key == "seed") {
      scenario.master_seed = to_uint(v, line, key);
    } else if (key == "workers") {
      scenario.workers = static_cast<std::size_t>(to_uint(v, line, key));
    } else {
      unknown("run", key, line);
    }
  }

  void multiagent_key(const std::string& key, const std::string& v, std::size_t line) {
    MultiagentConfig& c = scenario.multiagent;
    if (key == "sample_size") {
      c.sample_size = static_cast<std::size_t>(to_uint(v, line, key));
    } else if (key == "fit_method") {
      try {
        c.fit = parse_fit_method(v);
      } catch (const ProfileError& e) {
        throw ParseError(line, e.what());
      }
    } else if (key == "resample_period") {
      c.resample_period = at_least_one(to_uint(v, line, key), line, key);
    } else if (key == "rescale") {
      c.rescale = to_bool(v, line, key);
    } else {
      unknown("multiagent", key, line);
    }
  }

  void output_key(const std::string& key, const std::string& v, std::size_t line) {
    if (key == "dir") {
      if (v.empty()) throw ParseError(line, "output dir must not be empty");
      scenario.out_dir = v;
    } else if (key == "trace") {
      scenario.trace = to_bool(v, line, key);
    } else {
      unknown("output", key, line);
    }
  }

  void top_key(const std::string& key, const std::string& v, std::size_t line) {
    if (key == "workload") {
      workload_shorthand(v, line);
    } else if (key == "policy" || key == "policies" || key == "m" || key == "replicates" ||
               key == "master_seed" || key == "seed" || key == "workers") {
      run_key(key, v, line);
    } else {
      unknown("top level", key, line);
    }
  }

  [[noreturn]] static void unknown(const std::string& where, const std::string& key, std::size_t line) {
    throw ParseError(line, "unknown key '" + key + "' in " + where);
  }
};

}  // namespace

std::string canonical_policy_name(const std::string& raw) {
  const std::string name = trim(raw);
  if (name == "static" || name == "fac" || name == "wf" || name == "awf" || name == "af" ||
      name == "multiagent") {
    return name;
  }
  if (name == "ma") return "multiagent";
  if (name.rfind("fixed:c=", 0) == 0) {
    const std::string digits = name.substr(8);
    std::uint64_t c = 0;
    const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), c);
    if (!digits.empty() && res.ec == std::errc{} && res.ptr == digits.data() + digits.size() && c >= 1) {
      return "fixed:c=" + std::to_string(c);
    }
  }
  throw ParseError(0, "unknown policy '" + name + "'; valid policies: " + kValidPolicies);
}

std::unique_ptr<Policy> make_policy(const std::string& raw, const MultiagentConfig& multiagent) {
  const std::string name = canonical_policy_name(raw);
  if (name == "multiagent") return std::make_unique<MultiagentPolicy>(multiagent);
  ChunkPolicy chunk;
  if (name == "static") chunk = StaticChunking{};
  else if (name == "fac") chunk = Factoring{};
  else if (name == "wf") chunk = WeightedFactoring{};
  else if (name == "awf") chunk = AdaptiveWeightedFactoring{};
  else if (name == "af") chunk = AdaptiveFactoring{};
  else chunk = FixedSize{static_cast<std::size_t>(std::stoull(name.substr(8)))};
  return std::make_unique<MasterSlavePolicy>(chunk);
}

Scenario parse_scenario(std::string_view text) {
  Parser parser;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "workload" && section != "platform" && section != "run" && section != "multiagent" &&
          section != "output") {
        throw ParseError(line_no, "unknown section [" + section + "]");
      }
      if (section == "workload") parser.have_workload = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "missing key");
    if (section.empty()) parser.top_key(key, value, line_no);
    else if (section == "workload") parser.workload_key(key, value, line_no);
    else if (section == "platform") parser.platform_key(key, value, line_no);
    else if (section == "run") parser.run_key(key, value, line_no);
    else if (section == "multiagent") parser.multiagent_key(key, value, line_no);
    else parser.output_key(key, value, line_no);
  }
  if (!parser.have_workload) throw ParseError(line_no, "missing required [workload] section or workload key");
  if (!parser.have_policy) throw ParseError(line_no, "missing required policy list");
  return std::move(parser.scenario);
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot read scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string explain(const Scenario& s) {
  std::ostringstream out;
  const auto num = [](double v) { return format_double(v); };
  const WorkloadSpec& w = s.workload;
  out << "[workload]\n";
  out << "type = " << (w.type == WorkloadType::Qtm ? "qtm" : w.type == WorkloadType::Uniform ? "uniform" : "lognormal")
      << "\n";
  out << "n = " << w.n << "\nsteps = " << w.steps << "\n";
  if (w.type == WorkloadType::Qtm) {
    out << "heavy_base = " << num(w.qtm.heavy_loop_base) << "\nlight_base = " << num(w.qtm.light_loop_base)
        << "\nnonuniformity = " << num(w.qtm.nonuniformity) << "\n";
  } else if (w.type == WorkloadType::Uniform) {
    out << "t = " << num(w.t) << "\n";
  } else {
    out << "median = " << num(w.median) << "\nsigma = " << num(w.sigma) << "\n";
  }
  out << "seed = " << w.seed << "\nsequential_overhead = " << num(w.sequential_overhead)
      << "\ndata_size = " << w.data_size << "\n\n";

  const PlatformSpec& p = s.platform;
  out << "[platform]\n";
  out << "topology = "
      << (p.ring ? "ring" : p.topology == Topology::SwitchedStar ? "star" : "full") << "\n";
  out << "speeds = " << (p.speeds == SpeedPreset::Heterogeneous ? "heterogeneous" : "homogeneous") << "\n";
  out << "alpha = " << num(p.alpha) << "\nbeta = " << num(p.beta) << "\n";
  out << "overhead = " << num(p.congestion.overhead) << "\nserial = " << (p.congestion.serial ? "true" : "false")
      << "\n";
  if (const auto* busy = std::get_if<RandomBusy>(&p.perturbation)) {
    out << "perturbation = busy\nbusy_rate = " << num(busy->rate) << "\nbusy_duration = "
        << num(busy->mean_duration) << "\nbusy_distribution = "
        << (busy->exponential_duration ? "exponential" : "fixed") << "\n";
  } else {
    out << "perturbation = none\n";
  }
  out << "\n[run]\npolicies = ";
  for (std::size_t i = 0; i < s.policies.size(); ++i) out << (i ? ", " : "") << s.policies[i];
  out << "\nm = ";
  for (std::size_t i = 0; i < s.m_grid.size(); ++i) out << (i ? "," : "") << s.m_grid[i];
  out << "\nreplicates = " << s.replicates << "\nmaster_seed = " << s.master_seed
      << "\nworkers = " << s.workers << "\n\n";
  out << "[multiagent]\nsample_size = " << s.multiagent.sample_size
      << "\nfit_method = " << s.multiagent.fit.to_string()
      << "\nresample_period = " << s.multiagent.resample_period
      << "\nrescale = " << (s.multiagent.rescale ? "true" : "false") << "\n\n";
  out << "[output]\ndir = " << s.out_dir << "\ntrace = " << (s.trace ? "true" : "false") << "\n";
  return out.str();
}

TimeSteppedWorkload build_workload(const WorkloadSpec& spec) {
  switch (spec.type) {
    case WorkloadType::Qtm: {
      QtmParams params = spec.qtm;
      params.n_particles = spec.n;
      return generate_qtm_workload(spec.n, spec.steps, params, spec.seed, spec.sequential_overhead,
                                   spec.data_size);
    }
    case WorkloadType::Uniform:
      return TimeSteppedWorkload(spec.steps, {LoopSpec{"uniform", spec.n, UniformCost{spec.t}}},
                                 spec.sequential_overhead, spec.seed, spec.data_size);
    case WorkloadType::Lognormal:
      return TimeSteppedWorkload(spec.steps,
                                 {LoopSpec{"lognormal", spec.n, LognormalCost{spec.median, spec.sigma}}},
                                 spec.sequential_overhead, spec.seed, spec.data_size);
  }
  throw InvalidWorkload("unknown workload type");
}

PlatformGraph build_platform(const PlatformSpec& spec, std::size_t m, std::uint64_t seed) {
  std::vector<double> speeds =
      spec.speeds == SpeedPreset::Heterogeneous ? heterogeneous_speeds(m, seed) : homogeneous_speeds(m);
  if (spec.ring) return PlatformGraph::ring(std::move(speeds), spec.alpha, spec.beta);
  if (spec.topology == Topology::SwitchedStar) {
    return PlatformGraph::switched_star(std::move(speeds), spec.alpha, spec.beta);
  }
  return PlatformGraph::fully_connected(std::move(speeds), spec.alpha, spec.beta);
}

}  // namespace loadsim
