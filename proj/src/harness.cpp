#include "aircomp/harness.hpp"

#include "aircomp/benchmarks.hpp"
#include "aircomp/io.hpp"
#include "aircomp/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace aircomp {

using nlohmann::json;

namespace {

const std::set<std::string> kSpecFields = {"name",         "base",          "sweep_axis",    "sweep_values",
                                           "schemes",      "scenario",      "realizations",  "master_seed",
                                           "include_floor", "variance_mode"};

bool is_integer(double v) { return std::isfinite(v) && v == std::round(v); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct PointResult {
  std::vector<std::vector<double>> metric;  // [scheme][realization]
  std::vector<std::vector<char>> flagged;
  std::vector<double> floor;
};

double evaluate(const std::string& scheme, const ChannelState& ch, const SystemConfig& cfg, Scenario scenario,
                bool& converged) {
  PolicyPair p;
  if (scheme == "proposed") {
    Solution s = solve_proposed(ch, cfg, scenario);
    p.transmit = std::move(s.transmit);
    p.receive = std::move(s.receive);
    p.converged = s.report.converged;
  } else if (scheme == "ignore_csi") {
    p = ignore_csi_policy(ch, cfg, scenario);
  } else if (scheme == "equal_power") {
    p = equal_power_policy(ch, cfg);
  } else {
    p = channel_inversion_policy(ch, cfg);
  }
  converged = p.converged;
  return scenario == Scenario::best_effort ? average_mse(p.transmit.amplitudes, ch, p.receive, cfg)
                                           : outage_probability(p.transmit.amplitudes, ch, p.receive, cfg);
}

void mean_and_error(const std::vector<double>& xs, double& mean, double& err, int& n) {
  mean = 0.0;
  n = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      mean += x;
      ++n;
    }
  if (n == 0) {
    mean = std::nan("");
    err = 0.0;
    return;
  }
  mean /= n;
  double ss = 0.0;
  for (double x : xs)
    if (!std::isnan(x)) ss += (x - mean) * (x - mean);
  err = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ConfigError("not a number: " + s);
  return v;
}

}  // namespace

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::power_db: return "power_db";
    case SweepAxis::error_variance: return "error_variance";
    case SweepAxis::num_devices: return "num_devices";
    case SweepAxis::num_antennas: return "num_antennas";
  }
  return "power_db";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "power_db") return SweepAxis::power_db;
  if (s == "error_variance") return SweepAxis::error_variance;
  if (s == "num_devices") return SweepAxis::num_devices;
  if (s == "num_antennas") return SweepAxis::num_antennas;
  throw ConfigError("sweep_axis must be power_db, error_variance, num_devices or num_antennas");
}

SystemConfig config_at(const ExperimentSpec& spec, double value) {
  SystemConfig c = spec.base;
  switch (spec.axis) {
    case SweepAxis::power_db:
      c.power_budgets.assign(c.num_devices, std::pow(10.0, value / 10.0));
      break;
    case SweepAxis::error_variance:
      c.error_variances.assign(c.num_devices, value);
      break;
    case SweepAxis::num_devices: {
      const double p = c.power_budgets.empty() ? 1.0 : c.power_budgets.front();
      const double e = c.error_variances.empty() ? 0.0 : c.error_variances.front();
      c.num_devices = static_cast<int>(std::lround(value));
      c.power_budgets.assign(std::max(c.num_devices, 0), p);
      c.error_variances.assign(std::max(c.num_devices, 0), e);
      break;
    }
    case SweepAxis::num_antennas:
      c.num_rx_antennas = static_cast<int>(std::lround(value));
      break;
  }
  return c;
}

void validate_spec(const ExperimentSpec& spec) {
  validate_config(spec.base);
  if (spec.values.empty()) throw ConfigError("sweep_values must not be empty");
  if (spec.schemes.empty()) throw ConfigError("schemes must not be empty");
  std::set<std::string> seen;
  for (const auto& s : spec.schemes) {
    if (std::find(kSchemes.begin(), kSchemes.end(), s) == kSchemes.end()) throw ConfigError("unknown scheme " + s);
    if (!seen.insert(s).second) throw ConfigError("duplicate scheme " + s);
  }
  if (spec.realizations < 1) throw ConfigError("realizations must be positive");
  const bool integral = spec.axis == SweepAxis::num_devices || spec.axis == SweepAxis::num_antennas;
  for (double v : spec.values) {
    if (!std::isfinite(v)) throw ConfigError("sweep_values must be finite");
    if (integral && (!is_integer(v) || v < 1)) throw ConfigError("sweep_values must be positive integers for this axis");
    validate_config(config_at(spec, v));
  }
}

json spec_to_json(const ExperimentSpec& spec) {
  return json{{"name", spec.name},
              {"base", config_to_json(spec.base)},
              {"sweep_axis", to_string(spec.axis)},
              {"sweep_values", spec.values},
              {"schemes", spec.schemes},
              {"scenario", to_string(spec.scenario)},
              {"realizations", spec.realizations},
              {"master_seed", spec.master_seed},
              {"include_floor", spec.include_floor},
              {"variance_mode", to_string(spec.variance_mode)}};
}

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("spec must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kSpecFields.count(key)) throw ConfigError("unknown spec field " + key);
  auto need = [&](const char* k) -> const json& {
    if (!j.contains(k)) throw ConfigError(std::string(k) + " is missing");
    return j.at(k);
  };
  ExperimentSpec s;
  try {
    s.name = j.value("name", std::string());
    s.base = config_from_json(need("base"));
    s.axis = sweep_axis_from_string(need("sweep_axis").get<std::string>());
    s.values = need("sweep_values").get<std::vector<double>>();
    if (j.contains("schemes")) s.schemes = j.at("schemes").get<std::vector<std::string>>();
    s.scenario = scenario_from_string(need("scenario").get<std::string>());
    if (j.contains("realizations")) s.realizations = j.at("realizations").get<int>();
    if (j.contains("master_seed")) s.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("include_floor")) s.include_floor = j.at("include_floor").get<bool>();
    if (j.contains("variance_mode")) s.variance_mode = variance_mode_from_string(j.at("variance_mode").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("spec has a field of the wrong type: ") + e.what());
  }
  validate_spec(s);
  return s;
}

bool operator==(const ResultRow& a, const ResultRow& b) {
  auto same = [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); };
  return a.sweep_name == b.sweep_name && same(a.sweep_value, b.sweep_value) && a.scheme == b.scheme &&
         a.scenario == b.scenario && same(a.metric, b.metric) && same(a.stderr_metric, b.stderr_metric) &&
         a.realizations == b.realizations && a.seed == b.seed && a.floor.has_value() == b.floor.has_value() &&
         (!a.floor || same(*a.floor, *b.floor));
}

int resolve_threads(int requested) {
  if (const char* env = std::getenv("AIRCOMP_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  validate_spec(spec);
  const int V = static_cast<int>(spec.values.size()), S = static_cast<int>(spec.schemes.size());
  const int R = spec.realizations;
  const bool with_floor = spec.include_floor && spec.scenario == Scenario::best_effort;

  std::vector<SystemConfig> cfgs;
  std::vector<std::vector<double>> variances;
  std::vector<PointResult> results(V);
  for (int v = 0; v < V; ++v) {
    cfgs.push_back(config_at(spec, spec.values[v]));
    variances.push_back(device_variances(spec.variance_mode, cfgs.back().num_devices, spec.master_seed));
    results[v].metric.assign(S, std::vector<double>(R, 0.0));
    results[v].flagged.assign(S, std::vector<char>(R, 0));
    results[v].floor.assign(R, 0.0);
  }

  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (long t = next++; t < static_cast<long>(V) * R; t = next++) {
      const int v = static_cast<int>(t / R), r = static_cast<int>(t % R);
      try {
        const SystemConfig& cfg = cfgs[v];
        const ChannelState ch = sample_realization(cfg, spec.master_seed, static_cast<std::uint64_t>(r), variances[v]);
        for (int s = 0; s < S; ++s) {
          bool converged = true;
          try {
            results[v].metric[s][r] = evaluate(spec.schemes[s], ch, cfg, spec.scenario, converged);
          } catch (const IterationLimitError&) {
            results[v].metric[s][r] = std::nan("");
            converged = false;
          }
          results[v].flagged[s][r] = converged ? 0 : 1;
        }
        if (with_floor) results[v].floor[r] = average_floor(ch);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = static_cast<long>(V) * R;
      }
    }
  };
  const int threads = std::min<long>(resolve_threads(opts.threads), static_cast<long>(V) * R);
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ResultRow> rows;
  const std::string axis = to_string(spec.axis);
  for (int v = 0; v < V; ++v) {
    std::optional<double> floor;
    if (with_floor) {
      double mean, err;
      int n;
      mean_and_error(results[v].floor, mean, err, n);
      floor = mean;
      ResultRow fr{axis, spec.values[v], kFloorScheme, spec.scenario, mean, err, n, spec.master_seed, floor, 0};
      rows.push_back(fr);
    }
    for (int s = 0; s < S; ++s) {
      ResultRow row;
      row.sweep_name = axis;
      row.sweep_value = spec.values[v];
      row.scheme = spec.schemes[s];
      row.scenario = spec.scenario;
      mean_and_error(results[v].metric[s], row.metric, row.stderr_metric, row.realizations);
      row.seed = spec.master_seed;
      row.floor = floor;
      for (char f : results[v].flagged[s]) row.nonconverged += f;
      rows.push_back(row);
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.sweep_value != b.sweep_value) return a.sweep_value < b.sweep_value;
    return a.scheme < b.scheme;
  });
  return rows;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.sweep_name + "," + fmt_double(r.sweep_value) + "," + r.scheme + "," + to_string(r.scenario) + "," +
           fmt_double(r.metric) + "," + fmt_double(r.stderr_metric) + "," + std::to_string(r.realizations) + "," +
           std::to_string(r.seed) + "," + (r.floor ? fmt_double(*r.floor) : std::string()) + "\n";
  }
  return out;
}

json results_to_json(const std::vector<ResultRow>& rows, const ExperimentSpec* spec) {
  json out;
  json meta{{"power_reference", "noise_power = 1, power_db maps to P = 10^(dB/10)"},
            {"metric", "average MSE (best_effort) or outage probability (error_constrained)"}};
  if (spec) meta["spec"] = spec_to_json(*spec);
  out["metadata"] = meta;
  json arr = json::array();
  for (const auto& r : rows) {
    json jr{{"sweep_name", r.sweep_name}, {"sweep_value", r.sweep_value}, {"scheme", r.scheme},
            {"scenario", to_string(r.scenario)}, {"metric", r.metric}, {"stderr", r.stderr_metric},
            {"realizations", r.realizations}, {"seed", r.seed}, {"nonconverged", r.nonconverged}};
    jr["floor"] = r.floor ? json(*r.floor) : json(nullptr);
    arr.push_back(jr);
  }
  out["rows"] = arr;
  return out;
}

std::vector<ResultRow> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("results file has an unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) throw ConfigError("results row has " + std::to_string(f.size()) + " fields: " + line);
    ResultRow r;
    r.sweep_name = f[0];
    r.sweep_value = parse_double(f[1]);
    r.scheme = f[2];
    r.scenario = scenario_from_string(f[3]);
    r.metric = parse_double(f[4]);
    r.stderr_metric = parse_double(f[5]);
    r.realizations = std::stoi(f[6]);
    r.seed = std::stoull(f[7]);
    if (!f[8].empty()) r.floor = parse_double(f[8]);
    rows.push_back(r);
  }
  return rows;
}

OutputFormat output_format_from_string(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("format must be csv or json");
}

void write_results(const std::vector<ResultRow>& rows, const std::string& path, OutputFormat format,
                   const ExperimentSpec* spec) {
  write_text_file(path, format == OutputFormat::csv ? results_to_csv(rows) : results_to_json(rows, spec).dump(2) + "\n");
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return results_from_csv(ss.str());
}

std::vector<std::string> preset_names() {
  return {"fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b", "fig6a", "fig6b"};
}

ExperimentSpec preset(const std::string& name) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) throw ConfigError("unknown preset " + name);
  ExperimentSpec s;
  s.name = name;
  s.base.num_devices = 5;
  s.base.num_subcarriers = 128;
  s.base.num_rx_antennas = 1;
  s.base.noise_power = 1.0;
  s.base.power_budgets.assign(5, 1000.0);
  s.base.error_variances.assign(5, 0.2);
  s.base.mse_threshold = 0.05;
  s.scenario = name.back() == 'a' ? Scenario::best_effort : Scenario::error_constrained;
  const std::string fig = name.substr(0, 4);
  if (fig == "fig2" || fig == "fig5") {
    s.axis = SweepAxis::power_db;
    s.values = {0, 5, 10, 15, 20, 25, 30};
    if (fig == "fig5") s.base.num_rx_antennas = 4;
    s.include_floor = s.scenario == Scenario::best_effort;
  } else if (fig == "fig3") {
    s.axis = SweepAxis::error_variance;
    s.values = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  } else if (fig == "fig4") {
    s.axis = SweepAxis::num_devices;
    s.values = {2, 4, 6, 8, 10};
  } else {
    s.axis = SweepAxis::num_antennas;
    s.values = {2, 4, 8, 16, 32};
  }
  return s;
}

}  // namespace aircomp
