#pragma once

#include "aircomp/channel.hpp"
#include "aircomp/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aircomp {

enum class SweepAxis { power_db, error_variance, num_devices, num_antennas };

std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

inline const std::vector<std::string> kSchemes = {"proposed", "ignore_csi", "equal_power", "channel_inversion"};
inline constexpr const char* kFloorScheme = "floor";

struct ExperimentSpec {
  std::string name;
  SystemConfig base;
  SweepAxis axis = SweepAxis::power_db;
  std::vector<double> values;
  std::vector<std::string> schemes = kSchemes;
  Scenario scenario = Scenario::best_effort;
  int realizations = 500;
  std::uint64_t master_seed = 1;
  bool include_floor = false;
  VarianceMode variance_mode = VarianceMode::random;
};

// Throws ConfigError describing the first problem.
void validate_spec(const ExperimentSpec& spec);

nlohmann::json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec spec_from_json(const nlohmann::json& j);

// Configuration at one sweep point. Power is given in dB relative to the
// noise power (P = 10^(dB/10) with sigma_z^2 = 1 in the presets).
SystemConfig config_at(const ExperimentSpec& spec, double value);

struct ResultRow {
  std::string sweep_name;
  double sweep_value = 0.0;
  std::string scheme;
  Scenario scenario = Scenario::best_effort;
  double metric = 0.0;
  double stderr_metric = 0.0;
  int realizations = 0;
  std::uint64_t seed = 0;
  std::optional<double> floor;
  int nonconverged = 0;  // realizations whose solver hit an iteration limit
};

bool operator==(const ResultRow& a, const ResultRow& b);

struct RunOptions {
  int threads = 1;  // AIRCOMP_THREADS overrides when set
};

int resolve_threads(int requested);

// Rows ordered by sweep value, then scheme name. With include_floor in the
// best-effort scenario every row carries the mean floor and an extra "floor"
// row is emitted per sweep value.
std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, const RunOptions& opts = {});

inline const char* kCsvHeader = "sweep_name,sweep_value,scheme,scenario,metric,stderr,realizations,seed,floor";

std::string results_to_csv(const std::vector<ResultRow>& rows);
nlohmann::json results_to_json(const std::vector<ResultRow>& rows, const ExperimentSpec* spec = nullptr);
std::vector<ResultRow> results_from_csv(const std::string& text);

enum class OutputFormat { csv, json };
OutputFormat output_format_from_string(const std::string& s);

void write_results(const std::vector<ResultRow>& rows, const std::string& path, OutputFormat format,
                   const ExperimentSpec* spec = nullptr);
std::vector<ResultRow> read_results_csv(const std::string& path);

std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
ExperimentSpec preset(const std::string& name);

}  // namespace aircomp
