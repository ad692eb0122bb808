#include "aircomp/benchmarks.hpp"
#include "aircomp/harness.hpp"
#include "aircomp/io.hpp"
#include "aircomp/oracle.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace aircomp;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

OutputFormat pick_format(const std::string& flag, const std::string& out) {
  if (!flag.empty()) return output_format_from_string(flag);
  const bool json = out.size() >= 5 && out.compare(out.size() - 5, 5, ".json") == 0;
  return json ? OutputFormat::json : OutputFormat::csv;
}

struct RunArgs {
  std::string out, format;
  std::optional<std::uint64_t> seed;
  std::optional<int> realizations;
  int threads = 1;
};

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--out", a.out, "Output file")->required();
  cmd->add_option("--format", a.format, "csv or json (default from the file suffix)");
  cmd->add_option("--seed", a.seed, "Master seed override");
  cmd->add_option("--realizations", a.realizations, "Realization count override");
  cmd->add_option("--threads", a.threads, "Worker threads (AIRCOMP_THREADS overrides)");
}

int execute(ExperimentSpec spec, const RunArgs& a) {
  if (a.seed) spec.master_seed = *a.seed;
  if (a.realizations) spec.realizations = *a.realizations;
  validate_spec(spec);
  const OutputFormat fmt = pick_format(a.format, a.out);
  const auto rows = run_experiment(spec, RunOptions{a.threads});
  write_results(rows, a.out, fmt, &spec);
  int flagged = 0;
  for (const auto& r : rows) flagged += r.nonconverged;
  std::cerr << "wrote " << rows.size() << " rows to " << a.out;
  if (flagged) std::cerr << " (" << flagged << " solves stopped at an iteration limit)";
  std::cerr << '\n';
  return 0;
}

nlohmann::json solution_to_json(const Solution& s) {
  const auto& r = s.report;
  nlohmann::json j{{"average_mse", r.average_mse},
                   {"outage_probability", r.outage_probability},
                   {"per_subcarrier_mse", r.per_subcarrier_mse},
                   {"outage_flags", r.outage_flags},
                   {"dual_mu", r.dual_mu},
                   {"iterations", r.iterations},
                   {"converged", r.converged}};
  j["dual_value"] = r.dual_value ? nlohmann::json(*r.dual_value) : nlohmann::json(nullptr);
  j["duality_gap"] = r.duality_gap ? nlohmann::json(*r.duality_gap) : nlohmann::json(nullptr);
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index k = 0; k < s.transmit.amplitudes.rows(); ++k) {
    std::vector<double> row(s.transmit.amplitudes.cols());
    for (Eigen::Index m = 0; m < s.transmit.amplitudes.cols(); ++m) row[m] = s.transmit.amplitudes(k, m);
    amps.push_back(row);
  }
  j["amplitudes"] = amps;
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index m = 0; m < s.receive.beamformers.cols(); ++m) {
    nlohmann::json col = nlohmann::json::array();
    for (Eigen::Index n = 0; n < s.receive.beamformers.rows(); ++n)
      col.push_back({s.receive.beamformers(n, m).real(), s.receive.beamformers(n, m).imag()});
    w.push_back(col);
  }
  j["beamformers"] = w;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transceiver design and Monte Carlo experiments for over-the-air computation"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::string spec_path;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON spec");
  run->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  add_run_options(run, run_args);

  RunArgs preset_args;
  std::string preset_name;
  bool spec_only = false;
  auto* pre = app.add_subcommand("preset", "Run one of the built-in figure experiments");
  pre->add_option("--name", preset_name, "fig2a, fig2b, ..., fig6b")->required();
  pre->add_flag("--spec-only", spec_only, "Write the preset spec as JSON instead of running it");
  add_run_options(pre, preset_args);

  std::uint64_t verify_seed = 1;
  auto* verify = app.add_subcommand("verify", "Cross-check the solvers against brute-force oracles");
  verify->add_option("--seed", verify_seed, "Seed for the random instances");

  std::string cfg_path, channel_path, scenario_name = "best_effort", solve_out;
  auto* solve = app.add_subcommand("solve", "Solve one channel realization");
  solve->add_option("--config", cfg_path, "System config (JSON)")->required();
  solve->add_option("--channel", channel_path, "Channel file (.json or binary)")->required();
  solve->add_option("--scenario", scenario_name, "best_effort or error_constrained");
  solve->add_option("--out", solve_out, "Output JSON (stdout when omitted)");

  std::string sample_cfg, sample_out, variance_name = "unit";
  std::uint64_t sample_seed = 1, sample_index = 0;
  auto* sample = app.add_subcommand("sample", "Draw one channel realization and save it");
  sample->add_option("--config", sample_cfg, "System config (JSON)")->required();
  sample->add_option("--out", sample_out, "Channel file (.json or binary)")->required();
  sample->add_option("--seed", sample_seed, "Master seed");
  sample->add_option("--realization", sample_index, "Realization index");
  sample->add_option("--variance-mode", variance_name, "unit or random");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return execute(spec_from_json(read_json_file(spec_path)), run_args);
    if (*pre) {
      ExperimentSpec spec = preset(preset_name);
      if (spec_only) {
        if (preset_args.seed) spec.master_seed = *preset_args.seed;
        if (preset_args.realizations) spec.realizations = *preset_args.realizations;
        validate_spec(spec);
        write_text_file(preset_args.out, spec_to_json(spec).dump(2) + "\n");
        return 0;
      }
      return execute(spec, preset_args);
    }
    if (*verify) return run_verify_suite(std::cout, verify_seed) ? 0 : 1;
    if (*solve) {
      const SystemConfig cfg = config_from_json(read_json_file(cfg_path));
      const ChannelState ch = load_channel(channel_path);
      const Solution s = solve_proposed(ch, cfg, scenario_from_string(scenario_name));
      const std::string text = solution_to_json(s).dump(2) + "\n";
      if (solve_out.empty())
        std::cout << text;
      else
        write_text_file(solve_out, text);
      return 0;
    }
    if (*sample) {
      const SystemConfig cfg = config_from_json(read_json_file(sample_cfg));
      const auto var = device_variances(variance_mode_from_string(variance_name), cfg.num_devices, sample_seed);
      save_channel(sample_realization(cfg, sample_seed, sample_index, var), sample_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
