#include "helpers.hpp"

#include "aircomp/harness.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace aircomp;
using testing::config;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "small";
  s.base = config(2, 4, 1, 1.0, 10.0, 0.1, 0.2);
  s.axis = SweepAxis::power_db;
  s.values = {0.0, 10.0, 20.0};
  s.schemes = {"proposed", "equal_power"};
  s.realizations = 4;
  s.master_seed = 11;
  return s;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("sweep points map onto the configuration") {
    auto s = small_spec();
    CHECK(config_at(s, 20.0).power_budgets == std::vector<double>{100.0, 100.0});
    s.axis = SweepAxis::error_variance;
    CHECK(config_at(s, 0.3).error_variances == std::vector<double>{0.3, 0.3});
    s.axis = SweepAxis::num_devices;
    const auto c = config_at(s, 5);
    CHECK(c.num_devices == 5);
    CHECK(c.power_budgets.size() == 5);
    s.axis = SweepAxis::num_antennas;
    CHECK(config_at(s, 8).num_rx_antennas == 8);
  }

  TEST_CASE("spec validation") {
    auto s = small_spec();
    CHECK_NOTHROW(validate_spec(s));
    s.values.clear();
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = small_spec();
    s.schemes = {"proposed", "magic"};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = small_spec();
    s.realizations = 0;
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
    s = small_spec();
    s.axis = SweepAxis::num_devices;
    s.values = {2.5};
    CHECK_THROWS_AS(validate_spec(s), ConfigError);
  }

  TEST_CASE("spec JSON round trip and strictness") {
    const auto s = small_spec();
    const auto j = spec_to_json(s);
    const auto back = spec_from_json(j);
    CHECK(back.values == s.values);
    CHECK(back.schemes == s.schemes);
    CHECK(back.master_seed == s.master_seed);
    CHECK(back.axis == s.axis);
    auto extra = j;
    extra["plot"] = true;
    CHECK_THROWS_AS(spec_from_json(extra), ConfigError);
    auto wrong = j;
    wrong["realizations"] = "many";
    CHECK_THROWS_AS(spec_from_json(wrong), ConfigError);
  }

  TEST_CASE("three values by two schemes give six sorted rows") {
    const auto rows = run_experiment(small_spec());
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const bool ordered = rows[i - 1].sweep_value < rows[i].sweep_value ||
                           (rows[i - 1].sweep_value == rows[i].sweep_value && rows[i - 1].scheme < rows[i].scheme);
      CHECK(ordered);
    }
    for (const auto& r : rows) {
      CHECK(r.metric >= 0.0);
      CHECK(r.realizations == 4);
      CHECK(r.seed == 11);
      CHECK_FALSE(r.floor.has_value());
    }
    // shared channels: the optimum never loses to equal power
    for (std::size_t i = 0; i < rows.size(); i += 2) {
      CHECK(rows[i].scheme == "equal_power");
      CHECK(rows[i + 1].metric <= rows[i].metric + 1e-12);
    }
  }

  TEST_CASE("repeat runs and thread counts agree") {
    const auto s = small_spec();
    const auto a = run_experiment(s, RunOptions{1});
    const auto b = run_experiment(s, RunOptions{1});
    const auto c = run_experiment(s, RunOptions{3});
    CHECK(results_to_csv(a) == results_to_csv(b));
    CHECK(results_to_csv(a) == results_to_csv(c));
  }

  TEST_CASE("floor rows") {
    auto s = small_spec();
    s.include_floor = true;
    const auto rows = run_experiment(s);
    REQUIRE(rows.size() == 9);
    int floors = 0;
    for (const auto& r : rows) {
      REQUIRE(r.floor.has_value());
      if (r.scheme == kFloorScheme) {
        ++floors;
        CHECK(r.metric == *r.floor);
      } else {
        CHECK(r.metric >= *r.floor - 1e-12);
      }
    }
    CHECK(floors == 3);
    s.scenario = Scenario::error_constrained;
    CHECK(run_experiment(s).size() == 6);
  }

  TEST_CASE("outage metrics stay in range") {
    auto s = small_spec();
    s.scenario = Scenario::error_constrained;
    s.schemes = kSchemes;
    s.values = {10.0};
    for (const auto& r : run_experiment(s)) {
      CHECK(r.metric >= 0.0);
      CHECK(r.metric <= 1.0);
    }
  }

  TEST_CASE("CSV shape and round trip") {
    CHECK(results_to_csv({}) == std::string(kCsvHeader) + "\n");
    auto rows = run_experiment(small_spec());
    rows[0].floor = 0.125;
    const auto text = results_to_csv(rows);
    CHECK(count_lines(text) == 7);
    CHECK(text.substr(0, text.find('\n')) == kCsvHeader);
    const auto back = results_from_csv(text);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
    CHECK_THROWS_AS(results_from_csv("a,b\n"), ConfigError);
  }

  TEST_CASE("files and JSON output") {
    const auto s = small_spec();
    const auto rows = run_experiment(s);
    const auto dir = std::filesystem::temp_directory_path();
    const auto csv = (dir / "aircomp_harness.csv").string();
    write_results(rows, csv, OutputFormat::csv, &s);
    CHECK(read_results_csv(csv).size() == rows.size());
    const auto j = results_to_json(rows, &s);
    CHECK(j.at("rows").size() == rows.size());
    CHECK(j.contains("metadata"));
    CHECK_THROWS(write_results(rows, (dir / "no_such_dir" / "x.csv").string(), OutputFormat::csv));
    CHECK_THROWS_AS(output_format_from_string("xml"), ConfigError);
    std::filesystem::remove(csv);
  }

  TEST_CASE("presets") {
    for (const auto& name : preset_names()) {
      const auto p = preset(name);
      CHECK_NOTHROW(validate_spec(p));
      CHECK(p.base.num_devices == 5);
      CHECK(p.base.num_subcarriers == 128);
      CHECK(p.realizations == 500);
      CHECK(p.scenario == (name.back() == 'a' ? Scenario::best_effort : Scenario::error_constrained));
    }
    CHECK(preset("fig5a").base.num_rx_antennas == 4);
    CHECK(preset("fig2a").include_floor);
    CHECK(preset("fig6b").axis == SweepAxis::num_antennas);
    CHECK_THROWS_AS(preset("fig9"), ConfigError);
  }
}
