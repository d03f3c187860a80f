// SPDX-License-Identifier: Apache-2.0
// Command-line front end: stringwave run|poles <scenario.json>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stringwave/scenario.hpp"

namespace {

namespace sw = stringwave;

enum Exit { ok = 0, validation = 1, numerical = 2, io = 3 };

void print_metrics(const sw::RunReport& r) {
  const auto& m = r.metrics;
  auto show = [](const char* label, const std::optional<double>& v) {
    if (v) std::printf("  %-28s %.6e\n", label, *v);
  };
  show("gem reconstruction (t=0)", m.gem_reconstruction);
  show("energy drift", m.energy_drift);
  show("gem vs sem at x=0 (max)", m.gem_vs_sem_point);
  for (const auto& tv : m.gem_vs_sem) {
    if (tv.value) std::printf("  gem vs sem window t=%-8g %.6e\n", tv.time, *tv.value);
    else std::printf("  gem vs sem window t=%-8g (window empty)\n", tv.time);
  }
  for (const auto& tv : m.gem_vs_dalembert)
    if (tv.value) std::printf("  gem vs dalembert t=%-9g %.6e\n", tv.time, *tv.value);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-domain scattering on a string: GEM and SEM solvers"};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  std::vector<std::string> overrides;
  app.add_flag("-q,--quiet", quiet, "Only print errors");
  app.add_flag("-v,--verbose", verbose, "Print defaulted fields and metrics");
  app.add_option("--override", overrides, "Set a scenario field, e.g. scatterer.spring=60")->take_all();

  std::string scenario_path, out_dir;
  auto* run = app.add_subcommand("run", "Run a scenario and write CSV snapshots and report.json");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--override", overrides, "Set a scenario field")->take_all();
  run->fallthrough();

  auto* poles = app.add_subcommand("poles", "Print the resonance table as CSV");
  poles->add_option("scenario", scenario_path, "Scenario file")->required();
  poles->add_option("--override", overrides, "Set a scenario field")->take_all();
  poles->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (quiet) verbose = false;

  try {
    const auto scenario = sw::load_scenario(scenario_path, overrides);
    if (verbose)
      for (const auto& d : scenario.defaulted) std::fprintf(stderr, "default: %s\n", d.c_str());

    if (poles->parsed()) {
      sw::RunReport report;
      auto modes = sw::find_modes(scenario, report);
      for (const auto& w : report.warnings)
        if (!quiet) std::fprintf(stderr, "warning: %s\n", w.c_str());
      sw::write_poles_csv(std::cout, sw::pole_rows(modes));
      return ok;
    }

    const auto report = sw::run(scenario);
    const auto files = sw::emit(report, out_dir);
    if (!quiet) {
      for (const auto& w : report.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      std::printf("%s: wrote %zu files to %s\n", report.scenario.c_str(), files.size(), out_dir.c_str());
      if (verbose) print_metrics(report);
    }
    return ok;
  } catch (const sw::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return validation;
  } catch (const sw::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return numerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return io;
  }
}
