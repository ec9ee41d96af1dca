#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "qftk/errors.hpp"
#include "qftk/experiment.hpp"
#include "qftk/synth.hpp"
#include "qftk/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"QFT-kernel forecasting experiments"};
  app.set_version_flag("--version", QFTK_VERSION);
  app.require_subcommand(1);

  std::string config_path, station, report_dir, synth_out;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run every station in a config");
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  qftk::VerifyOptions verify_opts;
  auto* verify = app.add_subcommand("verify", "Run the kernel oracle suites");
  verify->add_option("--pairs", verify_opts.pairs, "Random pairs per register size")->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_opts.seed, "Seed");
  verify->add_flag("--corrupt-gate-convention", verify_opts.corrupt_gate_convention, "Flip RY on the circuit path (self-test)");

  auto* kernels = app.add_subcommand("kernels", "Write kernel cache files for one station");
  kernels->add_option("--config", config_path, "Experiment config (JSON)")->required();
  kernels->add_option("--station", station, "Station code")->required();
  kernels->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Aggregate station reports");
  report->add_option("--dir", report_dir, "Run output directory")->required();

  qftk::SynthSpec synth_spec;
  int days = 0;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic station CSV");
  synth->add_option("--out", synth_out, "Output CSV")->required();
  auto* days_opt = synth->add_option("--days", days, "Length in days of hourly data")->check(CLI::PositiveNumber);
  auto* steps_opt = synth->add_option("--steps", synth_spec.steps, "Length in hourly steps")->check(CLI::PositiveNumber);
  days_opt->excludes(steps_opt);
  synth->add_option("--seed", synth_spec.seed, "Seed");
  synth->add_option("--station", synth_spec.station_code, "Station code");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return qftk::cmd_run(qftk::load_config(config_path), jobs, std::cerr);
    if (*kernels) return qftk::cmd_kernels(qftk::load_config(config_path), station, jobs, std::cerr);
    if (*report) return qftk::cmd_report(report_dir, std::cerr);
    if (*verify) {
      const auto results = qftk::run_verification(verify_opts);
      std::cout << qftk::format_results(results);
      bool ok = true;
      for (const auto& r : results) ok = ok && r.passed;
      std::cout << (ok ? "all suites passed" : "FAILED") << '\n';
      return ok ? qftk::kExitOk : qftk::kExitFailure;
    }
    if (*synth) {
      if (days > 0) synth_spec.steps = 24L * days;
      const auto series = qftk::synthesize_station(synth_spec);
      qftk::write_series_csv(synth_out, series);
      std::cerr << "wrote " << series.length() << " rows to " << synth_out << '\n';
      return qftk::kExitOk;
    }
  } catch (const qftk::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == qftk::ErrorCode::ConfigError ? qftk::kExitConfig : qftk::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return qftk::kExitFailure;
  }
  return qftk::kExitOk;
}
