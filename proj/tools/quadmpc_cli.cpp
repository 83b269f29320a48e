#include "quadmpc/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int report_checks(const std::vector<quadmpc::MetricsRow>& rows) {
  int failures = 0;
  for (const auto& c : quadmpc::check_orderings(rows)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    failures += c.passed ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive convex MPC disturbance-compensation benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario;
  std::string mode;
  std::string out_dir = "results";
  unsigned parallel = 1;
  bool check = false;
  auto* run = app.add_subcommand("run", "Run the scenario matrix");
  run->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "Run only this scenario id");
  run->add_option("--mode", mode, "Run only this mode")->check(CLI::IsMember({"off", "static", "periodic"}));
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("--parallel", parallel, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  run->add_flag("--check", check, "Exit nonzero if an ordering check fails");

  std::string in_dir;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from stored episode logs");
  metrics->add_option("--in", in_dir, "Directory written by run")->required()->check(CLI::ExistingDirectory);
  metrics->add_flag("--check", check, "Exit nonzero if an ordering check fails");

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<quadmpc::MetricsRow> rows;
    if (*run) {
      const auto cfg = quadmpc::load_matrix_config(config_path);
      quadmpc::MatrixOptions opts;
      opts.out_dir = out_dir;
      opts.parallel = parallel;
      if (!scenario.empty()) opts.scenario = scenario;
      if (!mode.empty()) opts.mode = quadmpc::parse_mode(mode);
      rows = quadmpc::run_scenario_matrix(cfg, opts);
      std::cout << "1000 x MSE of forward velocity\n" << quadmpc::format_metrics_table(rows);
      for (const auto& r : rows)
        if (r.failed) std::cout << "episode " << r.scenario << "/" << quadmpc::to_string(r.mode) << " failed\n";
      std::cout << "wrote " << out_dir << "/matrix.csv\n";
    } else {
      rows = quadmpc::recompute_metrics(in_dir);
      std::cout << quadmpc::format_metrics_table(rows);
      quadmpc::write_matrix_csv(rows, std::cout);
    }
    if (check) return report_checks(rows);
  } catch (const quadmpc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
