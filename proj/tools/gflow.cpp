// gflow: batch driver for the axisymmetric G-flow with surgery.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gflow/driver.hpp"
#include "gflow/validation.hpp"

namespace {

std::string out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("OUT_DIR"); env && *env) return env;
  return "gflow_out";
}

int do_run(const std::string& config, const std::vector<std::string>& overrides, const std::string& out, bool quiet) {
  const gflow::RunResult r = gflow::cmd_run(config, overrides, out);
  if (r.exit_code == gflow::exit_code::kConfig) {
    std::cerr << r.message << '\n';
    return r.exit_code;
  }
  if (!quiet) {
    std::printf("verdict: %s\nsurgeries: %d\nfinal components: %d\nnecks detected: %d\nt: %.6f\nout: %s\n",
                r.verdict.c_str(), r.surgeries, r.final_components, r.necks, r.t, out.c_str());
  }
  if (!r.message.empty()) std::cerr << r.message << '\n';
  return r.exit_code;
}

int do_validate(const std::vector<std::string>& overrides, bool quiet) {
  gflow::ValidationOptions opt;
  opt.overrides = overrides;
  if (!quiet) opt.progress = &std::cerr;
  const auto results = gflow::run_validation(opt);
  std::vector<const gflow::CheckResult*> failed;
  for (const auto& r : results) {
    std::cout << gflow::format_check(r) << '\n';
    if (!r.pass) failed.push_back(&r);
  }
  if (failed.empty()) {
    std::cout << "all " << results.size() << " checks passed\n";
    return gflow::exit_code::kOk;
  }
  std::cout << failed.size() << " check(s) failed:";
  for (const auto* r : failed) std::cout << ' ' << r->id;
  std::cout << '\n';
  return gflow::exit_code::kValidation;
}

int do_detect(const std::string& snapshot, const std::string& config, const std::vector<std::string>& overrides,
              bool quiet) {
  const gflow::DetectResult r = gflow::cmd_detect(snapshot, config, overrides);
  if (r.exit_code == gflow::exit_code::kConfig) {
    std::cerr << "detect: " << r.message << '\n';
    return r.exit_code;
  }
  if (!quiet) {
    std::cout << gflow::kNeckRowHeader << '\n';
    for (const auto& n : r.necks) std::cout << gflow::neck_row(n) << '\n';
  }
  return r.exit_code;
}

int do_sweep(const std::string& config, const std::vector<std::string>& axes, const std::string& out, bool quiet) {
  std::vector<gflow::SweepCell> cells;
  try {
    cells = gflow::cmd_sweep(config, axes, out);
  } catch (const gflow::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return gflow::exit_code::kConfig;
  }
  int worst = 0;
  if (!quiet) std::printf("%-9s %-5s %-24s %-9s %-6s %s\n", "cell", "exit", "verdict", "surgeries", "necks",
                          "overrides");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    std::string ov;
    for (const auto& o : c.overrides) ov += (ov.empty() ? "" : " ") + o;
    if (!quiet) {
      std::printf("%-9zu %-5d %-24s %-9d %-6d %s\n", k, c.result.exit_code, c.result.verdict.c_str(),
                  c.result.surgeries, c.result.necks, ov.c_str());
    }
    if (c.result.exit_code != 0) {
      std::cerr << "cell " << k << " (" << ov << "): exit " << c.result.exit_code << ' ' << c.result.message << '\n';
      if (worst == 0) worst = c.result.exit_code;
    }
  }
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Axisymmetric G-flow with surgery"};
  app.require_subcommand(1);
  std::string config, out, snapshot;
  std::vector<std::string> overrides;
  bool quiet = false;

  auto* run = app.add_subcommand("run", "Run a configured scenario");
  run->add_option("--config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (default: $OUT_DIR or ./gflow_out)");
  run->add_option("--override", overrides, "KEY=VALUE on a dotted config path")->take_all();
  run->add_flag("--quiet", quiet, "Suppress the summary");

  auto* validate = app.add_subcommand("validate", "Run the acceptance suite");
  validate->add_option("--override", overrides, "KEY=VALUE applied to every suite config")->take_all();
  validate->add_flag("--quiet", quiet, "Suppress progress");

  auto* detect = app.add_subcommand("detect", "Detect necks on a saved snapshot");
  detect->add_option("snapshot", snapshot, "Snapshot CSV")->required();
  detect->add_option("--config", config, "Config supplying neck parameters")->check(CLI::ExistingFile);
  detect->add_option("--override", overrides, "KEY=VALUE on a dotted config path")->take_all();
  detect->add_flag("--quiet", quiet, "Print nothing; exit code only");

  auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of override values");
  sweep->add_option("--config", config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory (default: $OUT_DIR or ./gflow_out)");
  sweep->add_option("--override", overrides, "KEY=V1,V2,... on a dotted config path")->take_all();
  sweep->add_flag("--quiet", quiet, "Suppress the summary table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : gflow::exit_code::kConfig;
  }

  if (*run) return do_run(config, overrides, out_dir(out), quiet);
  if (*validate) return do_validate(overrides, quiet);
  if (*detect) return do_detect(snapshot, config, overrides, quiet);
  return do_sweep(config, overrides, out_dir(out), quiet);
}
