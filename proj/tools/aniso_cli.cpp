#include "aniso/runner.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

namespace {

using namespace aniso;

enum Exit { kPass = 0, kFail = 1, kConfig = 2 };

cli::ExperimentConfig load(const std::string& path) { return cli::parse_config(cli::read_json(path)); }

int cmd_validate(const std::string& path) {
  std::vector<std::string> diags;
  try {
    diags = cli::diagnostics(load(path));
  } catch (const Error& e) {
    diags.push_back(e.what());
  }
  for (const auto& d : diags) std::cout << d << "\n";
  if (diags.empty()) std::cout << "ok\n";
  return diags.empty() ? kPass : kConfig;
}

int cmd_run(const std::string& path, const std::string& out_override, int jobs) {
  cli::ExperimentConfig cfg;
  try {
    cfg = load(path);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  if (const auto diags = cli::diagnostics(cfg); !diags.empty()) {
    for (const auto& d : diags) std::cerr << "config error: " << d << "\n";
    return kConfig;
  }
  if (jobs > 0) default_jobs() = jobs;
  const auto t0 = std::chrono::steady_clock::now();
  const cli::RunReport rep = cli::run(cfg);
  const std::filesystem::path dir = out_override.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(out_override);
  cli::write_report(rep, dir);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << rep.summary;
  // wall time stays out of the report so reruns are byte-identical
  std::cerr << "wall time " << secs << " s, report in " << dir.string() << "\n";
  return rep.passed ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic matrix-weight experiments"};
  app.require_subcommand(1);
  std::string config, out;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "run the experiments of a config");
  run->add_option("config", config, "config file")->required();
  run->add_option("--out", out, "report directory (overrides the config)");
  run->add_option("--jobs", jobs, "worker cap")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config, "config file")->required();

  auto* list = app.add_subcommand("list-experiments", "print the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfig;
  }

  try {
    if (*list) {
      for (const auto& n : cli::experiment_names()) std::cout << n << "  " << cli::experiment_summary(n) << "\n";
      return kPass;
    }
    if (*validate) return cmd_validate(config);
    return cmd_run(config, out, jobs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigInvalid ? kConfig : kFail;
  }
}
