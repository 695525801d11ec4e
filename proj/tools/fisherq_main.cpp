#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "fisherq/io_util.hpp"
#include "fisherq/verify.hpp"
#include "fisherq/version.hpp"

namespace {

int cmd_run(const std::string& cfg, const std::string& out_dir, uint64_t seed,
            int threads) {
  using namespace fisherq;
  ScenarioConfig sc = load_scenario(cfg);
  RunOptions opt;
  opt.out_dir = out_dir;
  opt.seed = seed;
  opt.threads = threads;
  RunResult result = run_scenario(sc, opt);
  if (result.exit_code != 0) {
    std::cerr << "verification failures:\n";
    for (const auto& f : result.failed_checks) std::cerr << "  " << f << "\n";
  }
  return result.exit_code;
}

int cmd_verify(const std::string& suite, const std::string& out_dir) {
  using namespace fisherq;
  auto rows = verify_suite(suite);
  std::filesystem::create_directories(out_dir);
  const std::string report =
      (std::filesystem::path(out_dir) / ("verify_" + suite + ".csv")).string();
  write_verify_report(report, rows);
  int failures = 0;
  for (const auto& r : rows) {
    std::printf("[%s] %-38s %-34s %s\n", r.pass ? "pass" : "FAIL",
                r.suite.c_str(), r.name.c_str(),
                format_double(r.value).c_str());
    if (!r.pass) ++failures;
  }
  std::printf("report: %s\n", report.c_str());
  if (failures) std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}

int cmd_list() {
  for (const auto& name : fisherq::list_scenarios())
    std::printf("%s\n", name.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fisherq: statistical quantum field equations toolkit"};
  app.set_version_flag("--version", fisherq::kVersion);
  app.require_subcommand(1);

  std::string cfg, suite, out_dir = ".";
  uint64_t seed = 1;
  int threads = 1;

  CLI::App* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", cfg, "config path or bundled scenario name")
      ->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--seed", seed, "random seed for sampled ensembles");
  run->add_option("--threads", threads, "worker threads for trajectories");

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify
      ->add_option("suite", suite,
                   "one of: scalar, spin, variational, gauge, classical, all")
      ->required();
  verify->add_option("--out", out_dir, "output directory");

  app.add_subcommand("list-scenarios", "list bundled and user scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(cfg, out_dir, seed, threads);
    if (app.got_subcommand("verify")) return cmd_verify(suite, out_dir);
    return cmd_list();
  } catch (const fisherq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fisherq::PropagationError& e) {
    std::cerr << "propagation error: " << e.what() << "\n";
    return 3;
  } catch (const fisherq::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
