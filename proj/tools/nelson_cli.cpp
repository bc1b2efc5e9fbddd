// Command-line front end: effective / microscopic / sweep runs and the
// invariant check suite, configured by a single JSON file.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "nelson/harness.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string out;
  int workers = 0;        // 0: keep the config value
  bool seed_set = false;
  std::uint64_t seed = 0;
  std::string mutation = "none";
};

void add_common(CLI::App* cmd, CliOptions& opt, bool need_config) {
  auto* c = cmd->add_option("--config", opt.config_path, "JSON config file");
  if (need_config) c->required();
  cmd->add_option("--out", opt.out, "output path (CSV; summary JSON next to it)");
  cmd->add_option("--workers", opt.workers, "parallel workers");
  cmd->add_option("--seed", opt.seed, "random seed")
      ->each([&](const std::string&) { opt.seed_set = true; });
}

std::string summary_path(const std::string& csv_path) {
  std::filesystem::path p(csv_path);
  p.replace_extension();
  return p.string() + ".summary.json";
}

void emit(const nelson::RunResult& result, const std::string& out) {
  const std::string csv = nelson::to_csv(result.records);
  if (out.empty()) {
    std::cout << csv;
    std::cout << result.summary_json << '\n';
  } else {
    nelson::write_atomic(out, csv);
    nelson::write_atomic(summary_path(out), result.summary_json + "\n");
    std::cout << "wrote " << out << " and " << summary_path(out) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field comparison runs for a particle-field lattice model"};
  app.require_subcommand(1);

  CliOptions opt;
  auto* eff = app.add_subcommand("effective", "integrate the classical pair (phi, alpha)");
  auto* micro = app.add_subcommand("microscopic", "propagate the full many-body state");
  auto* sweep = app.add_subcommand("sweep", "microscopic/effective comparison over an N list");
  auto* check = app.add_subcommand("check", "run the invariant suites at oracle scale");
  for (auto* cmd : {eff, micro, sweep, check}) add_common(cmd, opt, cmd != check);
  check->add_option("--mutation", opt.mutation,
                    "fault injection: none | flip-dbeta-b-source");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    nelson::RunConfig cfg;
    if (!opt.config_path.empty()) cfg = nelson::load_config(opt.config_path);
    if (!opt.out.empty()) cfg.out = opt.out;
    if (opt.workers > 0) cfg.workers = opt.workers;
    if (opt.seed_set) cfg.seed = opt.seed;
    const nelson::Mutation mutation = nelson::mutation_from_name(opt.mutation);

    if (app.got_subcommand(eff)) {
      emit(nelson::run_effective(cfg), cfg.out);
    } else if (app.got_subcommand(micro)) {
      emit(nelson::run_microscopic(cfg, cfg.N_list.front()), cfg.out);
    } else if (app.got_subcommand(sweep)) {
      emit(nelson::run_sweep(cfg), cfg.out);
    } else {
      nelson::CheckReport report = nelson::run_check(cfg, mutation);
      for (const auto& suite : report.suites) {
        std::cout << (suite.passed ? "PASS" : "FAIL") << "  " << suite.name;
        if (!suite.detail.empty()) std::cout << "  (" << suite.detail << ")";
        std::cout << '\n';
      }
      if (!report.all_passed) return 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
