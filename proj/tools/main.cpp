#include <cstdlib>
#include <iostream>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "provex/cli/commands.hpp"
#include "provex/errors.hpp"

namespace {

using namespace provex::cli;

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  const char* level = std::getenv("PROVEX_LOG");
  if (level == nullptr) return;
  const std::string name(level);
  if (name == "error") spdlog::set_level(spdlog::level::err);
  else if (name == "info") spdlog::set_level(spdlog::level::info);
  else if (name == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::warn("PROVEX_LOG: unknown level '{}'", name);
}

struct RunFlags {
  std::string order = "sensitivity";
  std::string groups = "none";
  std::string schedule = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0";
  std::string backend = "enclosure";
  std::string algorithm = "abstraction-refinement";
  double timeout = -1.0;
};

void add_run_flags(CLI::App* cmd, RunConfig& config, RunFlags& flags, bool need_input) {
  cmd->add_option("--network", config.network, "network JSON")->required();
  auto* input = cmd->add_option("--input", config.inputs, "instance file(s): CSV rows or PGM/PPM");
  if (need_input) input->required();
  cmd->add_option("--instance", config.instance_index, "0-based instance across all inputs");
  cmd->add_option("--epsilon", config.epsilon, "l-infinity radius");
  cmd->add_option("--order", flags.order, "sensitivity|in-order|random");
  cmd->add_option("--groups", flags.groups, "none|rgb");
  cmd->add_option("--schedule", flags.schedule, "comma separated reduction rates ending at 1.0");
  cmd->add_option("--timeout", flags.timeout, "seconds");
  cmd->add_option("--backend", flags.backend, "enclosure|oracle");
  cmd->add_option("--algorithm", flags.algorithm, "abstraction-refinement|baseline");
  cmd->add_option("--seed", config.seed);
  cmd->add_option("--out", config.out_dir, "output directory");
  cmd->add_option("--workers", config.workers, "bench worker threads");
  cmd->add_option("--bounds-window", config.bounds_window, "groups covered by one bounds pass (0 = all)");
  cmd->add_option("--oracle-budget", config.oracle_budget, "bisections per oracle query");
}

void finish_run_config(RunConfig& config, const RunFlags& flags) {
  config.order = parse_order_flag(flags.order);
  config.groups = parse_groups_flag(flags.groups);
  config.schedule = parse_real_list(flags.schedule);
  config.backend = parse_backend_flag(flags.backend);
  if (flags.algorithm == "baseline") {
    config.algorithm = Algorithm::Baseline;
  } else if (flags.algorithm == "abstraction-refinement") {
    config.algorithm = Algorithm::AbstractionRefinement;
  } else {
    throw provex::ValidationError("--algorithm: unknown value '" + flags.algorithm + "'");
  }
  if (flags.timeout >= 0.0) config.timeout_seconds = flags.timeout;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Provably sufficient explanations for feed-forward networks"};
  app.require_subcommand(1);

  RunConfig explain_config;
  RunFlags explain_flags;
  auto* explain = app.add_subcommand("explain", "explain one instance");
  add_run_flags(explain, explain_config, explain_flags, true);

  RunConfig bench_config;
  RunFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "compare both algorithms over every instance");
  add_run_flags(bench, bench_config, bench_flags, false);

  VerifyConfig verify_config;
  std::string verify_subset;
  std::string verify_backend = "enclosure";
  std::string verify_groups = "none";
  auto* verify = app.add_subcommand("verify", "check one feature subset");
  verify->add_option("--network", verify_config.network)->required();
  verify->add_option("--input", verify_config.input)->required();
  verify->add_option("--instance", verify_config.instance_index);
  verify->add_option("--subset", verify_subset, "1-based group labels, e.g. 2,3");
  verify->add_option("--epsilon", verify_config.epsilon);
  verify->add_option("--backend", verify_backend, "enclosure|oracle");
  verify->add_option("--groups", verify_groups, "none|rgb");
  verify->add_option("--oracle-budget", verify_config.oracle_budget);
  verify->add_option("--seed", verify_config.seed);

  RenderConfig render_config;
  std::string layout = "grid";
  int flag_gray = 128;
  auto* render = app.add_subcommand("render", "draw masks from a report");
  render->add_option("--report", render_config.report)->required();
  render->add_option("--layout", layout, "grid|panels");
  render->add_option("--out", render_config.out_dir);
  render->add_option("--flag-gray", flag_gray)->check(CLI::Range(0, 255));

  FixtureConfig fixture_config;
  std::string widths = "8,8";
  auto* fixture = app.add_subcommand("fixture", "write a generated network and instances");
  fixture->add_option("--kind", fixture_config.kind, "running-example|random|mnist-shape");
  fixture->add_option("--seed", fixture_config.seed);
  fixture->add_option("--inputs", fixture_config.inputs);
  fixture->add_option("--widths", widths, "hidden widths, e.g. 8,8");
  fixture->add_option("--outputs", fixture_config.outputs);
  fixture->add_option("--activation", fixture_config.activation);
  fixture->add_option("--instances", fixture_config.instances);
  fixture->add_flag("--images", fixture_config.images, "also write square PGM instances");
  fixture->add_option("--out", fixture_config.out_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*explain) {
      finish_run_config(explain_config, explain_flags);
      return cmd_explain(explain_config, std::cout, std::cerr);
    }
    if (*bench) {
      finish_run_config(bench_config, bench_flags);
      return cmd_bench(bench_config, std::cout, std::cerr);
    }
    if (*verify) {
      if (!verify_subset.empty()) verify_config.subset = parse_index_list(verify_subset);
      verify_config.backend = parse_backend_flag(verify_backend);
      verify_config.groups = parse_groups_flag(verify_groups);
      return cmd_verify(verify_config, std::cout, std::cerr);
    }
    if (*render) {
      if (layout == "grid") {
        render_config.layout = Layout::Grid;
      } else if (layout == "panels") {
        render_config.layout = Layout::Panels;
      } else {
        throw provex::ValidationError("--layout: unknown value '" + layout + "'");
      }
      render_config.flag_gray = static_cast<std::uint8_t>(flag_gray);
      return cmd_render(render_config, std::cout, std::cerr);
    }
    if (*fixture) {
      fixture_config.widths = parse_index_list(widths);
      return cmd_fixture(fixture_config, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}
