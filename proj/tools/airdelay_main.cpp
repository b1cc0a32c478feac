// Command-line front end: run a configured estimation suite, generate synthetic inputs, or
// re-render a saved results file.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "airdelay/pipeline.hpp"

namespace {

using namespace airdelay;

int cmd_run(const std::string& config_path, const std::string& out_dir, const std::string& format,
            std::optional<std::uint64_t> seed, int threads) {
  auto cfg = load_run_config(config_path);
  if (!out_dir.empty()) cfg.output.dir = out_dir;
  if (!format.empty()) set_formats(cfg.output, format, "--format");
  if (seed) {
    if (!cfg.input.synthetic) std::cerr << "note: --seed only affects synthetic inputs\n";
    cfg.input.scenario.seed = *seed;
  }
  const auto outputs = run_suite(cfg, threads);
  for (const auto& line : outputs.log) std::cerr << line << '\n';
  write_outputs(outputs, cfg.output);
  if (cfg.output.text) std::cout << outputs.table;
  return outputs.all_columns_ok ? 0 : 1;
}

int cmd_generate(const std::string& out_dir, std::optional<std::uint64_t> seed, int months) {
  auto scenario = default_market_scenario();
  if (seed) scenario.seed = *seed;
  if (months > 0) scenario.months = months;
  write_market(generate_market(scenario), out_dir);
  std::cerr << "wrote synthetic market to " << out_dir << '\n';
  return 0;
}

int cmd_render(const std::string& results_path) {
  std::ifstream in(results_path);
  if (!in) throw Error("render", "cannot open " + results_path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("render", e.what());
  }
  std::cout << render_regression_table(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Route-month flight delay panel estimation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::uint64_t seed_value = 0;
  int threads = 1;
  auto* run = app.add_subcommand("run", "Build the panel from a configuration and estimate every column");
  run->add_option("--config", config_path, "INI run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--format", format, "text, json, csv or all (comma list allowed)");
  auto* run_seed = run->add_option("--seed", seed_value, "Seed for synthetic inputs");
  run->add_option("--threads", threads, "Columns estimated in parallel")->check(CLI::PositiveNumber);

  std::string gen_out;
  int months = 0;
  auto* gen = app.add_subcommand("generate", "Write a synthetic market in the ingest CSV formats");
  gen->add_option("--out", gen_out, "Output directory")->required();
  auto* gen_seed = gen->add_option("--seed", seed_value, "Scenario seed");
  gen->add_option("--months", months, "Number of months")->check(CLI::PositiveNumber);

  std::string results_path;
  auto* render = app.add_subcommand("render", "Render a regression table from results.json");
  render->add_option("results", results_path, "results.json written by run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_dir, format,
                     run_seed->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt, threads);
    }
    if (gen->parsed())
      return cmd_generate(gen_out, gen_seed->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt,
                          months);
    if (render->parsed()) return cmd_render(results_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
