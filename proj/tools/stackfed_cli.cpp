#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "stackfed/error.hpp"
#include "stackfed/runner.hpp"
#include "stackfed/synth.hpp"
#include "stackfed/tabular.hpp"

namespace fs = std::filesystem;
using namespace stackfed;

namespace {

int cmd_run(const fs::path& config_path, std::size_t workers) {
  ExperimentConfig cfg = load_config(config_path);
  if (workers > 0) cfg.workers = workers;
  const ExperimentResult result = run_experiment(cfg);
  fs::create_directories(cfg.output_dir);
  write_results(result.rows, cfg.output_dir / "results.csv");
  {
    std::ofstream out(cfg.output_dir / "contributions.csv", std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write contributions.csv");
    write_contributions(result.contributions, out);
  }
  {
    std::ofstream out(cfg.output_dir / "run.log", std::ios::binary);
    for (const auto& line : result.log) out << line << '\n';
  }
  std::printf("%zu rows from %zu of %zu cells written to %s\n", result.rows.size(),
              result.total_cells - result.skipped_cells, result.total_cells,
              cfg.output_dir.string().c_str());
  return 0;
}

std::vector<ContributionRecord> contributions_beside(const fs::path& results_path) {
  const fs::path path = results_path.parent_path() / "contributions.csv";
  if (!fs::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  return read_contributions(in);
}

int cmd_plots(const fs::path& results_path, const std::string& panel, const fs::path& out_dir) {
  const auto rows = read_results(results_path);
  const auto contributions = contributions_beside(results_path);
  const PlotTable table = plot_data(rows, contributions, panel);
  for (const auto& w : table.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (out_dir.empty()) {
    write_plot_table(table, std::cout);
  } else {
    const auto path = emit_plot_data(rows, contributions, panel, out_dir);
    std::printf("%s\n", path.string().c_str());
  }
  return 0;
}

int cmd_graph(const fs::path& dir) {
  const fs::path path = dir / "contributions.csv";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open '" + path.string() + "'");
  const auto files = export_graphs(read_contributions(in), dir / "graphs");
  std::printf("%zu edge lists written to %s\n", files.size(), (dir / "graphs").string().c_str());
  return 0;
}

int cmd_synth(const fs::path& out, std::size_t rows, std::uint64_t seed) {
  std::ofstream file(out, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIo, "cannot write '" + out.string() + "'");
  write_csv(synthetic_dataset(rows, seed), file);
  std::printf("%zu rows written to %s\n", rows, out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized federated learning through stacked forests"};
  app.require_subcommand(1);

  fs::path config_path;
  std::size_t workers = 0;
  auto* run = app.add_subcommand("run", "Run an experiment grid");
  run->add_option("--config", config_path, "JSON experiment config")->required();
  run->add_option("--workers", workers, "Worker threads (overrides config)");

  fs::path results_path;
  std::string panel;
  fs::path plot_out;
  auto* plots = app.add_subcommand("plots", "Aggregate results into plot data");
  plots->add_option("--results", results_path, "results.csv")->required();
  plots->add_option("--panel", panel, "Panel name")->required();
  plots->add_option("--out", plot_out, "Output directory (default: stdout)");

  fs::path results_dir;
  auto* graph = app.add_subcommand("graph", "Export contribution edge lists");
  graph->add_option("--results-dir", results_dir, "Directory holding contributions.csv")
      ->required();

  fs::path synth_out;
  std::size_t synth_rows = 20000;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Write the built-in synthetic dataset");
  synth->add_option("--out", synth_out, "Output CSV")->required();
  synth->add_option("--rows", synth_rows, "Row count");
  synth->add_option("--seed", synth_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, workers);
    if (*plots) return cmd_plots(results_path, panel, plot_out);
    if (*graph) return cmd_graph(results_dir);
    if (*synth) return cmd_synth(synth_out, synth_rows, synth_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
