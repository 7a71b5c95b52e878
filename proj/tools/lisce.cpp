// Command-line front end. Each subcommand pins the experiment family; the
// config file (optional for most) supplies everything else. Exit codes:
// 0 success, 2 config error, 3 numerical failure, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lisce/errors.hpp"
#include "lisce/harness/chart.hpp"
#include "lisce/harness/config.hpp"
#include "lisce/harness/experiments.hpp"

namespace {

using namespace lisce;
using namespace lisce::harness;

// The subcommand names the experiment family; a config file may pick a
// sibling within it (e.g. eval-rate honors rate-vs-k) but never an outsider.
Experiment coerce(Experiment got, std::initializer_list<Experiment> family,
                  Experiment fallback) {
  for (Experiment e : family)
    if (e == got) return got;
  return fallback;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  bool has_seed = false;
  bool has_out = false;
  bool has_threads = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "experiment config file");
  sub->add_option("--seed", f.seed, "RNG seed (overrides config)")
      ->each([&](const std::string&) { f.has_seed = true; });
  sub->add_option("--out", f.out_dir, "output directory (overrides config)")
      ->each([&](const std::string&) { f.has_out = true; });
  sub->add_option("--threads", f.threads, "worker threads, 0 = hardware default")
      ->check(CLI::NonNegativeNumber)
      ->each([&](const std::string&) { f.has_threads = true; });
}

ExperimentConfig build_config(const CommonFlags& f,
                              std::initializer_list<Experiment> family,
                              Experiment fallback) {
  ExperimentConfig cfg;
  if (!f.config_path.empty()) cfg = load_config(f.config_path);
  cfg.experiment = coerce(cfg.experiment, family, fallback);
  if (f.has_seed) cfg.seed = f.seed;
  if (f.has_out) cfg.out = f.out_dir;
  if (f.has_threads) cfg.threads = f.threads;
  return cfg;
}

int run_and_report(const ExperimentConfig& cfg) {
  const RunManifest man = run_experiment(cfg);
  std::cout << experiment_name(cfg.experiment) << ": wrote " << man.files.size()
            << " file(s) under " << cfg.out << "\n";
  for (const auto& mf : man.files) std::cout << "  " << mf.name << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LIS-aided channel estimation toolkit"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    std::initializer_list<Experiment> family;
    Experiment fallback;
  };
  const Sub subs[] = {
      {"analyze", "closed-form MSE curves (no Monte Carlo)",
       {Experiment::mse_vs_snr, Experiment::mse_vs_rho}, Experiment::mse_vs_snr},
      {"simulate-mse", "empirical estimation MSE sweeps",
       {Experiment::mse_vs_snr, Experiment::mse_vs_rho}, Experiment::mse_vs_snr},
      {"optimize-phi", "MM phase-shift optimization traces",
       {Experiment::mm_trace}, Experiment::mm_trace},
      {"gen-data", "generate and persist train/val/test datasets",
       {Experiment::gen_data}, Experiment::gen_data},
      {"train", "train a denoising network and save weights",
       {Experiment::train}, Experiment::train},
      {"eval-cnn", "hyperparameter table: CNN test MSE and inference timing",
       {Experiment::table_hyperparams}, Experiment::table_hyperparams},
      {"eval-rate", "achievable downlink rate sweeps",
       {Experiment::rate_vs_snr, Experiment::rate_vs_k}, Experiment::rate_vs_snr},
  };

  CommonFlags flags[std::size(subs)];
  CLI::App* handles[std::size(subs)];
  for (std::size_t i = 0; i < std::size(subs); ++i) {
    handles[i] = app.add_subcommand(subs[i].name, subs[i].help);
    add_common(handles[i], flags[i]);
  }

  // chart re-renders an SVG from any CSV this tool wrote.
  std::string chart_csv, chart_svg;
  ChartSpec spec;
  CLI::App* chart = app.add_subcommand("chart", "render an SVG line chart from a CSV");
  chart->add_option("--csv", chart_csv, "input CSV path")->required();
  chart->add_option("--x", spec.x_col, "x-axis column")->required();
  chart->add_option("--y", spec.y_col, "y-axis column")->required();
  chart->add_option("--series", spec.series_col, "series (legend) column");
  chart->add_option("--title", spec.title, "chart title");
  chart->add_option("--x-label", spec.x_label, "x-axis label");
  chart->add_option("--y-label", spec.y_label, "y-axis label");
  chart->add_flag("--log-y", spec.log_y, "log-scale y axis");
  chart->add_flag("--db-y", spec.db_y, "plot 10*log10 of the y column");
  chart->add_option("--svg", chart_svg, "output SVG path (default: CSV with .svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (chart->parsed()) {
      if (chart_svg.empty())
        chart_svg = std::filesystem::path(chart_csv).replace_extension(".svg").string();
      emit_chart(chart_csv, spec, chart_svg);
      std::cout << "wrote " << chart_svg << "\n";
      return 0;
    }
    for (std::size_t i = 0; i < std::size(subs); ++i) {
      if (!handles[i]->parsed()) continue;
      ExperimentConfig cfg = build_config(flags[i], subs[i].family, subs[i].fallback);
      if (std::string(subs[i].name) == "analyze")
        cfg.methods = {SeriesKind::ls_analytic, SeriesKind::lmmse_analytic};
      return run_and_report(cfg);
    }
    std::cerr << "lisce: no subcommand\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "lisce: config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "lisce: i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "lisce: error: " << e.what() << "\n";
    return 3;
  }
}
