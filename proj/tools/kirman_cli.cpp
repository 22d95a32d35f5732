// kirman: command line front end for the simulation and analysis library.
//
//   kirman simulate --config run.cfg [--model.alpha 1 ...]
//   kirman reproduce --figure fig1 --out DIR
//   kirman analyze --series run/series.csv [--config run.cfg] [--out DIR]
//   kirman predict --model.kind return_y --model.eps2 1 --model.alpha 1
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure,
// 4 reproduction outside tolerance.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kirman/config.hpp"
#include "kirman/csv.hpp"
#include "kirman/error.hpp"
#include "kirman/runner.hpp"
#include "kirman/sde.hpp"

namespace {

using kirman::config::format_double;
using kirman::config::KeyValues;
using kirman::runner::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitTolerance = 4;

// Collects "--dotted.key value" and "--dotted.key=value" pairs left over by
// CLI11.
KeyValues dotted_overrides(const std::vector<std::string>& extras) {
  KeyValues kv;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos) {
      kirman::fail(kirman::ErrorCode::Config, "unexpected argument '" + arg + "'");
    }
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      kv.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) kirman::fail(kirman::ErrorCode::Config, arg.substr(2) + ": missing value");
      kv.set(arg.substr(2), extras[++i]);
    }
  }
  return kv;
}

KeyValues load_config(const std::string& path, const std::vector<std::string>& extras) {
  KeyValues kv = path.empty() ? KeyValues{} : KeyValues::load(path);
  kv.merge(dotted_overrides(extras));
  return kv;
}

void print_summary(const std::vector<kirman::runner::SummaryRow>& rows) {
  for (const auto& r : rows) {
    std::printf("  %-18s measured %-12.5g predicted %-12.5g |diff| %-10.4g %s\n", r.quantity.c_str(),
                r.measured, r.predicted, r.abs_error,
                r.pass ? (*r.pass ? "pass" : "FAIL") : "-");
  }
}

int cmd_simulate(const std::string& config_path, const std::string& manifest_path,
                 const std::vector<std::string>& extras) {
  ExperimentConfig cfg;
  if (!manifest_path.empty()) {
    KeyValues kv = kirman::runner::config_from_manifest(manifest_path).to_key_values();
    kv.merge(dotted_overrides(extras));
    cfg = ExperimentConfig::from_key_values(kv);
  } else {
    cfg = ExperimentConfig::from_key_values(load_config(config_path, extras));
  }
  const auto m = kirman::runner::run_experiment(cfg);
  std::printf("wrote %s (%zu trajectories, %.2f s)\n", cfg.output.dir.c_str(), m.trajectories.size(),
              m.wall_clock_seconds);
  print_summary(m.analysis.summary);
  for (const auto& w : m.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return 0;
}

int cmd_reproduce(const std::string& figure, const std::string& out, long workers) {
  const auto id = kirman::runner::parse_figure(figure);
  const auto report = kirman::runner::reproduce_figure(id, out, workers);
  double alpha = -1.0;
  for (const auto& r : report.rows) {
    if (r.alpha != alpha) {
      alpha = r.alpha;
      std::printf("%s alpha=%g\n", r.figure.c_str(), alpha);
    }
    print_summary({r.row});
  }
  std::printf("comparison table: %s\n", (std::filesystem::path(out) / "comparison.csv").c_str());
  return report.all_pass() ? 0 : kExitTolerance;
}

int cmd_analyze(const std::string& series_path, const std::string& config_path, std::string out,
                const std::vector<std::string>& extras) {
  KeyValues kv = load_config(config_path, extras);
  const bool explicit_pdf_range = kv.contains("analysis.pdf_lo") || kv.contains("analysis.pdf_hi");
  const bool has_model = kv.contains("model.kind");
  const auto cfg = ExperimentConfig::from_key_values(kv);
  const auto series = kirman::csv::read_series(series_path);
  if (series.t.size() < 2) kirman::fail(kirman::ErrorCode::Config, series_path + ": needs at least two rows");
  const double dt = series.t[1] - series.t[0];
  if (!(dt > 0.0)) kirman::fail(kirman::ErrorCode::Config, series_path + ": t must be increasing");
  const std::vector<std::vector<double>> one{series.value};
  const auto result = kirman::runner::analyze_series(one, dt, cfg, !explicit_pdf_range && !has_model);
  if (out.empty()) out = std::filesystem::path(series_path).parent_path().string();
  if (out.empty()) out = ".";
  kirman::runner::write_analysis(out, result);
  std::printf("analyzed %zu samples (dt = %s), wrote %s\n", series.value.size(), format_double(dt).c_str(), out.c_str());
  print_summary(result.summary);
  return 0;
}

int cmd_predict(const std::string& config_path, const std::vector<std::string>& extras) {
  const auto cfg = ExperimentConfig::from_key_values(load_config(config_path, extras));
  if (cfg.family != kirman::runner::Family::Sde) {
    kirman::fail(kirman::ErrorCode::Domain, "predict: no power-law prediction for the agent model");
  }
  const auto e = kirman::sde::predict_exponents(cfg.sde);
  std::printf("eta = %s\nlambda = %s\nbeta = %s\n", format_double(e.eta).c_str(),
              format_double(e.lambda).c_str(), format_double(e.beta).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kirman herding model with variable event timescale: simulation and analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kirman::runner::kVersion);

  std::string config_path, manifest_path, figure, out, series_path;
  long workers = 0;

  auto* simulate = app.add_subcommand("simulate", "run an experiment from a config file");
  simulate->add_option("--config", config_path, "key = value configuration file");
  simulate->add_option("--from-manifest", manifest_path, "re-run the config echoed in a manifest.json");
  simulate->allow_extras();

  auto* reproduce = app.add_subcommand("reproduce", "run the built-in figure experiments");
  reproduce->add_option("--figure", figure, "fig1, fig2 or fig3")->required();
  reproduce->add_option("--out", out, "output directory")->required();
  reproduce->add_option("--workers", workers, "worker threads (0: hardware)");

  auto* analyze = app.add_subcommand("analyze", "re-run the statistics on an existing series.csv");
  analyze->add_option("--series", series_path, "series.csv to analyze")->required();
  analyze->add_option("--config", config_path, "configuration for analysis settings and predictions");
  analyze->add_option("--out", out, "output directory (default: next to the series)");
  analyze->allow_extras();

  auto* predict = app.add_subcommand("predict", "print predicted eta, lambda and beta");
  predict->add_option("--config", config_path, "configuration file");
  predict->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, manifest_path, simulate->remaining());
    if (*reproduce) return cmd_reproduce(figure, out, workers);
    if (*analyze) return cmd_analyze(series_path, config_path, out, analyze->remaining());
    if (*predict) return cmd_predict(config_path, predict->remaining());
  } catch (const kirman::Error& e) {
    std::fprintf(stderr, "%s: %s\n", std::string(kirman::to_string(e.code())).c_str(), e.what());
    const bool config_like = e.code() == kirman::ErrorCode::Config || e.code() == kirman::ErrorCode::Domain;
    return config_like ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
