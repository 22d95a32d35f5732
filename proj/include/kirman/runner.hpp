#pragma once

// Seeded ensemble runs, analysis of the resulting series and the artifact
// files written for each run.
//
// Artifacts in the output directory:
//   manifest.json  config echo, seeds, version, timing, summary
//   series.csv     t,value      (trajectory 0 after burn-in)
//   pdf.csv        bin_center,density,count
//   psd.csv        frequency,power
//   fq.csv         q,lag,F
//   hurst.csv      q,H,stderr
//   summary.csv    quantity,measured,predicted,abs_error,tolerance,pass

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kirman/abm.hpp"
#include "kirman/config.hpp"
#include "kirman/sde.hpp"
#include "kirman/stats.hpp"

namespace kirman::runner {

inline constexpr const char* kVersion = "0.1.0";

enum class Family { Sde, Abm };

struct RunSettings {
  double t_end = 1000.0;
  double dt_sample = 1e-3;
  long n_trajectories = 1;
  std::uint64_t master_seed = 1;
  double burn_in_fraction = 0.1;
  long workers = 0;  // 0: one per hardware thread
  double y0 = 0.0;   // 0: geometric mean of the boundaries
};

struct AnalysisSettings {
  bool pdf = true;
  bool psd = true;
  bool multifractal = true;

  int bins_per_decade = 10;
  stats::Range pdf_range{};  // zero: model boundaries
  stats::Range pdf_fit{};    // zero: one decade inside each end of pdf_range

  long psd_segment = 16384;
  double psd_overlap = 0.5;
  int psd_bins_per_decade = 10;
  stats::Range psd_fit{};  // zero: [3 f_1, 1 / (10 dt_sample)]

  std::vector<double> q_values = stats::default_q_values();
  int lags_per_decade = 10;
  long lag_min = 1;
  long lag_max = 0;          // zero: 1% of the series
  stats::Range hurst_fit{};  // zero: [10 dt_sample, lag_max dt_sample]

  double tol_lambda = 0.3;
  double tol_beta = 0.15;
  double min_psd_decades = 2.0;
  double hurst_bound = 0.5;
  double hurst_spread_min = 0.05;
  double ks_max = 0.05;
};

struct OutputSettings {
  std::string dir = "run";
  bool write_series = true;
};

struct ExperimentConfig {
  Family family = Family::Sde;
  sde::SdeSpec sde;
  sde::StepControl step;
  abm::AbmParams abm;
  long abm_x0 = -1;  // negative: round(N / 2)
  RunSettings run;
  AnalysisSettings analysis;
  OutputSettings output;

  /// Throws Config naming the offending key.
  static ExperimentConfig from_key_values(const config::KeyValues& kv);
  /// Every key, so the echo alone reproduces the run.
  config::KeyValues to_key_values() const;
  void validate() const;

  std::size_t samples_per_trajectory() const;
  std::size_t burn_in_samples() const;
};

/// Names of every accepted configuration key.
const std::vector<std::string>& known_keys();

struct SummaryRow {
  std::string quantity;
  double measured = 0.0;
  double predicted = 0.0;
  double abs_error = 0.0;
  double tolerance = 0.0;
  std::optional<bool> pass;  // empty when there is nothing to compare against
};

struct AnalysisResult {
  std::optional<stats::PdfEstimate> pdf;
  std::optional<stats::PowerLawFit> pdf_fit;
  std::optional<stats::SpectrumEstimate> spectrum;
  std::optional<stats::PowerLawFit> psd_fit;
  std::optional<stats::MultifractalResult> multifractal;
  std::optional<double> ks_beta;
  std::vector<SummaryRow> summary;

  bool all_pass() const;
};

struct TrajectoryInfo {
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t reflections = 0;
  bool step_floor_warning = false;
};

struct RunManifest {
  config::KeyValues config;
  std::vector<TrajectoryInfo> trajectories;
  std::string version = kVersion;
  double wall_clock_seconds = 0.0;
  std::optional<sde::Exponents> predicted;
  AnalysisResult analysis;
  std::vector<std::string> warnings;
};

/// Runs the ensemble, analyzes it and writes every artifact into
/// cfg.output.dir.  Module errors are rethrown with the trajectory index.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// Runs the configured analyses on already-sampled series (each entry is
/// one trajectory after burn-in).  Default ranges follow the model in `cfg`;
/// with `data_driven_pdf_range` the PDF range defaults to the data extent.
AnalysisResult analyze_series(std::span<const std::vector<double>> series, double dt_sample,
                              const ExperimentConfig& cfg, bool data_driven_pdf_range = false);

/// Writes pdf/psd/fq/hurst/summary CSVs for `result`.
void write_analysis(const std::filesystem::path& dir, const AnalysisResult& result);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// Rebuilds the config echoed in a manifest.json.
ExperimentConfig config_from_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Figure reproduction

enum class FigureId { Fig1, Fig2, Fig3 };

FigureId parse_figure(std::string_view text);
std::string_view to_string(FigureId id);

struct FigureRun {
  double alpha = 0.0;
  ExperimentConfig config;
};

/// Built-in configurations for one figure, one run per alpha in {0, 1, 2},
/// writing into out/alpha<k>.
std::vector<FigureRun> figure_runs(FigureId id, const std::filesystem::path& out);

struct ComparisonRow {
  std::string figure;
  double alpha = 0.0;
  SummaryRow row;
};

struct FigureReport {
  std::vector<RunManifest> runs;
  std::vector<ComparisonRow> rows;
  bool all_pass() const;
};

/// Executes figure_runs, then writes out/comparison.csv.
FigureReport reproduce_figure(FigureId id, const std::filesystem::path& out, long workers = 0);

}  // namespace kirman::runner
