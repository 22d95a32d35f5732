#include "kirman/runner.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "kirman/csv.hpp"
#include "kirman/error.hpp"
#include "kirman/random.hpp"

namespace kirman::runner {

using config::format_double;
using config::KeyValues;
using stats::Range;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_set(const Range& r) { return r.lo > 0.0 || r.hi > 0.0; }

std::string_view kind_name(const ExperimentConfig& cfg) {
  return cfg.family == Family::Abm ? std::string_view("abm") : sde::to_string(cfg.sde.kind);
}

[[noreturn]] void config_error(std::string_view key, std::string_view what) {
  fail(ErrorCode::Config, std::string(key) + ": " + std::string(what));
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "model.kind", "model.eps1", "model.eps2", "model.alpha", "model.eta", "model.lambda",
      "model.a_lin", "model.b_amp", "model.y_min", "model.y_max", "model.noise_scale",
      "model.N", "model.sigma1", "model.sigma2", "model.h", "model.rate_cap", "model.X0",
      "step.kappa", "step.dt_min", "step.dt_max", "step.floor_fraction",
      "run.t_end", "run.dt_sample", "run.n_trajectories", "run.master_seed",
      "run.burn_in_fraction", "run.workers", "run.y0",
      "analysis.pdf", "analysis.psd", "analysis.multifractal", "analysis.bins_per_decade",
      "analysis.pdf_lo", "analysis.pdf_hi", "analysis.pdf_fit_lo", "analysis.pdf_fit_hi",
      "analysis.psd_segment", "analysis.psd_overlap", "analysis.psd_bins_per_decade",
      "analysis.psd_fit_lo", "analysis.psd_fit_hi", "analysis.q_values",
      "analysis.lags_per_decade", "analysis.lag_min", "analysis.lag_max",
      "analysis.hurst_fit_lo", "analysis.hurst_fit_hi", "analysis.tol_lambda",
      "analysis.tol_beta", "analysis.min_psd_decades", "analysis.hurst_bound",
      "analysis.hurst_spread_min", "analysis.ks_max",
      "output.dir", "output.write_series",
  };
  return keys;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
  kv.reject_unknown(known_keys());
  ExperimentConfig cfg;

  const std::string kind = kv.get_string("model.kind", "return_y");
  if (kind == "abm") {
    cfg.family = Family::Abm;
  } else {
    try {
      cfg.sde.kind = sde::parse_model_kind(kind);
    } catch (const Error&) {
      config_error("model.kind", "expected one of return_y, population_x, powerlaw, cev, abm; got '" + kind + "'");
    }
    // Kind-specific boundaries before any override.
    if (cfg.sde.kind == sde::ModelKind::PopulationX) cfg.sde = sde::SdeSpec::population_x(1.0, 1.0, 0.0);
    cfg.sde.kind = sde::parse_model_kind(kind);
  }

  auto& s = cfg.sde;
  s.eps1 = kv.get_double("model.eps1", s.eps1);
  s.eps2 = kv.get_double("model.eps2", s.eps2);
  s.alpha = kv.get_double("model.alpha", s.alpha);
  s.eta = kv.get_double("model.eta", s.kind == sde::ModelKind::ReturnY ? (3.0 + s.alpha) / 2.0 : s.eta);
  s.lambda = kv.get_double("model.lambda", s.lambda);
  s.a_lin = kv.get_double("model.a_lin", s.a_lin);
  s.b_amp = kv.get_double("model.b_amp", s.b_amp);
  s.y_min = kv.get_double("model.y_min", s.y_min);
  s.y_max = kv.get_double("model.y_max", s.y_max);
  s.noise_scale = kv.get_double("model.noise_scale", s.noise_scale);

  auto& a = cfg.abm;
  a.N = kv.get_long("model.N", a.N);
  a.sigma1 = kv.get_double("model.sigma1", a.sigma1);
  a.sigma2 = kv.get_double("model.sigma2", a.sigma2);
  a.h = kv.get_double("model.h", a.h);
  a.alpha = s.alpha;
  a.rate_cap = kv.get_double("model.rate_cap", a.rate_cap);
  cfg.abm_x0 = kv.get_long("model.X0", cfg.abm_x0);

  auto& st = cfg.step;
  st.kappa = kv.get_double("step.kappa", st.kappa);
  st.dt_min = kv.get_double("step.dt_min", st.dt_min);
  st.dt_max = kv.get_double("step.dt_max", st.dt_max);
  st.floor_fraction = kv.get_double("step.floor_fraction", st.floor_fraction);

  auto& r = cfg.run;
  r.t_end = kv.get_double("run.t_end", r.t_end);
  r.dt_sample = kv.get_double("run.dt_sample", r.dt_sample);
  r.n_trajectories = kv.get_long("run.n_trajectories", r.n_trajectories);
  r.master_seed = kv.get_u64("run.master_seed", r.master_seed);
  r.burn_in_fraction = kv.get_double("run.burn_in_fraction", r.burn_in_fraction);
  r.workers = kv.get_long("run.workers", r.workers);
  r.y0 = kv.get_double("run.y0", r.y0);

  auto& an = cfg.analysis;
  an.pdf = kv.get_bool("analysis.pdf", an.pdf);
  an.psd = kv.get_bool("analysis.psd", an.psd);
  an.multifractal = kv.get_bool("analysis.multifractal", an.multifractal);
  an.bins_per_decade = static_cast<int>(kv.get_long("analysis.bins_per_decade", an.bins_per_decade));
  an.pdf_range = {kv.get_double("analysis.pdf_lo", an.pdf_range.lo), kv.get_double("analysis.pdf_hi", an.pdf_range.hi)};
  an.pdf_fit = {kv.get_double("analysis.pdf_fit_lo", an.pdf_fit.lo), kv.get_double("analysis.pdf_fit_hi", an.pdf_fit.hi)};
  an.psd_segment = kv.get_long("analysis.psd_segment", an.psd_segment);
  an.psd_overlap = kv.get_double("analysis.psd_overlap", an.psd_overlap);
  an.psd_bins_per_decade = static_cast<int>(kv.get_long("analysis.psd_bins_per_decade", an.psd_bins_per_decade));
  an.psd_fit = {kv.get_double("analysis.psd_fit_lo", an.psd_fit.lo), kv.get_double("analysis.psd_fit_hi", an.psd_fit.hi)};
  an.q_values = kv.get_doubles("analysis.q_values", an.q_values);
  an.lags_per_decade = static_cast<int>(kv.get_long("analysis.lags_per_decade", an.lags_per_decade));
  an.lag_min = kv.get_long("analysis.lag_min", an.lag_min);
  an.lag_max = kv.get_long("analysis.lag_max", an.lag_max);
  an.hurst_fit = {kv.get_double("analysis.hurst_fit_lo", an.hurst_fit.lo), kv.get_double("analysis.hurst_fit_hi", an.hurst_fit.hi)};
  an.tol_lambda = kv.get_double("analysis.tol_lambda", an.tol_lambda);
  an.tol_beta = kv.get_double("analysis.tol_beta", an.tol_beta);
  an.min_psd_decades = kv.get_double("analysis.min_psd_decades", an.min_psd_decades);
  an.hurst_bound = kv.get_double("analysis.hurst_bound", an.hurst_bound);
  an.hurst_spread_min = kv.get_double("analysis.hurst_spread_min", an.hurst_spread_min);
  an.ks_max = kv.get_double("analysis.ks_max", an.ks_max);

  cfg.output.dir = kv.get_string("output.dir", cfg.output.dir);
  cfg.output.write_series = kv.get_bool("output.write_series", cfg.output.write_series);

  cfg.validate();
  return cfg;
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv;
  auto d = [&](const char* key, double v) { kv.set(key, format_double(v)); };
  auto l = [&](const char* key, long v) { kv.set(key, std::to_string(v)); };
  auto b = [&](const char* key, bool v) { kv.set(key, v ? "true" : "false"); };

  kv.set("model.kind", std::string(kind_name(*this)));
  d("model.alpha", family == Family::Abm ? abm.alpha : sde.alpha);
  if (family == Family::Abm) {
    l("model.N", abm.N);
    d("model.sigma1", abm.sigma1);
    d("model.sigma2", abm.sigma2);
    d("model.h", abm.h);
    d("model.rate_cap", abm.rate_cap);
    l("model.X0", abm_x0);
  } else {
    d("model.eps1", sde.eps1);
    d("model.eps2", sde.eps2);
    d("model.eta", sde.eta);
    d("model.lambda", sde.lambda);
    d("model.a_lin", sde.a_lin);
    d("model.b_amp", sde.b_amp);
    d("model.y_min", sde.y_min);
    d("model.y_max", sde.y_max);
    d("model.noise_scale", sde.noise_scale);
    d("step.kappa", step.kappa);
    d("step.dt_min", step.dt_min);
    d("step.dt_max", step.dt_max);
    d("step.floor_fraction", step.floor_fraction);
    d("run.y0", run.y0);
  }
  d("run.t_end", run.t_end);
  d("run.dt_sample", run.dt_sample);
  l("run.n_trajectories", run.n_trajectories);
  kv.set("run.master_seed", std::to_string(run.master_seed));
  d("run.burn_in_fraction", run.burn_in_fraction);
  l("run.workers", run.workers);

  const auto& an = analysis;
  b("analysis.pdf", an.pdf);
  b("analysis.psd", an.psd);
  b("analysis.multifractal", an.multifractal);
  l("analysis.bins_per_decade", an.bins_per_decade);
  d("analysis.pdf_lo", an.pdf_range.lo);
  d("analysis.pdf_hi", an.pdf_range.hi);
  d("analysis.pdf_fit_lo", an.pdf_fit.lo);
  d("analysis.pdf_fit_hi", an.pdf_fit.hi);
  l("analysis.psd_segment", an.psd_segment);
  d("analysis.psd_overlap", an.psd_overlap);
  l("analysis.psd_bins_per_decade", an.psd_bins_per_decade);
  d("analysis.psd_fit_lo", an.psd_fit.lo);
  d("analysis.psd_fit_hi", an.psd_fit.hi);
  std::string qs;
  for (double q : an.q_values) qs += (qs.empty() ? "" : ",") + format_double(q);
  kv.set("analysis.q_values", qs);
  l("analysis.lags_per_decade", an.lags_per_decade);
  l("analysis.lag_min", an.lag_min);
  l("analysis.lag_max", an.lag_max);
  d("analysis.hurst_fit_lo", an.hurst_fit.lo);
  d("analysis.hurst_fit_hi", an.hurst_fit.hi);
  d("analysis.tol_lambda", an.tol_lambda);
  d("analysis.tol_beta", an.tol_beta);
  d("analysis.min_psd_decades", an.min_psd_decades);
  d("analysis.hurst_bound", an.hurst_bound);
  d("analysis.hurst_spread_min", an.hurst_spread_min);
  d("analysis.ks_max", an.ks_max);

  kv.set("output.dir", output.dir);
  b("output.write_series", output.write_series);
  return kv;
}

void ExperimentConfig::validate() const {
  // Module validation reports Domain; surface it as Config with the key.
  auto check = [](bool ok, std::string_view key, std::string_view what) {
    if (!ok) config_error(key, what);
  };
  if (family == Family::Sde) {
    try {
      sde.validate();
      step.validate();
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string("model: ") + e.what());
    }
    check(run.y0 == 0.0 || (run.y0 >= sde.y_min && run.y0 <= sde.y_max), "run.y0",
          "must lie within [model.y_min, model.y_max]");
    check(run.dt_sample >= step.dt_min, "run.dt_sample", "must be >= step.dt_min");
  } else {
    try {
      abm.validate();
    } catch (const Error& e) {
      fail(ErrorCode::Config, std::string("model: ") + e.what());
    }
    check(abm_x0 < 0 || abm_x0 <= abm.N, "model.X0", "must lie in [0, model.N]");
  }
  check(run.t_end > 0.0, "run.t_end", "must be > 0");
  check(run.dt_sample > 0.0 && run.dt_sample < run.t_end, "run.dt_sample", "must lie in (0, run.t_end)");
  check(run.n_trajectories >= 1, "run.n_trajectories", "must be >= 1");
  check(run.burn_in_fraction >= 0.0 && run.burn_in_fraction <= 0.5, "run.burn_in_fraction",
        "must lie in [0, 0.5]");
  check(run.workers >= 0, "run.workers", "must be >= 0");

  const auto& an = analysis;
  auto check_range = [&](const Range& r, std::string_view key) {
    if (is_set(r)) check(r.lo > 0.0 && r.hi > r.lo, key, "needs 0 < lo < hi");
  };
  check_range(an.pdf_range, "analysis.pdf_lo");
  check_range(an.pdf_fit, "analysis.pdf_fit_lo");
  check_range(an.psd_fit, "analysis.psd_fit_lo");
  check_range(an.hurst_fit, "analysis.hurst_fit_lo");
  check(an.bins_per_decade >= 1, "analysis.bins_per_decade", "must be >= 1");
  check(an.psd_segment >= 4, "analysis.psd_segment", "must be >= 4");
  check(an.psd_overlap >= 0.0 && an.psd_overlap < 1.0, "analysis.psd_overlap", "must lie in [0, 1)");
  check(an.psd_bins_per_decade >= 1, "analysis.psd_bins_per_decade", "must be >= 1");
  check(!an.q_values.empty() && std::all_of(an.q_values.begin(), an.q_values.end(), [](double q) { return q > 0.0; }),
        "analysis.q_values", "must be positive");
  check(an.lags_per_decade >= 1, "analysis.lags_per_decade", "must be >= 1");
  check(an.lag_min >= 1, "analysis.lag_min", "must be >= 1");
  check(an.lag_max == 0 || an.lag_max >= an.lag_min, "analysis.lag_max", "must be >= analysis.lag_min");
  check(!output.dir.empty(), "output.dir", "must not be empty");
}

std::size_t ExperimentConfig::samples_per_trajectory() const {
  return static_cast<std::size_t>(std::llround(run.t_end / run.dt_sample));
}

std::size_t ExperimentConfig::burn_in_samples() const {
  return static_cast<std::size_t>(std::floor(run.burn_in_fraction * static_cast<double>(samples_per_trajectory())));
}

// ---------------------------------------------------------------------------
// Analysis

namespace {

struct Resolved {
  Range pdf_range;
  Range pdf_fit;
  Range psd_fit;
  Range hurst_fit;
  std::vector<std::size_t> lags;
};

// `data_range` replaces the model's PDF range when set; `shortest` is the
// length of the shortest series.
Resolved resolve(const ExperimentConfig& cfg, std::size_t shortest, double dt,
                 std::optional<Range> data_range) {
  const auto& an = cfg.analysis;
  Resolved r;
  if (an.pdf) {
    if (is_set(an.pdf_range)) {
      r.pdf_range = an.pdf_range;
    } else if (data_range) {
      r.pdf_range = *data_range;
    } else if (cfg.family == Family::Abm) {
      r.pdf_range = {1.0 / static_cast<double>(cfg.abm.N), 1.0};
    } else {
      r.pdf_range = {cfg.sde.y_min, cfg.sde.y_max};
    }
    r.pdf_fit = is_set(an.pdf_fit) ? an.pdf_fit : Range{r.pdf_range.lo * 10.0, r.pdf_range.hi / 10.0};
  }
  if (an.psd) {
    const double f1 = 1.0 / (static_cast<double>(an.psd_segment) * dt);
    r.psd_fit = is_set(an.psd_fit) ? an.psd_fit : Range{3.0 * f1, 1.0 / (10.0 * dt)};
  }
  if (an.multifractal) {
    const auto lag_max = an.lag_max > 0 ? static_cast<std::size_t>(an.lag_max) : shortest / 100;
    if (lag_max < static_cast<std::size_t>(an.lag_min)) {
      fail(ErrorCode::TooShort, "hh: series of " + std::to_string(shortest) + " samples too short for lags");
    }
    r.lags = stats::log_spaced_lags(static_cast<std::size_t>(an.lag_min), lag_max, an.lags_per_decade);
    r.hurst_fit = is_set(an.hurst_fit) ? an.hurst_fit
                                       : Range{10.0 * dt, static_cast<double>(lag_max) * dt};
  }
  return r;
}

struct Partial {
  std::optional<stats::PdfEstimate> pdf;
  std::optional<stats::SpectrumEstimate> spectrum;
  std::optional<stats::MultifractalResult> mf;
};

Partial analyze_one(std::span<const double> values, double dt, const ExperimentConfig& cfg,
                    const Resolved& r) {
  const auto& an = cfg.analysis;
  Partial p;
  if (an.pdf) {
    std::vector<double> positive;
    positive.reserve(values.size());
    for (double v : values) {
      if (v > 0.0) positive.push_back(v);
    }
    p.pdf = stats::log_binned_counts(positive, an.bins_per_decade, r.pdf_range);
  }
  if (an.psd) p.spectrum = stats::psd(values, dt, static_cast<std::size_t>(an.psd_segment), an.psd_overlap);
  if (an.multifractal) p.mf = stats::hh_correlation(values, dt, an.q_values, r.lags);
  return p;
}

std::optional<sde::Exponents> prediction_for(const ExperimentConfig& cfg) {
  if (cfg.family == Family::Abm || cfg.sde.kind == sde::ModelKind::PopulationX) return std::nullopt;
  try {
    return sde::predict_exponents(cfg.sde);
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Stationary Beta(a, b) applies to the population share when alpha = 0.
std::optional<std::pair<double, double>> beta_shape(const ExperimentConfig& cfg) {
  if (cfg.family == Family::Abm) {
    if (cfg.abm.alpha != 0.0 || cfg.abm.sigma1 <= 0.0 || cfg.abm.sigma2 <= 0.0) return std::nullopt;
    return std::pair{cfg.abm.sigma1 / cfg.abm.h, cfg.abm.sigma2 / cfg.abm.h};
  }
  if (cfg.sde.kind == sde::ModelKind::PopulationX && cfg.sde.alpha == 0.0 && cfg.sde.eps1 > 0.0 &&
      cfg.sde.eps2 > 0.0) {
    return std::pair{cfg.sde.eps1, cfg.sde.eps2};
  }
  return std::nullopt;
}

SummaryRow compare(std::string quantity, double measured, double predicted, double tolerance) {
  SummaryRow row{std::move(quantity), measured, predicted, std::abs(measured - predicted), tolerance, {}};
  if (!std::isnan(predicted)) row.pass = row.abs_error <= tolerance;
  return row;
}

AnalysisResult combine(std::vector<Partial>& parts, const ExperimentConfig& cfg, const Resolved& r,
                       std::span<const std::vector<double>> pooled_for_ks) {
  const auto& an = cfg.analysis;
  AnalysisResult out;
  const auto predicted = prediction_for(cfg);

  if (an.pdf) {
    std::vector<stats::PdfEstimate> pdfs;
    for (auto& p : parts) pdfs.push_back(std::move(*p.pdf));
    out.pdf = stats::pool_pdfs(pdfs);
    out.pdf_fit = stats::fit_powerlaw(out.pdf->bin_centers, out.pdf->density, r.pdf_fit);
    out.summary.push_back(compare("lambda", -out.pdf_fit->exponent, predicted ? predicted->lambda : kNaN, an.tol_lambda));
  }
  if (an.psd) {
    std::vector<stats::SpectrumEstimate> spectra;
    for (auto& p : parts) spectra.push_back(std::move(*p.spectrum));
    out.spectrum = stats::average_spectra(spectra);
    const auto binned = stats::log_bin_spectrum(*out.spectrum, an.psd_bins_per_decade);
    out.psd_fit = stats::fit_powerlaw(binned.frequencies, binned.power, r.psd_fit);
    out.summary.push_back(compare("beta", -out.psd_fit->exponent, predicted ? predicted->beta : kNaN, an.tol_beta));
    SummaryRow decades{"beta_fit_decades", std::log10(r.psd_fit.hi / r.psd_fit.lo), an.min_psd_decades, 0.0, 0.0, {}};
    decades.abs_error = std::abs(decades.measured - decades.predicted);
    decades.pass = decades.measured >= an.min_psd_decades - 1e-9;
    out.summary.push_back(decades);
  }
  if (an.multifractal) {
    std::vector<stats::MultifractalResult> mfs;
    for (auto& p : parts) mfs.push_back(std::move(*p.mf));
    out.multifractal = stats::hurst_spectrum(stats::average_hh(mfs), r.hurst_fit);
    const double h_max = out.multifractal->H_max();
    SummaryRow bound{"H_max", h_max, an.hurst_bound, std::abs(h_max - an.hurst_bound), 0.0, h_max < an.hurst_bound};
    out.summary.push_back(bound);
    const double spread = out.multifractal->H_spread();
    SummaryRow sp{"H_spread", spread, an.hurst_spread_min, std::abs(spread - an.hurst_spread_min), 0.0,
                  spread >= an.hurst_spread_min};
    out.summary.push_back(sp);
  }
  if (const auto shape = beta_shape(cfg); shape && !pooled_for_ks.empty()) {
    std::vector<double> all;
    for (const auto& s : pooled_for_ks) all.insert(all.end(), s.begin(), s.end());
    const auto [a, b] = *shape;
    out.ks_beta = stats::ks_distance(std::move(all), [a = a, b = b](double x) {
      return boost::math::ibeta(a, b, std::clamp(x, 0.0, 1.0));
    });
    out.summary.push_back(compare("ks_beta", *out.ks_beta, 0.0, an.ks_max));
  }
  return out;
}

}  // namespace

bool AnalysisResult::all_pass() const {
  return std::all_of(summary.begin(), summary.end(), [](const SummaryRow& r) { return r.pass.value_or(true); });
}

AnalysisResult analyze_series(std::span<const std::vector<double>> series, double dt_sample,
                              const ExperimentConfig& cfg, bool data_driven_pdf_range) {
  if (series.empty()) fail(ErrorCode::Domain, "analyze: no series");
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& s : series) shortest = std::min(shortest, s.size());
  std::optional<Range> data_range;
  if (data_driven_pdf_range && cfg.analysis.pdf) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& s : series) {
      for (double v : s) {
        if (v > 0.0) lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) fail(ErrorCode::EmptyRange, "pdf: series has no positive spread");
    data_range = Range{lo, hi};
  }
  const Resolved r = resolve(cfg, shortest, dt_sample, data_range);
  std::vector<Partial> parts;
  for (const auto& s : series) parts.push_back(analyze_one(s, dt_sample, cfg, r));
  return combine(parts, cfg, r, beta_shape(cfg) ? series : std::span<const std::vector<double>>{});
}

// ---------------------------------------------------------------------------
// Artifacts

void write_analysis(const std::filesystem::path& dir, const AnalysisResult& result) {
  std::filesystem::create_directories(dir);
  if (result.pdf) {
    csv::Writer w(dir / "pdf.csv", {"bin_center", "density", "count"});
    for (std::size_t i = 0; i < result.pdf->bin_centers.size(); ++i) {
      w.cell(result.pdf->bin_centers[i]).cell(result.pdf->density[i]).cell(result.pdf->counts[i]).end_row();
    }
  }
  if (result.spectrum) {
    csv::Writer w(dir / "psd.csv", {"frequency", "power"});
    for (std::size_t k = 0; k < result.spectrum->frequencies.size(); ++k) {
      w.cell(result.spectrum->frequencies[k]).cell(result.spectrum->power[k]).end_row();
    }
  }
  if (result.multifractal) {
    const auto& mf = *result.multifractal;
    csv::Writer fq(dir / "fq.csv", {"q", "lag", "F"});
    for (std::size_t iq = 0; iq < mf.q_values.size(); ++iq) {
      for (std::size_t il = 0; il < mf.lags.size(); ++il) fq.cell(mf.q_values[iq]).cell(mf.lags[il]).cell(mf.F[iq][il]).end_row();
    }
    csv::Writer h(dir / "hurst.csv", {"q", "H", "stderr"});
    for (std::size_t iq = 0; iq < mf.q_values.size(); ++iq) h.cell(mf.q_values[iq]).cell(mf.H[iq]).cell(mf.H_stderr[iq]).end_row();
  }
  csv::Writer s(dir / "summary.csv", {"quantity", "measured", "predicted", "abs_error", "tolerance", "pass"});
  for (const auto& row : result.summary) {
    s.cell(row.quantity).cell(row.measured).cell(row.predicted).cell(row.abs_error).cell(row.tolerance);
    s.cell(row.pass ? std::string(*row.pass ? "1" : "0") : std::string("nan")).end_row();
  }
}

namespace {

nlohmann::ordered_json summary_json(const std::vector<SummaryRow>& rows) {
  auto arr = nlohmann::ordered_json::array();
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["quantity"] = r.quantity;
    j["measured"] = num(r.measured);
    j["predicted"] = num(r.predicted);
    j["abs_error"] = num(r.abs_error);
    j["tolerance"] = num(r.tolerance);
    j["pass"] = r.pass ? nlohmann::ordered_json(*r.pass) : nlohmann::ordered_json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["software"] = "kirman";
  j["version"] = m.version;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config.entries()) cfg[k] = v;
  j["config"] = cfg;
  auto traj = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.trajectories.size(); ++i) {
    const auto& t = m.trajectories[i];
    traj.push_back({{"index", i}, {"seed", t.seed}, {"steps", t.steps}, {"reflections", t.reflections},
                    {"step_floor_warning", t.step_floor_warning}});
  }
  j["trajectories"] = traj;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  if (m.predicted) {
    j["predicted"] = {{"eta", m.predicted->eta}, {"lambda", m.predicted->lambda}, {"beta", m.predicted->beta}};
  } else {
    j["predicted"] = nullptr;
  }
  j["summary"] = summary_json(m.analysis.summary);
  if (m.analysis.multifractal) {
    nlohmann::ordered_json h = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < m.analysis.multifractal->q_values.size(); ++i) {
      h.push_back({{"q", m.analysis.multifractal->q_values[i]}, {"H", m.analysis.multifractal->H[i]}});
    }
    j["hurst"] = h;
  }
  j["warnings"] = m.warnings;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Config, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ExperimentConfig config_from_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Config, path.string() + ": " + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) {
    fail(ErrorCode::Config, path.string() + ": missing 'config' object");
  }
  // Keep the manifest's key order (nlohmann::json sorts keys, which is fine
  // because keys are independent).
  KeyValues kv;
  for (const auto& [k, v] : j["config"].items()) {
    if (!v.is_string()) fail(ErrorCode::Config, path.string() + ": config." + k + " must be a string");
    kv.set(k, v.get<std::string>());
  }
  return ExperimentConfig::from_key_values(kv);
}

// ---------------------------------------------------------------------------
// Ensemble execution

namespace {

template <typename Job>
void parallel_for(std::size_t n, long workers, Job&& job) {
  std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                    : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "trajectory " + std::to_string(i) + ": " + e.what());
    }
  }
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::filesystem::path dir(cfg.output.dir);
  std::filesystem::create_directories(dir);

  const auto n_traj = static_cast<std::size_t>(cfg.run.n_trajectories);
  const std::size_t n_samples = cfg.samples_per_trajectory();
  const std::size_t n_burn = cfg.burn_in_samples();
  if (n_samples <= n_burn) fail(ErrorCode::Config, "run.t_end: no samples left after burn-in");
  const double dt = cfg.run.dt_sample;

  RunManifest manifest;
  manifest.config = cfg.to_key_values();
  manifest.predicted = prediction_for(cfg);
  manifest.trajectories.resize(n_traj);

  // Lags and fit ranges depend only on the config and the series length.
  const Resolved resolved = resolve(cfg, n_samples - n_burn, dt, std::nullopt);

  const bool keep_all = beta_shape(cfg).has_value();
  std::vector<Partial> parts(n_traj);
  std::vector<std::vector<double>> kept(keep_all ? n_traj : 1);

  parallel_for(n_traj, cfg.run.workers, [&](std::size_t i) {
    TrajectoryInfo& info = manifest.trajectories[i];
    info.seed = derive_seed(cfg.run.master_seed, i);
    std::vector<double> values;
    if (cfg.family == Family::Sde) {
      const double y0 = cfg.run.y0 > 0.0 ? cfg.run.y0 : sde::default_initial_state(cfg.sde);
      sde::Trajectory traj = sde::integrate(cfg.sde, y0, cfg.step, cfg.run.t_end, dt, info.seed);
      info.steps = traj.stats.steps;
      info.reflections = traj.stats.reflections;
      info.step_floor_warning = traj.stats.step_floor_warning;
      values.assign(traj.values.begin() + static_cast<std::ptrdiff_t>(n_burn), traj.values.end());
    } else {
      const long x0 = cfg.abm_x0 >= 0 ? cfg.abm_x0 : abm::default_initial_count(cfg.abm);
      const auto counts = abm::simulate_event_driven_on_grid(cfg.abm, x0, dt, n_samples, info.seed);
      values.reserve(n_samples - n_burn);
      for (std::size_t k = n_burn; k < counts.size(); ++k) {
        values.push_back(static_cast<double>(counts[k]) / static_cast<double>(cfg.abm.N));
      }
    }
    parts[i] = analyze_one(values, dt, cfg, resolved);
    if (keep_all || i == 0) kept[keep_all ? i : 0] = std::move(values);
  });

  for (std::size_t i = 0; i < n_traj; ++i) {
    if (manifest.trajectories[i].step_floor_warning) {
      manifest.warnings.push_back("trajectory " + std::to_string(i) + ": step floor dt_min hit on more than " +
                                  format_double(cfg.step.floor_fraction * 100.0) + "% of steps");
    }
  }

  manifest.analysis = combine(parts, cfg, resolved, keep_all ? std::span<const std::vector<double>>(kept)
                                                             : std::span<const std::vector<double>>{});

  if (cfg.output.write_series) {
    csv::Writer w(dir / "series.csv", {"t", "value"});
    const auto& v = kept.front();
    for (std::size_t k = 0; k < v.size(); ++k) {
      w.cell(static_cast<double>(k + n_burn) * dt).cell(v[k]).end_row();
    }
  }
  write_analysis(dir, manifest.analysis);
  manifest.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  write_manifest(dir / "manifest.json", manifest);
  return manifest;
}

// ---------------------------------------------------------------------------
// Figures

FigureId parse_figure(std::string_view text) {
  if (text == "fig1") return FigureId::Fig1;
  if (text == "fig2") return FigureId::Fig2;
  if (text == "fig3") return FigureId::Fig3;
  fail(ErrorCode::Config, "--figure: expected fig1, fig2 or fig3, got '" + std::string(text) + "'");
}

std::string_view to_string(FigureId id) {
  switch (id) {
    case FigureId::Fig1: return "fig1";
    case FigureId::Fig2: return "fig2";
    case FigureId::Fig3: return "fig3";
  }
  return "unknown";
}

namespace {

// Output sampling and fit windows per alpha.  The 1/f band of level y sits
// near frequency y^(1+alpha) / pi, so larger alpha pushes it to higher
// frequencies; dt_sample shrinks accordingly so the fitted window lies inside
// the band and at least a decade below the Nyquist frequency.  The window's
// low end stays clear of y ~ 1, where (1 + y) differs from y.
struct Tuning {
  double y_max;
  double dt_sample;
  long n_trajectories;
  double samples;  // per trajectory, including burn-in
  Range pdf_fit;
  Range psd_fit;
};

Tuning tuning_for(FigureId id, int alpha) {
  if (id == FigureId::Fig2) {
    switch (alpha) {
      // The tail is sampled by rare fast excursions, so these runs are long.
      case 0: return {1e4, 1e-3, 10, 6e6, {10.0, 1000.0}, {4.0, 400.0}};
      case 1: return {1e3, 1e-5, 20, 2.4e6, {10.0, 100.0}, {30.0, 3000.0}};
      default: return {1e3, 1e-6, 20, 1.2e7, {5.0, 50.0}, {100.0, 10000.0}};
    }
  }
  switch (alpha) {
    case 0: return {1e4, 1e-3, 10, 1.2e6, {10.0, 1000.0}, {4.0, 400.0}};
    case 1: return {1e3, 1e-4, 10, 1.2e6, {10.0, 100.0}, {5.0, 500.0}};
    default: return {1e3, 1e-5, 10, 1.2e6, {10.0, 100.0}, {20.0, 2000.0}};
  }
}

}  // namespace

std::vector<FigureRun> figure_runs(FigureId id, const std::filesystem::path& out) {
  std::vector<FigureRun> runs;
  for (int alpha = 0; alpha <= 2; ++alpha) {
    const Tuning tune = tuning_for(id, alpha);
    ExperimentConfig cfg;
    cfg.family = Family::Sde;
    const double a = alpha;
    cfg.sde = id == FigureId::Fig2 ? sde::SdeSpec::return_y(2.0, 2.0, a) : sde::SdeSpec::return_y(0.0, 2.0 - a, a);
    cfg.sde.y_max = tune.y_max;
    cfg.run.dt_sample = tune.dt_sample;
    cfg.run.master_seed = 20110 + static_cast<std::uint64_t>(alpha);
    cfg.run.burn_in_fraction = 0.1;
    cfg.analysis.pdf_fit = tune.pdf_fit;
    cfg.analysis.psd_fit = tune.psd_fit;
    if (id == FigureId::Fig3) {
      // One realization of 1.008e6 post-burn-in samples.
      cfg.run.n_trajectories = 1;
      cfg.run.t_end = 1.12e6 * tune.dt_sample;
      cfg.analysis.multifractal = true;
    } else {
      cfg.run.n_trajectories = tune.n_trajectories;
      cfg.run.t_end = tune.samples * tune.dt_sample;
      cfg.analysis.multifractal = false;
    }
    cfg.output.dir = (out / ("alpha" + std::to_string(alpha))).string();
    runs.push_back({a, cfg});
  }
  return runs;
}

bool FigureReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.row.pass.value_or(true); });
}

FigureReport reproduce_figure(FigureId id, const std::filesystem::path& out, long workers) {
  FigureReport report;
  std::filesystem::create_directories(out);
  const std::string fig(to_string(id));
  for (auto& run : figure_runs(id, out)) {
    run.config.run.workers = workers;
    RunManifest m = run_experiment(run.config);
    for (const auto& row : m.analysis.summary) {
      if (id == FigureId::Fig3 && (row.quantity == "lambda" || row.quantity == "beta" || row.quantity == "beta_fit_decades")) continue;
      if (id != FigureId::Fig3 && (row.quantity == "H_max" || row.quantity == "H_spread")) continue;
      report.rows.push_back({fig, run.alpha, row});
    }
    if (id == FigureId::Fig3 && m.analysis.multifractal) {
      const auto& mf = *m.analysis.multifractal;
      for (std::size_t iq = 0; iq < mf.q_values.size(); ++iq) {
        const double bound = run.config.analysis.hurst_bound;
        report.rows.push_back({fig, run.alpha,
                               SummaryRow{"H_q" + format_double(mf.q_values[iq]), mf.H[iq], bound,
                                          std::abs(mf.H[iq] - bound), 0.0, mf.H[iq] < bound}});
      }
    }
    report.runs.push_back(std::move(m));
  }
  csv::Writer w(out / "comparison.csv",
                {"figure", "alpha", "quantity", "measured", "predicted", "abs_error", "tolerance", "pass"});
  for (const auto& r : report.rows) {
    w.cell(r.figure).cell(r.alpha).cell(r.row.quantity).cell(r.row.measured).cell(r.row.predicted);
    w.cell(r.row.abs_error).cell(r.row.tolerance);
    w.cell(r.row.pass ? std::string(*r.row.pass ? "1" : "0") : std::string("nan")).end_row();
  }
  return report;
}

}  // namespace kirman::runner
