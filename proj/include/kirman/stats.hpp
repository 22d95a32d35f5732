#pragma once

// Estimators for stationary densities, spectra and structure functions,
// plus log-log least-squares slope fits.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace kirman::stats {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct PdfEstimate {
  std::vector<double> bin_centers;  // geometric centers
  std::vector<double> bin_edges;    // size bin_centers.size() + 1
  std::vector<double> density;      // count / (in-range total * width)
  std::vector<long> counts;
  std::size_t n_in_range = 0;
  std::size_t n_total = 0;
};

struct SpectrumEstimate {
  std::vector<double> frequencies;  // k / (L dt), k = 1 .. L/2
  std::vector<double> power;        // one-sided density
  std::size_t n_segments = 0;
};

struct PowerLawFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log10 scale
  double stderr_ = 0.0;
  Range fit_range;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

struct MultifractalResult {
  std::vector<double> q_values;
  std::vector<double> lags;           // in time units
  std::vector<std::vector<double>> F; // F[iq][ilag]
  std::vector<double> H;
  std::vector<double> H_stderr;

  double H_spread() const;
  double H_max() const;
};

/// Histogram on geometric bins spanning [range.lo, range.hi].  Throws
/// EmptyRange when no sample falls inside; Domain for nonpositive samples.
PdfEstimate log_binned_pdf(std::span<const double> samples, int bins_per_decade, Range range);

/// As log_binned_pdf, but an empty range gives zero counts instead of
/// throwing.  Meant for per-trajectory pieces that are pooled afterwards.
PdfEstimate log_binned_counts(std::span<const double> samples, int bins_per_decade, Range range);

/// Sums counts of estimates built on identical bins; equivalent to one
/// estimate over the pooled samples.
PdfEstimate pool_pdfs(std::span<const PdfEstimate> estimates);

/// Least squares on (log10 x, log10 y) over points with x in `fit_range` and
/// y > 0.  Needs at least 8 such points (InsufficientPoints).
PowerLawFit fit_powerlaw(std::span<const double> x, std::span<const double> y, Range fit_range);

/// Welch estimate: mean-removed, Hann-tapered segments of `segment_length`
/// samples with fractional `overlap`, averaged.  TooShort when the series is
/// shorter than two segments.
SpectrumEstimate psd(std::span<const double> values, double dt_sample, std::size_t segment_length,
                     double overlap);

/// Averages spectra computed on identical frequency grids.
SpectrumEstimate average_spectra(std::span<const SpectrumEstimate> spectra);

/// Mean power in geometric frequency bins; empty bins dropped.  Used to give
/// each frequency decade equal weight in slope fits.
SpectrumEstimate log_bin_spectrum(const SpectrumEstimate& spectrum, int bins_per_decade);

/// Distinct integers roughly evenly spaced in log between lo and hi.
std::vector<std::size_t> log_spaced_lags(std::size_t lo, std::size_t hi, int per_decade);

/// F_q(lag) = < |y(t + lag) - y(t)|^q >^(1/q), time-averaged over all valid t.
/// TooShort when the largest lag exceeds a tenth of the series.  Leaves H
/// empty.
MultifractalResult hh_correlation(std::span<const double> values, double dt_sample,
                                  std::span<const double> q_values,
                                  std::span<const std::size_t> lags);

/// Elementwise mean of F over results on the same (q, lag) grid.
MultifractalResult average_hh(std::span<const MultifractalResult> results);

/// Fills H(q) with the slope of log F_q vs log lag over `fit_range` (time
/// units).  InsufficientPoints when fewer than 8 lags qualify.
MultifractalResult hurst_spectrum(MultifractalResult mf, Range fit_range);

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `cdf`.
template <typename Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf);

/// Standard q set {1, ..., 8, 16}.
std::vector<double> default_q_values();

}  // namespace kirman::stats

#include "kirman/stats_inl.hpp"
