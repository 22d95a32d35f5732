#include "kirman/stats.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include "kirman/error.hpp"

namespace kirman::stats {

namespace {

// FFTW's planner is not reentrant; execution on a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<double> input() { return {in_.get(), n_}; }
  void execute() { fftw_execute(plan_); }
  double power(std::size_t k) const { return out_.get()[k][0] * out_.get()[k][0] + out_.get()[k][1] * out_.get()[k][1]; }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  // Residuals summed directly; syy - slope*sxy cancels badly on near-exact fits.
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (y[i] - my) - f.slope * (x[i] - mx);
    ssr += r * r;
  }
  f.slope_stderr = x.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  return f;
}

}  // namespace

double MultifractalResult::H_spread() const {
  if (H.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(H.begin(), H.end());
  return *hi - *lo;
}

double MultifractalResult::H_max() const {
  return H.empty() ? 0.0 : *std::max_element(H.begin(), H.end());
}

std::vector<double> default_q_values() { return {1, 2, 3, 4, 5, 6, 7, 8, 16}; }

PdfEstimate log_binned_counts(std::span<const double> samples, int bins_per_decade, Range range) {
  if (!(range.lo > 0.0) || !(range.hi > range.lo)) {
    fail(ErrorCode::Domain, "pdf: need 0 < lo < hi");
  }
  if (bins_per_decade < 1) fail(ErrorCode::Domain, "pdf: bins_per_decade must be >= 1");

  const double decades = std::log10(range.hi / range.lo);
  const auto n_bins = static_cast<std::size_t>(std::max(1L, std::lround(decades * bins_per_decade)));
  const double log_lo = std::log10(range.lo);
  const double log_step = decades / static_cast<double>(n_bins);

  PdfEstimate est;
  est.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    est.bin_edges[i] = std::pow(10.0, log_lo + log_step * static_cast<double>(i));
  }
  est.bin_edges.front() = range.lo;
  est.bin_edges.back() = range.hi;
  est.counts.assign(n_bins, 0);

  for (double v : samples) {
    if (!(v > 0.0)) fail(ErrorCode::Domain, "pdf: samples must be > 0");
    if (v < range.lo || v > range.hi) continue;
    auto idx = static_cast<std::size_t>((std::log10(v) - log_lo) / log_step);
    idx = std::min(idx, n_bins - 1);
    // Correct the rare rounding disagreement with the stored edges.
    while (idx > 0 && v < est.bin_edges[idx]) --idx;
    while (idx + 1 < n_bins && v >= est.bin_edges[idx + 1]) ++idx;
    ++est.counts[idx];
    ++est.n_in_range;
  }
  est.n_total = samples.size();

  est.bin_centers.resize(n_bins);
  est.density.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    const double width = est.bin_edges[i + 1] - est.bin_edges[i];
    est.bin_centers[i] = std::sqrt(est.bin_edges[i] * est.bin_edges[i + 1]);
    est.density[i] = est.n_in_range == 0 ? 0.0
                     : static_cast<double>(est.counts[i]) / (static_cast<double>(est.n_in_range) * width);
  }
  return est;
}

PdfEstimate log_binned_pdf(std::span<const double> samples, int bins_per_decade, Range range) {
  PdfEstimate est = log_binned_counts(samples, bins_per_decade, range);
  if (est.n_in_range == 0) fail(ErrorCode::EmptyRange, "pdf: no samples inside the range");
  return est;
}

PdfEstimate pool_pdfs(std::span<const PdfEstimate> estimates) {
  if (estimates.empty()) fail(ErrorCode::Domain, "pdf: nothing to pool");
  PdfEstimate out = estimates.front();
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    const auto& e = estimates[i];
    if (e.bin_edges != out.bin_edges) fail(ErrorCode::Domain, "pdf: bin edges differ");
    for (std::size_t b = 0; b < e.counts.size(); ++b) out.counts[b] += e.counts[b];
    out.n_in_range += e.n_in_range;
    out.n_total += e.n_total;
  }
  if (out.n_in_range == 0) fail(ErrorCode::EmptyRange, "pdf: no samples inside the range");
  for (std::size_t b = 0; b < out.counts.size(); ++b) {
    const double width = out.bin_edges[b + 1] - out.bin_edges[b];
    out.density[b] = static_cast<double>(out.counts[b]) / (static_cast<double>(out.n_in_range) * width);
  }
  return out;
}

PowerLawFit fit_powerlaw(std::span<const double> x, std::span<const double> y, Range fit_range) {
  if (x.size() != y.size()) fail(ErrorCode::Domain, "fit: x and y differ in length");
  if (!(fit_range.lo > 0.0) || !(fit_range.hi > fit_range.lo)) {
    fail(ErrorCode::Domain, "fit: need 0 < lo < hi");
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= fit_range.lo && x[i] <= fit_range.hi && y[i] > 0.0) {
      lx.push_back(std::log10(x[i]));
      ly.push_back(std::log10(y[i]));
    }
  }
  if (lx.size() < 8) {
    fail(ErrorCode::InsufficientPoints,
         "fit: " + std::to_string(lx.size()) + " usable points in range, need 8");
  }
  const LineFit lf = least_squares(lx, ly);
  PowerLawFit out;
  out.exponent = lf.slope;
  out.intercept = lf.intercept;
  out.stderr_ = lf.slope_stderr;
  out.r_squared = lf.r_squared;
  out.fit_range = fit_range;
  out.n_points = lx.size();
  return out;
}

SpectrumEstimate psd(std::span<const double> values, double dt_sample, std::size_t segment_length,
                     double overlap) {
  if (segment_length < 4) fail(ErrorCode::Domain, "psd: segment_length must be >= 4");
  if (!(overlap >= 0.0 && overlap < 1.0)) fail(ErrorCode::Domain, "psd: overlap must lie in [0, 1)");
  if (!(dt_sample > 0.0)) fail(ErrorCode::Domain, "psd: dt_sample must be > 0");
  if (values.size() < 2 * segment_length) {
    fail(ErrorCode::TooShort, "psd: series of " + std::to_string(values.size()) +
                                  " samples is shorter than two segments of " +
                                  std::to_string(segment_length));
  }
  const std::size_t L = segment_length;
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(L) * (1.0 - overlap))));

  std::vector<double> window(L);
  double window_power = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(L));
    window_power += window[i] * window[i];
  }

  SpectrumEstimate est;
  const std::size_t n_freq = L / 2;
  est.frequencies.resize(n_freq);
  est.power.assign(n_freq, 0.0);
  for (std::size_t k = 0; k < n_freq; ++k) {
    est.frequencies[k] = static_cast<double>(k + 1) / (static_cast<double>(L) * dt_sample);
  }

  RealFft fft(L);
  auto buf = fft.input();
  for (std::size_t start = 0; start + L <= values.size(); start += hop) {
    const auto seg = values.subspan(start, L);
    const double mean = std::accumulate(seg.begin(), seg.end(), 0.0) / static_cast<double>(L);
    for (std::size_t i = 0; i < L; ++i) buf[i] = (seg[i] - mean) * window[i];
    fft.execute();
    for (std::size_t k = 0; k < n_freq; ++k) est.power[k] += fft.power(k + 1);
    ++est.n_segments;
  }
  // One-sided density: 2 |X_k|^2 dt / sum(w^2); the Nyquist bin is not doubled.
  const double scale = dt_sample / (window_power * static_cast<double>(est.n_segments));
  for (std::size_t k = 0; k < n_freq; ++k) {
    est.power[k] *= (k + 1 == n_freq && L % 2 == 0 ? 1.0 : 2.0) * scale;
  }
  return est;
}

SpectrumEstimate average_spectra(std::span<const SpectrumEstimate> spectra) {
  if (spectra.empty()) fail(ErrorCode::Domain, "psd: nothing to average");
  SpectrumEstimate out;
  out.frequencies = spectra.front().frequencies;
  out.power.assign(out.frequencies.size(), 0.0);
  for (const auto& s : spectra) {
    if (s.frequencies != out.frequencies) fail(ErrorCode::Domain, "psd: frequency grids differ");
    for (std::size_t k = 0; k < s.power.size(); ++k) out.power[k] += s.power[k];
    out.n_segments += s.n_segments;
  }
  for (double& p : out.power) p /= static_cast<double>(spectra.size());
  return out;
}

SpectrumEstimate log_bin_spectrum(const SpectrumEstimate& spectrum, int bins_per_decade) {
  SpectrumEstimate out;
  out.n_segments = spectrum.n_segments;
  if (spectrum.frequencies.empty()) return out;
  const double f0 = spectrum.frequencies.front();
  std::size_t i = 0;
  while (i < spectrum.frequencies.size()) {
    const auto bin = std::floor(std::log10(spectrum.frequencies[i] / f0) * bins_per_decade + 1e-9);
    const double upper = f0 * std::pow(10.0, (bin + 1.0) / bins_per_decade);
    double sum_p = 0.0, sum_logf = 0.0;
    std::size_t n = 0;
    while (i < spectrum.frequencies.size() && spectrum.frequencies[i] < upper * (1.0 - 1e-12)) {
      sum_p += spectrum.power[i];
      sum_logf += std::log(spectrum.frequencies[i]);
      ++n;
      ++i;
    }
    if (n == 0) {
      // Bin narrower than the grid spacing.
      sum_p = spectrum.power[i];
      sum_logf = std::log(spectrum.frequencies[i]);
      n = 1;
      ++i;
    }
    out.frequencies.push_back(std::exp(sum_logf / static_cast<double>(n)));
    out.power.push_back(sum_p / static_cast<double>(n));
  }
  return out;
}

std::vector<std::size_t> log_spaced_lags(std::size_t lo, std::size_t hi, int per_decade) {
  if (lo < 1 || hi < lo || per_decade < 1) fail(ErrorCode::Domain, "lags: need 1 <= lo <= hi");
  std::vector<std::size_t> lags;
  const double decades = std::log10(static_cast<double>(hi) / static_cast<double>(lo));
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade));
  for (std::size_t i = 0; i <= n; ++i) {
    const double v = static_cast<double>(lo) * std::pow(10.0, static_cast<double>(i) / per_decade);
    const auto lag = std::min(hi, static_cast<std::size_t>(std::llround(v)));
    if (lags.empty() || lag > lags.back()) lags.push_back(lag);
  }
  if (lags.back() != hi) lags.push_back(hi);
  return lags;
}

MultifractalResult hh_correlation(std::span<const double> values, double dt_sample,
                                  std::span<const double> q_values,
                                  std::span<const std::size_t> lags) {
  if (q_values.empty() || lags.empty()) fail(ErrorCode::Domain, "hh: empty q or lag set");
  for (double q : q_values) {
    if (!(q > 0.0)) fail(ErrorCode::Domain, "hh: q must be > 0");
  }
  const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
  if (max_lag * 10 > values.size() || max_lag == 0) {
    fail(ErrorCode::TooShort, "hh: max lag " + std::to_string(max_lag) + " exceeds a tenth of " +
                                  std::to_string(values.size()) + " samples");
  }

  // Integer orders share one running product per increment.
  const bool integer_q = std::all_of(q_values.begin(), q_values.end(), [](double q) {
    return q == std::floor(q) && q <= 64.0;
  });
  const auto q_top = static_cast<int>(*std::max_element(q_values.begin(), q_values.end()));
  std::vector<int> slot_of_power;
  if (integer_q) {
    slot_of_power.assign(static_cast<std::size_t>(q_top) + 1, -1);
    for (std::size_t iq = 0; iq < q_values.size(); ++iq) {
      slot_of_power[static_cast<std::size_t>(q_values[iq])] = static_cast<int>(iq);
    }
  }

  MultifractalResult mf;
  mf.q_values.assign(q_values.begin(), q_values.end());
  mf.F.assign(q_values.size(), std::vector<double>(lags.size(), 0.0));
  for (std::size_t il = 0; il < lags.size(); ++il) {
    const std::size_t lag = lags[il];
    mf.lags.push_back(static_cast<double>(lag) * dt_sample);
    const std::size_t count = values.size() - lag;
    std::vector<double> sums(q_values.size(), 0.0);
    for (std::size_t t = 0; t < count; ++t) {
      const double d = std::abs(values[t + lag] - values[t]);
      if (integer_q) {
        double p = 1.0;
        for (int k = 1; k <= q_top; ++k) {
          p *= d;
          const int slot = slot_of_power[static_cast<std::size_t>(k)];
          if (slot >= 0) sums[static_cast<std::size_t>(slot)] += p;
        }
      } else {
        for (std::size_t iq = 0; iq < q_values.size(); ++iq) sums[iq] += std::pow(d, q_values[iq]);
      }
    }
    for (std::size_t iq = 0; iq < q_values.size(); ++iq) {
      mf.F[iq][il] = std::pow(sums[iq] / static_cast<double>(count), 1.0 / q_values[iq]);
    }
  }
  return mf;
}

MultifractalResult average_hh(std::span<const MultifractalResult> results) {
  if (results.empty()) fail(ErrorCode::Domain, "hh: nothing to average");
  MultifractalResult out = results.front();
  out.H.clear();
  out.H_stderr.clear();
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].lags != out.lags || results[r].q_values != out.q_values) {
      fail(ErrorCode::Domain, "hh: (q, lag) grids differ");
    }
    for (std::size_t iq = 0; iq < out.F.size(); ++iq) {
      for (std::size_t il = 0; il < out.F[iq].size(); ++il) out.F[iq][il] += results[r].F[iq][il];
    }
  }
  for (auto& row : out.F) {
    for (double& v : row) v /= static_cast<double>(results.size());
  }
  return out;
}

MultifractalResult hurst_spectrum(MultifractalResult mf, Range fit_range) {
  mf.H.assign(mf.q_values.size(), 0.0);
  mf.H_stderr.assign(mf.q_values.size(), 0.0);
  for (std::size_t iq = 0; iq < mf.q_values.size(); ++iq) {
    const PowerLawFit fit = fit_powerlaw(mf.lags, mf.F[iq], fit_range);
    mf.H[iq] = fit.exponent;
    mf.H_stderr[iq] = fit.stderr_;
  }
  return mf;
}

}  // namespace kirman::stats
