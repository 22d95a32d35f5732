#pragma once

// Reference computations used by the tests.  Everything here is written
// from the model formulas directly and shares no code with the library, so
// agreement between the two is meaningful.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Tabulated CDF of a density known up to normalization on [lo, hi].
/// The grid is geometric when `log_grid` is set, which suits power-law
/// densities spanning several decades.
class TabulatedCdf {
 public:
  TabulatedCdf(const std::function<double(double)>& density, double lo, double hi,
               std::size_t n = 200001, bool log_grid = false)
      : lo_(lo), hi_(hi), log_grid_(log_grid) {
    x_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(n - 1);
      x_[i] = log_grid ? lo * std::pow(hi / lo, u) : lo + (hi - lo) * u;
    }
    x_.back() = hi;
    cdf_.assign(n, 0.0);
    double prev = density(x_[0]);
    for (std::size_t i = 1; i < n; ++i) {
      // Midpoint-corrected trapezoid (Simpson on each cell).
      const double mid = density(0.5 * (x_[i - 1] + x_[i]));
      const double cur = density(x_[i]);
      cdf_[i] = cdf_[i - 1] + (x_[i] - x_[i - 1]) * (prev + 4.0 * mid + cur) / 6.0;
      prev = cur;
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
  }

  double operator()(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - x_.begin());
    const double w = (x - x_[j - 1]) / (x_[j] - x_[j - 1]);
    return cdf_[j - 1] + w * (cdf_[j] - cdf_[j - 1]);
  }

  /// Probability mass in [a, b].
  double mass(double a, double b) const { return (*this)(b) - (*this)(a); }

 private:
  double lo_, hi_;
  bool log_grid_;
  std::vector<double> x_;
  std::vector<double> cdf_;
};

/// Beta(a, b) CDF by quadrature of x^(a-1) (1-x)^(b-1); a, b >= 1.
inline TabulatedCdf beta_cdf(double a, double b) {
  return TabulatedCdf([a, b](double x) { return std::pow(x, a - 1.0) * std::pow(1.0 - x, b - 1.0); },
                      0.0, 1.0);
}

/// Stationary density of dY = A dt + B dW with reflecting ends:
/// p(y) proportional to exp(integral of 2A/B^2) / B^2, integrated numerically
/// on a geometric grid and returned as a tabulated CDF.
inline TabulatedCdf stationary_cdf(const std::function<double(double)>& A,
                                   const std::function<double(double)>& B, double lo, double hi,
                                   std::size_t n = 400001) {
  // Potential phi(y) = integral_lo^y 2A/B^2, accumulated on the grid first.
  std::vector<double> y(n), phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  auto g = [&](double v) {
    const double b = B(v);
    return 2.0 * A(v) / (b * b);
  };
  for (std::size_t i = 1; i < n; ++i) {
    const double m = 0.5 * (y[i - 1] + y[i]);
    phi[i] = phi[i - 1] + (y[i] - y[i - 1]) * (g(y[i - 1]) + 4.0 * g(m) + g(y[i])) / 6.0;
  }
  const double phi_max = *std::max_element(phi.begin(), phi.end());
  auto density = [&, phi_max](double v) {
    const auto it = std::lower_bound(y.begin(), y.end(), v);
    std::size_t j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - y.begin(), 1, static_cast<std::ptrdiff_t>(n - 1)));
    const double w = (v - y[j - 1]) / (y[j] - y[j - 1]);
    const double ph = phi[j - 1] + w * (phi[j] - phi[j - 1]);
    const double b = B(v);
    return std::exp(ph - phi_max) / (b * b);
  };
  return TabulatedCdf(density, lo, hi, n, true);
}

/// Herding-chain jump rates written straight from the model definition.
struct ChainRates {
  long N;
  double sigma1, sigma2, h;
  double up(long X) const { return static_cast<double>(N - X) * (sigma1 + h * static_cast<double>(X)); }
  double down(long X) const { return static_cast<double>(X) * (sigma2 + h * static_cast<double>(N - X)); }
};

/// Stationary law of the fixed-step chain P = I + Q dt, taken as the
/// eigenvector of P^T with eigenvalue closest to one.
inline std::vector<double> chain_stationary(const ChainRates& r) {
  const long n = r.N + 1;
  double max_total = 0.0;
  for (long X = 0; X <= r.N; ++X) max_total = std::max(max_total, r.up(X) + r.down(X));
  const double dt = 0.5 / max_total;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  for (long X = 0; X <= r.N; ++X) {
    const double pu = X < r.N ? r.up(X) * dt : 0.0;
    const double pd = X > 0 ? r.down(X) * dt : 0.0;
    if (X < r.N) P(X, X + 1) = pu;
    if (X > 0) P(X, X - 1) = pd;
    P(X, X) = 1.0 - pu - pd;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(P.transpose());
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[best] - 1.0)) best = i;
  }
  const Eigen::VectorXcd v = es.eigenvectors().col(best);
  std::vector<double> pi(static_cast<std::size_t>(n));
  double total = 0.0;
  for (long i = 0; i < n; ++i) total += v[i].real();
  for (long i = 0; i < n; ++i) pi[static_cast<std::size_t>(i)] = v[i].real() / total;
  return pi;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - q[i]);
  return 0.5 * d;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace oracle
