#include "kirman/market.hpp"

#include <cmath>
#include <random>
#include <string>

#include "kirman/error.hpp"
#include "kirman/random.hpp"

namespace kirman::market {

void MarketParams::validate() const {
  if (!(r0 > 0.0)) fail(ErrorCode::Domain, "market: r0 must be > 0");
  if (!(Pf > 0.0)) fail(ErrorCode::Domain, "market: Pf must be > 0");
  if (!(T > 0.0)) fail(ErrorCode::Domain, "market: T must be > 0");
  if (!(mood_flip_rate >= 0.0)) fail(ErrorCode::Domain, "market: mood_flip_rate must be >= 0");
}

int MoodSeries::zeta(std::size_t k, std::size_t lag) const {
  if (k < lag || k >= values.size()) fail(ErrorCode::Domain, "market: zeta index out of range");
  return values[k] - values[k - lag];
}

double x_to_y(double x) {
  if (!(x >= 0.0 && x < 1.0)) fail(ErrorCode::Domain, "market: x = " + std::to_string(x) + " outside [0, 1)");
  return x / (1.0 - x);
}

double y_to_x(double y) {
  if (!(y >= 0.0)) fail(ErrorCode::Domain, "market: y must be >= 0");
  return y / (1.0 + y);
}

namespace {

void check_mood(int xi) {
  if (xi != 1 && xi != -1) fail(ErrorCode::Domain, "market: mood must be +1 or -1");
}

}  // namespace

double price(const MarketParams& mp, double x, int xi) {
  check_mood(xi);
  return mp.Pf * std::exp(mp.r0 * x_to_y(x) * xi);
}

double log_return(const MarketParams& mp, double x_now, int xi_now, double x_prev, int xi_prev) {
  check_mood(xi_now);
  check_mood(xi_prev);
  return mp.r0 * (x_to_y(x_now) * xi_now - x_to_y(x_prev) * xi_prev);
}

double adiabatic_return(const MarketParams& mp, double y, double zeta) {
  if (!(y >= 0.0)) fail(ErrorCode::Domain, "market: y must be >= 0");
  return mp.r0 * y * zeta;
}

MoodSeries sample_mood(const MarketParams& mp, std::span<const double> grid, std::uint64_t seed) {
  if (!(mp.mood_flip_rate >= 0.0)) fail(ErrorCode::Domain, "market: mood_flip_rate must be >= 0");
  MoodSeries out;
  if (grid.size() > 1) out.dt = grid[1] - grid[0];
  out.values.reserve(grid.size());
  if (grid.empty()) return out;

  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int xi = unif(rng) < 0.5 ? 1 : -1;
  out.values.push_back(xi);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double d = grid[k] - grid[k - 1];
    if (d < 0.0) fail(ErrorCode::Domain, "market: grid must be nondecreasing");
    const double p_flip = -std::expm1(-mp.mood_flip_rate * d);
    if (unif(rng) < p_flip) xi = -xi;
    out.values.push_back(xi);
  }
  return out;
}

MoodSeries sample_mood(const MarketParams& mp, double dt, std::size_t n, std::uint64_t seed) {
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = static_cast<double>(k) * dt;
  MoodSeries out = sample_mood(mp, grid, seed);
  out.dt = dt;
  return out;
}

std::vector<double> return_series(const MarketParams& mp, std::span<const double> x,
                                  const MoodSeries& mood) {
  mp.validate();
  if (mood.values.size() != x.size()) fail(ErrorCode::Domain, "market: mood and x differ in length");
  const auto lag = static_cast<std::size_t>(std::max(1L, std::lround(mp.T / mood.dt)));
  std::vector<double> out;
  if (x.size() <= lag) return out;
  out.reserve(x.size() - lag);
  for (std::size_t k = lag; k < x.size(); ++k) {
    out.push_back(log_return(mp, x[k], mood.values[k], x[k - lag], mood.values[k - lag]));
  }
  return out;
}

}  // namespace kirman::market
