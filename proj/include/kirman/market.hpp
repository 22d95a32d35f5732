#pragma once

// Market observables from the noise-trader share x.
//
// Walrasian clearing of fundamentalist demand N_f ln(Pf / P) against noise
// trader demand -r0 N_c xi fixes P = Pf exp(r0 y xi), where y = x / (1 - x)
// is the absolute return.

#include <cstdint>
#include <span>
#include <vector>

namespace kirman::market {

struct MarketParams {
  double r0 = 1.0;
  double Pf = 1.0;
  double T = 1.0;
  double mood_flip_rate = 1.0;

  void validate() const;
};

/// Mood xi(t) in {-1, +1} on a uniform grid.
struct MoodSeries {
  double dt = 1.0;
  std::vector<int> values;

  /// zeta at grid index k for a window of `lag` steps: xi[k] - xi[k - lag].
  int zeta(std::size_t k, std::size_t lag) const;
};

/// x / (1 - x); Domain outside [0, 1).
double x_to_y(double x);
/// y / (1 + y); Domain for y < 0.
double y_to_x(double y);

double price(const MarketParams& mp, double x, int xi);

/// r0 [y(x_now) xi_now - y(x_prev) xi_prev], i.e. ln(P_now / P_prev).
double log_return(const MarketParams& mp, double x_now, int xi_now, double x_prev, int xi_prev);

/// r0 y zeta.
double adiabatic_return(const MarketParams& mp, double y, double zeta);

/// Symmetric telegraph process observed at the grid times (which must be
/// nondecreasing).  Each interval of length d flips the mood with
/// probability 1 - exp(-mood_flip_rate d); the initial mood is +1 or -1 with
/// equal probability.
MoodSeries sample_mood(const MarketParams& mp, std::span<const double> grid, std::uint64_t seed);

/// Convenience overload for the uniform grid k * dt, k = 0 .. n-1.
MoodSeries sample_mood(const MarketParams& mp, double dt, std::size_t n, std::uint64_t seed);

/// Window-T log returns along an x series sampled every dt (T rounded to a
/// whole number of steps, at least one).  Output index k corresponds to
/// input index k + lag.
std::vector<double> return_series(const MarketParams& mp, std::span<const double> x,
                                  const MoodSeries& mood);

}  // namespace kirman::market
