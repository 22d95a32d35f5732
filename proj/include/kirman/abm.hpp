#pragma once

// Discrete-agent Kirman herding chain with a state-dependent event rate.
//
// X agents use choice 1 (noise traders), N - X use choice 0
// (fundamentalists).  With y = X / (N - X) and s = min(y^alpha, rate_cap),
//
//   rate up   = (N - X) (sigma1 + h X s)
//   rate down = X (sigma2 s + h (N - X) s)
//
// The idiosyncratic term sigma1 is not scaled by s; everything else is.  For
// alpha = 0 this is the original chain.

#include <cstdint>
#include <limits>
#include <vector>

namespace kirman::abm {

struct AbmParams {
  long N = 1000;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double h = 1.0;
  double alpha = 0.0;
  double rate_cap = 1e6;

  /// Throws Domain on N < 2, h <= 0, negative rates, alpha < 0 or
  /// rate_cap <= 0.
  void validate() const;
};

struct AbmState {
  long X = 0;
  double t = 0.0;
};

struct Rates {
  double up = 0.0;
  double down = 0.0;
  double total() const { return up + down; }
};

struct TransitionProbabilities {
  double p_up = 0.0;
  double p_down = 0.0;
};

/// Times and counts of one realization.  Event mode stores one entry per jump
/// (plus the initial state and, if frozen, a final sample at t_end).
struct DiscreteTrajectory {
  std::vector<double> times;
  std::vector<long> states;

  std::size_t size() const { return states.size(); }
};

/// The 1/tau factor min(y^alpha, rate_cap); rate_cap at X = N.
double rate_factor(const AbmParams& p, long X);

/// Per-unit-time jump rates.  Throws Domain for X outside [0, N].
Rates jump_rates(const AbmParams& p, long X);

/// Rates times dt.  Throws StepTooLarge (rather than clamping) when the two
/// probabilities sum above one.
TransitionProbabilities transition_probabilities(const AbmParams& p, long X, double dt);

/// Largest total jump rate over X in [0, N].
double max_total_rate(const AbmParams& p);

/// Step for which the worst-case p_up + p_down equals `target_total`
/// (0.1 by default).
double default_dt(const AbmParams& p, double target_total = 0.1);

/// Bernoulli chain with fixed step.  Checks the worst case X up front and
/// throws StepTooLarge before simulating anything.
DiscreteTrajectory simulate_fixed_step(const AbmParams& p, long X0, long n_steps, double dt,
                                       std::uint64_t seed);

/// Exact continuous-time jump process.  Stops at the first event after
/// t_end; a frozen state (zero total rate) gets one closing sample at t_end.
DiscreteTrajectory simulate_event_driven(const AbmParams& p, long X0, double t_end,
                                         std::uint64_t seed);

/// Same realization as simulate_event_driven(p, X0, (n_samples-1) * dt_sample,
/// seed), observed at k * dt_sample without storing every jump.
std::vector<long> simulate_event_driven_on_grid(const AbmParams& p, long X0, double dt_sample,
                                                std::size_t n_samples, std::uint64_t seed);

/// Piecewise-constant resampling of a jump path at k * dt_sample,
/// k = 0 .. n_samples-1.
std::vector<long> sample_on_grid(const DiscreteTrajectory& traj, double dt_sample,
                                 std::size_t n_samples);

/// round(N / 2).
long default_initial_count(const AbmParams& p);

}  // namespace kirman::abm
