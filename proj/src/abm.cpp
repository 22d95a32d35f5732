#include "kirman/abm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "kirman/error.hpp"
#include "kirman/random.hpp"

namespace kirman::abm {

void AbmParams::validate() const {
  if (N < 2) fail(ErrorCode::Domain, "abm: N must be >= 2");
  if (!(h > 0.0)) fail(ErrorCode::Domain, "abm: h must be > 0");
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) fail(ErrorCode::Domain, "abm: sigma must be >= 0");
  if (!(alpha >= 0.0)) fail(ErrorCode::Domain, "abm: alpha must be >= 0");
  if (!(rate_cap > 0.0)) fail(ErrorCode::Domain, "abm: rate_cap must be > 0");
}

namespace {

void check_count(const AbmParams& p, long X) {
  if (X < 0 || X > p.N) {
    fail(ErrorCode::Domain,
         "abm: X = " + std::to_string(X) + " outside [0, " + std::to_string(p.N) + "]");
  }
}

}  // namespace

double rate_factor(const AbmParams& p, long X) {
  if (p.alpha == 0.0) return 1.0;
  if (X == p.N) return p.rate_cap;
  const double y = static_cast<double>(X) / static_cast<double>(p.N - X);
  return std::min(std::pow(y, p.alpha), p.rate_cap);
}

Rates jump_rates(const AbmParams& p, long X) {
  check_count(p, X);
  const double s = rate_factor(p, X);
  const double n_one = static_cast<double>(X);
  const double n_zero = static_cast<double>(p.N - X);
  return {n_zero * (p.sigma1 + p.h * n_one * s), n_one * (p.sigma2 * s + p.h * n_zero * s)};
}

TransitionProbabilities transition_probabilities(const AbmParams& p, long X, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::Domain, "abm: dt must be > 0");
  const Rates r = jump_rates(p, X);
  TransitionProbabilities out{r.up * dt, r.down * dt};
  if (out.p_up + out.p_down > 1.0) {
    fail(ErrorCode::StepTooLarge, "abm: p_up + p_down = " + std::to_string(out.p_up + out.p_down) +
                                      " > 1 at X = " + std::to_string(X) + "; shrink dt");
  }
  return out;
}

double max_total_rate(const AbmParams& p) {
  double best = 0.0;
  for (long X = 0; X <= p.N; ++X) best = std::max(best, jump_rates(p, X).total());
  return best;
}

double default_dt(const AbmParams& p, double target_total) {
  const double r = max_total_rate(p);
  return r > 0.0 ? target_total / r : 1.0;
}

long default_initial_count(const AbmParams& p) { return std::lround(static_cast<double>(p.N) / 2.0); }

DiscreteTrajectory simulate_fixed_step(const AbmParams& p, long X0, long n_steps, double dt,
                                       std::uint64_t seed) {
  p.validate();
  check_count(p, X0);
  if (n_steps < 0) fail(ErrorCode::Domain, "abm: n_steps must be >= 0");
  // Precompute the per-state probabilities; this also performs the
  // worst-case check over [0, N] before any step is taken.
  std::vector<TransitionProbabilities> table(static_cast<std::size_t>(p.N) + 1);
  for (long X = 0; X <= p.N; ++X) table[static_cast<std::size_t>(X)] = transition_probabilities(p, X, dt);

  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  DiscreteTrajectory out;
  out.times.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  long X = X0;
  out.times.push_back(0.0);
  out.states.push_back(X);
  for (long i = 1; i <= n_steps; ++i) {
    const auto& tp = table[static_cast<std::size_t>(X)];
    const double u = unif(rng);
    if (u < tp.p_up) {
      ++X;
    } else if (u < tp.p_up + tp.p_down) {
      --X;
    }
    out.times.push_back(static_cast<double>(i) * dt);
    out.states.push_back(X);
  }
  return out;
}

namespace {

// Drives the jump process and reports (t, X) after every jump.  Returns false
// when the chain froze before t_end.
template <typename OnEvent>
bool run_events(const AbmParams& p, long X0, double t_end, std::uint64_t seed, OnEvent&& on_event) {
  std::vector<Rates> table(static_cast<std::size_t>(p.N) + 1);
  for (long X = 0; X <= p.N; ++X) table[static_cast<std::size_t>(X)] = jump_rates(p, X);

  Engine rng = make_engine(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  long X = X0;
  double t = 0.0;
  while (true) {
    const Rates& r = table[static_cast<std::size_t>(X)];
    const double total = r.total();
    if (total <= 0.0) return false;
    t += expo(rng) / total;
    if (t > t_end) return true;
    X += unif(rng) * total < r.up ? 1 : -1;
    on_event(t, X);
  }
}

}  // namespace

DiscreteTrajectory simulate_event_driven(const AbmParams& p, long X0, double t_end,
                                         std::uint64_t seed) {
  p.validate();
  check_count(p, X0);
  if (!(t_end > 0.0)) fail(ErrorCode::Domain, "abm: t_end must be > 0");

  DiscreteTrajectory out;
  out.times.push_back(0.0);
  out.states.push_back(X0);
  const bool alive = run_events(p, X0, t_end, seed, [&](double t, long X) {
    out.times.push_back(t);
    out.states.push_back(X);
  });
  if (!alive) {
    out.times.push_back(t_end);
    out.states.push_back(out.states.back());
  }
  return out;
}

std::vector<long> simulate_event_driven_on_grid(const AbmParams& p, long X0, double dt_sample,
                                                std::size_t n_samples, std::uint64_t seed) {
  p.validate();
  check_count(p, X0);
  if (!(dt_sample > 0.0)) fail(ErrorCode::Domain, "abm: dt_sample must be > 0");
  if (n_samples == 0) return {};

  std::vector<long> out;
  out.reserve(n_samples);
  out.push_back(X0);
  long current = X0;
  // Samples at k * dt_sample take the state after the last jump at or
  // before that time.
  auto flush_until = [&](double t) {
    while (out.size() < n_samples && static_cast<double>(out.size()) * dt_sample < t) {
      out.push_back(current);
    }
  };
  const double t_end = static_cast<double>(n_samples - 1) * dt_sample;
  if (t_end > 0.0) {
    run_events(p, X0, t_end, seed, [&](double t, long X) {
      flush_until(t);
      current = X;
    });
  }
  while (out.size() < n_samples) out.push_back(current);
  return out;
}

std::vector<long> sample_on_grid(const DiscreteTrajectory& traj, double dt_sample,
                                 std::size_t n_samples) {
  if (traj.size() == 0) fail(ErrorCode::Domain, "abm: empty trajectory");
  if (!(dt_sample > 0.0)) fail(ErrorCode::Domain, "abm: dt_sample must be > 0");
  std::vector<long> out(n_samples);
  std::size_t j = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) * dt_sample;
    while (j + 1 < traj.size() && traj.times[j + 1] <= t) ++j;
    out[k] = traj.states[j];
  }
  return out;
}

}  // namespace kirman::abm
