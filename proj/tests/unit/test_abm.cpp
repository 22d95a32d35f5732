#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "kirman/abm.hpp"
#include "kirman/error.hpp"
#include "kirman/stats.hpp"
#include "oracles.hpp"

using namespace kirman;
using namespace kirman::abm;

namespace {

AbmParams params(long N, double s1, double s2, double h, double alpha = 0.0) {
  AbmParams p;
  p.N = N;
  p.sigma1 = s1;
  p.sigma2 = s2;
  p.h = h;
  p.alpha = alpha;
  return p;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::Config;
}

// Long fixed-step run thinned to every `stride` steps, run in chunks so the
// full path is never held in memory.
std::vector<double> thinned_fixed_step_shares(const AbmParams& p, long X0, double dt, long stride,
                                              long n_keep, long n_burn, std::uint64_t seed) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_keep));
  const long chunk_samples = 2000;
  long X = X0;
  long kept = -n_burn;
  for (std::uint64_t c = 0; kept < n_keep; ++c) {
    const auto tr = simulate_fixed_step(p, X, chunk_samples * stride, dt, seed * 1000003 + c);
    for (long k = 1; k <= chunk_samples && kept < n_keep; ++k, ++kept) {
      if (kept >= 0) out.push_back(static_cast<double>(tr.states[static_cast<std::size_t>(k * stride)]) / static_cast<double>(p.N));
    }
    X = tr.states.back();
  }
  return out;
}

}  // namespace

TEST_SUITE("abm") {

TEST_CASE("transition probabilities at the empty-group ends") {
  const auto p = params(100, 0.2, 0.3, 0.01);
  const auto at0 = transition_probabilities(p, 0, 0.01);
  CHECK(at0.p_down == 0.0);
  CHECK(at0.p_up == doctest::Approx(100 * 0.2 * 0.01));
  const auto atN = transition_probabilities(p, 100, 0.01);
  CHECK(atN.p_up == 0.0);
}

TEST_CASE("hand-evaluated transition probabilities") {
  const auto tp = transition_probabilities(params(100, 0.2, 0.3, 0.01), 30, 0.01);
  CHECK(tp.p_up == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(tp.p_down == doctest::Approx(0.30).epsilon(1e-12));
}

TEST_CASE("equal sigma gives balanced moves at the midpoint") {
  const auto tp = transition_probabilities(params(100, 0.7, 0.7, 0.02), 50, 0.001);
  CHECK(tp.p_up == tp.p_down);
}

TEST_CASE("alpha = 0 reduces to the constant-timescale chain on a grid") {
  for (long N : {2L, 7L, 50L, 333L}) {
    for (double s1 : {0.0, 0.1, 2.5}) {
      for (double s2 : {0.0, 0.4, 3.0}) {
        for (double h : {0.001, 0.3, 1.0}) {
          auto p = params(N, s1, s2, h);
          p.rate_cap = std::numeric_limits<double>::infinity();
          const oracle::ChainRates ref{N, s1, s2, h};
          double worst = 0.0;
          for (long X = 0; X <= N; ++X) worst = std::max(worst, ref.up(X) + ref.down(X));
          const double dt = 0.5 / worst;
          for (long X = 0; X <= N; X += std::max(1L, N / 9)) {
            const auto tp = transition_probabilities(p, X, dt);
            CHECK(tp.p_up == ref.up(X) * dt);
            CHECK(tp.p_down == ref.down(X) * dt);
          }
        }
      }
    }
  }
}

TEST_CASE("equal sigma mirrors under X -> N - X") {
  for (long N : {10L, 99L, 400L}) {
    const auto p = params(N, 0.8, 0.8, 0.05);
    const double dt = default_dt(p);
    for (long X = 0; X <= N; ++X) {
      const auto a = transition_probabilities(p, X, dt);
      const auto b = transition_probabilities(p, N - X, dt);
      CHECK(a.p_up == doctest::Approx(b.p_down).epsilon(1e-14));
    }
  }
}

TEST_CASE("the timescale factor scales herding and sigma2 but not sigma1") {
  auto p = params(10, 0.5, 0.25, 0.1, 2.0);
  const auto r = jump_rates(p, 8);  // y = 4, s = 16
  CHECK(r.up == doctest::Approx(2.0 * (0.5 + 0.1 * 8.0 * 16.0)));
  CHECK(r.down == doctest::Approx(8.0 * (0.25 * 16.0 + 0.1 * 2.0 * 16.0)));
  CHECK(rate_factor(p, 10) == p.rate_cap);
  p.rate_cap = 3.0;
  CHECK(rate_factor(p, 8) == 3.0);
}

TEST_CASE("errors for large steps and out-of-range counts") {
  const auto p = params(100, 0.2, 0.3, 0.01);
  CHECK(code_of([&] { transition_probabilities(p, 30, 0.02); }) == ErrorCode::StepTooLarge);
  CHECK(code_of([&] { transition_probabilities(p, 101, 0.01); }) == ErrorCode::Domain);
  CHECK(code_of([&] { transition_probabilities(p, -1, 0.01); }) == ErrorCode::Domain);
  CHECK(code_of([&] { simulate_event_driven(p, 200, 1.0, 1); }) == ErrorCode::Domain);
  // The up-front check rejects a step that only fails near X = N/2 even when
  // starting in a safe state.
  const double dt = 1.2 / max_total_rate(p);
  CHECK(code_of([&] { simulate_fixed_step(p, 0, 10, dt, 1); }) == ErrorCode::StepTooLarge);
}

TEST_CASE("default step keeps the worst case at a tenth") {
  const auto p = params(200, 1.0, 2.0, 0.5, 1.0);
  const double dt = default_dt(p);
  double worst = 0.0;
  for (long X = 0; X <= p.N; ++X) {
    const auto tp = transition_probabilities(p, X, dt);
    worst = std::max(worst, tp.p_up + tp.p_down);
  }
  CHECK(worst == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(default_initial_count(p) == 100);
  CHECK(default_initial_count(params(7, 1, 1, 1)) == 4);
}

TEST_CASE("herding alone cannot leave consensus") {
  const auto p = params(50, 0.0, 0.0, 1.0);
  const auto tr = simulate_fixed_step(p, 0, 10000, default_dt(p), 3);
  for (long X : tr.states) CHECK(X == 0);
  const auto ev = simulate_event_driven(p, 50, 7.5, 3);
  REQUIRE(ev.size() == 2);
  CHECK(ev.states[1] == 50);
  CHECK(ev.times[1] == 7.5);
}

TEST_CASE("fixed-step paths are reproducible and move by at most one") {
  auto p = params(80, 0.5, 1.5, 0.2, 1.0);
  p.rate_cap = 50.0;  // keep the consensus rate from forcing a tiny step
  const double dt = default_dt(p);
  const auto a = simulate_fixed_step(p, 40, 50000, dt, 99);
  const auto b = simulate_fixed_step(p, 40, 50000, dt, 99);
  const auto c = simulate_fixed_step(p, 40, 50000, dt, 100);
  CHECK(a.states == b.states);
  CHECK(a.times == b.times);
  CHECK(a.states != c.states);
  REQUIRE(a.size() == 50001);
  for (std::size_t i = 1; i < a.size(); ++i) {
    CHECK(std::abs(a.states[i] - a.states[i - 1]) <= 1);
    CHECK(a.times[i] > a.times[i - 1]);
    CHECK((a.states[i] >= 0 && a.states[i] <= p.N));
  }
}

TEST_CASE("event-driven paths jump by exactly one and stay in range") {
  const auto p = params(60, 0.3, 0.6, 0.1, 2.0);
  const auto tr = simulate_event_driven(p, 30, 20.0, 5);
  REQUIRE(tr.size() > 100);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(std::abs(tr.states[i] - tr.states[i - 1]) == 1);
    CHECK(tr.times[i] > tr.times[i - 1]);
    CHECK((tr.states[i] >= 0 && tr.states[i] <= p.N));
  }
  CHECK(tr.times.back() <= 20.0);
  const auto again = simulate_event_driven(p, 30, 20.0, 5);
  CHECK(again.states == tr.states);
}

TEST_CASE("grid observation matches resampling the full jump path") {
  const auto p = params(40, 1.0, 1.0, 0.5);
  const double dt = 0.01;
  const std::size_t n = 5001;
  const auto full = simulate_event_driven(p, 20, static_cast<double>(n - 1) * dt, 17);
  CHECK(simulate_event_driven_on_grid(p, 20, dt, n, 17) == sample_on_grid(full, dt, n));
}

TEST_CASE("mean waiting time equals the inverse total rate") {
  const auto p = params(30, 0.4, 0.9, 0.05, 1.0);
  const long X = 12;
  const double R = jump_rates(p, X).total();
  const int repeats = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < repeats; ++i) {
    const auto tr = simulate_event_driven(p, X, 40.0 / R, 1000 + static_cast<std::uint64_t>(i));
    REQUIRE(tr.size() >= 2);
    const double w = tr.times[1] - tr.times[0];
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / repeats;
  const double se = std::sqrt((sum2 / repeats - mean * mean) / repeats);
  CHECK(std::abs(mean - 1.0 / R) < 3.0 * se);
}

TEST_CASE("first move goes up with probability r_up / R") {
  const auto p = params(30, 0.4, 0.9, 0.05);
  const long X = 8;
  const auto r = jump_rates(p, X);
  const int repeats = 20000;
  int ups = 0;
  for (int i = 0; i < repeats; ++i) {
    const auto tr = simulate_event_driven(p, X, 40.0 / r.total(), 50000 + static_cast<std::uint64_t>(i));
    ups += tr.states[1] > X ? 1 : 0;
  }
  const double q = r.up / r.total();
  const double se = std::sqrt(q * (1.0 - q) / repeats);
  CHECK(std::abs(ups / static_cast<double>(repeats) - q) < 3.0 * se);
}

TEST_CASE("long fixed-step run follows the Beta stationary law") {
  // N = 100 with sigma_i = 5 h: x is close to Beta(5, 5).
  const auto p = params(100, 5.0, 5.0, 1.0);
  const auto x = thinned_fixed_step_shares(p, 50, default_dt(p), 50, 1000000, 1000, 11);
  REQUIRE(x.size() == 1000000);
  const auto cdf = oracle::beta_cdf(5.0, 5.0);
  const double d = stats::ks_distance(x, cdf);
  MESSAGE("KS vs Beta(5,5): " << d);
  CHECK(d < 0.05);
}

TEST_CASE("small chains match the transition-matrix eigenvector") {
  for (const auto& p : {params(20, 2.0, 1.0, 1.0), params(12, 0.5, 0.5, 1.0), params(16, 3.0, 6.0, 2.0)}) {
    const auto pi = oracle::chain_stationary({p.N, p.sigma1, p.sigma2, p.h});
    // Event-driven, observed on a grid coarse enough to decorrelate a little.
    const std::size_t n = 400000;
    const auto states = simulate_event_driven_on_grid(p, p.N / 2, 0.02, n, 77 + static_cast<std::uint64_t>(p.N));
    std::vector<double> freq(static_cast<std::size_t>(p.N) + 1, 0.0);
    for (long X : states) freq[static_cast<std::size_t>(X)] += 1.0 / static_cast<double>(n);
    const double tv = oracle::total_variation(freq, pi);
    MESSAGE("N = " << p.N << " TV = " << tv);
    CHECK(tv < 0.03);

    const auto fixed = thinned_fixed_step_shares(p, p.N / 2, default_dt(p), 20, 400000, 100, 5 + static_cast<std::uint64_t>(p.N));
    std::vector<double> ffreq(static_cast<std::size_t>(p.N) + 1, 0.0);
    for (double x : fixed) ffreq[static_cast<std::size_t>(std::lround(x * static_cast<double>(p.N)))] += 1.0 / static_cast<double>(fixed.size());
    const double tv_fixed = oracle::total_variation(ffreq, pi);
    MESSAGE("N = " << p.N << " fixed-step TV = " << tv_fixed);
    CHECK(tv_fixed < 0.03);
  }
}

TEST_CASE("equal sigma and h give a uniform chain") {
  const auto pi = oracle::chain_stationary({15, 1.0, 1.0, 1.0});
  for (double v : pi) CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
}

TEST_CASE("event-driven and fixed-step samplers agree in distribution") {
  const auto p = params(50, 1.0, 2.0, 1.0);
  const std::size_t n = 200000;
  const double dt_obs = 0.05;
  std::vector<double> ev;
  for (long X : simulate_event_driven_on_grid(p, 25, dt_obs, n, 314)) ev.push_back(static_cast<double>(X) / 50.0);
  const double dt = default_dt(p);
  const long stride = std::max(1L, std::lround(dt_obs / dt));
  const auto fx = thinned_fixed_step_shares(p, 25, dt, stride, static_cast<long>(n), 200, 271);
  const double d = oracle::ks_two_sample(ev, fx);
  MESSAGE("two-sample KS: " << d);
  CHECK(d < 0.05);
}

}  // TEST_SUITE
