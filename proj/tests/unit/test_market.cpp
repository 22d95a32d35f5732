#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kirman/error.hpp"
#include "kirman/market.hpp"

using namespace kirman;
using namespace kirman::market;

TEST_SUITE("market") {

TEST_CASE("share to return and back") {
  CHECK(x_to_y(0.0) == 0.0);
  CHECK(x_to_y(0.5) == 1.0);
  CHECK(x_to_y(0.9) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(y_to_x(9.0) == doctest::Approx(0.9).epsilon(1e-15));
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = i / 1000.0;
    const double y = x_to_y(x);
    CHECK(y > prev);
    prev = y;
    if (x > 0.0) CHECK(std::abs(y_to_x(y) - x) <= 1e-12 * x);
  }
  CHECK_THROWS_AS(x_to_y(1.0), Error);
  CHECK_THROWS_AS(x_to_y(-0.1), Error);
  CHECK_THROWS_AS(y_to_x(-1.0), Error);
}

TEST_CASE("price") {
  MarketParams mp;
  mp.Pf = 2.5;
  CHECK(price(mp, 0.0, 1) == 2.5);
  CHECK(price(mp, 0.0, -1) == 2.5);
  mp.Pf = 1.0;
  CHECK(price(mp, 0.5, 1) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
  mp.Pf = 3.0;
  mp.r0 = 0.7;
  for (double x : {0.1, 0.4, 0.8}) {
    CHECK(price(mp, x, -1) == doctest::Approx(mp.Pf * mp.Pf / price(mp, x, 1)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(price(mp, 1.0, 1), Error);
  CHECK_THROWS_AS(price(mp, 0.5, 0), Error);
}

TEST_CASE("log returns") {
  MarketParams mp;
  mp.r0 = 0.4;
  CHECK(log_return(mp, 0.3, 1, 0.3, 1) == 0.0);
  CHECK(log_return(mp, 0.6, -1, 0.6, 1) == doctest::Approx(-2.0 * 0.4 * 1.5).epsilon(1e-14));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ux(0.0, 0.95), ur(0.05, 3.0), up(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    mp.r0 = ur(rng);
    mp.Pf = up(rng);
    const double xn = ux(rng), xp = ux(rng);
    const int sn = rng() % 2 ? 1 : -1, sp = rng() % 2 ? 1 : -1;
    const double direct = log_return(mp, xn, sn, xp, sp);
    const double via_price = std::log(price(mp, xn, sn)) - std::log(price(mp, xp, sp));
    const double scale = std::abs(std::log(mp.Pf)) + mp.r0 * (x_to_y(xn) + x_to_y(xp)) + 1.0;
    CHECK(std::abs(direct - via_price) <= 1e-14 * scale);
  }
}

TEST_CASE("adiabatic returns") {
  MarketParams mp;
  CHECK(adiabatic_return(mp, 3.0, 0.0) == 0.0);
  CHECK(adiabatic_return(mp, 3.0, 2.0) == 6.0);
  CHECK(adiabatic_return(mp, 3.0, -2.0) == -adiabatic_return(mp, 3.0, 2.0));
  // Frozen share: the adiabatic form coincides with the exact log return.
  mp.r0 = 0.3;
  const double x = 0.75;
  for (int now : {-1, 1}) {
    for (int before : {-1, 1}) {
      CHECK(adiabatic_return(mp, x_to_y(x), now - before) ==
            doctest::Approx(log_return(mp, x, now, x, before)).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(adiabatic_return(mp, -1.0, 2.0), Error);
}

TEST_CASE("frozen mood") {
  MarketParams mp;
  mp.mood_flip_rate = 0.0;
  const auto m = sample_mood(mp, 0.1, 10000, 5);
  for (int v : m.values) CHECK(v == m.values[0]);
}

TEST_CASE("telegraph mood statistics") {
  MarketParams mp;
  mp.mood_flip_rate = 1.0;
  const double dt = 0.01;
  const std::size_t n = 1000000;
  const auto m = sample_mood(mp, dt, n, 99);
  REQUIRE(m.values.size() == n);
  double sum = 0.0;
  std::size_t flips = 0;
  for (std::size_t k = 0; k < n; ++k) {
    REQUIRE((m.values[k] == 1 || m.values[k] == -1));
    sum += m.values[k];
    if (k > 0 && m.values[k] != m.values[k - 1]) ++flips;
  }
  // Time average of a two-state chain with lag-one correlation rho.
  const double rho = std::exp(-2.0 * mp.mood_flip_rate * dt);
  const double se_mean = std::sqrt((1.0 + rho) / (1.0 - rho) / static_cast<double>(n));
  CHECK(std::abs(sum / static_cast<double>(n)) < 3.0 * se_mean);

  const double p = 1.0 - std::exp(-mp.mood_flip_rate * dt);
  const double freq = static_cast<double>(flips) / static_cast<double>(n - 1);
  CHECK(std::abs(freq - p) < 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n - 1)));

  // Starting mood is equiprobable across seeds.
  int plus = 0;
  for (std::uint64_t s = 0; s < 4000; ++s) plus += sample_mood(mp, dt, 1, s).values[0] == 1 ? 1 : 0;
  CHECK(std::abs(plus / 4000.0 - 0.5) < 3.0 * std::sqrt(0.25 / 4000.0));
}

TEST_CASE("mood on an irregular grid") {
  MarketParams mp;
  mp.mood_flip_rate = 2.0;
  const std::vector<double> grid = {0.0, 0.0, 0.5, 3.0, 3.1};
  const auto m = sample_mood(mp, grid, 1);
  CHECK(m.values.size() == 5);
  CHECK(m.values[0] == m.values[1]);  // zero-length interval never flips
  const std::vector<double> bad = {0.0, 1.0, 0.5};
  CHECK_THROWS_AS(sample_mood(mp, bad, 1), Error);
}

TEST_CASE("zeta and return series") {
  MarketParams mp;
  mp.T = 0.03;
  mp.r0 = 2.0;
  const auto mood = sample_mood(mp, 0.01, 200, 3);
  std::vector<double> x(200);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.2 + 0.003 * static_cast<double>(k);
  const auto r = return_series(mp, x, mood);
  REQUIRE(r.size() == 197);
  for (std::size_t k = 0; k < r.size(); ++k) {
    CHECK(r[k] == log_return(mp, x[k + 3], mood.values[k + 3], x[k], mood.values[k]));
  }
  const int z = mood.zeta(10, 3);
  CHECK((z == 0 || z == 2 || z == -2));
  CHECK_THROWS_AS(mood.zeta(2, 3), Error);
}

}  // TEST_SUITE
