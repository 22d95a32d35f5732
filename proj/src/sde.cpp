#include "kirman/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "kirman/error.hpp"
#include "kirman/random.hpp"

namespace kirman::sde {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::PopulationX: return "population_x";
    case ModelKind::ReturnY: return "return_y";
    case ModelKind::PowerLaw: return "powerlaw";
    case ModelKind::Cev: return "cev";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "population_x") return ModelKind::PopulationX;
  if (text == "return_y") return ModelKind::ReturnY;
  if (text == "powerlaw") return ModelKind::PowerLaw;
  if (text == "cev") return ModelKind::Cev;
  fail(ErrorCode::Config, "unknown model kind '" + std::string(text) + "'");
}

void SdeSpec::validate() const {
  if (!(y_min > 0.0) || !(y_max > y_min) || !std::isfinite(y_max)) {
    fail(ErrorCode::Domain, "sde: boundaries must satisfy 0 < y_min < y_max < inf");
  }
  if (kind == ModelKind::PopulationX && !(y_max < 1.0)) {
    fail(ErrorCode::Domain, "sde: population_x boundaries must lie inside (0, 1)");
  }
  if (kind == ModelKind::PopulationX || kind == ModelKind::ReturnY) {
    if (!(eps1 >= 0.0) || !(eps2 >= 0.0)) fail(ErrorCode::Domain, "sde: eps1, eps2 must be >= 0");
  }
  if (!(alpha >= 0.0)) fail(ErrorCode::Domain, "sde: alpha must be >= 0");
  if (kind == ModelKind::Cev && !(b_amp > 0.0)) fail(ErrorCode::Domain, "sde: b_amp must be > 0");
  if (!(noise_scale >= 0.0)) fail(ErrorCode::Domain, "sde: noise_scale must be >= 0");
}

SdeSpec SdeSpec::population_x(double eps1, double eps2, double alpha) {
  SdeSpec s;
  s.kind = ModelKind::PopulationX;
  s.eps1 = eps1;
  s.eps2 = eps2;
  s.alpha = alpha;
  s.y_min = 1e-6;
  s.y_max = 1.0 - 1e-6;
  return s;
}

SdeSpec SdeSpec::return_y(double eps1, double eps2, double alpha) {
  SdeSpec s;
  s.kind = ModelKind::ReturnY;
  s.eps1 = eps1;
  s.eps2 = eps2;
  s.alpha = alpha;
  s.eta = (3.0 + alpha) / 2.0;
  return s;
}

SdeSpec SdeSpec::powerlaw(double eta, double lambda) {
  SdeSpec s;
  s.kind = ModelKind::PowerLaw;
  s.eta = eta;
  s.lambda = lambda;
  return s;
}

SdeSpec SdeSpec::cev(double a_lin, double b_amp, double eta) {
  SdeSpec s;
  s.kind = ModelKind::Cev;
  s.a_lin = a_lin;
  s.b_amp = b_amp;
  s.eta = eta;
  s.alpha = 2.0 * eta - 3.0;
  return s;
}

void StepControl::validate() const {
  if (!(kappa > 0.0 && kappa <= 1.0)) fail(ErrorCode::Domain, "sde: kappa must lie in (0, 1]");
  if (!(dt_min > 0.0) || !(dt_max >= dt_min)) {
    fail(ErrorCode::Domain, "sde: need 0 < dt_min <= dt_max");
  }
  if (!(floor_fraction >= 0.0 && floor_fraction <= 1.0)) {
    fail(ErrorCode::Domain, "sde: floor_fraction must lie in [0, 1]");
  }
}

namespace {

inline double power(double base, double exponent) {
  if (exponent == 0.0) return 1.0;
  if (exponent == 1.0) return base;
  if (exponent == 2.0) return base * base;
  if (exponent == 3.0) return base * base * base;
  return std::pow(base, exponent);
}

Coefficients evaluate(const SdeSpec& s, double v) {
  switch (s.kind) {
    case ModelKind::PopulationX: {
      const double inv_tau = power(v / (1.0 - v), s.alpha);
      return {s.eps1 * (1.0 - v) - s.eps2 * v * inv_tau,
              std::sqrt(2.0 * v * (1.0 - v) * inv_tau)};
    }
    case ModelKind::ReturnY: {
      const double inv_tau = power(v, s.alpha);
      return {(s.eps1 + v * (2.0 - s.eps2) * inv_tau) * (1.0 + v),
              std::sqrt(2.0 * v * inv_tau) * (1.0 + v)};
    }
    case ModelKind::PowerLaw:
      return {(s.eta - s.lambda / 2.0) * power(v, 2.0 * s.eta - 1.0), power(v, s.eta)};
    case ModelKind::Cev:
      return {s.a_lin * v, s.b_amp * power(v, s.eta)};
  }
  return {};
}

inline double state_scale(const SdeSpec& s, double v) {
  return s.kind == ModelKind::PopulationX ? std::min(v, 1.0 - v) : std::abs(v);
}

}  // namespace

Coefficients coefficients(const SdeSpec& spec, double state) {
  if (!(state >= spec.y_min && state <= spec.y_max)) {
    fail(ErrorCode::Domain, "sde: state " + std::to_string(state) + " outside [" +
                                std::to_string(spec.y_min) + ", " + std::to_string(spec.y_max) + "]");
  }
  Coefficients c = evaluate(spec, state);
  c.diffusion *= spec.noise_scale;
  if (!std::isfinite(c.drift) || !std::isfinite(c.diffusion)) {
    fail(ErrorCode::NonFinite, "sde: coefficient overflow at state " + std::to_string(state));
  }
  return c;
}

Exponents predict_exponents(const SdeSpec& spec) {
  switch (spec.kind) {
    case ModelKind::ReturnY: {
      const double a = spec.alpha;
      return {(3.0 + a) / 2.0, spec.eps2 + a + 1.0, 1.0 + (spec.eps2 + a - 2.0) / (1.0 + a)};
    }
    case ModelKind::PowerLaw: {
      if (spec.eta == 1.0) {
        fail(ErrorCode::DegenerateExponent, "sde: beta undefined for eta = 1");
      }
      return {spec.eta, spec.lambda, 1.0 + (spec.lambda - 3.0) / (2.0 * (spec.eta - 1.0))};
    }
    case ModelKind::Cev: {
      // The prediction is stated in terms of alpha = 2 eta - 3.
      const double a = 2.0 * spec.eta - 3.0;
      return {spec.eta, 3.0 + a, 1.0 + a / (1.0 + a)};
    }
    case ModelKind::PopulationX:
      break;
  }
  fail(ErrorCode::Domain, "sde: no power-law prediction for population_x");
}

int reflect_into(double& y, double lo, double hi) {
  int count = 0;
  const double width = hi - lo;
  // Fold far excursions first; the result equals repeated mirroring.
  if (y < lo - 2.0 * width || y > hi + 2.0 * width) {
    double u = std::fmod(y - lo, 2.0 * width);
    if (u < 0.0) u += 2.0 * width;
    y = u > width ? lo + 2.0 * width - u : lo + u;
    return 2;
  }
  while (y < lo || y > hi) {
    y = y < lo ? 2.0 * lo - y : 2.0 * hi - y;
    ++count;
  }
  return count;
}

double adaptive_step(const SdeSpec& spec, const StepControl& ctrl, double state,
                     const Coefficients& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double s = state_scale(spec, state);
  const double by_noise = c.diffusion > 0.0 ? (s * s) / (c.diffusion * c.diffusion) : inf;
  const double by_drift = c.drift != 0.0 ? s / std::abs(c.drift) : inf;
  const double raw = ctrl.kappa * ctrl.kappa * std::min(by_noise, by_drift);
  return std::clamp(raw, ctrl.dt_min, ctrl.dt_max);
}

Trajectory integrate(const SdeSpec& spec, double y0, const StepControl& ctrl, double t_end,
                     double dt_sample, std::uint64_t seed) {
  spec.validate();
  ctrl.validate();
  if (!(y0 >= spec.y_min && y0 <= spec.y_max)) {
    fail(ErrorCode::Domain, "sde: y0 outside boundaries");
  }
  if (!(dt_sample >= ctrl.dt_min)) fail(ErrorCode::Domain, "sde: dt_sample must be >= dt_min");
  if (!(t_end > 0.0)) fail(ErrorCode::Domain, "sde: t_end must be > 0");

  Trajectory out;
  out.dt_sample = dt_sample;
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt_sample));
  out.values.reserve(n);

  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  IntegrationStats& st = out.stats;

  double y = y0;
  if (n > 0) out.values.push_back(y);
  for (std::size_t k = 1; k < n; ++k) {
    double remaining = dt_sample;
    while (remaining > 0.0) {
      const Coefficients c = coefficients(spec, y);
      double h = adaptive_step(spec, ctrl, y, c);
      if (h <= ctrl.dt_min) ++st.floor_steps;
      if (h >= remaining * (1.0 - 1e-12)) {
        h = remaining;
        remaining = 0.0;
      } else {
        remaining -= h;
      }
      y += c.drift * h + c.diffusion * std::sqrt(h) * normal(rng);
      if (!std::isfinite(y)) {
        fail(ErrorCode::NonFinite, "sde: state diverged at t = " +
                                       std::to_string(out.time(k - 1) + dt_sample - remaining));
      }
      st.reflections += static_cast<std::uint64_t>(reflect_into(y, spec.y_min, spec.y_max));
      ++st.steps;
    }
    out.values.push_back(y);
  }
  st.step_floor_warning =
      st.steps > 0 && static_cast<double>(st.floor_steps) > ctrl.floor_fraction * static_cast<double>(st.steps);
  return out;
}

double default_initial_state(const SdeSpec& spec) { return std::sqrt(spec.y_min * spec.y_max); }

}  // namespace kirman::sde
