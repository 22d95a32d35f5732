#pragma once

// Scalar SDE family with reflecting boundaries and an adaptive
// Euler-Maruyama integrator.
//
// All equations use dimensionless time.  The variable event timescale enters
// as 1/tau(y) = y^alpha.
//
//   PopulationX  dx = [eps1 (1-x) - eps2 x / tau] dt + sqrt(2 x (1-x) / tau) dW,
//                with tau evaluated at y = x / (1 - x)
//   ReturnY      dy = [eps1 + y (2 - eps2) / tau] (1 + y) dt + sqrt(2 y / tau) (1 + y) dW
//   PowerLaw     dy = (eta - lambda/2) y^(2 eta - 1) dt + y^eta dW
//   Cev          dy = a y dt + b y^eta dW

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kirman::sde {

enum class ModelKind { PopulationX, ReturnY, PowerLaw, Cev };

std::string_view to_string(ModelKind kind);
/// Accepts population_x, return_y, powerlaw, cev.  Throws Config otherwise.
ModelKind parse_model_kind(std::string_view text);

struct SdeSpec {
  ModelKind kind = ModelKind::ReturnY;
  double eps1 = 0.0;
  double eps2 = 2.0;
  double alpha = 0.0;
  double eta = 1.5;
  double lambda = 3.0;
  double a_lin = 0.0;
  double b_amp = 1.0;
  double y_min = 1.0;
  double y_max = 1e3;
  // Multiplies the diffusion coefficient; 0 turns the SDE into its drift ODE.
  double noise_scale = 1.0;

  void validate() const;

  /// Defaults for the kind, including its standard boundaries.
  static SdeSpec population_x(double eps1, double eps2, double alpha);
  static SdeSpec return_y(double eps1, double eps2, double alpha);
  static SdeSpec powerlaw(double eta, double lambda);
  static SdeSpec cev(double a_lin, double b_amp, double eta);
};

struct StepControl {
  double kappa = 0.1;
  double dt_min = 1e-12;
  double dt_max = 1e-2;
  // Trajectories where more than this fraction of steps sat on dt_min are
  // flagged.
  double floor_fraction = 0.01;

  void validate() const;
};

struct Coefficients {
  double drift = 0.0;
  double diffusion = 0.0;  // multiplies dW
};

/// Throws Domain outside [y_min, y_max] and NonFinite on overflow.
Coefficients coefficients(const SdeSpec& spec, double state);

struct Exponents {
  double eta = 0.0;
  double lambda = 0.0;  // p(y) ~ y^-lambda
  double beta = 0.0;    // S(f) ~ f^-beta
};

/// Power-law predictions for ReturnY, PowerLaw and Cev.  Throws Domain for
/// PopulationX and DegenerateExponent when eta = 1 for PowerLaw.
Exponents predict_exponents(const SdeSpec& spec);

struct IntegrationStats {
  std::uint64_t steps = 0;
  std::uint64_t floor_steps = 0;
  std::uint64_t reflections = 0;
  bool step_floor_warning = false;
};

/// Uniformly sampled path: values[k] is the state at t0 + k * dt_sample.
struct Trajectory {
  double t0 = 0.0;
  double dt_sample = 1.0;
  std::vector<double> values;
  IntegrationStats stats;

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt_sample; }
};

/// Mirror-reflect `y` into [lo, hi].  Returns the number of reflections.
int reflect_into(double& y, double lo, double hi);

/// Adaptive step for the current state (before alignment to the output grid).
double adaptive_step(const SdeSpec& spec, const StepControl& ctrl, double state,
                     const Coefficients& c);

/// Euler-Maruyama from y0 with step
///   dt = clamp(kappa^2 min(s^2 / b^2, s / |a|), dt_min, dt_max),
/// where s is the state's distance scale (|y|, or min(x, 1 - x) for
/// PopulationX); steps are shortened to land on every output time.
/// Samples are taken at k * dt_sample for k = 0 .. round(t_end / dt_sample) - 1.
/// Throws NonFinite if the state stops being finite.
Trajectory integrate(const SdeSpec& spec, double y0, const StepControl& ctrl, double t_end,
                     double dt_sample, std::uint64_t seed);

/// sqrt(y_min * y_max).
double default_initial_state(const SdeSpec& spec);

}  // namespace kirman::sde
