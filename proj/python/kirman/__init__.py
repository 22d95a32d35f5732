"""Herding model with a variable event timescale: simulation and analysis."""

from pkgutil import extend_path

# Lets an in-tree build directory supply the compiled module.
__path__ = extend_path(__path__, __name__)

from ._core import (  # noqa: E402
    AbmParams,
    KirmanError,
    MarketParams,
    SdeSpec,
    StepControl,
    __version__,
    adiabatic_return,
    coefficients,
    default_dt,
    default_initial_state,
    fit_powerlaw,
    hurst_spectrum,
    integrate,
    jump_rates,
    log_binned_pdf,
    log_return,
    predict_exponents,
    price,
    psd,
    reproduce_figure,
    run_experiment,
    simulate_event_driven,
    simulate_fixed_step,
    x_to_y,
    y_to_x,
)

__all__ = [
    "AbmParams",
    "KirmanError",
    "MarketParams",
    "SdeSpec",
    "StepControl",
    "__version__",
    "adiabatic_return",
    "coefficients",
    "default_dt",
    "default_initial_state",
    "fit_powerlaw",
    "hurst_spectrum",
    "integrate",
    "jump_rates",
    "log_binned_pdf",
    "log_return",
    "predict_exponents",
    "price",
    "psd",
    "reproduce_figure",
    "run_experiment",
    "simulate_event_driven",
    "simulate_fixed_step",
    "x_to_y",
    "y_to_x",
]
