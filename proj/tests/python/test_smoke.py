import math

import numpy as np
import pytest

import kirman


def test_predicted_exponents_for_the_variable_timescale_family():
    for alpha in (0.0, 1.0, 2.0):
        e = kirman.predict_exponents(kirman.SdeSpec.return_y(0.0, 2.0 - alpha, alpha))
        assert e["lambda"] == pytest.approx(3.0)
        assert e["beta"] == pytest.approx(1.0)


def test_coefficients_and_errors():
    spec = kirman.SdeSpec.population_x(1.0, 1.0, 0.0)
    drift, diffusion = kirman.coefficients(spec, 0.25)
    assert drift == pytest.approx(0.5)
    assert diffusion == pytest.approx(math.sqrt(2 * 0.25 * 0.75))
    with pytest.raises(kirman.KirmanError) as info:
        kirman.x_to_y(1.0)
    assert info.value.code == "DomainError"


def test_integration_is_seeded_and_bounded():
    spec = kirman.SdeSpec.return_y(1.0, 1.0, 1.0)
    spec.y_max = 100.0
    a, info = kirman.integrate(spec, 2.0, 5.0, 1e-3, 11)
    b, _ = kirman.integrate(spec, 2.0, 5.0, 1e-3, 11)
    assert a.shape == (5000,)
    assert np.array_equal(a, b)
    assert a.min() >= spec.y_min and a.max() <= spec.y_max
    assert info["steps"] >= 5000


def test_agent_model():
    p = kirman.AbmParams()
    p.N = 50
    up, down = kirman.jump_rates(p, 0)
    assert up == pytest.approx(50 * p.sigma1) and down == 0.0
    states = kirman.simulate_event_driven(p, 25, 0.1, 2000, 3)
    assert states.shape == (2000,)
    assert states.min() >= 0 and states.max() <= 50
    times, path = kirman.simulate_fixed_step(p, 25, 1000, kirman.default_dt(p), 3)
    assert len(times) == len(path) == 1001
    assert np.all(np.abs(np.diff(path)) <= 1)


def test_market_mapping():
    m = kirman.MarketParams()
    assert kirman.x_to_y(0.5) == pytest.approx(1.0)
    assert kirman.y_to_x(kirman.x_to_y(0.3)) == pytest.approx(0.3)
    assert kirman.log_return(m, 0.4, 1, 0.4, 1) == 0.0
    assert kirman.price(m, 0.0, 1) == pytest.approx(m.Pf)


def test_estimators_on_reference_signals():
    rng = np.random.default_rng(1)
    white = rng.standard_normal(2**18)
    f, s = kirman.psd(white, 1.0, 4096, 0.5, 10)
    fit = kirman.fit_powerlaw(f, s, 1e-3, 0.4)
    assert abs(fit["exponent"]) < 0.1

    pareto = rng.pareto(2.0, 200000) + 1.0
    pdf = kirman.log_binned_pdf(pareto, 10, 1.0, 1e4)
    widths = np.diff(pdf["bin_edges"])
    assert np.sum(pdf["density"] * widths) == pytest.approx(1.0)
    assert kirman.fit_powerlaw(pdf["bin_centers"], pdf["density"], 1.0, 100.0)["exponent"] == pytest.approx(-3.0, abs=0.1)

    brown = np.cumsum(rng.standard_normal(2**17))
    h = kirman.hurst_spectrum(brown, 1.0, [1.0, 2.0, 4.0], 1, 1000)
    assert np.all(np.abs(h["H"] - 0.5) < 0.05)


def test_run_experiment_writes_outputs(tmp_path):
    out = tmp_path / "run"
    result = kirman.run_experiment(
        {
            "model.kind": "return_y",
            "model.eps1": 1.0,
            "model.eps2": 1.0,
            "model.alpha": 1.0,
            "model.y_max": 100.0,
            "run.t_end": 20.0,
            "run.dt_sample": 1e-3,
            "run.master_seed": 5,
            "analysis.psd_segment": 2048,
            "analysis.pdf_fit_lo": 2.0,
            "analysis.pdf_fit_hi": 50.0,
            "output.dir": str(out),
        }
    )
    assert any(r["quantity"] == "lambda" for r in result["summary"])
    for name in ("series.csv", "pdf.csv", "psd.csv", "summary.csv", "manifest.json"):
        assert (out / name).exists()
    with pytest.raises(kirman.KirmanError):
        kirman.run_experiment({"model.bogus": 1})
