import math
import warnings

import numpy as np
import pytest
from scipy import constants

from spopo import (
    AdiabaticityWarning,
    BelowThresholdError,
    LOProfile,
    OscillatorParams,
    PumpProfile,
    effective_rates,
    pump_parameter,
    steady_state,
    threshold_flux,
    validity_margin,
    watts_to_flux,
)


def test_threshold_flux(params):
    assert threshold_flux(params) == pytest.approx(0.01 ** 2 / 4.0, rel=1e-15)


def test_from_threshold_round_trip():
    p = OscillatorParams.from_threshold(2e-9, 1e6, 1e7, 3.7e19)
    assert threshold_flux(p) == pytest.approx(3.7e19, rel=1e-14)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(roundtrip_time=0.0, loss_rate_signal=0.01, loss_rate_pump=1.0, coupling=1.0),
        dict(roundtrip_time=1.0, loss_rate_signal=-1.0, loss_rate_pump=1.0, coupling=1.0),
        dict(roundtrip_time=1.0, loss_rate_signal=0.01, loss_rate_pump=1.0, coupling=0.0),
        dict(roundtrip_time=1.0, loss_rate_signal=0.2, loss_rate_pump=1.0, coupling=1.0),
    ],
)
def test_oscillator_params_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        OscillatorParams(**kwargs)


def test_pump_finesse_checked_only_on_request():
    p = OscillatorParams(1.0, 0.01, 1.0, 1.0)
    with pytest.raises(ValueError):
        p.check_pump_finesse()
    OscillatorParams(1.0, 0.01, 0.2, 1.0).check_pump_finesse()


def test_watts_to_flux():
    wl = 0.4e-6
    expected = 50.0 * wl / (constants.h * constants.c)
    assert watts_to_flux(50.0, wl) == pytest.approx(expected, rel=1e-15)


def test_pump_parameter_rectangular_and_range(params):
    pump = PumpProfile.rectangular(1.5, 0.2)
    assert pump_parameter(pump, params, 0.0) == 1.5
    assert pump_parameter(pump, params, 0.3) == 0.0
    with pytest.raises(ValueError):
        pump_parameter(pump, params, 0.6)


def test_gaussian_pump_threshold_crossing():
    tau = 0.1
    pump = PumpProfile.gaussian(2.0, tau)
    t_cross = tau * math.sqrt(math.log(2.0) / 2.0)
    assert pump.mu(t_cross) == pytest.approx(1.0, rel=1e-14)


def test_sampled_pump_from_flux(params):
    t = np.linspace(-0.2, 0.2, 5)
    flux = 4.0 * threshold_flux(params) * np.ones(5)
    pump = PumpProfile.from_flux(t, flux, params)
    np.testing.assert_allclose(pump.mu(t), 2.0, rtol=1e-14)


def test_steady_state_values(params):
    ss = steady_state(params, 1.5)
    nth = threshold_flux(params)
    assert ss.pump_flux == pytest.approx(nth, rel=1e-15)
    assert ss.signal_flux == pytest.approx(2 * 100.0 * 0.5 * nth, rel=1e-14)


def test_steady_state_at_threshold_is_dark(params):
    assert steady_state(params, 1.0).signal_flux == 0.0


def test_steady_state_below_threshold_raises(params):
    with pytest.raises(BelowThresholdError):
        steady_state(params, 0.9)


def test_branches_have_opposite_signal_amplitude(params):
    plus = steady_state(params, 2.0, branch=1)
    minus = steady_state(params, 2.0, branch=-1)
    assert plus.signal_amplitude(0.0) == pytest.approx(-minus.signal_amplitude(0.0))
    assert plus.pump_amplitude(0.0) == pytest.approx(minus.pump_amplitude(0.0))


def test_effective_rates(params):
    r = effective_rates(params, 1.5)
    assert (r.kappa_x, r.kappa_y) == (pytest.approx(0.01), pytest.approx(0.03))
    assert not r.adiabatic_warning


def test_adiabaticity_warning():
    p = OscillatorParams(1.0, 0.01, 0.1, 1.0)
    with pytest.warns(AdiabaticityWarning):
        r = effective_rates(p, 2.0)
    assert r.adiabatic_warning


def test_validity_margin_scaling(params):
    m1 = validity_margin(params, 1e20, 1e-14)
    m2 = validity_margin(params, 4e20, 1e-14)
    assert m1 / m2 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        validity_margin(params, 0.0, 1.0)


def test_lo_profile_quadrature_and_validation():
    assert LOProfile("rectangular", 1.0, 0.1, phase=0.0).quadrature == "X"
    assert LOProfile("rectangular", 1.0, 0.1).quadrature == "Y"
    with pytest.raises(ValueError):
        LOProfile("rectangular", 1.0, 0.1, phase=1.0)
    with pytest.raises(ValueError):
        LOProfile("rectangular", -1.0, 0.1)
    with pytest.raises(ValueError):
        LOProfile("rectangular", 1.0, 0.1, target="idler")


def test_lo_photons_per_pulse_matches_quadrature():
    lo = LOProfile("gaussian", 3.0, 0.05, delay=0.01)
    t = np.linspace(-0.5, 0.5, 200001)
    assert lo.photons_per_pulse() == pytest.approx(np.trapezoid(lo.intensity(t), t), rel=1e-9)


def test_lo_phase_matching_halves_pump_phase_for_signal():
    pump = PumpProfile.rectangular(1.5, 0.2, phase=lambda t: 0.4 * np.ones_like(t))
    sig = LOProfile("rectangular", 1.0, 0.1, phase=0.0, target="signal")
    pmp = LOProfile("rectangular", 1.0, 0.1, phase=0.0, target="pump")
    assert sig.carrier_phase(0.0, pump) == pytest.approx(0.2)
    assert pmp.carrier_phase(0.0, pump) == pytest.approx(0.4)


def test_no_warning_for_well_separated_rates(params):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        effective_rates(params, 2.0)


def test_threshold_hand_value():
    p = OscillatorParams(1e-9, 4e7, 4e8, 2e-3)
    assert threshold_flux(p) == pytest.approx(1.0e20, rel=1e-12)


def test_watts_edge_cases():
    assert watts_to_flux(0.0, 1e-6) == 0.0
    assert watts_to_flux(1.0, 2e-6) == pytest.approx(2 * watts_to_flux(1.0, 1e-6), rel=1e-15)


def test_validity_margin_trivial_case():
    p = OscillatorParams(1.0, 0.01, 0.01, 1.0)
    assert validity_margin(p, 1.0, 1.0) == 1.0


from hypothesis import given, settings  # noqa: E402
from hypothesis import strategies as st  # noqa: E402

POS = st.floats(1e-3, 1e3)


@settings(max_examples=100, deadline=None)
@given(tr=st.floats(1e-12, 1.0), kt=st.floats(1e-5, 0.099), ratio=st.floats(1.0, 1e3), g=POS)
def test_threshold_literal_form(tr, kt, ratio, g):
    p = OscillatorParams(tr, kt / tr, ratio * kt / tr, g)
    assert threshold_flux(p) * 4 * g ** 2 / p.loss_rate_signal ** 2 == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(kt=st.floats(1e-5, 0.099), mus=st.lists(st.floats(1.0, 20.0), min_size=2, max_size=6))
def test_pump_flux_clamped_at_threshold(kt, mus):
    p = OscillatorParams(1.0, kt, 100 * kt, 1.0)
    fluxes = {steady_state(p, m).pump_flux for m in mus}
    assert fluxes == {threshold_flux(p)}


@settings(max_examples=100, deadline=None)
@given(kt=st.floats(1e-5, 0.099), mu0=st.floats(1.0, 20.0))
def test_rate_gap_is_twice_signal_loss(kt, mu0):
    p = OscillatorParams(1.0, kt, 1e4 * kt, 1.0)
    r = effective_rates(p, mu0, warn=False)
    assert r.kappa_y - r.kappa_x == pytest.approx(2 * kt, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(nth=st.floats(1e10, 1e25), tf=st.floats(1e-16, 1e-9))
def test_validity_margin_inverse_square_root(nth, tf):
    p = OscillatorParams(1.0, 0.01, 0.1, 1.0)
    base = validity_margin(p, nth, tf)
    assert validity_margin(p, 2 * nth, tf) / base == pytest.approx(2 ** -0.5, rel=1e-12)
    assert validity_margin(p, nth, 2 * tf) / base == pytest.approx(2 ** -0.5, rel=1e-12)
