import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialgaps.units import (
    LI7_2S2P,
    AtomPhysicalParams,
    PotentialSpec,
    RectangularBarrier,
    bragg_momenta,
    dressed_offset,
    effective_potential,
    envelope_amplitude,
    envelope_width_in_periods,
    lattice_period,
)

ZC = 300 * math.sqrt(2) * math.pi


def test_li7_preset_values_are_exact():
    assert LI7_2S2P.wavelength_lambda == 670.8e-9
    assert LI7_2S2P.recoil_frequency_omega_nu == 3.96e5
    assert LI7_2S2P.spontaneous_rate_gamma == 3.72e7
    assert LI7_2S2P.gravity_parameter_beta == 2.93e-4


@pytest.mark.parametrize("field", ["wavelength_lambda", "recoil_frequency_omega_nu", "spontaneous_rate_gamma"])
def test_atom_params_reject_non_positive(field):
    kw = dict(wavelength_lambda=1e-6, recoil_frequency_omega_nu=1.0, spontaneous_rate_gamma=1.0,
              gravity_parameter_beta=0.0)
    kw[field] = 0.0
    with pytest.raises(ValueError):
        AtomPhysicalParams(**kw)


def test_si_conversion():
    # one wavelength is 2 pi in units of 1/k
    assert LI7_2S2P.length_to_si(2 * math.pi) == pytest.approx(670.8e-9, rel=1e-14)
    assert LI7_2S2P.time_to_si(3.96e5) == pytest.approx(1.0)


@pytest.mark.parametrize("kw", [dict(d=0.0), dict(phi=0.0), dict(phi=2.0), dict(beta=-1e-3), dict(mode="x")])
def test_potential_spec_validation(kw):
    with pytest.raises(ValueError):
        PotentialSpec(**kw)


def test_envelope_examples():
    assert envelope_amplitude(PotentialSpec(eta=2.0), ZC) == pytest.approx(2.0, abs=1e-15)
    assert envelope_amplitude(PotentialSpec(eta=2.0), ZC + 100 * math.pi) == pytest.approx(2 * math.exp(-0.5), rel=1e-14)
    assert envelope_amplitude(PotentialSpec(eta=2.0), ZC + 100 * math.pi) == pytest.approx(1.2131, abs=5e-5)
    assert envelope_amplitude(PotentialSpec(eta=-5.0), ZC) == -5.0


def test_effective_potential_examples():
    spec = PotentialSpec(eta=2.0)
    assert effective_potential(spec, ZC) == pytest.approx(2.0)
    assert effective_potential(spec, ZC + math.pi / (2 * spec.kappa)) == pytest.approx(0.0, abs=1e-15)
    grav = PotentialSpec(eta=2.0, beta=2.93e-4)
    assert effective_potential(grav, ZC) == pytest.approx(2.0 - 2.93e-4 * ZC, rel=1e-14)
    # 2 - 0.390530 = 1.609470
    assert effective_potential(grav, ZC) == pytest.approx(1.60947, abs=5e-6)


def test_taylor_matches_envelope_times_cos2():
    spec = PotentialSpec(eta=1.3, phi=0.7, d=40.0, z_c=100.0)
    z = np.linspace(0, 200, 1001)
    expected = envelope_amplitude(spec, z) * np.cos((z - 100.0) * math.sin(0.7)) ** 2
    np.testing.assert_allclose(effective_potential(spec, z), expected, rtol=0, atol=1e-15)


def test_lattice_period_and_bragg():
    assert lattice_period(PotentialSpec(phi=math.pi / 2)) == pytest.approx(math.pi)
    assert lattice_period(PotentialSpec()) == pytest.approx(3.6276, abs=1e-4)
    np.testing.assert_allclose(bragg_momenta(PotentialSpec(phi=math.pi / 2), 2), [1, 2])
    np.testing.assert_allclose(bragg_momenta(PotentialSpec(), 3), [0.8660, 1.7321, 2.5981], atol=5e-5)
    np.testing.assert_allclose(bragg_momenta(PotentialSpec(phi=math.pi / 6), 1), [0.5])
    with pytest.raises(ValueError):
        bragg_momenta(PotentialSpec(), 0)


def test_envelope_spans_about_245_periods():
    assert envelope_width_in_periods(PotentialSpec()) == pytest.approx(244.9, abs=0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, math.pi / 2), st.floats(-6, 6))
def test_periodic_without_envelope(phi, eta):
    spec = PotentialSpec(eta=eta, phi=phi, d=1e30, z_c=0.0)
    z = np.random.default_rng(0).uniform(-500, 500, 1000)
    np.testing.assert_allclose(effective_potential(spec, z + lattice_period(spec)), effective_potential(spec, z),
                               rtol=0, atol=1e-11 * max(1.0, abs(eta)))


@settings(max_examples=25, deadline=None)
@given(st.floats(5.0, 500.0), st.floats(0.01, 0.1), st.sampled_from([1.0, -1.0]))
def test_taylor_is_leading_order_of_dressed(delta_abs, frac, sign):
    delta = sign * delta_abs
    eta = frac * delta  # |eta| <= 0.1 |delta|
    omega0 = math.sqrt(eta * delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exact = PotentialSpec.dressed(delta, omega0)
    taylor = PotentialSpec(eta=eta)
    assert exact.eta == pytest.approx(eta)
    z = np.linspace(ZC - 600, ZC + 600, 2001)
    # the offset has already been removed from U_exact
    diff = np.abs(effective_potential(exact, z) - effective_potential(taylor, z))
    assert np.all(diff <= 2 * omega0**4 / abs(delta) ** 3)


def test_dressed_default_branch_and_offset():
    s = PotentialSpec.dressed(10.0, 1.0)
    assert s.branch_sign == "plus" and s.eta == pytest.approx(0.1)
    assert dressed_offset(s) == pytest.approx(0.0)
    s = PotentialSpec.dressed(-10.0, 1.0)
    assert s.branch_sign == "minus" and s.eta == pytest.approx(-0.1)
    assert dressed_offset(s) == pytest.approx(0.0)
    other = PotentialSpec.dressed(-10.0, 1.0, "plus")
    assert dressed_offset(other) == pytest.approx(10.0)
    assert effective_potential(other, -3000.0) == pytest.approx(0.0, abs=1e-12)
    # far from the beams the potential vanishes on either branch
    assert effective_potential(s, -3000.0) == pytest.approx(0.0, abs=1e-12)


def test_dressed_warns_on_strong_coupling():
    with pytest.warns(UserWarning):
        PotentialSpec.dressed(2.0, 2.0)


def test_dressed_requires_fields():
    with pytest.raises(ValueError):
        PotentialSpec(mode="exact_dressed", detuning_delta=1.0)


def test_replace_keeps_dressed_eta_derived():
    s = PotentialSpec.dressed(10.0, 1.0).replace(rabi_omega0=2.0)
    assert s.eta == pytest.approx(0.4)


def test_rectangular_barrier_limits():
    b = RectangularBarrier(1.0, 2.0)
    # at the barrier top the closed form stays finite
    assert 0 < b.reflectivity(1.0) < 1
    assert b.reflectivity(1e3) < 1e-10
    assert b(1.0) == 1.0 and b(3.0) == 0.0 and b(0.0) == 0.5
