import numpy as np
import pytest

from spatialgaps import NumericalDiagnosticError, PotentialSpec, SpatialGrid, SpectrumSweep
from spatialgaps.resonances import adaptive_spectrum, find_resonances, refine_spectrum


def _sweep(q, R):
    return SpectrumSweep(np.asarray(q), np.asarray(R), 1 - np.asarray(R), None, None)


def test_monotone_spectrum_has_no_features():
    q = np.linspace(1, 2, 200)
    assert len(find_resonances(_sweep(q, np.linspace(0.1, 0.9, 200)))) == 0


def test_lorentzian_dip():
    q = np.linspace(1.9, 2.1, 201)
    gamma = 0.01
    R = 0.9 - 0.5 * (gamma / 2) ** 2 / ((q - 2.0) ** 2 + (gamma / 2) ** 2)
    res = find_resonances(_sweep(q, R))
    assert len(res) == 1
    r = res[0]
    assert r.kind == "dip"
    assert r.q_center == pytest.approx(2.0, abs=1e-3)
    assert r.prominence == pytest.approx(0.5, rel=0.05)
    assert r.width == pytest.approx(0.01, abs=q[1] - q[0])


def test_peak_reported_as_peak():
    q = np.linspace(0, 1, 401)
    res = find_resonances(_sweep(q, 0.3 * np.exp(-((q - 0.5) / 0.05) ** 2)))
    assert [r.kind for r in res] == ["peak"]


def test_coarse_sweep_rejected():
    q = np.linspace(0, 1, 5)
    with pytest.raises(NumericalDiagnosticError):
        find_resonances(_sweep(q, [0.0, 0.9, 0.0, 0.9, 0.0]))


def test_empty_result_for_tiny_prominence():
    q = np.linspace(0, 1, 101)
    R = 0.5 + 0.01 * np.sin(20 * q)
    assert len(find_resonances(_sweep(q, R), prominence_min=0.05)) == 0


@pytest.fixture(scope="module")
def fig3_sweep():
    spec = PotentialSpec(eta=2.0)
    return adaptive_spectrum(spec, np.linspace(1.85, 2.05, 401), SpatialGrid.default_for(spec))


@pytest.fixture(scope="module")
def fig6_sweep():
    spec = PotentialSpec(eta=-5.0)
    return adaptive_spectrum(spec, np.linspace(2.05, 2.35, 601), SpatialGrid.default_for(spec))


def test_refinement_resolves_jumps(fig3_sweep):
    assert np.all(np.diff(fig3_sweep.q_values) > 0)
    assert np.max(np.abs(np.diff(fig3_sweep.R_values))) <= 0.1
    assert len(fig3_sweep.q_values) > 401


def test_refinement_is_idempotent(fig3_sweep):
    again = refine_spectrum(fig3_sweep)
    np.testing.assert_array_equal(again.q_values, fig3_sweep.q_values)


def test_repulsive_resonances_near_two(fig3_sweep):
    res = find_resonances(fig3_sweep)
    assert len(res) >= 2
    dips = res.of_kind("dip")
    # goldens from the first validated run; the narrowest dips sit inside
    # the high-reflection plateau just below the narrow gap at the peak
    for q_golden in (1.97996875, 1.98809375):
        assert np.min(np.abs(dips.q_centers - q_golden)) < 5e-4
    narrow = [r for r in dips if r.width < 5e-4]
    assert len(narrow) >= 2


def test_attractive_resonances(fig6_sweep):
    res = find_resonances(fig6_sweep)
    assert len(res) >= 2
    for q_golden, kind in ((2.105, "peak"), (2.1195, "dip"), (2.1275, "peak"), (2.1355, "dip")):
        assert np.min(np.abs(res.of_kind(kind).q_centers - q_golden)) < 1e-3
