import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatialgaps import NumericalDiagnosticError, PotentialSpec
from spatialgaps.bands import (
    BandSet,
    band_edges,
    hill_band_edges,
    local_amplitude,
    monodromy_trace,
    spatial_gap_map,
)

KAPPA = math.sqrt(3) / 2
ZC = 300 * math.sqrt(2) * math.pi


def test_free_trace_is_two_cos():
    # 2 cos(2 pi / sqrt 3) = -1.76841
    assert monodromy_trace(1.0, 0.0, KAPPA) == pytest.approx(2 * math.cos(2 * math.pi / math.sqrt(3)), abs=1e-9)
    assert monodromy_trace(1.0, 0.0, KAPPA) == pytest.approx(-1.76841, abs=1e-5)
    assert monodromy_trace(4.0, 0.0, 1.0) == pytest.approx(2.0, abs=1e-9)


def test_weak_gap_center_is_forbidden():
    assert abs(monodromy_trace(0.80, 0.1, KAPPA)) > 2


def test_trace_rejects_coarse_steps():
    with pytest.raises(NumericalDiagnosticError):
        monodromy_trace(400.0, 0.0, KAPPA, n_steps=20)
    with pytest.raises(ValueError):
        monodromy_trace(1.0, 0.0, 0.0)


def test_empty_lattice_single_interval():
    bs = band_edges(0.0, 1.0, 10.0)
    np.testing.assert_allclose(bs.intervals, [[0.0, 10.0]], atol=1e-9)
    assert len(bs.gaps) == 0


def test_weak_coupling_first_gap():
    bs = band_edges(0.1, KAPPA, 2.0)
    lo, hi = bs.gaps[0]
    assert lo == pytest.approx(0.775, abs=3e-3)
    assert hi == pytest.approx(0.825, abs=3e-3)


def test_fig2_peak_has_three_gaps_below_nine():
    bs = band_edges(2.0, KAPPA, 9.0)
    assert len(bs.gaps) == 3
    # golden edges (cross-checked against the Hill matrix)
    np.testing.assert_allclose(
        bs.gaps,
        [[1.21168479, 2.20479977], [3.97227557, 4.13144772], [7.76748013, 7.77436381]],
        atol=1e-7,
    )


def test_edges_have_unit_trace_magnitude():
    bs = band_edges(2.0, KAPPA, 9.0)
    # skip the bottom edge handled by the minimum and the E_max cutoff
    for e in bs.edges[1:-1]:
        assert abs(abs(monodromy_trace(e, 2.0, KAPPA)) - 2.0) < 1e-6


def test_hill_empty_lattice():
    np.testing.assert_allclose(hill_band_edges(0.0, 1.0, 2).bands, [[0, 1], [1, 4]], atol=1e-12)


def test_hill_weak_coupling():
    bs = hill_band_edges(0.1, KAPPA, 1)
    assert bs.bands[0, 1] == pytest.approx(0.775, abs=3e-3)


def test_hill_rejects_small_basis():
    with pytest.raises(ValueError):
        hill_band_edges(2.0, KAPPA, 5, basis_size=10)


@pytest.mark.parametrize("A", [-5.0, -0.5, 0.1, 2.0])
def test_two_methods_agree(A):
    h = hill_band_edges(A, KAPPA, 5)
    e_max = h.bands[-1, 1] + 0.5
    b = band_edges(A, KAPPA, e_max)
    np.testing.assert_allclose(b.bands[:5], h.bands, atol=1e-6)


def test_gaps_vanish_with_amplitude():
    # the n-th gap of a single-harmonic lattice scales as A^n, so the third
    # one (~1e-10 here) is below the edge tolerance and simply absent
    bs = band_edges(1e-3, KAPPA, 8.0)
    widths = np.diff(bs.gaps, axis=1).ravel()
    assert 1 <= len(widths) <= 3 and np.all(widths < 1e-3)
    assert np.sum(widths) < 1e-3


@settings(max_examples=10, deadline=None)
@given(st.floats(0.02, 0.9), st.floats(1.1, 2.0))
def test_first_gap_nested_in_amplitude(a1, ratio):
    a2 = min(1.0, a1 * ratio)
    # measured from the lattice mean A/2, which itself rises with A
    g1 = band_edges(a1, KAPPA, 2.5).gaps[0] - a1 / 2
    g2 = band_edges(a2, KAPPA, 2.5).gaps[0] - a2 / 2
    assert g2[0] < g1[0] and g1[1] < g2[1]


def test_bandset_is_allowed():
    bs = BandSet(0.0, 1.0, np.array([[0.0, 1.0], [2.0, 3.0]]), 3.0)
    assert bs.is_allowed(0.5) and not bs.is_allowed(1.5)
    np.testing.assert_allclose(bs.gaps, [[1.0, 2.0]])


def test_gap_map_edges_of_domain_allowed(fig2_spec):
    q = np.linspace(0.5, 3.0, 40)
    m = spatial_gap_map(fig2_spec, q, [0.0, 2 * ZC])
    assert m.allowed.shape == (40, 2)
    assert m.allowed.all()


def test_gap_map_symmetric(fig2_spec):
    q = np.linspace(0.5, 3.0, 30)
    s = np.linspace(0, 1000, 41)
    left = spatial_gap_map(fig2_spec, q, ZC - s[::-1])
    right = spatial_gap_map(fig2_spec, q, ZC + s)
    np.testing.assert_array_equal(left.allowed[:, ::-1], right.allowed)


def test_narrow_gap_at_peak_for_q2(fig2_spec):
    z = np.linspace(ZC - 600, ZC + 600, 1201)
    m = spatial_gap_map(fig2_spec, [2.0], z)
    runs = m.forbidden_runs(0)
    assert len(runs) == 1
    lo, hi = runs[0]
    assert lo < ZC < hi
    # narrow compared with the envelope (full 1/e width ~ 890)
    assert 0 < hi - lo < 300


def test_gap_map_matches_band_sets(fig2_spec):
    rng = np.random.default_rng(7)
    q = np.sort(rng.uniform(0.5, 3.0, 10))
    z = np.sort(rng.uniform(ZC - 700, ZC + 700, 10))
    m = spatial_gap_map(fig2_spec, q, z)
    amps = local_amplitude(fig2_spec, z)
    for j, A in enumerate(amps):
        bs = band_edges(A, KAPPA, 10.0)
        for i, qi in enumerate(q):
            assert m.allowed[i, j] == bs.is_allowed(qi * qi)


def test_gap_map_requires_sorted_grids(fig2_spec):
    with pytest.raises(ValueError):
        spatial_gap_map(fig2_spec, [2.0, 1.0], [0.0])
    with pytest.raises(ValueError):
        spatial_gap_map(fig2_spec, [], [0.0])


def test_attractive_lattice_below_minimum_forbidden():
    spec = PotentialSpec(eta=-5.0)
    m = spatial_gap_map(spec, [0.1], [ZC])
    # E = 0.01 lies above the minimum -5, decided by the trace
    bs = band_edges(-5.0, KAPPA, 1.0)
    assert m.allowed[0, 0] == bs.is_allowed(0.01)
