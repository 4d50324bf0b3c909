"""scikit-learn style front ends.

Each estimator takes the potential (and solver) settings as constructor
parameters, so ``get_params``/``set_params``/``clone`` work as usual.
``fit`` resolves and validates them (and does any expensive precomputation);
``transform`` evaluates the physics for a batch of inputs.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import bands, resonances, scattering, wavepacket
from .units import DEFAULT_D, DEFAULT_PHI, DEFAULT_Z_C, PotentialSpec


def check_momenta(X, name="q"):
    """1-d array of strictly positive finite momenta from a vector or one column."""
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be a vector or a single column, got shape {arr.shape}")
        arr = arr[:, 0]
    arr = check_array(arr.reshape(-1, 1), ensure_all_finite=True)[:, 0]
    if np.any(arr <= 0):
        raise ValueError(f"{name} must be > 0")
    return arr


def check_times(X):
    arr = check_array(np.asarray(X, dtype=float).reshape(-1, 1), ensure_all_finite=True)[:, 0]
    if np.any(arr < 0):
        raise ValueError("times must be >= 0")
    return arr


class _PotentialParams(BaseEstimator):
    def _build_spec(self) -> PotentialSpec:
        return PotentialSpec(eta=self.eta, phi=self.phi, z_c=self.z_c, d=self.d, beta=self.beta)


class LocalBandStructure(TransformerMixin, _PotentialParams):
    """Spatial-gap classifier: maps rows (q, z) to 1 (allowed) or 0 (forbidden)."""

    def __init__(self, eta=2.0, phi=DEFAULT_PHI, z_c=DEFAULT_Z_C, d=DEFAULT_D, beta=0.0, tol=1e-10):
        self.eta = eta
        self.phi = phi
        self.z_c = z_c
        self.d = d
        self.beta = beta
        self.tol = tol

    def fit(self, X=None, y=None):
        self.spec_ = self._build_spec()
        self.period_ = math.pi / self.spec_.kappa
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, ensure_all_finite=True)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns (q, z)")
        out = np.empty(len(X), dtype=int)
        for i, (q, z) in enumerate(X):
            m = bands.spatial_gap_map(self.spec_, [q], [z], tol=self.tol)
            out[i] = int(m.allowed[0, 0])
        return out.reshape(-1, 1)

    def gap_map(self, q_grid, z_grid) -> bands.SpatialGapMap:
        check_is_fitted(self, "spec_")
        return bands.spatial_gap_map(self.spec_, check_momenta(q_grid), np.asarray(z_grid, float), tol=self.tol)


class ReflectivitySpectrum(TransformerMixin, _PotentialParams):
    """Maps momenta q to columns (R, T)."""

    def __init__(self, eta=2.0, phi=DEFAULT_PHI, z_c=DEFAULT_Z_C, d=DEFAULT_D, beta=0.0,
                 h=0.05, z_min=0.0, z_max=None):
        self.eta = eta
        self.phi = phi
        self.z_c = z_c
        self.d = d
        self.beta = beta
        self.h = h
        self.z_min = z_min
        self.z_max = z_max

    def fit(self, X=None, y=None):
        self.spec_ = self._build_spec()
        z_max = 2.0 * self.spec_.z_c if self.z_max is None else self.z_max
        self.grid_ = scattering.SpatialGrid(self.z_min, z_max, self.h)
        return self

    def transform(self, X):
        check_is_fitted(self, "grid_")
        q = check_momenta(X)
        sweep = scattering.reflectivity_spectrum(self.spec_, q, self.grid_)
        self.sweep_ = sweep
        return np.column_stack([sweep.R_values, sweep.T_values])


class ResonanceDetector(BaseEstimator):
    """Finds resonance features in a sampled spectrum R(q).

    ``fit(q, R)`` stores the detected features in ``resonances_``;
    ``transform`` returns them as rows (q_center, width, prominence).
    """

    def __init__(self, prominence_min=0.05):
        self.prominence_min = prominence_min

    def fit(self, X, y):
        q = check_momenta(X)
        R = check_array(np.asarray(y, dtype=float).reshape(-1, 1), ensure_all_finite=True)[:, 0]
        if len(R) != len(q):
            raise ValueError("q and R must have the same length")
        sweep = scattering.SpectrumSweep(q, R, 1.0 - R, None, None)
        self.resonances_ = resonances.find_resonances(sweep, prominence_min=self.prominence_min)
        return self

    def transform(self, X=None):
        check_is_fitted(self, "resonances_")
        return np.array([[r.q_center, r.width, r.prominence] for r in self.resonances_]).reshape(-1, 3)


class WavepacketEvolver(TransformerMixin, _PotentialParams):
    """Maps times t to rows (P_left, P_inside, P_right).

    ``fit`` solves every quadrature momentum once; snapshots at any time are
    then cheap.
    """

    def __init__(self, eta=2.0, phi=DEFAULT_PHI, z_c=DEFAULT_Z_C, d=DEFAULT_D, beta=0.0,
                 a=35.0 * math.pi, q0=1.9, z0=-35.0 * math.pi, n_sigma=5.0, n_q=513, h=0.05,
                 z_min=-140.0 * math.pi):
        self.eta = eta
        self.phi = phi
        self.z_c = z_c
        self.d = d
        self.beta = beta
        self.a = a
        self.q0 = q0
        self.z0 = z0
        self.n_sigma = n_sigma
        self.n_q = n_q
        self.h = h
        self.z_min = z_min

    def fit(self, X=None, y=None):
        self.spec_ = self._build_spec()
        self.wavepacket_ = wavepacket.WavepacketSpec(self.a, self.q0, self.z0, self.n_sigma, self.n_q)
        self.grid_ = wavepacket.wavepacket_grid(self.spec_, self.h, self.z_min)
        self.table_ = wavepacket.build_psi_table(self.wavepacket_, self.spec_, self.grid_)
        return self

    def evolve(self, times) -> wavepacket.EvolutionResult:
        check_is_fitted(self, "table_")
        return wavepacket.evolve(self.wavepacket_, self.spec_, self.grid_, check_times(times), table=self.table_)

    def transform(self, X):
        return self.evolve(X).partitions
