"""Local band structure of the cosine-squared lattice and spatial-gap maps.

Two independent routes to the band edges of the Hill equation

    psi'' + (E - A cos^2(kappa z)) psi = 0

are provided: the Floquet discriminant (trace of the one-period transfer
matrix, integrated with fixed-step RK4) and diagonalisation of the
plane-wave Hamiltonian at the zone centre and zone boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import brentq

from .exceptions import NumericalDiagnosticError
from .units import PotentialSpec, envelope_amplitude

# minimum RK4 steps per local wavelength accepted by monodromy_trace
MIN_STEPS_PER_WAVELENGTH = 10
# amplitudes below this fraction of |eta| are treated as an empty lattice in
# the spatial-gap raster
AMPLITUDE_FLOOR = 1e-3


@numba.njit(cache=True, nogil=True)
def _fundamental_rk4(E, A, kappa, length, n_steps):
    h = length / n_steps
    # two fundamental solutions integrated side by side
    y1, p1, y2, p2 = 1.0, 0.0, 0.0, 1.0
    for i in range(n_steps):
        z = i * h
        c0 = math.cos(kappa * z)
        cm = math.cos(kappa * (z + 0.5 * h))
        c1 = math.cos(kappa * (z + h))
        w0 = A * c0 * c0 - E
        wm = A * cm * cm - E
        w1 = A * c1 * c1 - E

        k1y1, k1p1 = p1, w0 * y1
        k1y2, k1p2 = p2, w0 * y2
        a1, b1 = y1 + 0.5 * h * k1y1, p1 + 0.5 * h * k1p1
        a2, b2 = y2 + 0.5 * h * k1y2, p2 + 0.5 * h * k1p2
        k2y1, k2p1 = b1, wm * a1
        k2y2, k2p2 = b2, wm * a2
        a1, b1 = y1 + 0.5 * h * k2y1, p1 + 0.5 * h * k2p1
        a2, b2 = y2 + 0.5 * h * k2y2, p2 + 0.5 * h * k2p2
        k3y1, k3p1 = b1, wm * a1
        k3y2, k3p2 = b2, wm * a2
        a1, b1 = y1 + h * k3y1, p1 + h * k3p1
        a2, b2 = y2 + h * k3y2, p2 + h * k3p2
        k4y1, k4p1 = b1, w1 * a1
        k4y2, k4p2 = b2, w1 * a2

        y1 += h / 6.0 * (k1y1 + 2.0 * k2y1 + 2.0 * k3y1 + k4y1)
        p1 += h / 6.0 * (k1p1 + 2.0 * k2p1 + 2.0 * k3p1 + k4p1)
        y2 += h / 6.0 * (k1y2 + 2.0 * k2y2 + 2.0 * k3y2 + k4y2)
        p2 += h / 6.0 * (k1p2 + 2.0 * k2p2 + 2.0 * k3p2 + k4p2)
    return y1, p1, y2, p2


@numba.njit(cache=True, nogil=True)
def _trace_rk4(E, A, kappa, n_steps):
    y1, p1, y2, p2 = _fundamental_rk4(E, A, kappa, math.pi / kappa, n_steps)
    return y1 + p2


@numba.njit(cache=True, nogil=True)
def _half_period_many(E, A, kappa, n_steps):
    # columns: y1, y2', y1', y2 at half period
    out = np.empty((E.shape[0], 4))
    half = 0.5 * math.pi / kappa
    for i in range(E.shape[0]):
        y1, p1, y2, p2 = _fundamental_rk4(E[i], A, kappa, half, n_steps)
        out[i, 0] = y1
        out[i, 1] = p2
        out[i, 2] = p1
        out[i, 3] = y2
    return out


@numba.njit(cache=True, nogil=True)
def _trace_many(E, A, kappa, n_steps):
    out = np.empty(E.shape[0])
    for i in range(E.shape[0]):
        out[i] = _trace_rk4(E[i], A[i], kappa, n_steps[i])
    return out


def default_steps(E, A, kappa):
    """RK4 steps per period: >= 200 per local wavelength, at least 800."""
    period = math.pi / kappa
    k_max = math.sqrt(max(abs(E - min(A, 0.0)), abs(E - max(A, 0.0)), 1e-12))
    return max(800, int(math.ceil(200.0 * k_max * period / (2.0 * math.pi))))


def _check_steps(E, A, kappa, n_steps):
    period = math.pi / kappa
    k_max = math.sqrt(max(abs(E - min(A, 0.0)), abs(E - max(A, 0.0)), 1e-12))
    wavelength = 2.0 * math.pi / k_max
    if wavelength / (period / n_steps) < MIN_STEPS_PER_WAVELENGTH:
        raise NumericalDiagnosticError(
            f"step size too coarse: {n_steps} steps per period resolve the local "
            f"wavelength {wavelength:.4g} with fewer than {MIN_STEPS_PER_WAVELENGTH} steps"
        )


def monodromy_trace(E, A, kappa, n_steps=None):
    """Trace of the one-period transfer matrix (Floquet discriminant).

    Energy E is in an allowed band iff ``abs(trace) <= 2``.
    """
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    E = float(E)
    A = float(A)
    if n_steps is None:
        n_steps = default_steps(E, A, kappa)
    _check_steps(E, A, kappa, n_steps)
    return float(_trace_rk4(E, A, float(kappa), int(n_steps)))


@dataclass(frozen=True)
class BandSet:
    """Bloch bands of an infinite cos^2 lattice.

    ``bands[n] = (E_min, E_max)`` for band index n.  Neighbouring bands may
    touch where a gap is closed; :attr:`intervals` merges those into the
    disjoint allowed set.
    """

    amplitude_A: float
    kappa: float
    bands: np.ndarray
    e_max: float = math.inf
    tol: float = 1e-8

    @property
    def intervals(self) -> np.ndarray:
        merged = []
        for lo, hi in self.bands:
            if merged and lo <= merged[-1][1] + self.tol * max(1.0, abs(lo)):
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return np.array(merged, dtype=float).reshape(-1, 2)

    @property
    def gaps(self) -> np.ndarray:
        iv = self.intervals
        return np.column_stack([iv[:-1, 1], iv[1:, 0]]) if len(iv) > 1 else np.empty((0, 2))

    @property
    def edges(self) -> np.ndarray:
        return self.bands.ravel()

    def is_allowed(self, E):
        E = np.asarray(E, dtype=float)
        iv = self.intervals
        inside = (E[..., None] >= iv[:, 0]) & (E[..., None] <= iv[:, 1])
        return inside.any(axis=-1)

    def __len__(self):
        return len(self.bands)


def _scan_step(A, kappa):
    return min(kappa * kappa / 50.0, abs(A) / 50.0 + 1e-3)


def band_edges(A, kappa, E_max, tol=1e-10, n_steps=None) -> BandSet:
    """Band edges from the Floquet discriminant up to ``E_max``.

    The lattice is even about every node, so trace - 2 = 4 y1'(L/2) y2(L/2)
    and trace + 2 = 4 y1(L/2) y2'(L/2) for the fundamental solutions.  Each
    edge is therefore a simple root of one half-period factor, bracketed
    on a scan grid and refined to within ``tol``.  This stays well
    conditioned for gaps far narrower than anything the raw trace can
    resolve.
    """
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    if not E_max > min(0.0, A):
        raise ValueError("E_max must exceed min(0, A)")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    A = float(A)
    kappa = float(kappa)
    e_lo = min(0.0, A) - 0.5
    step = _scan_step(A, kappa)
    # scan past E_max so that the band straddling the ceiling is closed
    e_hi = E_max + 4 * step + 2 * kappa * kappa
    if n_steps is None:
        n_steps = default_steps(e_hi, A, kappa)
    _check_steps(e_hi, A, kappa, n_steps)
    half_steps = max(1, n_steps // 2)

    grid = np.arange(e_lo, e_hi + step, step)
    factors = _half_period_many(grid, A, kappa, half_steps)
    levels = (-2.0, -2.0, 2.0, 2.0)

    def factor(e, col):
        return _half_period_many(np.array([e]), A, kappa, half_steps)[0, col]

    edges = []
    for col in range(4):
        f = factors[:, col]
        for i in np.nonzero(f[:-1] * f[1:] <= 0)[0]:
            lo, hi = grid[i], grid[i + 1]
            if f[i] == 0.0:
                edges.append((lo, levels[col]))
                continue
            if f[i + 1] == 0.0:
                continue
            e = brentq(factor, lo, hi, args=(col,), xtol=tol, rtol=4 * np.finfo(float).eps)
            edges.append((e, levels[col]))
    edges.sort()
    _validate_edges(edges, grid, step)

    values = np.array([e for e, _ in edges])
    n_pairs = len(values) // 2
    bands = values[: 2 * n_pairs].reshape(-1, 2)
    if len(values) % 2:
        bands = np.vstack([bands, [values[-1], math.inf]])
    bands = bands[bands[:, 0] < E_max]
    bands[:, 1] = np.minimum(bands[:, 1], E_max)
    return BandSet(A, kappa, bands, E_max)


def _validate_edges(edges, grid, step):
    # expected level pattern: +2, -2, -2, +2, +2, -2, -2, ...
    for n, (e, level) in enumerate(edges):
        expected = 2.0 if ((n + 1) // 2) % 2 == 0 else -2.0
        if level != expected:
            raise NumericalDiagnosticError(
                f"band edge sequence broken at E={e:.10g} (edge {n}, trace={level:+.0f}); "
                f"scan grid {grid[0]:.6g}..{grid[-1]:.6g} step {step:.3g} is too coarse"
            )


def _hill_eigs(A, kappa, nu, m_max):
    m = np.arange(-m_max, m_max + 1) if nu == 0 else np.arange(-m_max - 1, m_max + 1)
    diag = ((2 * m + nu) * kappa) ** 2 + A / 2.0
    off = np.full(len(m) - 1, A / 4.0)
    return eigvalsh_tridiagonal(diag, off)


def _hill_edges(A, kappa, n_bands, basis_size):
    m_max = max(1, basis_size // 2)
    eigs = np.sort(np.concatenate([_hill_eigs(A, kappa, 0, m_max), _hill_eigs(A, kappa, 1, m_max)]))
    return eigs[: 2 * n_bands]


def hill_band_edges(A, kappa, n_bands, basis_size=None) -> BandSet:
    """Band edges by diagonalising the plane-wave Hamiltonian.

    Zone-centre (periodic) and zone-boundary (antiperiodic) eigenvalues
    interleave; band n spans the (2n)th and (2n+1)th of the merged sorted
    list.
    """
    if not kappa > 0:
        raise ValueError("kappa must be > 0")
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    min_basis = 4 * n_bands + 8
    if basis_size is None:
        basis_size = max(min_basis, int(4 * math.sqrt(abs(A)) / kappa) + 4 * n_bands + 16)
    if basis_size < min_basis:
        raise ValueError(f"basis_size must be >= 4*n_bands + 8 = {min_basis}")
    edges = _hill_edges(A, kappa, n_bands, basis_size)
    doubled = _hill_edges(A, kappa, n_bands, 2 * basis_size)
    shift = np.max(np.abs(edges - doubled))
    if shift > 1e-8:
        raise NumericalDiagnosticError(
            f"basis_size={basis_size} too small: edges move by {shift:.3g} when doubled"
        )
    return BandSet(float(A), float(kappa), edges.reshape(-1, 2))


@dataclass(frozen=True)
class SpatialGapMap:
    """Allowed (True) / forbidden (False) raster indexed (q, z)."""

    q_grid: np.ndarray
    z_grid: np.ndarray
    allowed: np.ndarray
    beta_used: float = 0.0
    amplitude: np.ndarray = field(default=None, repr=False)

    def forbidden_runs(self, q_index):
        """Contiguous forbidden z-intervals (start, stop) for one momentum row."""
        row = ~self.allowed[q_index]
        padded = np.concatenate([[False], row, [False]])
        d = np.diff(padded.astype(int))
        starts = np.nonzero(d == 1)[0]
        stops = np.nonzero(d == -1)[0] - 1
        return [(self.z_grid[a], self.z_grid[b]) for a, b in zip(starts, stops)]


def local_amplitude(spec: PotentialSpec, z, floor=AMPLITUDE_FLOOR):
    amp = np.asarray(envelope_amplitude(spec, z), dtype=float)
    if spec.eta != 0:
        amp = np.where(np.abs(amp) < floor * abs(spec.eta), 0.0, amp)
    return amp


def spatial_gap_map(spec: PotentialSpec, q_grid, z_grid, tol=1e-10, n_steps=None) -> SpatialGapMap:
    """Position-resolved band membership of local energy q^2 + beta*z.

    Each column uses an infinite lattice whose depth is the envelope value
    at that z.  Membership is decided directly by |trace| <= 2, which is
    identical to lying in a band of :func:`band_edges` for that depth.
    """
    q_grid = np.asarray(q_grid, dtype=float)
    z_grid = np.asarray(z_grid, dtype=float)
    if q_grid.size == 0 or z_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(np.diff(q_grid) < 0) or np.any(np.diff(z_grid) < 0):
        raise ValueError("grids must be sorted")
    kappa = spec.kappa
    amp = local_amplitude(spec, z_grid)
    Q, Z = np.meshgrid(q_grid, z_grid, indexing="ij")
    E = Q * Q + spec.beta * Z
    Amat = np.broadcast_to(amp, E.shape)
    if n_steps is None:
        e_top = float(np.max(np.abs(E))) + float(np.max(np.abs(amp)))
        n_steps = default_steps(e_top, float(np.max(np.abs(amp))), kappa)
    steps = np.full(E.size, int(n_steps))
    trace = _trace_many(E.ravel(), np.ascontiguousarray(Amat).ravel(), kappa, steps).reshape(E.shape)
    allowed = np.abs(trace) <= 2.0
    # energies under the lattice minimum are never propagating
    allowed &= E > np.minimum(Amat, 0.0)
    return SpatialGapMap(q_grid, z_grid, allowed, spec.beta, amp)
