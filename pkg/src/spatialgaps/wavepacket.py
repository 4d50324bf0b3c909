"""Time-domain wavepackets assembled from stationary scattering states.

    phi(z, t) = (2 pi)^(-1/2) * integral exp(-i q^2 t) psi_q(z) f0(q) dq

with a Gaussian momentum distribution f0 normalised to unit weight on the
quadrature grid, so that a free packet carries unit norm in z.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numba
import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .exceptions import NumericalDiagnosticError
from .scattering import SpatialGrid, _prepare, _solve_prepared, _check_q
from .units import PotentialSpec, lattice_period

# snapshot cadence of the reference runs, in units of 1/omega_nu
T_UNIT = 18.0 * math.pi
LOBE_THRESHOLD = 1e-4
LOBE_MIN_MASS = 1e-3
LOBE_SPLIT_DEPTH = 0.5
EMISSION_MIN_MASS = 1e-3


@dataclass(frozen=True)
class WavepacketSpec:
    a: float = 35.0 * math.pi
    q0: float = 1.9
    z0: float = -35.0 * math.pi
    n_sigma: float = 5.0
    n_q: int = 513

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be > 0")
        if not self.q0 - self.n_sigma / self.a > 0:
            raise ValueError("q0 - n_sigma/a must be > 0 so that every component is incoming")
        if self.n_q < 129 or self.n_q % 2 == 0:
            raise ValueError("n_q must be odd and >= 129")

    @property
    def q_grid(self) -> np.ndarray:
        half = self.n_sigma / self.a
        return np.linspace(self.q0 - half, self.q0 + half, self.n_q)

    @property
    def q_weights(self) -> np.ndarray:
        q = self.q_grid
        w = np.full(self.n_q, q[1] - q[0])
        w[0] = w[-1] = 0.5 * (q[1] - q[0])
        return w


def _norm_constant(wp: WavepacketSpec) -> float:
    g = np.exp(-(wp.a**2) * (wp.q_grid - wp.q0) ** 2)
    return 1.0 / math.sqrt(float(np.sum(wp.q_weights * g)))


def initial_distribution(wp: WavepacketSpec, q):
    """Gaussian momentum amplitude f0(q) with unit quadrature weight."""
    q = np.asarray(q, dtype=float)
    f = _norm_constant(wp) * np.exp(-(wp.a**2) * (q - wp.q0) ** 2 / 2.0) * np.exp(-1j * q * wp.z0)
    return f if f.ndim else complex(f)


def default_bounds(spec: PotentialSpec):
    """Laser region z_c +- 2d/cos(phi); the envelope is below e^-8 outside."""
    half = 2.0 * spec.d / math.cos(spec.phi)
    return spec.z_c - half, spec.z_c + half


def wavepacket_grid(spec: PotentialSpec, h=0.05, z_min=-140.0 * math.pi) -> SpatialGrid:
    """Solver domain extended to the left so that it holds the initial packet."""
    return SpatialGrid(z_min, 2.0 * spec.z_c, h)


@dataclass
class PsiTable:
    """Stationary states psi(q, z) for every quadrature momentum.

    Immutable once built and shared by all snapshot syntheses.
    """

    q: np.ndarray
    weights: np.ndarray
    z: np.ndarray
    psi: np.ndarray  # (n_z, n_q)
    r: np.ndarray
    t: np.ndarray
    k_left: np.ndarray
    k_right: np.ndarray
    grid: SpatialGrid
    force_free_outside: bool

    def __post_init__(self):
        self.psi.setflags(write=False)


def build_psi_table(wp: WavepacketSpec, spec, grid: SpatialGrid, stride=None) -> PsiTable:
    """Solve every quadrature momentum of ``wp`` on ``grid``.

    ``stride`` keeps every stride-th node (default: spacing close to 0.25).
    """
    if stride is None:
        stride = max(1, int(round(0.25 / grid.h)))
    q = wp.q_grid
    U, qa, period = _prepare(spec, grid, q)
    for qi in qa:
        _check_q(float(qi), U, grid, period)
    a, b, psi, k_l, k_r, _, ls = _solve_prepared(qa, U, grid, stride, keep_psi=True)
    if np.any(~(np.abs(a) >= 1e-12)):
        bad = qa[~(np.abs(a) >= 1e-12)][0]
        raise NumericalDiagnosticError(f"backward solution lost at q={bad:.8g}")
    t = np.exp(-ls - np.log(np.abs(a))) * (np.abs(a) / a)
    z = grid.z_min + grid.h * stride * np.arange(psi.shape[1])
    beta = spec.beta if isinstance(spec, PotentialSpec) else 0.0
    return PsiTable(
        q=qa,
        weights=wp.q_weights,
        z=z,
        psi=np.ascontiguousarray(psi.T),
        r=b / a,
        t=t,
        k_left=k_l,
        k_right=k_r,
        grid=grid,
        force_free_outside=(beta == 0.0),
    )


@dataclass
class Snapshot:
    t: float
    z: np.ndarray
    amplitude: np.ndarray
    density: np.ndarray
    partition: tuple = (math.nan, math.nan, math.nan)
    bounds: tuple = (math.nan, math.nan)

    @property
    def norm(self) -> float:
        return float(np.trapezoid(self.density, self.z))


_BLOCK = 4096


@numba.njit(cache=True, parallel=True)
def _plane_wave_sum(coef_in, coef_out, k, z):
    # sum_j coef_in_j e^{i k_j z} + coef_out_j e^{-i k_j z} on a uniform z grid;
    # fixed-size blocks, each anchored exactly, so the result does not
    # depend on the thread count
    n = z.shape[0]
    out = np.zeros(n, dtype=np.complex128)
    if n == 0:
        return out
    dz = z[1] - z[0] if n > 1 else 0.0
    n_blocks = (n + _BLOCK - 1) // _BLOCK
    for bi in numba.prange(n_blocks):
        start = bi * _BLOCK
        stop = min(n, start + _BLOCK)
        for j in range(k.shape[0]):
            e = complex(math.cos(k[j] * z[start]), math.sin(k[j] * z[start]))
            step = complex(math.cos(k[j] * dz), math.sin(k[j] * dz))
            for i in range(start, stop):
                out[i] += coef_in[j] * e + coef_out[j] / e
                e *= step
    return out


@numba.njit(cache=True, parallel=True)
def _matvec(psi, coef):
    out = np.empty(psi.shape[0], dtype=np.complex128)
    for i in numba.prange(psi.shape[0]):
        acc = 0j
        for j in range(psi.shape[1]):
            acc += psi[i, j] * coef[j]
        out[i] = acc
    return out


def _extension_grids(table: PsiTable, extend):
    if extend <= 0:
        return np.empty(0), np.empty(0)
    dz = table.z[1] - table.z[0]
    n = int(math.ceil(extend / dz))
    left = table.z[0] - dz * np.arange(n, 0, -1)
    right = table.z[-1] + dz * np.arange(1, n + 1)
    return left, right


def synthesize(wp: WavepacketSpec, spec, grid: SpatialGrid, t: float, table: Optional[PsiTable] = None,
               extend: float = 0.0, bounds=None, f0=None) -> Snapshot:
    """Wavefunction at time ``t`` as a quadrature over stationary states.

    ``extend`` > 0 additionally evaluates the packet that far beyond each
    end of the solver domain from the asymptotic plane-wave form of the
    stationary states (only valid in a force-free exterior, i.e. beta = 0).
    ``f0`` replaces the Gaussian amplitudes on the q grid.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if table is None:
        table = build_psi_table(wp, spec, grid)
    if table.q.shape != wp.q_grid.shape or not np.allclose(table.q, wp.q_grid, rtol=0, atol=1e-14):
        missing = set(np.round(wp.q_grid, 12)) - set(np.round(table.q, 12))
        raise NumericalDiagnosticError(f"psi table lacks momentum q={min(missing):.12g}")
    if f0 is None:
        f0 = initial_distribution(wp, table.q)
    elif np.shape(f0) != table.q.shape:
        raise ValueError("f0 must have one value per quadrature momentum")
    coef = table.weights * np.exp(-1j * table.q**2 * t) * np.asarray(f0, dtype=complex) / math.sqrt(2 * math.pi)
    amp = _matvec(table.psi, coef)
    z = table.z
    if extend > 0:
        if not table.force_free_outside:
            raise ValueError("extension beyond the solver domain requires beta = 0")
        zl, zr = _extension_grids(table, extend)
        left = _plane_wave_sum(coef, coef * table.r, table.k_left, zl)
        right = _plane_wave_sum(coef * table.t, np.zeros_like(coef), table.k_right, zr)
        z = np.concatenate([zl, z, zr])
        amp = np.concatenate([left, amp, right])
    snap = Snapshot(t=float(t), z=z, amplitude=amp, density=np.abs(amp) ** 2)
    if isinstance(spec, PotentialSpec) or bounds is not None:
        lo, hi = bounds if bounds is not None else default_bounds(spec)
        snap.partition = partition_probability(snap, lo, hi)
        snap.bounds = (lo, hi)
    return snap


def partition_probability(s: Snapshot, left_bound, right_bound):
    """(P_left, P_inside, P_right) by trapezoidal integration of the density."""
    if not left_bound < right_bound:
        raise ValueError("left_bound must be < right_bound")
    z, rho = s.z, s.density
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(z))])
    c_lo, c_hi = np.interp([left_bound, right_bound], z, cum)
    total = cum[-1]
    return float(c_lo), float(c_hi - c_lo), float(total - c_hi)


def find_lobes(s: Snapshot, smoothing_length=0.0, threshold=LOBE_THRESHOLD, min_mass=LOBE_MIN_MASS,
               split_depth=LOBE_SPLIT_DEPTH):
    """Lobes of the (period-averaged) density.

    A region is contiguous density above threshold*max. Within a region,
    neighbouring peaks are counted apart when the valley between them falls
    to (1 - split_depth) of the lower peak or below; the cut is at the
    valley. Returns (z_start, z_stop, mass) for every lobe carrying at
    least ``min_mass``.
    """
    rho = s.density
    dz = s.z[1] - s.z[0]
    if smoothing_length > dz:
        rho_s = uniform_filter1d(rho, max(1, int(round(smoothing_length / dz))), mode="nearest")
    else:
        rho_s = rho
    floor = threshold * rho_s.max()
    above = rho_s > floor
    padded = np.concatenate([[False], above, [False]]).astype(int)
    d = np.diff(padded)
    starts = np.nonzero(d == 1)[0]
    stops = np.nonzero(d == -1)[0]
    peaks, _ = find_peaks(rho_s, height=floor)
    lobes = []
    for a, b in zip(starts, stops):
        cuts = [a]
        kept = []  # (peak index, valley index before it)
        for p in peaks[(peaks >= a) & (peaks < b)]:
            if kept:
                prev = kept[-1][0]
                v = prev + int(np.argmin(rho_s[prev:p + 1]))
                if rho_s[v] <= (1.0 - split_depth) * min(rho_s[prev], rho_s[p]):
                    kept.append((p, v))
                elif rho_s[p] > rho_s[prev]:
                    kept[-1] = (p, kept[-1][1])
                continue
            kept.append((p, a))
        cuts += [v for _, v in kept[1:]]
        cuts.append(b)
        for c0, c1 in zip(cuts[:-1], cuts[1:]):
            mass = float(np.trapezoid(rho[c0:c1 + 1 if c1 < b else b], s.z[c0:c1 + 1 if c1 < b else b]))
            if mass >= min_mass:
                lobes.append((float(s.z[c0]), float(s.z[min(c1, b - 1)]), mass))
    return lobes


@dataclass
class EvolutionResult:
    spec: WavepacketSpec
    times: np.ndarray
    snapshots: list
    lobe_counts: np.ndarray = field(default=None)
    splitting_events: int = 0
    emission_events: int = 0

    @property
    def partitions(self) -> np.ndarray:
        return np.array([s.partition for s in self.snapshots])


def count_splittings(lobe_counts) -> int:
    """Sum of frame-to-frame increases in the number of lobes."""
    d = np.diff(np.asarray(lobe_counts))
    return int(d[d > 0].sum())


def count_emissions(times, partitions, min_mass=EMISSION_MIN_MASS) -> int:
    """Local maxima of the outward probability flux through either boundary.

    Fluxes are differences of P_left and P_right between frames; a maximum
    counts when the flux pulse around it carries at least ``min_mass``.
    """
    times = np.asarray(times, dtype=float)
    parts = np.asarray(partitions, dtype=float)
    if len(times) < 3:
        return 0
    count = 0
    for col in (0, 2):
        gain = np.diff(parts[:, col])
        rate = gain / np.diff(times)
        peaks, props = find_peaks(np.concatenate([[0.0], rate, [0.0]]), height=0.0)
        for p, lb, rb in zip(peaks, *_bases(np.concatenate([[0.0], rate, [0.0]]), peaks)):
            pulse = np.concatenate([[0.0], gain, [0.0]])[lb:rb + 1]
            if pulse[pulse > 0].sum() >= min_mass:
                count += 1
    return count


def _bases(signal, peaks):
    from scipy.signal import peak_prominences

    if len(peaks) == 0:
        return [], []
    _, left, right = peak_prominences(signal, peaks)
    return left, right


def evolve(wp: WavepacketSpec, spec, grid: SpatialGrid, times: Sequence[float], table=None,
           extend=None, smoothing_length=None) -> EvolutionResult:
    """Snapshots at ``times`` plus lobe, splitting and emission diagnostics.

    By default the packet is followed beyond the solver domain far enough to
    keep every outgoing lobe in view up to the last time (beta = 0 only).
    """
    times = np.asarray(times, dtype=float)
    if table is None:
        table = build_psi_table(wp, spec, grid)
    if extend is None:
        if table.force_free_outside:
            extend = 2.0 * float(table.q.max()) * float(times.max(initial=0.0)) + 6.0 * wp.a
        else:
            warnings.warn("beta > 0: lobes leaving the solver domain are not followed", stacklevel=2)
            extend = 0.0
    if smoothing_length is None:
        smoothing_length = lattice_period(spec) if isinstance(spec, PotentialSpec) else 0.0
    snaps = [synthesize(wp, spec, grid, t, table=table, extend=extend) for t in times]
    counts = np.array([len(find_lobes(s, smoothing_length)) for s in snaps])
    parts = [s.partition for s in snaps]
    return EvolutionResult(
        spec=wp,
        times=times,
        snapshots=snaps,
        lobe_counts=counts,
        splitting_events=count_splittings(counts),
        emission_events=count_emissions(times, parts) if isinstance(spec, PotentialSpec) else 0,
    )


def free_packet(wp: WavepacketSpec, z, t):
    """Closed-form free evolution of the Gaussian packet over the full q line.

    Uses the same normalisation constant as :func:`initial_distribution`.
    """
    z = np.asarray(z, dtype=float)
    alpha = wp.a**2 / 2.0
    c = alpha + 1j * t
    b = 2.0 * alpha * wp.q0 + 1j * (z - wp.z0)
    val = np.sqrt(np.pi / c) * np.exp(b**2 / (4.0 * c) - alpha * wp.q0**2)
    return _norm_constant(wp) * val / math.sqrt(2 * math.pi)
