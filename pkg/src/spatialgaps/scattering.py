"""Stationary scattering off the laser potential.

Each incoming momentum q is solved independently by propagating (psi, psi')
backwards from the transmitted side: a unit outgoing wave is imposed at
``z_max``, the solution is carried to ``z_min`` and decomposed there into
incident and reflected plane waves.  Cell propagators come from a
sixth-order Magnus expansion sampled at three Gauss nodes per cell.  They
are real with unit determinant, so the probability flux Im(conj(psi) psi')
is conserved to round-off, and a potential that is constant across a cell
is propagated exactly.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .exceptions import NumericalDiagnosticError
from .units import PotentialSpec, as_potential, lattice_period

WORKERS_ENV = "SPATIALGAPS_WORKERS"
_RESCALE_AT = 1e150
_MIN_INCIDENT = 1e-12


def configure_workers(n=None):
    """Set the numba thread count from ``n`` or the SPATIALGAPS_WORKERS variable."""
    if n is None:
        env = os.environ.get(WORKERS_ENV)
        if not env:
            return numba.get_num_threads()
        n = int(env)
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid z_min, z_min + h, ..., z_max."""

    z_min: float
    z_max: float
    h: float = 0.05

    def __post_init__(self):
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be < z_max")
        if not self.h > 0:
            raise ValueError("h must be > 0")
        n = int(round((self.z_max - self.z_min) / self.h))
        # snap z_max onto the grid
        object.__setattr__(self, "z_max", self.z_min + n * self.h)

    @property
    def n_points(self) -> int:
        return int(round((self.z_max - self.z_min) / self.h)) + 1

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.h * np.arange(self.n_points)

    @classmethod
    def default_for(cls, spec: PotentialSpec, h=0.05, z_min=0.0):
        """The reference domain [0, 2 z_c] (or from ``z_min``)."""
        return cls(z_min, 2.0 * spec.z_c, h)

    def check_resolution(self, q_max, period=None, u_min=0.0):
        k_max = math.sqrt(max(q_max * q_max - u_min, q_max * q_max, 1e-300))
        wavelength = 2.0 * math.pi / k_max
        if self.h > wavelength / 20.0:
            raise NumericalDiagnosticError(
                f"grid step h={self.h} exceeds 1/20 of the local de Broglie "
                f"wavelength {wavelength:.4g} at q={q_max:.4g}"
            )
        if period is not None and self.h > period / 20.0:
            raise NumericalDiagnosticError(
                f"grid step h={self.h} exceeds 1/20 of the lattice period {period:.4g}"
            )


@dataclass
class ScatteringSolution:
    """Scattering state for one incoming momentum, incident amplitude 1."""

    q: float
    r: complex
    t: complex
    R: float
    T: float
    k_left: float
    k_right: float
    psi: Optional[np.ndarray] = field(default=None, repr=False)
    z: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass
class SpectrumSweep:
    q_values: np.ndarray
    R_values: np.ndarray
    T_values: np.ndarray
    spec: object
    grid: SpatialGrid
    r_values: Optional[np.ndarray] = field(default=None, repr=False)
    t_values: Optional[np.ndarray] = field(default=None, repr=False)
    holes: dict = field(default_factory=dict)

    @property
    def ok(self) -> np.ndarray:
        return np.isfinite(self.R_values)


_GAUSS3 = np.array([0.5 - math.sqrt(15.0) / 10.0, 0.5, 0.5 + math.sqrt(15.0) / 10.0])


@numba.njit(cache=True, nogil=True)
def _cell_matrix(f1, f2, f3, h):
    """Sixth-order Magnus propagator over one cell for psi'' = f(z) psi.

    f1, f2, f3 are f at the three Gauss-Legendre nodes of the cell.  The
    returned real 2x2 matrix (m00, m01, m10, m11) maps (psi, psi') from the
    left to the right end of the cell and has unit determinant.
    """
    r15 = math.sqrt(15.0)
    # alpha_i written as [[p, r], [s, -p]]
    a1p, a1r, a1s = 0.0, h, h * f2
    a2s = r15 * h / 3.0 * (f3 - f1)
    a3s = 10.0 * h / 3.0 * (f3 - 2.0 * f2 + f1)
    # commutator [X, Y] for traceless X=(xp,xr,xs), Y=(yp,yr,ys):
    #   p = xr*ys - xs*yr ; r = 2(xp*yr - xr*yp) ; s = 2(xs*yp - xp*ys)
    # C1 = [alpha1, alpha2], alpha2 = (0, 0, a2s)
    c1p = a1r * a2s
    c1r = 0.0
    c1s = -2.0 * a1p * a2s
    # C2 = -1/60 [alpha1, 2 alpha3 + C1]
    yp, yr, ys = c1p, c1r, 2.0 * a3s + c1s
    c2p = -(a1r * ys - a1s * yr) / 60.0
    c2r = -2.0 * (a1p * yr - a1r * yp) / 60.0
    c2s = -2.0 * (a1s * yp - a1p * ys) / 60.0
    # Omega = alpha1 + alpha3/12 + 1/240 [-20 alpha1 - alpha3 + C1, alpha2 + C2]
    xp = -20.0 * a1p + c1p
    xr = -20.0 * a1r + c1r
    xs = -20.0 * a1s - a3s + c1s
    yp, yr, ys = c2p, c2r, a2s + c2s
    op = a1p + (xr * ys - xs * yr) / 240.0
    orr = a1r + 2.0 * (xp * yr - xr * yp) / 240.0
    os_ = a1s + a3s / 12.0 + 2.0 * (xs * yp - xp * ys) / 240.0
    delta = op * op + orr * os_
    if delta > 1e-8:
        x = math.sqrt(delta)
        c = math.cosh(x)
        sf = math.sinh(x) / x
    elif delta < -1e-8:
        x = math.sqrt(-delta)
        c = math.cos(x)
        sf = math.sin(x) / x
    else:
        c = 1.0 + delta / 2.0 + delta * delta / 24.0
        sf = 1.0 + delta / 6.0 + delta * delta / 120.0
    return c + sf * op, sf * orr, sf * os_, c - sf * op


@numba.njit(cache=True, nogil=True)
def _propagate_one(q2, U, Ug, h, z0, k_l, k_r, stride, out, col):
    n = U.shape[0]
    zN = z0 + (n - 1) * h
    psi = complex(math.cos(k_r * zN), math.sin(k_r * zN))
    dpsi = 1j * k_r * psi
    log_scale = 0.0
    n_out = out.shape[0]
    # per stored point: log of the cumulative rescaling applied before it
    scales = np.zeros(n_out)
    if (n - 1) % stride == 0:
        out[(n - 1) // stride, col] = psi
    for j in range(n - 2, -1, -1):
        m00, m01, m10, m11 = _cell_matrix(Ug[j, 0] - q2, Ug[j, 1] - q2, Ug[j, 2] - q2, h)
        # inverse of a unit-determinant matrix steps from z_{j+1} back to z_j
        new_psi = m11 * psi - m01 * dpsi
        dpsi = -m10 * psi + m00 * dpsi
        psi = new_psi
        m = abs(psi) + abs(dpsi)
        if m > 1e150:
            psi /= m
            dpsi /= m
            log_scale += math.log(m)
        if j % stride == 0:
            out[j // stride, col] = psi
            scales[j // stride] = log_scale
    ph = complex(math.cos(k_l * z0), math.sin(k_l * z0))
    a = 0.5 * (psi + dpsi / (1j * k_l)) / ph
    b = 0.5 * (psi - dpsi / (1j * k_l)) * ph
    # stored values rescaled to unit incident amplitude
    for i in range(n_out):
        f = math.exp(scales[i] - log_scale)
        out[i, col] = out[i, col] * f / a
    return a, b, log_scale


@numba.njit(cache=True, parallel=True)
def _propagate_batch(q2, U, Ug, h, z0, k_l, k_r, stride, out):
    m = q2.shape[0]
    a = np.empty(m, dtype=np.complex128)
    b = np.empty(m, dtype=np.complex128)
    ls = np.empty(m)
    for i in numba.prange(m):
        ai, bi, li = _propagate_one(q2[i], U, Ug, h, z0, k_l[i], k_r[i], stride, out, i)
        a[i] = ai
        b[i] = bi
        ls[i] = li
    return a, b, ls


@dataclass(frozen=True)
class _Sampled:
    nodes: np.ndarray
    gauss: np.ndarray

    def __getitem__(self, i):
        return self.nodes[i]

    def min(self):
        return self.nodes.min()


def _prepare(potential, grid: SpatialGrid, q_values):
    u = as_potential(potential)
    z = grid.z
    nodes = np.ascontiguousarray(u(z), dtype=float)
    zg = z[:-1, None] + grid.h * _GAUSS3[None, :]
    gauss = np.ascontiguousarray(u(zg.ravel()).reshape(zg.shape), dtype=float)
    q = np.asarray(q_values, dtype=float)
    period = lattice_period(potential) if isinstance(potential, PotentialSpec) else None
    return _Sampled(nodes, gauss), q, period


def _check_q(q, U, grid, period):
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q}")
    if not q * q > U[-1]:
        raise NumericalDiagnosticError(
            f"transmission channel closed at q={q:.6g}: q^2 <= U(z_max)={U[-1]:.6g}"
        )
    if not q * q > U[0]:
        raise NumericalDiagnosticError(
            f"incident channel closed at q={q:.6g}: q^2 <= U(z_min)={U[0]:.6g}"
        )
    grid.check_resolution(q, period, u_min=float(U.min()))


def solve_many(q_values, potential, grid: SpatialGrid, stride=None, keep_psi=True):
    """Vectorised core of :func:`solve_stationary` for a batch of momenta.

    Returns ``(a, b, psi, k_left, k_right, flux_ratio, log_scale)``; the
    true incident amplitude is ``a * exp(log_scale)``.  ``psi`` holds the
    wavefunction at every ``stride``-th grid node (``None`` if not kept).
    Momenta are assumed to pass the preconditions.
    """
    U, q, _ = _prepare(potential, grid, q_values)
    return _solve_prepared(q, U, grid, stride, keep_psi)


def _solve_prepared(q, U, grid, stride, keep_psi):
    h = grid.h
    q2 = q * q
    K2_l = q2 - U[0]
    K2_r = q2 - U[-1]
    k_l = np.sqrt(K2_l)
    k_r = np.sqrt(K2_r)
    if keep_psi:
        stride = int(stride or 1)
        n_out = (grid.n_points - 1) // stride + 1
    else:
        stride = grid.n_points + 1
        n_out = 1
    out = np.zeros((n_out, len(q)), dtype=np.complex128, order="C")
    a, b, log_scale = _propagate_batch(q2, U.nodes, U.gauss, h, grid.z_min, k_l, k_r, stride, out)
    flux_ratio = k_r / k_l
    psi = out.T if keep_psi else None
    return a, b, psi, np.sqrt(K2_l), np.sqrt(K2_r), flux_ratio, log_scale


def solve_stationary(q, potential, grid: SpatialGrid, keep_psi=True) -> ScatteringSolution:
    """Reflection/transmission and interior wavefunction for momentum ``q``.

    ``potential`` is a :class:`PotentialSpec` or any callable U(z).
    """
    U, qa, period = _prepare(potential, grid, [q])
    q = float(qa[0])
    _check_q(q, U, grid, period)
    a, b, psi, k_l, k_r, flux, ls = _solve_prepared(qa, U, grid, 1, keep_psi)
    return _solution(
        q, a[0], b[0], ls[0], psi[0] if keep_psi else None, k_l[0], k_r[0], flux[0], grid, keep_psi
    )


def _transmission(a, log_scale):
    # 1/(a*exp(log_scale)) without overflowing the intermediate
    return np.exp(-log_scale - np.log(np.abs(a))) * (np.abs(a) / a)


def _solution(q, a, b, log_scale, psi, k_l, k_r, flux, grid, keep_psi):
    if not abs(a) >= _MIN_INCIDENT:
        raise NumericalDiagnosticError(
            f"incident amplitude |a|={abs(a):.3g} at q={q:.6g}: backward solution lost; "
            "shrink the domain or use a compensated scheme"
        )
    r = b / a
    t = _transmission(a, log_scale)
    R = float(abs(r) ** 2)
    T = float(abs(t) ** 2 * flux)
    return ScatteringSolution(
        q=q,
        r=complex(r),
        t=complex(t),
        R=R,
        T=T,
        k_left=float(k_l),
        k_right=float(k_r),
        psi=psi,
        z=grid.z if keep_psi else None,
    )


def reflectivity_spectrum(potential, q_values, grid: SpatialGrid) -> SpectrumSweep:
    """R(q) and T(q) over ``q_values``; failing momenta are left as NaN holes."""
    U, q, period = _prepare(potential, grid, q_values)
    if np.any(np.diff(q) < 0):
        raise ValueError("q_values must be sorted")
    holes = {}
    good = []
    for i, qi in enumerate(q):
        try:
            _check_q(float(qi), U, grid, period)
            good.append(i)
        except (NumericalDiagnosticError, ValueError) as exc:
            holes[float(qi)] = str(exc)
    R = np.full(len(q), np.nan)
    T = np.full(len(q), np.nan)
    r = np.full(len(q), np.nan, dtype=complex)
    t = np.full(len(q), np.nan, dtype=complex)
    if good:
        idx = np.array(good)
        a, b, _, _, _, flux, ls = _solve_prepared(q[idx], U, grid, None, keep_psi=False)
        for j, i in enumerate(idx):
            if not abs(a[j]) >= _MIN_INCIDENT:
                holes[float(q[i])] = f"incident amplitude |a|={abs(a[j]):.3g} underflow"
                continue
            r[i] = b[j] / a[j]
            t[i] = _transmission(a[j], ls[j])
            R[i] = abs(r[i]) ** 2
            T[i] = abs(t[i]) ** 2 * flux[j]
    return SpectrumSweep(q, R, T, potential, grid, r, t, holes)
