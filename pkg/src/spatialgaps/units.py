"""Unit system, atomic presets and the dimensionless effective potential.

Lengths are in units of 1/k, momenta in units of hbar*k and frequencies
(hence energies) in units of the recoil frequency omega_nu = hbar k^2 / 2M.
In these units the stationary equation reads

    psi''(z) = -(q^2 - U(z)) psi(z),   U(z) = V(z) - beta * z,

so the energy of an incoming component of momentum q is simply q^2.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

TAYLOR = "taylor"
EXACT_DRESSED = "exact_dressed"
_MODES = (TAYLOR, EXACT_DRESSED)
_BRANCHES = ("plus", "minus")

# Ratio |Omega0|^2 / Delta^2 above which the dressed-state expansion is
# flagged as questionable.
_WEAK_COUPLING_WARN = 0.1


@dataclass(frozen=True)
class AtomPhysicalParams:
    """Physical constants of a two-level atomic transition."""

    wavelength_lambda: float
    recoil_frequency_omega_nu: float
    spontaneous_rate_gamma: float
    gravity_parameter_beta: float

    def __post_init__(self):
        for name in ("wavelength_lambda", "recoil_frequency_omega_nu", "spontaneous_rate_gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.gravity_parameter_beta >= 0:
            raise ValueError("gravity_parameter_beta must be >= 0")

    @property
    def k(self) -> float:
        """Laser wavenumber 2*pi/lambda in 1/m."""
        return 2.0 * math.pi / self.wavelength_lambda

    def length_to_si(self, z):
        """Dimensionless length (units of 1/k) to metres."""
        return np.asarray(z) / self.k

    def time_to_si(self, t):
        """Dimensionless time (units of 1/omega_nu) to seconds."""
        return np.asarray(t) / self.recoil_frequency_omega_nu


LI7_2S2P = AtomPhysicalParams(
    wavelength_lambda=670.8e-9,
    recoil_frequency_omega_nu=3.96e5,
    spontaneous_rate_gamma=3.72e7,
    gravity_parameter_beta=2.93e-4,
)

ATOM_PRESETS = {"li7-2s2p": LI7_2S2P}

# Laser geometry of the reference setup.
DEFAULT_PHI = math.pi / 3.0
DEFAULT_Z_C = 300.0 * math.sqrt(2.0) * math.pi
DEFAULT_D = 100.0 * math.pi


@dataclass(frozen=True)
class PotentialSpec:
    """Gaussian-enveloped cosine-squared laser potential.

    In ``taylor`` mode the lattice depth ``eta`` is given directly.  In
    ``exact_dressed`` mode the full light-shift of the chosen dressed-state
    branch is used and ``eta`` is derived as ``rabi_omega0**2 / detuning_delta``.
    """

    eta: float = 2.0
    phi: float = DEFAULT_PHI
    z_c: float = DEFAULT_Z_C
    d: float = DEFAULT_D
    beta: float = 0.0
    mode: str = TAYLOR
    detuning_delta: Optional[float] = None
    rabi_omega0: Optional[float] = None
    branch_sign: Optional[str] = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if not self.d > 0:
            raise ValueError("envelope halfwidth d must be > 0")
        if not (0.0 < self.phi <= math.pi / 2 + 1e-15):
            raise ValueError("phi must satisfy 0 < phi <= pi/2")
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if self.mode == EXACT_DRESSED:
            if self.detuning_delta is None or self.rabi_omega0 is None or self.branch_sign is None:
                raise ValueError(
                    "exact_dressed mode requires detuning_delta, rabi_omega0 and branch_sign"
                )
            if self.detuning_delta == 0:
                raise ValueError("detuning_delta must be non-zero")
            if self.branch_sign not in _BRANCHES:
                raise ValueError(f"branch_sign must be one of {_BRANCHES}")
            ratio = self.rabi_omega0**2 / self.detuning_delta**2
            if ratio > _WEAK_COUPLING_WARN:
                warnings.warn(
                    f"|Omega0|^2/Delta^2 = {ratio:.3g} is not small; "
                    "the dressed potential departs from the cosine-squared form",
                    stacklevel=3,
                )
            object.__setattr__(self, "eta", self.rabi_omega0**2 / self.detuning_delta)

    @classmethod
    def dressed(cls, detuning_delta, rabi_omega0, branch_sign=None, **kwargs):
        """Exact dressed-state potential; the branch defaults to the one
        adiabatically connected to the ground state (sign of the detuning)."""
        if branch_sign is None:
            branch_sign = "plus" if detuning_delta > 0 else "minus"
        return cls(
            mode=EXACT_DRESSED,
            detuning_delta=detuning_delta,
            rabi_omega0=rabi_omega0,
            branch_sign=branch_sign,
            **kwargs,
        )

    @property
    def kappa(self) -> float:
        """Lattice wavenumber sin(phi); the cos^2 period is pi/kappa."""
        return math.sin(self.phi)

    def replace(self, **changes) -> "PotentialSpec":
        from dataclasses import asdict

        values = asdict(self)
        values.update(changes)
        if values["mode"] == EXACT_DRESSED:
            values.pop("eta")
        return PotentialSpec(**values)

    def __call__(self, z):
        return effective_potential(self, z)


def envelope_amplitude(spec: PotentialSpec, z):
    """Local lattice depth eta * exp(-2 cos^2(phi) (z - z_c)^2 / d^2)."""
    z = np.asarray(z, dtype=float)
    c = math.cos(spec.phi)
    return spec.eta * np.exp(-2.0 * c * c * (z - spec.z_c) ** 2 / spec.d**2)


def _laser_potential(spec: PotentialSpec, z):
    z = np.asarray(z, dtype=float)
    if spec.mode == TAYLOR:
        return envelope_amplitude(spec, z) * np.cos((z - spec.z_c) * spec.kappa) ** 2
    delta = spec.detuning_delta
    c = math.cos(spec.phi)
    omega = (
        spec.rabi_omega0
        * np.exp(-c * c * (z - spec.z_c) ** 2 / spec.d**2)
        * np.cos((z - spec.z_c) * spec.kappa)
    )
    sign = 1.0 if spec.branch_sign == "plus" else -1.0
    raw = -0.5 * delta + sign * 0.5 * np.sqrt(delta * delta + 4.0 * omega * omega)
    # far-field value of the branch, removed so that U -> 0 outside the beams
    offset = -0.5 * delta + sign * 0.5 * abs(delta)
    return raw - offset


def dressed_offset(spec: PotentialSpec) -> float:
    """Constant removed from the exact dressed potential (zero for taylor)."""
    if spec.mode == TAYLOR:
        return 0.0
    sign = 1.0 if spec.branch_sign == "plus" else -1.0
    return -0.5 * spec.detuning_delta + sign * 0.5 * abs(spec.detuning_delta)


def effective_potential(spec: PotentialSpec, z):
    """Full effective potential U(z) = V(z) - beta*z measured against q^2."""
    z = np.asarray(z, dtype=float)
    u = _laser_potential(spec, z) - spec.beta * z
    return u if u.ndim else float(u)


def lattice_period(spec: PotentialSpec) -> float:
    return math.pi / spec.kappa


def bragg_momenta(spec: PotentialSpec, n_max: int) -> np.ndarray:
    """Empty-lattice zone-boundary momenta n*sin(phi), n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return np.arange(1, n_max + 1) * spec.kappa


def envelope_width_in_periods(spec: PotentialSpec) -> float:
    """Full 1/e width of the potential envelope divided by the lattice period."""
    full_width = math.sqrt(2.0) * spec.d / math.cos(spec.phi)
    return full_width / lattice_period(spec)


@dataclass(frozen=True)
class RectangularBarrier:
    """Flat barrier ``height`` on [left, left + width]; zero elsewhere.

    Only used as an analytically solvable stand-in for the laser potential.
    """

    height: float
    width: float
    left: float = 0.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z > self.left) & (z < self.left + self.width)
        u = np.where(inside, self.height, 0.0)
        # nodes sitting exactly on a discontinuity take the mean value
        edge = np.isclose(z, self.left, rtol=0, atol=1e-12) | np.isclose(
            z, self.left + self.width, rtol=0, atol=1e-12
        )
        u = np.where(edge, 0.5 * self.height, u)
        return u if u.ndim else float(u)

    def reflectivity(self, q):
        """Closed-form reflection probability for incoming momentum q."""
        q = np.asarray(q, dtype=complex)
        kappa = np.sqrt(q * q - self.height + 0j)
        # sin(kappa L)/kappa stays finite at the barrier top and turns into
        # sinh(alpha L)/alpha below it
        s = self.width * np.sinc(kappa * self.width / np.pi)
        num = self.height**2 * np.abs(s) ** 2
        r = np.real(num / (num + 4.0 * np.abs(q * q)))
        if np.ndim(r) == 0:
            return float(r)
        return r


def as_potential(potential) -> Callable:
    """Normalise a PotentialSpec or a plain callable into U(z)."""
    if isinstance(potential, PotentialSpec):
        return lambda z: np.asarray(effective_potential(potential, z), dtype=float)
    if callable(potential):
        return lambda z: np.asarray(potential(z), dtype=float)
    raise TypeError(f"cannot interpret {type(potential).__name__} as a potential")
