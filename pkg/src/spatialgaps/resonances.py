"""Resonance detection in reflectivity spectra."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks, peak_widths

from .exceptions import NumericalDiagnosticError
from .scattering import SpatialGrid, SpectrumSweep, reflectivity_spectrum

MAX_ADJACENT_JUMP = 0.2


@dataclass(frozen=True)
class Resonance:
    q_center: float
    width: float
    prominence: float
    kind: str  # "dip" or "peak"


@dataclass
class ResonanceList:
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def of_kind(self, kind):
        return ResonanceList([e for e in self.entries if e.kind == kind])

    @property
    def q_centers(self):
        return np.array([e.q_center for e in self.entries])


def refine_spectrum(sweep: SpectrumSweep, max_jump=0.1, min_dq=1e-8, max_rounds=40) -> SpectrumSweep:
    """Insert midpoints wherever neighbouring R values differ by more than
    ``max_jump`` until the spectrum is resolved (or cells reach ``min_dq``)."""
    q = sweep.q_values
    R = sweep.R_values
    T = sweep.T_values
    holes = dict(sweep.holes)
    for _ in range(max_rounds):
        ok = np.isfinite(R)
        jump = np.abs(np.diff(R))
        cells = np.nonzero((jump > max_jump) & ok[:-1] & ok[1:] & (np.diff(q) > 2 * min_dq))[0]
        if len(cells) == 0:
            break
        mid = 0.5 * (q[cells] + q[cells + 1])
        extra = reflectivity_spectrum(sweep.spec, mid, sweep.grid)
        holes.update(extra.holes)
        q = np.concatenate([q, mid])
        R = np.concatenate([R, extra.R_values])
        T = np.concatenate([T, extra.T_values])
        order = np.argsort(q, kind="stable")
        q, R, T = q[order], R[order], T[order]
    return SpectrumSweep(q, R, T, sweep.spec, sweep.grid, holes=holes)


def adaptive_spectrum(potential, q_values, grid: SpatialGrid, max_jump=0.1, min_dq=1e-8) -> SpectrumSweep:
    """Uniform sweep followed by :func:`refine_spectrum`."""
    return refine_spectrum(reflectivity_spectrum(potential, q_values, grid), max_jump, min_dq)


def _index_to_q(q, x):
    return np.interp(x, np.arange(len(q)), q)


def find_resonances(sweep: SpectrumSweep, prominence_min=0.05) -> ResonanceList:
    """Local extrema of R(q) with topographic prominence >= ``prominence_min``.

    ``width`` is the distance in q between the half-prominence crossings.
    Dips (minima) and peaks (maxima) are both reported, sorted by q.
    """
    q = np.asarray(sweep.q_values, dtype=float)
    R = np.asarray(sweep.R_values, dtype=float)
    ok = np.isfinite(R)
    q, R = q[ok], R[ok]
    if len(q) < 3:
        return ResonanceList()
    jump = np.max(np.abs(np.diff(R)))
    if jump >= MAX_ADJACENT_JUMP:
        i = int(np.argmax(np.abs(np.diff(R))))
        raise NumericalDiagnosticError(
            f"sweep too coarse: R jumps by {jump:.3g} between q={q[i]:.8g} and q={q[i + 1]:.8g}"
        )
    entries = []
    for kind, signal in (("peak", R), ("dip", -R)):
        idx, props = find_peaks(signal, prominence=prominence_min)
        if len(idx) == 0:
            continue
        widths, _, left, right = peak_widths(signal, idx, rel_height=0.5, prominence_data=(
            props["prominences"], props["left_bases"], props["right_bases"]))
        w_q = _index_to_q(q, right) - _index_to_q(q, left)
        for i, p, w in zip(idx, props["prominences"], w_q):
            entries.append(Resonance(float(q[i]), float(w), float(p), kind))
    entries.sort(key=lambda e: e.q_center)
    return ResonanceList(entries)
