"""Cold-atom reflection from a Gaussian-enveloped optical lattice.

Local band structure (spatial gaps), stationary scattering spectra with
their resonances, and wavepacket evolution synthesised from stationary
states, all in recoil units (lengths 1/k, momenta hbar k, times 1/omega_nu).
"""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bands import BandSet, SpatialGapMap, band_edges, hill_band_edges, monodromy_trace, spatial_gap_map
from .exceptions import ConfigError, NumericalDiagnosticError
from .resonances import Resonance, ResonanceList, adaptive_spectrum, find_resonances
from .scattering import (ScatteringSolution, SpatialGrid, SpectrumSweep, reflectivity_spectrum,
                         solve_stationary)
from .units import (ATOM_PRESETS, LI7_2S2P, AtomPhysicalParams, PotentialSpec, RectangularBarrier,
                    bragg_momenta, effective_potential, envelope_amplitude, lattice_period)
from .wavepacket import (T_UNIT, EvolutionResult, Snapshot, WavepacketSpec, evolve, initial_distribution,
                         partition_probability, synthesize)

__all__ = [
    "ATOM_PRESETS", "AtomPhysicalParams", "BandSet", "ConfigError", "EvolutionResult", "LI7_2S2P",
    "NumericalDiagnosticError", "PotentialSpec", "RectangularBarrier", "Resonance", "ResonanceList",
    "ScatteringSolution", "Snapshot", "SpatialGapMap", "SpatialGrid", "SpectrumSweep", "T_UNIT",
    "WavepacketSpec", "adaptive_spectrum", "band_edges", "bragg_momenta", "effective_potential",
    "envelope_amplitude", "evolve", "find_resonances", "hill_band_edges", "initial_distribution",
    "lattice_period", "monodromy_trace", "partition_probability", "reflectivity_spectrum",
    "solve_stationary", "spatial_gap_map", "synthesize",
]
