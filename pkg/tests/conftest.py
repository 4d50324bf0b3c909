import math

import numpy as np
import pytest

from spatialgaps import PotentialSpec, SpatialGrid, reflectivity_spectrum
from spatialgaps.wavepacket import T_UNIT, WavepacketSpec, build_psi_table, evolve, wavepacket_grid


@pytest.fixture(scope="session")
def fig2_spec():
    return PotentialSpec(eta=2.0)


@pytest.fixture(scope="session")
def fig2_grid(fig2_spec):
    return SpatialGrid.default_for(fig2_spec)


@pytest.fixture(scope="session")
def fig2_sweep(fig2_spec, fig2_grid):
    q = np.linspace(0.5, 3.0, 500)
    return reflectivity_spectrum(fig2_spec, q, fig2_grid)


@pytest.fixture(scope="session")
def fig5_run():
    spec = PotentialSpec(eta=2.0)
    wp = WavepacketSpec(a=35 * math.pi, q0=1.9, z0=-35 * math.pi)
    grid = wavepacket_grid(spec)
    table = build_psi_table(wp, spec, grid)
    times = np.array([0, 6, 10, 14]) * T_UNIT
    return spec, wp, grid, table, evolve(wp, spec, grid, times, table=table)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[0][1:])):
            terminalreporter.write_line(line)
