import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nodal_census import (
    LatLongSphere,
    PlanarWindow,
    PlaneWave2D,
    RngStream,
    SphericalHarmonic,
    label_domains,
    measure_domains,
    sample_field,
)
from nodal_census.sampler import build_plane_wave_basis

DESK_SEED = 7
DESK_M = 100


@pytest.fixture(scope="session")
def desk_grid():
    return PlanarWindow(side=40 * math.pi, spacing=2 * math.pi / 10)


@pytest.fixture(scope="session")
def desk_ensemble(desk_grid):
    """The canonical acceptance ensemble: 100 plane-wave realizations, seed 7."""
    model = PlaneWave2D()
    basis = build_plane_wave_basis(desk_grid)
    decs = []
    for i in range(DESK_M):
        sample = sample_field(model, desk_grid, RngStream(DESK_SEED, i), basis=basis)
        dec = label_domains(sample)
        measure_domains(dec)
        decs.append(dec)
    return decs


@pytest.fixture(scope="session")
def sphere_l8_dec():
    sample = sample_field(SphericalHarmonic(degree=8), LatLongSphere(n_lat=40, n_lon=80),
                          RngStream(6, 0))
    return measure_domains(label_domains(sample))


@pytest.fixture(scope="session")
def mini_ensemble():
    """Five realizations on a small window; enough for estimator plumbing tests."""
    grid = PlanarWindow(side=9 * math.pi, spacing=2 * math.pi / 10)
    model = PlaneWave2D()
    basis = build_plane_wave_basis(grid)
    decs = []
    for i in range(5):
        sample = sample_field(model, grid, RngStream(3, i), basis=basis)
        dec = label_domains(sample)
        measure_domains(dec)
        decs.append(dec)
    return decs
