import math

import numpy as np
import pytest

from nodal_census import LatLongSphere, PlanarWindow, Torus, grid_from_dict


def test_planar_nodes_include_both_edges():
    g = PlanarWindow(side=2.0, spacing=0.5)
    xs = g.axis_coords()
    assert xs[0] == 0.0 and xs[-1] == 2.0
    assert len(xs) == 5
    assert g.shape == (5, 5)
    assert g.center == (1.0, 1.0)
    assert g.max_radius() == pytest.approx(math.sqrt(2.0))


def test_planar_rejects_bad_geometry():
    with pytest.raises(ValueError):
        PlanarWindow(side=2.0, spacing=0.3)  # not an integral multiple
    with pytest.raises(ValueError):
        PlanarWindow(side=8.0, spacing=2 * math.pi / 7)  # coarser than 8 per wavelength


def test_torus_nodes_are_cell_centered():
    g = Torus(side=4 * math.pi, spacing=math.pi / 4)
    xs = g.axis_coords()
    assert len(xs) == 16
    assert xs[0] == pytest.approx(math.pi / 8)
    assert xs[-1] == pytest.approx(4 * math.pi - math.pi / 8)
    # one period only: no duplicated seam node
    assert (xs < 4 * math.pi).all()


def test_torus_dims():
    g3 = Torus(side=2 * math.pi, spacing=math.pi / 8, dim=3)
    assert g3.shape == (16, 16, 16)
    with pytest.raises(ValueError):
        Torus(side=2 * math.pi, spacing=math.pi / 8, dim=4)


def test_sphere_grid_weights_close():
    g = LatLongSphere(n_lat=24, n_lon=48)
    theta = g.colatitudes()
    assert theta[0] == pytest.approx(math.pi / 48)
    assert len(theta) == 24 and len(g.longitudes()) == 48
    total = np.sum(g.row_cell_areas()) * g.n_lon
    assert total == pytest.approx(4 * math.pi, abs=1e-12)
    with pytest.raises(ValueError):
        LatLongSphere(n_lat=1, n_lon=8)


@pytest.mark.parametrize(
    "grid",
    [
        PlanarWindow(side=4.0, spacing=0.5),
        Torus(side=4 * math.pi, spacing=math.pi / 4),
        Torus(side=2 * math.pi, spacing=math.pi / 8, dim=3),
        LatLongSphere(n_lat=10, n_lon=20),
    ],
)
def test_grid_dict_round_trip(grid):
    assert grid_from_dict(grid.to_dict()) == grid
