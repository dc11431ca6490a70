import math

import numpy as np
import pytest

import oracles
from nodal_census import (
    PlanarWindow,
    PlaneWave2D,
    RngStream,
    Torus,
    critical_cell_count,
    label_domains,
    measure_domains,
    nesting_graph,
    nesting_is_forest,
    perturbation_stability,
    restrict_counts,
    sample_field,
    synthetic_sample,
)
from nodal_census.nodal import default_center


def _sinsin_torus(side, spacing, dim=2):
    grid = Torus(side=side, spacing=spacing, dim=dim)
    axes = np.meshgrid(*([grid.axis_coords()] * dim), indexing="ij")
    values = np.ones_like(axes[0])
    for a in axes:
        values = values * np.sin(a)
    return synthetic_sample(values, grid)


def test_constant_field_single_domain():
    grid = PlanarWindow(side=2.0, spacing=0.5)
    dec = label_domains(synthetic_sample(np.ones((5, 5)), grid))
    assert dec.n_domains == 1
    assert dec.domains[0].sign == 1
    assert dec.domains[0].touches_window


def test_checkerboard_is_four_connected():
    grid = PlanarWindow(side=0.5, spacing=0.5)
    dec = label_domains(synthetic_sample(np.array([[1.0, -1.0], [-1.0, 1.0]]), grid))
    assert dec.n_domains == 4
    assert all(d.touches_window for d in dec.domains)


def test_torus_quadrants_match_flood_fill():
    sample = _sinsin_torus(2 * math.pi, 2 * math.pi / 64)
    dec = measure_domains(label_domains(sample))
    oracle = oracles.flood_fill_labels(np.sign(sample.values).astype(int))
    assert dec.n_domains == 4
    assert np.array_equal(dec.labels, oracle)
    np.testing.assert_allclose(dec.areas(), math.pi**2, rtol=1e-12)
    for d in dec.domains:
        assert d.perimeter == pytest.approx(4 * math.pi, rel=0.02)
        assert not d.touches_window


def test_single_cell_island_geometry():
    grid = PlanarWindow(side=2.0, spacing=0.5)
    values = -np.ones((5, 5))
    values[2, 2] = 1.0
    dec = measure_domains(label_domains(synthetic_sample(values, grid)))
    assert dec.n_domains == 2
    island = dec.domains[1]
    assert not island.touches_window
    assert island.area == grid.spacing**2
    # marching squares cuts the four corner cells diagonally
    assert island.perimeter == pytest.approx(2 * math.sqrt(2) * grid.spacing, abs=1e-12)
    assert 0.0 < island.perimeter <= 4 * grid.spacing
    assert island.boundary_components == 1
    assert nesting_graph(dec).edges == [(0, 1)]


def test_partition_invariants(mini_ensemble):
    for dec in mini_ensemble:
        counts = np.bincount(dec.labels.ravel(), minlength=dec.n_domains)
        assert counts.sum() == dec.labels.size
        pos = dec.sample.values > 0
        for rec in dec.domains:
            assert counts[rec.label] == rec.node_count
            mask = dec.labels == rec.label
            assert np.all(pos[mask] == (rec.sign == 1))


def test_measure_is_idempotent(mini_ensemble):
    dec = mini_ensemble[0]
    before = [(d.perimeter, d.boundary_components, d.refined_area) for d in dec.domains]
    measure_domains(dec)
    after = [(d.perimeter, d.boundary_components, d.refined_area) for d in dec.domains]
    assert before == after


def test_sphere_areas_close(sphere_l8_dec):
    assert sphere_l8_dec.areas().sum() == pytest.approx(4 * math.pi, abs=1e-6)


def test_three_dim_octants():
    dec = measure_domains(label_domains(_sinsin_torus(2 * math.pi, 2 * math.pi / 16, dim=3)))
    assert dec.n_domains == 8
    np.testing.assert_allclose(dec.areas(), math.pi**3, rtol=1e-12)
    for d in dec.domains:
        assert d.perimeter == pytest.approx(6 * math.pi**2, rel=1e-9)


def test_restrict_counts_quadrant():
    grid = PlanarWindow(side=2 * math.pi, spacing=2 * math.pi / 8)
    xx, yy = grid.node_coords()
    dec = label_domains(synthetic_sample(np.sin(xx) * np.sin(yy), grid))
    # ball of radius 1 at the first quadrant's center: the quadrant meets it
    # but its corner nodes stick out, and no other domain reaches in
    assert restrict_counts(dec, (math.pi / 2, math.pi / 2), 1.0, math.inf) == (0, 1)


def test_restrict_counts_saturate_and_monotone():
    dec = label_domains(_sinsin_torus(4 * math.pi, 2 * math.pi / 8))
    center = default_center(dec.sample.grid)
    assert dec.n_domains == 16
    assert restrict_counts(dec, center, 100.0, math.inf) == (16, 16)
    n1, m1 = restrict_counts(dec, center, 2.0, math.inf)
    n2, m2 = restrict_counts(dec, center, 5.0, math.inf)
    assert n1 <= n2 and m1 <= m2


def test_restrict_counts_rejects_escaping_ball():
    grid = PlanarWindow(side=2 * math.pi, spacing=2 * math.pi / 8)
    dec = label_domains(synthetic_sample(np.ones((9, 9)), grid))
    with pytest.raises(ValueError, match="not contained"):
        restrict_counts(dec, (1.0, 1.0), 2.0, math.inf)


def test_nesting_annuli_form_a_path():
    grid = PlanarWindow(side=4.0, spacing=0.25)
    xx, yy = grid.node_coords()
    r = np.hypot(xx - 2.0, yy - 2.0)
    values = np.where(r < 0.7, 1.0, np.where(r < 1.3, -1.0, np.where(r < 1.9, 1.0, -1.0)))
    dec = label_domains(synthetic_sample(values, grid))
    graph = nesting_graph(dec)
    assert dec.n_domains == 4
    assert graph.edges == [(0, 1), (1, 2), (2, 3)]
    assert sorted(graph.degrees.tolist()) == [1, 1, 2, 2]
    assert not graph.interior
    assert nesting_is_forest(dec)


def test_nesting_boundary_cut_domains():
    grid = PlanarWindow(side=2 * math.pi, spacing=2 * math.pi / 8)
    xx, yy = grid.node_coords()
    dec = label_domains(synthetic_sample(np.sin(xx) * np.sin(yy), grid))
    graph = nesting_graph(dec)
    assert all(d.touches_window for d in dec.domains)
    assert not graph.interior


def test_perturbation_zero_is_identity(mini_ensemble):
    sample = mini_ensemble[0].sample
    direction = sample_field(PlaneWave2D(), sample.grid, RngStream(3, 2**32))
    for label, match, delta, perimeter in perturbation_stability(sample, direction, 0.0):
        assert match == label
        assert delta == 0.0
        assert perimeter > 0.0


def test_perturbation_small_shift_stays_subcell(mini_ensemble):
    sample = mini_ensemble[0].sample
    direction = sample_field(PlaneWave2D(), sample.grid, RngStream(3, 2**32))
    result = perturbation_stability(sample, direction, 1e-3)
    assert result
    h = sample.grid.spacing
    assert all(delta < h * h for _, _, delta, _ in result)


def test_perturbation_rejects_bad_arguments(mini_ensemble):
    sample = mini_ensemble[0].sample
    direction = sample_field(PlaneWave2D(), sample.grid, RngStream(3, 2**32))
    with pytest.raises(ValueError, match=">= 0"):
        perturbation_stability(sample, direction, -1e-3)
    other = sample_field(PlaneWave2D(), PlanarWindow(side=2 * math.pi, spacing=2 * math.pi / 10),
                         RngStream(3, 2**32))
    with pytest.raises(ValueError, match="share"):
        perturbation_stability(sample, other, 1e-3)


def test_critical_cells_bound_domain_count(mini_ensemble):
    for dec in mini_ensemble:
        assert critical_cell_count(dec.sample) >= dec.n_domains
