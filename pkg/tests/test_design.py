import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqdesign import (
    ConfigError,
    Design,
    Domain,
    grid_candidates,
    initial_run_count,
    latin_hypercube,
    maximin_lhs,
    min_interpoint_distance,
)
from seqdesign.design import (
    pairwise_min_distance,
    read_points_csv,
    write_points_csv,
)

UNIT = Domain.from_bounds([[0.0, 1.0]])
UNIT2 = Domain.from_bounds([[0.0, 1.0], [0.0, 1.0]])
TIDAL = Domain.from_bounds([[0.75, 0.95], [0.2, 0.8]])


@pytest.mark.parametrize("d,expected", [(2, 20), (3, 30), (1, 10)])
def test_initial_run_count(d, expected):
    assert initial_run_count(d) == expected


def test_initial_run_count_rejects_bad_dimension():
    with pytest.raises(ConfigError):
        initial_run_count(0)


def stratum_counts(points, lower, upper, n):
    cells = np.floor((points - lower) / (upper - lower) * n).astype(int)
    cells = np.clip(cells, 0, n - 1)
    return np.array([np.bincount(cells[:, j], minlength=n) for j in range(points.shape[1])])


def test_lhs_four_point_stratification():
    des = latin_hypercube(4, UNIT, seed=3)
    counts = stratum_counts(des.points, UNIT.lower, UNIT.upper, 4)
    assert np.all(counts == 1)


def test_lhs_twenty_point_two_dim_stratification():
    des = latin_hypercube(20, TIDAL, seed=11)
    assert des.points.shape == (20, 2)
    counts = stratum_counts(des.points, TIDAL.lower, TIDAL.upper, 20)
    assert np.all(counts == 1)


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=25),
    d=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=10_000),
)
def test_lhs_stratification_property(n, d, seed):
    domain = Domain.from_bounds([[-1.0, 2.0]] * d)
    des = latin_hypercube(n, domain, seed)
    counts = stratum_counts(des.points, domain.lower, domain.upper, n)
    assert np.all(counts == 1)


def test_lhs_deterministic():
    a = latin_hypercube(12, TIDAL, seed=7)
    b = latin_hypercube(12, TIDAL, seed=7)
    assert np.array_equal(a.points, b.points)


def test_lhs_centered_mode_pins_stratum_centers():
    des = latin_hypercube(4, UNIT, seed=0, centered=True)
    expected = {0.125, 0.375, 0.625, 0.875}
    assert set(np.round(des.points.ravel(), 12)) == expected


def test_maximin_two_points_opposite_ends():
    des = maximin_lhs(2, UNIT, seed=5, n_restarts=4)
    assert min_interpoint_distance(des) >= 0.5


def test_maximin_dominates_plain_lhs_same_seed():
    for seed in range(5):
        plain = latin_hypercube(15, UNIT2, seed)
        opt = maximin_lhs(15, UNIT2, seed, n_restarts=4)
        assert min_interpoint_distance(opt) >= min_interpoint_distance(plain)


def test_maximin_beats_mean_of_plain_draws():
    # independent baseline: the restart pool is seeded seed, seed+1, ...
    seed, restarts = 42, 50
    opt = maximin_lhs(20, UNIT2, seed, n_restarts=restarts)
    plain = [
        min_interpoint_distance(latin_hypercube(20, UNIT2, seed + r))
        for r in range(restarts)
    ]
    assert min_interpoint_distance(opt) >= np.mean(plain)


def test_maximin_deterministic():
    a = maximin_lhs(10, UNIT2, seed=9, n_restarts=6)
    b = maximin_lhs(10, UNIT2, seed=9, n_restarts=6)
    assert np.array_equal(a.points, b.points)


def test_maximin_preserves_stratification():
    des = maximin_lhs(12, UNIT2, seed=2, n_restarts=5)
    counts = stratum_counts(des.points, UNIT2.lower, UNIT2.upper, 12)
    assert np.all(counts == 1)


def test_grid_tidal_shape():
    grid = grid_candidates(TIDAL, (13, 41))
    assert grid.size == 533
    assert grid.provenance == "grid"


def test_grid_two_by_two_corners():
    grid = grid_candidates(UNIT2, (2, 2))
    expected = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    assert np.array_equal(grid.points, expected)


def test_grid_equal_spacing_1d():
    grid = grid_candidates(Domain.from_bounds([[0.0, 2.0]]), (3,))
    assert np.array_equal(grid.points.ravel(), [0.0, 1.0, 2.0])


def test_grid_dimension_one_varies_slowest():
    grid = grid_candidates(UNIT2, (2, 3))
    # first column stays put while the second sweeps
    assert np.array_equal(grid.points[:3, 0], [0.0, 0.0, 0.0])
    assert np.array_equal(grid.points[3:, 0], [1.0, 1.0, 1.0])
    assert np.array_equal(grid.points[:3, 1], [0.0, 0.5, 1.0])


@settings(max_examples=30, deadline=None)
@given(
    r1=st.integers(min_value=2, max_value=9),
    r2=st.integers(min_value=2, max_value=9),
)
def test_grid_cardinality_property(r1, r2):
    assert grid_candidates(UNIT2, (r1, r2)).size == r1 * r2


def test_grid_rejects_resolution_below_two():
    with pytest.raises(ConfigError):
        grid_candidates(UNIT2, (1, 5))


def test_min_distance_diagonal():
    des = Design(np.array([[0.0, 0.0], [1.0, 1.0]]), UNIT2)
    assert min_interpoint_distance(des) == pytest.approx(np.sqrt(2.0))


def test_min_distance_three_points():
    des = Design(np.array([[0.0], [0.5], [1.0]]), UNIT)
    assert min_interpoint_distance(des) == pytest.approx(0.5)


def test_min_distance_duplicate_rows_is_zero():
    # raw helper: the Design constructor itself rejects duplicates
    pts = np.array([[0.2, 0.2], [0.2, 0.2], [0.8, 0.1]])
    assert pairwise_min_distance(pts, UNIT2) == 0.0
    with pytest.raises(ConfigError):
        Design(pts, UNIT2)


def test_min_distance_needs_two_points():
    des = Design(np.array([[0.5]]), UNIT)
    with pytest.raises(ConfigError):
        min_interpoint_distance(des)


def test_design_rejects_out_of_bounds():
    with pytest.raises(ConfigError):
        Design(np.array([[1.5, 0.5]]), UNIT2)


def test_points_csv_round_trip(tmp_path):
    des = maximin_lhs(7, TIDAL, seed=1, n_restarts=3)
    path = tmp_path / "design.csv"
    write_points_csv(des.points, path)
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2"
    back = read_points_csv(path)
    assert np.array_equal(back, des.points)
