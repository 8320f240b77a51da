import json

import numpy as np
import pytest

from seqdesign import (
    ConfigError,
    Domain,
    GridSimulator,
    SimulatorSpec,
    branin,
    contour_ring,
    eval_grid,
    quadratic_bowl,
    with_noise,
)
from seqdesign.simulators import (
    CONTOUR_RING_LEVEL_RADIUS,
    build_simulator,
    grid_from_dict,
    grid_to_dict,
    load_grid_json,
)

UNIT2 = Domain.from_bounds([[0.0, 1.0], [0.0, 1.0]])

# frozen from a 1000x1000 brute-force scan of the Branin surface
BRANIN_DENSE_GRID_MIN = 0.3979449742728942
BRANIN_ANALYTIC_MIN = 0.39788735772973816


def demo_grid(interpolation="bilinear"):
    values = np.array([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0, 8.0]])
    return GridSimulator(UNIT2, values, interpolation=interpolation)


def test_grid_node_exactness_both_modes():
    for mode in ("nearest", "bilinear"):
        sim = demo_grid(mode)
        for i, x1 in enumerate((0.0, 0.5, 1.0)):
            for j, x2 in enumerate((0.0, 0.5, 1.0)):
                assert eval_grid(sim, [x1, x2]) == sim.values[i, j]


def test_grid_bilinear_cell_center_is_corner_mean():
    sim = demo_grid()
    corners = [sim.values[0, 0], sim.values[0, 1], sim.values[1, 0], sim.values[1, 1]]
    assert eval_grid(sim, [0.25, 0.25]) == pytest.approx(np.mean(corners))


def test_grid_bilinear_edge_midpoint_is_node_mean():
    sim = demo_grid()
    assert eval_grid(sim, [0.0, 0.25]) == pytest.approx(
        (sim.values[0, 0] + sim.values[0, 1]) / 2
    )


def test_grid_bilinear_reproduces_affine():
    rng = np.random.default_rng(0)
    a, b, c = 1.3, -0.7, 0.25
    x1 = np.linspace(0, 1, 5)
    x2 = np.linspace(0, 1, 4)
    values = a * x1[:, None] + b * x2[None, :] + c
    sim = GridSimulator(Domain.from_bounds([[0, 1], [0, 1]]), values)
    for _ in range(50):
        pt = rng.random(2)
        assert eval_grid(sim, pt) == pytest.approx(a * pt[0] + b * pt[1] + c, abs=1e-12)


def test_grid_nearest_tie_goes_to_lower_index():
    sim = demo_grid("nearest")
    # exactly midway between nodes 0 and 1 along each axis
    assert eval_grid(sim, [0.25, 0.0]) == sim.values[0, 0]
    assert eval_grid(sim, [0.0, 0.25]) == sim.values[0, 0]


def test_grid_out_of_domain_rejected():
    with pytest.raises(ConfigError):
        eval_grid(demo_grid(), [1.2, 0.5])


def test_branin_against_dense_grid_oracle():
    x1 = np.linspace(-5, 10, 1000)
    x2 = np.linspace(0, 15, 1000)
    grid1, grid2 = np.meshgrid(x1, x2, indexing="ij")
    b = 5.1 / (4 * np.pi**2)
    c = 5 / np.pi
    t = 1 / (8 * np.pi)
    values = (grid2 - b * grid1**2 + c * grid1 - 6) ** 2 + 10 * (1 - t) * np.cos(grid1) + 10
    assert values.min() == pytest.approx(BRANIN_DENSE_GRID_MIN, rel=1e-12)
    # the analytic optimum undercuts any finite grid, by less than one cell's curvature
    assert BRANIN_ANALYTIC_MIN <= values.min() <= BRANIN_ANALYTIC_MIN + 1e-3


def test_branin_known_minimizers():
    for x in ([np.pi, 2.275], [-np.pi, 12.275], [9.42478, 2.475]):
        assert branin(x) == pytest.approx(BRANIN_ANALYTIC_MIN, abs=1e-6)


def test_branin_deterministic():
    assert branin([1.1, 2.2]) == branin([1.1, 2.2])


def test_quadratic_bowl():
    assert quadratic_bowl([0.3]) == 0.0
    assert quadratic_bowl([0.5, 0.1]) == pytest.approx(0.2**2 + 0.2**2)


def test_contour_ring_peak_level_decay():
    assert contour_ring([0.5, 0.5]) == 1.0
    on_circle = [0.5 + CONTOUR_RING_LEVEL_RADIUS, 0.5]
    assert contour_ring(on_circle) == pytest.approx(0.5, rel=1e-12)
    assert 0.0 < contour_ring([0.0, 0.0]) < 0.02


def test_with_noise_zero_sd_returns_base():
    assert with_noise(branin, 0.0, seed=1) is branin


def test_with_noise_deterministic_stream():
    a = with_noise(quadratic_bowl, 0.5, seed=3)
    b = with_noise(quadratic_bowl, 0.5, seed=3)
    xs = [[0.1], [0.4], [0.9]]
    assert [a(x) for x in xs] == [b(x) for x in xs]


def test_with_noise_sample_sd():
    noisy = with_noise(lambda x: 1.0, 0.8, seed=7)
    draws = np.array([noisy([0.5]) for _ in range(10_000)])
    assert draws.std(ddof=1) == pytest.approx(0.8, rel=0.05)
    assert draws.mean() == pytest.approx(1.0, abs=0.05)


def test_grid_json_round_trip(tmp_path):
    sim = demo_grid()
    payload = grid_to_dict(sim)
    assert payload["resolution"] == [3, 3]
    back = grid_from_dict(payload)
    assert np.array_equal(back.values, sim.values)
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(payload))
    loaded = load_grid_json(path)
    assert np.array_equal(loaded.values, sim.values)
    assert loaded.domain.bounds() == sim.domain.bounds()


def test_grid_values_row_major_x1_slowest():
    payload = {
        "bounds": [[0, 1], [0, 1]],
        "resolution": [2, 3],
        "values": [0, 1, 2, 10, 11, 12],
    }
    sim = grid_from_dict(payload)
    assert eval_grid(sim, [0.0, 1.0]) == 2.0  # x1 fixed low, x2 high
    assert eval_grid(sim, [1.0, 0.0]) == 10.0  # x1 high, x2 low


def test_simulator_spec_round_trip_and_build():
    spec = SimulatorSpec.from_dict({"kind": "branin"})
    sim, domain = build_simulator(spec)
    assert sim is branin and domain.bounds() == [[-5.0, 10.0], [0.0, 15.0]]
    spec = SimulatorSpec.from_dict(
        {"kind": "grid_file", "grid": grid_to_dict(demo_grid())}
    )
    sim, domain = build_simulator(spec)
    assert sim([0.0, 0.0]) == 0.0
    assert SimulatorSpec.from_dict(spec.to_dict()) == spec


def test_tidal_like_grid_single_interior_peak():
    from seqdesign import tidal_like_grid

    sim = tidal_like_grid()
    assert sim.resolution == (13, 41)
    idx = np.unravel_index(np.argmax(sim.values), sim.values.shape)
    assert 0 < idx[0] < 12 and 0 < idx[1] < 40  # peak strictly interior
    assert sim.values.max() > 100.0


def test_volcano_like_grid_monotone_ridge():
    from seqdesign import volcano_like_grid

    sim = volcano_like_grid()
    assert np.all(sim.values >= 0.0)
    assert np.all(np.diff(sim.values, axis=0) > 0)  # grows with volume-like input
    assert np.all(np.diff(sim.values, axis=1) < 0)  # shrinks with friction-like input
    # the level-1 contour actually crosses the domain
    assert sim.values.min() < 1.0 < sim.values.max()


def test_simulator_spec_validation():
    with pytest.raises(ConfigError):
        SimulatorSpec.from_dict({"kind": "mystery"})
    with pytest.raises(ConfigError):
        SimulatorSpec.from_dict({"kind": "grid_file"})
    with pytest.raises(ConfigError):
        SimulatorSpec.from_dict({"kind": "branin", "noise_sd": -1.0})
