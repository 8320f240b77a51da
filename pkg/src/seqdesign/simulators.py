"""Test simulators: tabulated-grid surrogates and analytic functions with known structure."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .domain import Domain
from .errors import ConfigError

SIMULATOR_KINDS = ("grid_file", "branin", "quadratic_bowl", "contour_ring")

#: Radius at which contour_ring equals exactly 0.5.
CONTOUR_RING_LEVEL_RADIUS = float(np.sqrt(np.log(2.0) / 8.0))

BRANIN_DOMAIN = Domain.from_bounds([[-5.0, 10.0], [0.0, 15.0]])
UNIT_SQUARE = Domain.from_bounds([[0.0, 1.0], [0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class GridSimulator:
    """Scalar output tabulated on a rectangular 2-D grid, with interpolation."""

    domain: Domain
    values: np.ndarray
    interpolation: str = "bilinear"

    def __eq__(self, other):
        if not isinstance(other, GridSimulator):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.interpolation == other.interpolation
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.domain, self.interpolation, self.values.tobytes()))

    def __post_init__(self):
        if self.domain.dims != 2:
            raise ConfigError("grid simulators support exactly two inputs")
        if self.interpolation not in ("nearest", "bilinear"):
            raise ConfigError("interpolation must be 'nearest' or 'bilinear'")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 2 or vals.shape[1] < 2:
            raise ConfigError("grid values must be an (m1, m2) matrix with m_j >= 2")
        if not np.all(np.isfinite(vals)):
            raise ConfigError("grid values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.values.shape

    def __call__(self, x) -> float:
        return eval_grid(self, x)


def eval_grid(sim: GridSimulator, x) -> float:
    """Evaluate the tabulated surface at one point.

    ``nearest`` returns the closest node's value (ties go to the lower
    index); ``bilinear`` blends the four enclosing nodes and reproduces any
    affine function on a cell exactly.
    """
    pt = np.asarray(x, dtype=float).ravel()
    if pt.size != 2:
        raise ConfigError("grid simulators take 2-vectors")
    if not sim.domain.contains(pt.reshape(1, -1)):
        raise ConfigError(f"point {pt.tolist()} is outside the grid domain")
    m1, m2 = sim.resolution
    t = (pt - sim.domain.lower) / sim.domain.widths * (np.array([m1, m2]) - 1)
    if sim.interpolation == "nearest":
        idx = np.ceil(t - 0.5).astype(int)
        idx = np.clip(idx, 0, [m1 - 1, m2 - 1])
        return float(sim.values[idx[0], idx[1]])
    cell = np.clip(np.floor(t).astype(int), 0, [m1 - 2, m2 - 2])
    f = t - cell
    v = sim.values
    i, j = cell
    return float(
        v[i, j] * (1 - f[0]) * (1 - f[1])
        + v[i + 1, j] * f[0] * (1 - f[1])
        + v[i, j + 1] * (1 - f[0]) * f[1]
        + v[i + 1, j + 1] * f[0] * f[1]
    )


def branin(x) -> float:
    """Classical Branin function on [-5, 10] x [0, 15]; three global minima near 0.3979."""
    x1, x2 = np.asarray(x, dtype=float).ravel()
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return float((x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0)


def quadratic_bowl(x, center: float = 0.3) -> float:
    """Sum of squared deviations from a fixed center; unique minimum of 0."""
    pt = np.asarray(x, dtype=float).ravel()
    return float(np.sum((pt - center) ** 2))


def contour_ring(x) -> float:
    """Radial bump exp(-8 ||x - (0.5, 0.5)||^2); its 0.5 level set is an exact circle."""
    pt = np.asarray(x, dtype=float).ravel()
    if pt.size != 2:
        raise ConfigError("contour_ring takes 2-vectors")
    return float(np.exp(-8.0 * np.sum((pt - 0.5) ** 2)))


class NoisySimulator:
    """Adds seeded N(0, noise_sd^2) measurement error, one draw per call in call order."""

    def __init__(self, base, noise_sd: float, seed):
        if noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        self.base = base
        self.noise_sd = float(noise_sd)
        self._rng = np.random.default_rng(seed)

    def __call__(self, x) -> float:
        return float(self.base(x) + self.noise_sd * self._rng.standard_normal())


def with_noise(sim, noise_sd: float, seed):
    """Wrap a simulator with measurement error; noise_sd = 0 returns it unchanged."""
    if noise_sd < 0:
        raise ConfigError("noise_sd must be >= 0")
    if noise_sd == 0:
        return sim
    return NoisySimulator(sim, noise_sd, seed)


@dataclass(frozen=True)
class SimulatorSpec:
    """Named test simulator plus an optional noise wrapper."""

    kind: str
    noise_sd: float = 0.0
    seed: int = 0
    grid: GridSimulator | None = None

    def __post_init__(self):
        if self.kind not in SIMULATOR_KINDS:
            raise ConfigError(f"unknown simulator kind {self.kind!r}")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be >= 0")
        if self.kind == "grid_file" and self.grid is None:
            raise ConfigError("grid_file simulator needs grid data")

    @classmethod
    def from_dict(cls, payload: dict) -> "SimulatorSpec":
        if not isinstance(payload, dict) or "kind" not in payload:
            raise ConfigError("simulator spec must be an object with a 'kind'")
        grid = None
        if payload.get("grid") is not None:
            grid = grid_from_dict(payload["grid"])
        return cls(
            kind=payload["kind"],
            noise_sd=float(payload.get("noise_sd", 0.0)),
            seed=int(payload.get("seed", 0)),
            grid=grid,
        )

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "noise_sd": self.noise_sd, "seed": self.seed}
        if self.grid is not None:
            out["grid"] = grid_to_dict(self.grid)
        return out


def build_simulator(spec: SimulatorSpec):
    """Resolve a spec into ``(callable, natural_domain)``.

    The natural domain is None for kinds whose dimension is not fixed
    (quadratic_bowl); the run configuration must then supply one.
    """
    if spec.kind == "grid_file":
        base, domain = spec.grid, spec.grid.domain
    elif spec.kind == "branin":
        base, domain = branin, BRANIN_DOMAIN
    elif spec.kind == "quadratic_bowl":
        base, domain = quadratic_bowl, None
    else:
        base, domain = contour_ring, UNIT_SQUARE
    return with_noise(base, spec.noise_sd, spec.seed), domain


def grid_from_dict(payload: dict) -> GridSimulator:
    """Parse {"bounds", "resolution", "values" (row-major, x1 slowest)}."""
    try:
        domain = Domain.from_bounds(payload["bounds"])
        m1, m2 = (int(v) for v in payload["resolution"])
        values = np.asarray(payload["values"], dtype=float).reshape(m1, m2)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed grid payload: {exc}") from exc
    return GridSimulator(
        domain, values, interpolation=payload.get("interpolation", "bilinear")
    )


def grid_to_dict(sim: GridSimulator) -> dict:
    return {
        "bounds": sim.domain.bounds(),
        "resolution": list(sim.resolution),
        "values": [float(v) for v in sim.values.ravel()],
        "interpolation": sim.interpolation,
    }


def load_grid_json(path) -> GridSimulator:
    with open(path) as fh:
        return grid_from_dict(json.load(fh))


def tidal_like_grid(resolution=(13, 41)) -> GridSimulator:
    """Bundled grid with a single interior power peak, like a tidal-turbine table.

    Output peaks around 160 near (0.79, 0.45) on [0.75, 0.95] x [0.2, 0.8]
    and decays anisotropically, so maximization (minimize the negation) has
    one clear interior optimum.
    """
    m1, m2 = (int(v) for v in resolution)
    domain = Domain.from_bounds([[0.75, 0.95], [0.2, 0.8]])
    x1 = np.linspace(0.75, 0.95, m1)
    x2 = np.linspace(0.2, 0.8, m2)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    values = 160.0 * np.exp(
        -(((g1 - 0.79) / 0.045) ** 2) - ((g2 - 0.45) / 0.16) ** 2
    ) + 25.0 * (1.0 - g1)
    return GridSimulator(domain, values)


def volcano_like_grid(resolution=(21, 21)) -> GridSimulator:
    """Bundled grid shaped like a flow-height table: a monotone ridge.

    Output is nonnegative, increases with the first input (volume-like) and
    decreases with the second (friction-like), so level sets are monotone
    curves and sqrt/log1p output transformations are applicable.
    """
    m1, m2 = (int(v) for v in resolution)
    domain = Domain.from_bounds([[6.0, 12.0], [5.0, 20.0]])
    x1 = np.linspace(6.0, 12.0, m1)
    x2 = np.linspace(5.0, 20.0, m2)
    g1, g2 = np.meshgrid(x1, x2, indexing="ij")
    slope = 3.0 * ((g1 - 6.0) / 6.0) - 2.5 * ((g2 - 5.0) / 15.0)
    values = 7.0 * np.log1p(np.exp(2.0 * slope - 1.0))
    return GridSimulator(domain, values)
