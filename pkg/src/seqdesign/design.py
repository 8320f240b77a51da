"""Space-filling designs and candidate sets: Latin hypercubes, maximin search, grids."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .domain import Domain
from .errors import ConfigError

#: Two rows closer than this in unit-scaled coordinates count as duplicates.
DUPLICATE_TOL = 1e-12

CANDIDATE_PROVENANCES = ("grid", "lhs", "user")


def _check_points(points: np.ndarray, domain: Domain, *, what: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ConfigError(f"{what} must be a nonempty 2-D point matrix")
    if pts.shape[1] != domain.dims:
        raise ConfigError(
            f"{what} has {pts.shape[1]} columns but the domain has {domain.dims} dimensions"
        )
    if not domain.contains(pts):
        raise ConfigError(f"{what} contains points outside the domain")
    return pts


@dataclass(frozen=True)
class Design:
    """Evaluated or to-be-evaluated input sites inside a domain.

    Rows must be distinct: duplicate runs of a deterministic code carry no
    information and break correlation-matrix factorization downstream.
    """

    points: np.ndarray
    domain: Domain

    def __post_init__(self):
        pts = _check_points(self.points, self.domain, what="design")
        if pts.shape[0] >= 2:
            d = pairwise_min_distance(pts, self.domain)
            if d <= DUPLICATE_TOL:
                raise ConfigError("design has (near-)duplicate rows")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dims(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class CandidateSet:
    """Finite set of locations over which an improvement criterion is maximized."""

    points: np.ndarray
    domain: Domain
    provenance: str = "user"

    def __post_init__(self):
        if self.provenance not in CANDIDATE_PROVENANCES:
            raise ConfigError(f"provenance must be one of {CANDIDATE_PROVENANCES}")
        pts = _check_points(self.points, self.domain, what="candidate set")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def initial_run_count(d: int) -> int:
    """Heuristic size of an initial experiment: 10 observations per input dimension."""
    if d < 1:
        raise ConfigError("dimension must be >= 1")
    return 10 * d


def latin_hypercube(n: int, domain: Domain, seed: int, centered: bool = False) -> Design:
    """Random Latin hypercube: one point in each of n equal strata per dimension.

    Each point sits uniformly inside its stratum; ``centered=True`` pins it to
    the stratum center instead. Deterministic given the seed.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    rng = np.random.default_rng(seed)
    unit = _unit_lhs(n, domain.dims, rng, centered)
    return Design(domain.unscale(unit), domain)


def _unit_lhs(n: int, d: int, rng: np.random.Generator, centered: bool) -> np.ndarray:
    cells = np.column_stack([rng.permutation(n) for _ in range(d)]).astype(float)
    offsets = np.full((n, d), 0.5) if centered else rng.random((n, d))
    return (cells + offsets) / n


def maximin_lhs(n: int, domain: Domain, seed: int, n_restarts: int = 8) -> Design:
    """Space-filling Latin hypercube chosen by maximin distance.

    Draws ``n_restarts`` Latin hypercubes with seeds ``seed, seed+1, ...``,
    improves each by hill-climbing over within-column value swaps (which
    preserve stratification), and keeps the candidate with the largest minimum
    pairwise distance in unit-scaled coordinates. Ties keep the lowest restart
    index, so the result is deterministic.
    """
    if n < 2:
        raise ConfigError("maximin design needs n >= 2")
    if n_restarts < 1:
        raise ConfigError("n_restarts must be >= 1")
    best_unit = None
    best_dist = -np.inf
    for r in range(n_restarts):
        rng = np.random.default_rng(seed + r)
        unit = _unit_lhs(n, domain.dims, rng, centered=False)
        unit, dist = _exchange_improve(unit)
        if dist > best_dist:
            best_unit, best_dist = unit, dist
    return Design(domain.unscale(best_unit), domain)


def _exchange_improve(unit: np.ndarray) -> tuple[np.ndarray, float]:
    """Hill-climb on min pairwise distance, preserving stratification.

    Alternates two move types until neither improves: swapping a column's
    values between two rows, and snapping a coordinate to its stratum's lower
    edge or center (upper domain edge for the top stratum). Swaps are the
    classic exchange move; snaps matter where swaps are inert, e.g. in one
    dimension, where maximin must push points apart within their strata.
    """
    pts = unit.copy()
    n, d = pts.shape
    diff = pts[:, None, :] - pts[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist2, np.inf)
    best = dist2.min()

    def try_swap(a, b, j):
        nonlocal best, dist2
        if pts[a, j] == pts[b, j]:
            return False
        new_a, new_b = pts[b, j], pts[a, j]
        row_a = dist2[a] - (pts[a, j] - pts[:, j]) ** 2 + (new_a - pts[:, j]) ** 2
        row_b = dist2[b] - (pts[b, j] - pts[:, j]) ** 2 + (new_b - pts[:, j]) ** 2
        # distance between a and b itself is unchanged by the swap
        row_a[b] = dist2[a, b]
        row_b[a] = dist2[a, b]
        row_a[a] = np.inf
        row_b[b] = np.inf
        trial = dist2.copy()
        trial[a, :] = row_a
        trial[:, a] = row_a
        trial[b, :] = row_b
        trial[:, b] = row_b
        trial_min = trial.min()
        if trial_min > best:
            pts[a, j], pts[b, j] = new_a, new_b
            dist2, best = trial, trial_min
            return True
        return False

    def try_snap(i, j):
        nonlocal best, dist2
        stratum = min(int(pts[i, j] * n), n - 1)
        targets = [stratum / n, (stratum + 0.5) / n]
        if stratum == n - 1:
            targets.append(1.0)
        moved = False
        for value in targets:
            if value == pts[i, j]:
                continue
            row = dist2[i] - (pts[i, j] - pts[:, j]) ** 2 + (value - pts[:, j]) ** 2
            row[i] = np.inf
            trial = dist2.copy()
            trial[i, :] = row
            trial[:, i] = row
            trial_min = trial.min()
            if trial_min > best:
                pts[i, j] = value
                dist2, best = trial, trial_min
                moved = True
        return moved

    improved = True
    while improved:
        improved = False
        for j in range(d):
            for a in range(n - 1):
                for b in range(a + 1, n):
                    improved |= try_swap(a, b, j)
        for j in range(d):
            for i in range(n):
                improved |= try_snap(i, j)
    return pts, float(np.sqrt(best))


def grid_candidates(domain: Domain, resolution) -> CandidateSet:
    """Full factorial of equally spaced levels, dimension 1 varying slowest."""
    res = np.atleast_1d(np.asarray(resolution, dtype=int))
    if res.size != domain.dims:
        raise ConfigError("resolution must give one level count per dimension")
    if np.any(res < 2):
        raise ConfigError("each resolution must be >= 2")
    axes = [
        np.linspace(lo, hi, int(r))
        for lo, hi, r in zip(domain.lower, domain.upper, res)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.column_stack([m.ravel() for m in mesh])
    return CandidateSet(points, domain, provenance="grid")


def pairwise_min_distance(points: np.ndarray, domain: Domain) -> float:
    """Minimum pairwise Euclidean distance in unit-scaled coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 2:
        raise ConfigError("need at least two points for an interpoint distance")
    return float(pdist(domain.scale01(pts)).min())


def min_interpoint_distance(design: Design) -> float:
    """Maximin objective value of a design."""
    return pairwise_min_distance(design.points, design.domain)


def point_header(d: int) -> list[str]:
    return [f"x{j + 1}" for j in range(d)]


def write_points_csv(points: np.ndarray, path) -> None:
    """Write a point matrix as CSV with header x1,...,xd."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(point_header(pts.shape[1]))
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def read_points_csv(path) -> np.ndarray:
    """Read a point matrix written by :func:`write_points_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    d = len(header)
    if header != point_header(d):
        raise ConfigError(f"unexpected design header {header!r}")
    pts = np.asarray(rows, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ConfigError("malformed design CSV")
    return pts
