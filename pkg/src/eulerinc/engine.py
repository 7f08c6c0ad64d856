"""Set-valued forward Euler stepping and reachable-set evolution.

One step from x either picks a single member velocity (a plain Euler step)
or moves into the sampled convex hull of all member velocities (a relaxed
step). Reachable sets are evolved as point clouds with optional grid
pruning: clouds are snapped to an axis-aligned grid, keeping the first point
seen in each cell, which gives the explicit worst-case coverage error
n * cell * sqrt(d) after n steps. Pruned points are genuine reachable
points, so pruning only thins a cloud, never displaces it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bounds
from .families import ControlFamily, ProblemSpec
from .geometry import PointCloud, first_per_cell

__all__ = [
    "StepMaps",
    "ReachTube",
    "EnumerationCapError",
    "make_step_maps",
    "phi_step",
    "psi_sample",
    "phi_enumerate",
    "evolve_reach",
    "reference_tube",
    "quadratic_prune_rule",
    "linear_prune_rule",
    "export_tube",
]

#: hard ceiling on enumerated or evolved cloud sizes
ENUMERATION_CAP = 10 ** 6

#: floor cell size: plain deduplication of coincident points
_DEDUP_CELL = 1e-12


class EnumerationCapError(RuntimeError):
    """Raised when an enumeration or evolved cloud would exceed the cap."""


@dataclass(frozen=True)
class StepMaps:
    """A family bound to a step size; n_steps is set when a horizon exists.

    dt = 0 is allowed and makes every step map the identity; it only occurs
    in degenerate inclusion checks.
    """

    family: ControlFamily
    dt: float
    n_steps: int | None = None

    def __post_init__(self):
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")
        if self.n_steps is not None and self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")


def make_step_maps(problem: ProblemSpec, n_steps: int) -> StepMaps:
    """Step maps for a problem split into n_steps equal steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    dt = problem.horizon / n_steps
    if abs(dt * n_steps - problem.horizon) > 1e-12:
        raise ValueError("dt * n_steps must reproduce the horizon")
    return StepMaps(problem.family, dt, n_steps)


def phi_step(maps: StepMaps, x, i: int) -> np.ndarray:
    """One Euler step with member i (1-based): x + dt * f_i(x)."""
    pt = np.asarray(x, dtype=float)
    return pt + maps.dt * maps.family.eval_member(i, pt)


@lru_cache(maxsize=64)
def _simplex_grid(n_members: int, grid_res: int) -> np.ndarray:
    """All weight vectors k/grid_res on the simplex, lexicographically
    ascending in (k_1, ..., k_M); includes every vertex."""
    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total + 1):
            for rest in compositions(total - head, parts - 1):
                yield (head,) + rest

    grid = np.array(list(compositions(grid_res, n_members)), dtype=float)
    grid /= grid_res
    grid.setflags(write=False)
    return grid


def psi_sample(maps: StepMaps, x, grid_res: int) -> PointCloud:
    """Sampled relaxed step: x + dt * (simplex-grid mixtures of velocities).

    Weights run over the grid with denominator grid_res, so all pure members
    are included and the sample covers the relaxed step set with density at
    most 2 * speed * dt / grid_res.
    """
    if grid_res < 1:
        raise ValueError("grid_res must be at least 1")
    pt = np.asarray(x, dtype=float).reshape(-1)
    fam = maps.family
    velocities = np.vstack([
        fam.eval_member(i, pt).reshape(1, -1) for i in range(1, fam.n_members + 1)
    ])
    weights = _simplex_grid(fam.n_members, grid_res)
    return PointCloud(pt + maps.dt * (weights @ velocities))


def phi_enumerate(maps: StepMaps, x, depth: int,
                  cap: int = ENUMERATION_CAP) -> tuple:
    """All M^depth iterated Euler images of x with their member sequences.

    Returns (cloud, sequences): the cloud keeps multiplicity, and sequences
    is an (M^depth, depth) array of 1-based member indices in lexicographic
    order, row i matching cloud point i.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    fam = maps.family
    m = fam.n_members
    if m ** depth > cap:
        raise EnumerationCapError(
            f"{m}^{depth} images exceed the cap of {cap}; "
            "use evolve_reach with a prune cell instead"
        )
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    for _ in range(depth):
        images = [pts + maps.dt * fam.eval_member(i, pts) for i in range(1, m + 1)]
        # child order (i_1 major .. i_k minor) matches the sequence array below
        pts = np.stack(images, axis=1).reshape(-1, pts.shape[1])
    if depth == 0:
        sequences = np.zeros((1, 0), dtype=int)
    else:
        sequences = np.stack(
            np.unravel_index(np.arange(m ** depth), (m,) * depth), axis=1
        ) + 1
    return PointCloud(pts), sequences


def _prune(points: np.ndarray, cell: float) -> np.ndarray:
    return points[first_per_cell(points, max(cell, _DEDUP_CELL))]


def _evolve_points(family: ControlFamily, dt: float, n_steps: int,
                   x0: np.ndarray, cell: float, max_points: int,
                   keep: set) -> dict:
    """Evolve the reachable cloud, retaining snapshots at indices in keep."""
    m = family.n_members
    pts = np.asarray(x0, dtype=float).reshape(1, -1)
    out = {}
    if 0 in keep:
        out[0] = PointCloud(pts)
    for n in range(n_steps):
        images = [pts + dt * family.eval_member(i, pts) for i in range(1, m + 1)]
        pts = np.stack(images, axis=1).reshape(-1, pts.shape[1])
        pts = _prune(pts, cell)
        if pts.shape[0] > max_points:
            raise EnumerationCapError(
                f"cloud grew to {pts.shape[0]} points at step {n + 1}; "
                "increase prune_cell"
            )
        if n + 1 in keep:
            out[n + 1] = PointCloud(pts)
    return out


@dataclass(frozen=True)
class ReachTube:
    """Reachable clouds at times 0, dt, ..., n dt.

    accumulated_prune_error records the worst-case coverage loss
    n_steps * prune_cell * sqrt(d) of grid pruning. Reference tubes built by
    a refined run also carry oracle_budget, their certified distance to the
    exact time-t reachable sets.
    """

    clouds: tuple
    dt: float
    prune_cell: float
    accumulated_prune_error: float
    oracle_budget: float | None = None

    @property
    def n_steps(self) -> int:
        return len(self.clouds) - 1

    def prune_error_at(self, n: int) -> float:
        if not self.clouds:
            return 0.0
        d = self.clouds[0].dim
        return n * self.prune_cell * np.sqrt(d)


def evolve_reach(maps: StepMaps, x0, prune_cell: float,
                 max_points: int = ENUMERATION_CAP) -> ReachTube:
    """Evolve the discrete reachable sets of a problem for maps.n_steps steps.

    prune_cell = 0 disables pruning: clouds only lose exact duplicates
    (tolerance 1e-12) and growth is bounded solely by max_points.
    """
    if prune_cell < 0:
        raise ValueError("prune_cell must be nonnegative")
    if maps.n_steps is None:
        raise ValueError("maps must carry n_steps to evolve a tube")
    n = maps.n_steps
    start = np.asarray(x0, dtype=float).reshape(-1)
    snapshots = _evolve_points(maps.family, maps.dt, n, start, prune_cell,
                               max_points, keep=set(range(n + 1)))
    clouds = tuple(snapshots[k] for k in range(n + 1))
    err = n * prune_cell * np.sqrt(start.shape[0])
    return ReachTube(clouds, maps.dt, prune_cell, float(err))


def quadratic_prune_rule(dt: float, family: ControlFamily) -> float:
    """Default prune cell dt^2 * K * L / 4: keeps the worst-case pruning
    error an order below the first-order quantities being measured."""
    return dt * dt * family.speed * family.lip / 4.0


def linear_prune_rule(scale: float = 0.125):
    """Prune cell proportional to the step: cell = scale * K * dt.

    Coarser than the default rule; use it when cloud growth at small steps
    makes the quadratic rule infeasible. The declared pruning budget then
    scales like a constant, while realized coverage loss stays O(dt)."""
    def rule(dt: float, family: ControlFamily) -> float:
        return scale * family.speed * dt
    return rule


def reference_tube(problem: ProblemSpec, refine: int, coarse_n: int,
                   prune_rule=quadratic_prune_rule,
                   max_points: int = ENUMERATION_CAP) -> ReachTube:
    """Refined-step stand-in for the exact reachable sets.

    Evolves with step dt / refine (prune rule applied at the fine step, so
    the default cell shrinks by 1/refine^2) and subsamples at the coarse
    times. oracle_budget certifies the distance to the exact sets: the
    reach-set error bound at the fine step plus the fine pruning error.
    """
    if refine < 2:
        raise ValueError("refine must be at least 2")
    if coarse_n < 0:
        raise ValueError("coarse_n must be nonnegative")
    fam = problem.family
    dt = problem.horizon / max(coarse_n, 1)
    dt_fine = dt / refine
    cell = prune_rule(dt_fine, fam)
    n_fine = coarse_n * refine
    keep = set(range(0, n_fine + 1, refine))
    snapshots = _evolve_points(fam, dt_fine, n_fine, problem.x0, cell,
                               max_points, keep)
    clouds = tuple(snapshots[k * refine] for k in range(coarse_n + 1))
    prune_err = n_fine * cell * np.sqrt(fam.dim)
    budget = prune_err
    if n_fine > 0:
        budget += bounds.bound_reach_sets(fam.speed, fam.lip, problem.horizon,
                                          fam.dim, dt_fine)
    return ReachTube(clouds, dt, cell, float(prune_err), float(budget))


def export_tube(tube: ReachTube, basepath: str) -> tuple:
    """Write a tube as {basepath}.csv plus a {basepath}.meta.json sidecar.

    CSV columns: n, point_index, x_1 .. x_d.
    """
    d = tube.clouds[0].dim
    csv_path = f"{basepath}.csv"
    meta_path = f"{basepath}.meta.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "point_index"] + [f"x_{j + 1}" for j in range(d)])
        for n, cloud in enumerate(tube.clouds):
            for idx, pt in enumerate(cloud.points):
                writer.writerow([n, idx] + [repr(float(v)) for v in pt])
    meta = {
        "dt": tube.dt,
        "n_steps": tube.n_steps,
        "prune_cell": tube.prune_cell,
        "accumulated_prune_error": tube.accumulated_prune_error,
        "oracle_budget": tube.oracle_budget,
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, meta_path
