"""Constructive path approximation against a reference trajectory.

The existence statements behind the error bounds are realized here as
concrete algorithms: a greedy relaxed tracker that follows a reference
through sampled convex-hull steps, and lookahead trackers that commit to one
member per step while steering so that the relaxed path stays reachable
through a window of future relaxed steps. The trackers are heuristics; what
the package certifies is that their deviation meets the theoretical bound,
not that they replicate any particular selection argument. Any feasible
path inside the bound witnesses the statement.

Tie-breaking is deterministic everywhere: smallest member index, and
lexicographically smallest weight vector on the simplex grid.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .bounds import bound_controls_path, bound_convex_path, bound_nonconvex_path
from .engine import (ENUMERATION_CAP, EnumerationCapError, StepMaps,
                     _simplex_grid, phi_enumerate, phi_step)
from .families import ProblemSpec
from .geometry import PointCloud, dist_point_to_hull, first_per_cell

__all__ = [
    "ReferencePath",
    "DiscretePath",
    "TrackReport",
    "pure_schedule",
    "chatter_schedule",
    "blend_schedule",
    "schedule_from_spec",
    "make_reference",
    "track_relaxed",
    "track_nonconvex",
    "track_controls",
    "path_error",
    "replay_path",
    "exhaustive_min_deviation",
    "export_path",
]


@dataclass(frozen=True)
class ReferencePath:
    """States of a reference trajectory sampled at the coarse times n dt."""

    states: np.ndarray
    dt: float
    provenance: str = ""

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] < 1:
            raise ValueError("states must be an (N+1, d) array")
        states = states.copy()
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class DiscretePath:
    """A discrete solution path: states plus the control chosen per step.

    Controls are 1-based member indices for plain Euler paths, or simplex
    weight vectors for relaxed paths. Paths replay exactly: feeding the
    controls back through the step maps reproduces the states.
    """

    states: np.ndarray
    controls: tuple

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or states.shape[0] != len(self.controls) + 1:
            raise ValueError("need one control per step")
        states = states.copy()
        states.setflags(write=False)
        object.__setattr__(self, "states", states)

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1


@dataclass(frozen=True)
class TrackReport:
    """Deviation achieved by a tracker next to the bound it is held to."""

    max_deviation: float
    theoretical_bound: float
    lookahead_depth: int
    beam_width: int
    sampling_slack: float
    grid_res: int
    bound_dt_group: float | None = None
    bound_dt2_group: float | None = None

    def as_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "theoretical_bound": self.theoretical_bound,
            "lookahead_depth": self.lookahead_depth,
            "beam_width": self.beam_width,
            "sampling_slack": self.sampling_slack,
            "grid_res": self.grid_res,
            "bound_dt_group": self.bound_dt_group,
            "bound_dt2_group": self.bound_dt2_group,
        }


# --- reference trajectories -------------------------------------------------

def pure_schedule(member: int, n_members: int):
    """Constant weight on a single member."""
    w = np.zeros(n_members)
    w[member - 1] = 1.0
    fn = lambda k, t: w
    fn.label = f"pure({member})"
    return fn


def chatter_schedule(i: int, j: int, n_members: int, period: int = 1):
    """Alternate between members i and j every ``period`` fine steps."""
    wi = np.zeros(n_members)
    wi[i - 1] = 1.0
    wj = np.zeros(n_members)
    wj[j - 1] = 1.0

    def fn(k, t):
        return wi if (k // period) % 2 == 0 else wj

    fn.label = f"chatter({i},{j})"
    return fn


def blend_schedule(i: int, j: int, n_members: int, horizon: float):
    """Smoothly shift weight from member i to member j and back."""
    def fn(k, t):
        a = 0.5 * (1.0 + math.cos(2.0 * math.pi * t / horizon))
        w = np.zeros(n_members)
        w[i - 1] = a
        w[j - 1] += 1.0 - a
        return w

    fn.label = f"blend({i},{j})"
    return fn


def schedule_from_spec(spec: str, n_members: int, horizon: float):
    """Parse 'pure:i', 'chatter:i,j', or 'blend:i,j' into a schedule."""
    kind, _, args = spec.partition(":")
    try:
        if kind == "pure":
            return pure_schedule(int(args), n_members)
        if kind == "chatter":
            i, j = (int(v) for v in args.split(","))
            return chatter_schedule(i, j, n_members)
        if kind == "blend":
            i, j = (int(v) for v in args.split(","))
            return blend_schedule(i, j, n_members, horizon)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed schedule spec {spec!r}") from exc
    raise ValueError(f"unknown schedule kind {kind!r}; use pure, chatter, or blend")


def make_reference(problem: ProblemSpec, n_steps: int, schedule,
                   refine: int = 64) -> ReferencePath:
    """Manufacture a reference by integrating a measurable weight mixture.

    Integrates x' = sum_i w_i(t) f_i(x) with plain Euler at step dt/refine
    under the piecewise-constant (per fine step) schedule, then subsamples
    at the coarse times. The result is a known trajectory of the relaxed
    inclusion up to the fine-step integration error.
    """
    if refine < 8:
        raise ValueError("refine must be at least 8")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    fam = problem.family
    dt_fine = problem.horizon / (n_steps * refine)
    x = problem.x0.copy()
    coarse = [x.copy()]
    for k in range(n_steps * refine):
        w = np.asarray(schedule(k, k * dt_fine), dtype=float)
        if w.shape != (fam.n_members,) or np.any(w < -1e-12) \
                or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("schedule produced weights off the simplex")
        velocities = np.vstack([
            fam.eval_member(i, x).reshape(1, -1)
            for i in range(1, fam.n_members + 1)
        ])
        x = x + dt_fine * (w @ velocities)
        if (k + 1) % refine == 0:
            coarse.append(x.copy())
    label = getattr(schedule, "label", "custom")
    return ReferencePath(
        np.vstack(coarse),
        problem.horizon / n_steps,
        provenance=f"fine relaxed euler, refine={refine}, schedule={label}",
    )


# --- trackers ----------------------------------------------------------------

def _check_ref(maps: StepMaps, ref: ReferencePath):
    if maps.n_steps is None or maps.n_steps != ref.n_steps:
        raise ValueError("maps.n_steps must match the reference length")
    if abs(maps.dt - ref.dt) > 1e-12:
        raise ValueError("maps.dt must match the reference step")


def track_relaxed(maps: StepMaps, ref: ReferencePath,
                  grid_res: int = 8) -> tuple:
    """Greedy relaxed tracking: each step moves to the sampled hull point
    closest to the next reference state; ties take the lexicographically
    smallest weight vector.

    Returns (path, report) where the report bound is the convex-case path
    bound and the sampling slack 2 K dt N / grid_res accounts for the hull
    being sampled on a grid instead of exact.
    """
    _check_ref(maps, ref)
    fam = maps.family
    n = ref.n_steps
    weights = _simplex_grid(fam.n_members, grid_res)
    states = [ref.states[0].copy()]
    controls = []
    for step in range(n):
        x = states[-1]
        velocities = np.vstack([
            fam.eval_member(i, x).reshape(1, -1)
            for i in range(1, fam.n_members + 1)
        ])
        candidates = x + maps.dt * (weights @ velocities)
        dists = np.linalg.norm(candidates - ref.states[step + 1], axis=1)
        pick = int(np.argmin(dists))  # first minimum: lex-smallest weights
        controls.append(weights[pick].copy())
        states.append(candidates[pick])
    path = DiscretePath(np.vstack(states), tuple(controls))
    horizon = maps.dt * n
    report = TrackReport(
        max_deviation=path_error(ref, path),
        theoretical_bound=bound_convex_path(fam.speed, fam.lip, horizon, maps.dt),
        lookahead_depth=0,
        beam_width=1,
        sampling_slack=2.0 * fam.speed * maps.dt * n / grid_res,
        grid_res=grid_res,
    )
    return path, report


def _relaxed_iterate(maps: StepMaps, x: np.ndarray, depth: int,
                     grid_res: int) -> PointCloud:
    """Sampled ``depth``-fold relaxed image of a single point."""
    fam = maps.family
    weights = _simplex_grid(fam.n_members, grid_res)
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    for _ in range(depth):
        velocities = np.stack([
            fam.eval_member(i, pts) for i in range(1, fam.n_members + 1)
        ])  # (M, n, d)
        mixed = np.einsum("gm,mnd->gnd", weights, velocities)
        pts = (pts[None, :, :] + maps.dt * mixed).reshape(-1, pts.shape[1])
        pts = pts[first_per_cell(pts, 1e-12)]
    return PointCloud(pts)


def _beam_track(maps: StepMaps, ref: ReferencePath, eta: np.ndarray,
                lookahead: int, beam: int, score_fn) -> DiscretePath:
    """Shared lookahead beam search over member choices.

    Slot 0 is protected: it always continues the plain greedy path, so wider
    beams keep the previous best candidate and can only improve the final
    deviation. The remaining slots take the best-scored other expansions.
    After the scored window ends the paths are extended with member 1.
    """
    if beam < 1:
        raise ValueError("beam must be at least 1")
    n = ref.n_steps
    m = maps.family.n_members
    main_end = max(n - lookahead, 0)
    paths = [([ref.states[0].copy()], [])]
    for step in range(main_end):
        target = eta[step + 1 + lookahead]
        expansions = []
        for p_idx, (states, controls) in enumerate(paths):
            for i in range(1, m + 1):
                cand = phi_step(maps, states[-1], i)
                expansions.append((score_fn(cand, target), p_idx, i, cand))
        slot0 = min((e for e in expansions if e[1] == 0),
                    key=lambda e: (e[0], e[2]))
        rest = sorted((e for e in expansions if e is not slot0),
                      key=lambda e: (e[0], e[1], e[2]))
        paths = [
            (paths[p_idx][0] + [cand], paths[p_idx][1] + [i])
            for _, p_idx, i, cand in [slot0] + rest[:beam - 1]
        ]
    best_states, best_controls, best_dev = None, None, np.inf
    for states, controls in paths:
        states = list(states)
        controls = list(controls)
        while len(controls) < n:
            states.append(phi_step(maps, states[-1], 1))
            controls.append(1)
        dev = float(np.max(np.linalg.norm(np.vstack(states) - ref.states, axis=1)))
        if dev < best_dev:
            best_states, best_controls, best_dev = states, controls, dev
    return DiscretePath(np.vstack(best_states), tuple(best_controls))


def track_nonconvex(maps: StepMaps, ref: ReferencePath,
                    lookahead: int | None = None, beam: int = 1,
                    grid_res: int = 8, tol: float = 1e-9) -> tuple:
    """Member-per-step tracking through a window of sampled relaxed steps.

    First tracks the reference with relaxed steps, then commits to one
    member per step, scoring each candidate by the distance from the relaxed
    path ``lookahead`` steps ahead to the candidate's sampled relaxed image
    of the same depth. The default window is the state dimension.
    """
    _check_ref(maps, ref)
    fam = maps.family
    if lookahead is None:
        lookahead = fam.dim
    if lookahead < 0:
        raise ValueError("lookahead must be nonnegative")
    relaxed_path, _ = track_relaxed(maps, ref, grid_res)
    eta = relaxed_path.states

    def score(cand, target):
        cloud = _relaxed_iterate(maps, cand, lookahead, grid_res)
        return dist_point_to_hull(target, cloud, tol)

    path = _beam_track(maps, ref, eta, lookahead, beam, score)
    n = ref.n_steps
    horizon = maps.dt * n
    report = TrackReport(
        max_deviation=path_error(ref, path),
        theoretical_bound=bound_nonconvex_path(fam.speed, fam.lip, horizon,
                                               fam.dim, maps.dt),
        lookahead_depth=lookahead,
        beam_width=beam,
        sampling_slack=2.0 * fam.speed * maps.dt * n / grid_res,
        grid_res=grid_res,
    )
    return path, report


def track_controls(maps: StepMaps, ref: ReferencePath, beam: int = 1,
                   grid_res: int = 8, tol: float = 1e-9) -> tuple:
    """Tracking for M >= d+1 smooth fields with exactly enumerated windows.

    Same skeleton as the nonconvex tracker, but the lookahead window is
    M-1 plain Euler steps enumerated exactly, and the candidate score is the
    distance from the relaxed path to the hull of that enumeration. The
    reported bound is the sum of the dt and dt^2 groups of the few-controls
    path bound.
    """
    _check_ref(maps, ref)
    fam = maps.family
    m = fam.n_members
    if m < fam.dim + 1:
        raise ValueError(
            f"the few-controls tracker requires M >= d+1 members "
            f"(got M={m}, d={fam.dim})"
        )
    if m ** (m - 1) > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"{m}^{m - 1} window images exceed the cap of {ENUMERATION_CAP}"
        )
    lookahead = m - 1
    relaxed_path, _ = track_relaxed(maps, ref, grid_res)
    eta = relaxed_path.states

    def score(cand, target):
        cloud, _ = phi_enumerate(maps, cand, lookahead)
        return dist_point_to_hull(target, cloud, tol)

    path = _beam_track(maps, ref, eta, lookahead, beam, score)
    n = ref.n_steps
    horizon = maps.dt * n
    group_dt, group_dt2 = bound_controls_path(fam.speed, fam.lip, fam.smooth,
                                              horizon, m, maps.dt)
    report = TrackReport(
        max_deviation=path_error(ref, path),
        theoretical_bound=group_dt + group_dt2,
        lookahead_depth=lookahead,
        beam_width=beam,
        sampling_slack=2.0 * fam.speed * maps.dt * n / grid_res,
        grid_res=grid_res,
        bound_dt_group=group_dt,
        bound_dt2_group=group_dt2,
    )
    return path, report


def path_error(ref: ReferencePath, path: DiscretePath) -> float:
    """max_n |ref.states[n] - path.states[n]|."""
    if path.states.shape != ref.states.shape:
        raise ValueError("reference and path lengths differ")
    return float(np.max(np.linalg.norm(ref.states - path.states, axis=1)))


def replay_path(maps: StepMaps, path: DiscretePath) -> np.ndarray:
    """Recompute the states of a path from its stored controls."""
    fam = maps.family
    states = [path.states[0].copy()]
    for ctrl in path.controls:
        x = states[-1]
        if isinstance(ctrl, (int, np.integer)):
            states.append(phi_step(maps, x, int(ctrl)))
        else:
            w = np.asarray(ctrl, dtype=float)
            velocities = np.vstack([
                fam.eval_member(i, x).reshape(1, -1)
                for i in range(1, fam.n_members + 1)
            ])
            states.append(x + maps.dt * (w @ velocities))
    return np.vstack(states)


def exhaustive_min_deviation(maps: StepMaps, ref: ReferencePath,
                             cap: int = ENUMERATION_CAP) -> tuple:
    """True minimal max-deviation over all member sequences, by search.

    Depth-first enumeration with branch-and-bound pruning; feasible only at
    desk scale (M^N within the cap). Returns (deviation, controls). This is
    the certification oracle for the greedy trackers and is independent of
    their selection logic.
    """
    n = ref.n_steps
    m = maps.family.n_members
    if m ** n > cap:
        raise EnumerationCapError(f"{m}^{n} sequences exceed the cap of {cap}")
    best_dev = math.inf
    best_controls = None

    def descend(x, step, running, controls):
        nonlocal best_dev, best_controls
        if running >= best_dev:
            return
        if step == n:
            best_dev = running
            best_controls = tuple(controls)
            return
        for i in range(1, m + 1):
            y = phi_step(maps, x, i)
            dev = max(running, float(np.linalg.norm(y - ref.states[step + 1])))
            controls.append(i)
            descend(y, step + 1, dev, controls)
            controls.pop()

    descend(ref.states[0], 0, 0.0, [])
    return best_dev, best_controls


def export_path(path: DiscretePath, ref: ReferencePath, report: TrackReport,
                basepath: str) -> tuple:
    """Write a tracked path as {basepath}.csv plus {basepath}.report.json.

    CSV columns: n, control, x_1..x_d, ref_x_1..ref_x_d, deviation. Weight
    vectors are serialized as semicolon-joined values.
    """
    d = path.states.shape[1]
    csv_path = f"{basepath}.csv"
    json_path = f"{basepath}.report.json"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n", "control"]
            + [f"x_{j + 1}" for j in range(d)]
            + [f"ref_x_{j + 1}" for j in range(d)]
            + ["deviation"]
        )
        for idx in range(path.states.shape[0]):
            if idx == 0:
                ctrl = ""
            else:
                raw = path.controls[idx - 1]
                ctrl = (str(int(raw)) if isinstance(raw, (int, np.integer))
                        else ";".join(repr(float(v)) for v in np.asarray(raw)))
            dev = float(np.linalg.norm(path.states[idx] - ref.states[idx]))
            writer.writerow(
                [idx, ctrl]
                + [repr(float(v)) for v in path.states[idx]]
                + [repr(float(v)) for v in ref.states[idx]]
                + [repr(dev)]
            )
    with open(json_path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
