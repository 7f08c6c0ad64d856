"""Explicit error constants for the set-valued forward Euler method.

Each function evaluates one closed-form bound as a pure function of the
problem constants: speed bound K, Lipschitz bound L, smoothness constant S,
horizon T, state dimension d, family size M, and step size dt. Formulas are
implemented verbatim, even where related constants disagree across results
(the dt^2 smoothness term of the few-controls path bound carries a factor 2
that the hull-inclusion radius does not; both are kept as printed).

L = 0 is accepted by every bound except the few-controls one, whose
smoothness term has L in a denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "bound_reach_sets",
    "bound_convex_path",
    "bound_nonconvex_path",
    "bound_controls_path",
    "coco_radius",
    "psi_hull_radius",
    "BoundSheet",
    "bound_sheet",
]


def _check_positive(**kwargs):
    for name, value in kwargs.items():
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")


def _check_nonnegative(**kwargs):
    for name, value in kwargs.items():
        if value < 0:
            raise ValueError(f"{name} must be nonnegative, got {value}")


def bound_reach_sets(speed: float, lip: float, horizon: float, dim: int,
                     dt: float) -> float:
    """Hausdorff error bound for discrete vs. exact reachable sets:
    (K e^{LT} (K d (d+1) + L T) + 2 K d) dt."""
    _check_positive(speed=speed, horizon=horizon, dt=dt)
    _check_nonnegative(lip=lip)
    if dim < 1:
        raise ValueError("dim must be at least 1")
    k, t = speed, horizon
    return (k * math.exp(lip * t) * (k * dim * (dim + 1) + lip * t)
            + 2.0 * k * dim) * dt


def bound_convex_path(speed: float, lip: float, horizon: float,
                      dt: float) -> float:
    """Path deviation bound for convex-valued inclusions: K L T e^{LT} dt."""
    _check_positive(speed=speed, horizon=horizon, dt=dt)
    _check_nonnegative(lip=lip)
    return speed * lip * horizon * math.exp(lip * horizon) * dt


def bound_nonconvex_path(speed: float, lip: float, horizon: float, dim: int,
                         dt: float) -> float:
    """Path deviation bound without convexity:
    K (e^{LT} d (d+1) + 2 d + L T e^{LT}) dt.

    Implemented as the convex-path bound plus K (e^{LT} d (d+1) + 2 d) dt so
    the decomposition used to prove it holds exactly in floating point.
    """
    _check_positive(speed=speed, horizon=horizon, dt=dt)
    _check_nonnegative(lip=lip)
    if dim < 1:
        raise ValueError("dim must be at least 1")
    extra = speed * (math.exp(lip * horizon) * dim * (dim + 1) + 2.0 * dim) * dt
    return bound_convex_path(speed, lip, horizon, dt) + extra


def bound_controls_path(speed: float, lip: float, smooth: float,
                        horizon: float, n_members: int, dt: float) -> tuple:
    """Path deviation bound for M smooth fields, split into the dt and dt^2
    groups:

    dt group:   (e^{LT} (K L T + K (8M - 10)) + 2 K (M - 1)) dt
    dt^2 group: e^{LT} (K L (M-1)(M-2)
                        + 2 K L ((M-1)^3 - (M-1))/3 (1 + L dt)^{M-3}
                        + 2 S K^2 M (M-1)(2M-1) / (3 L)) dt^2

    Requires L > 0: the smoothness term divides by L.
    """
    _check_positive(speed=speed, horizon=horizon, dt=dt)
    _check_nonnegative(smooth=smooth)
    if n_members < 2:
        raise ValueError("need at least 2 members")
    if lip <= 0:
        raise ValueError("the few-controls bound requires lip > 0 "
                         "(its smoothness term has L in a denominator)")
    k, s, t, m = speed, smooth, horizon, n_members
    elt = math.exp(lip * t)
    group_dt = (elt * (k * lip * t + k * (8 * m - 10))
                + 2.0 * k * (m - 1)) * dt
    cubic = ((m - 1) ** 3 - (m - 1)) / 3.0
    group_dt2 = elt * (
        k * lip * (m - 1) * (m - 2)
        + 2.0 * k * lip * cubic * (1.0 + lip * dt) ** (m - 3)
        + 2.0 * s * k * k * m * (m - 1) * (2 * m - 1) / (3.0 * lip)
    ) * dt * dt
    return group_dt, group_dt2


def coco_radius(speed: float, lip: float, smooth: float, n_members: int,
                dt: float) -> float:
    """Fattening radius for the hull of M-step images against the union of
    hulls over first steps:

    (8M - 10) K L dt^2
    + (2 K L^2 ((M-1)^3 - (M-1))/3 (1 + L dt)^{M-3}
       + S K^2 M (M-1)(2M-1) / 3) dt^3
    """
    _check_positive(speed=speed)
    _check_nonnegative(lip=lip, smooth=smooth, dt=dt)
    if n_members < 2:
        raise ValueError("need at least 2 members")
    k, s, m = speed, smooth, n_members
    cubic = ((m - 1) ** 3 - (m - 1)) / 3.0
    quadratic = (8 * m - 10) * k * lip * dt * dt
    tail = 2.0 * k * lip * lip * cubic * (1.0 + lip * dt) ** (m - 3)
    return quadratic + (tail + s * k * k * m * (m - 1) * (2 * m - 1) / 3.0) * dt ** 3


def psi_hull_radius(speed: float, smooth: float, n_members: int,
                    dt: float) -> float:
    """Fattening radius for one relaxed step of a hull of (M-1)-step images:
    S K^2 M (M-1)(2M-1) / 3 dt^3. Vanishes for affine families (S = 0)."""
    _check_positive(speed=speed)
    _check_nonnegative(smooth=smooth, dt=dt)
    if n_members < 1:
        raise ValueError("need at least 1 member")
    k, s, m = speed, smooth, n_members
    return s * k * k * m * (m - 1) * (2 * m - 1) / 3.0 * dt ** 3


@dataclass(frozen=True)
class BoundSheet:
    """All bounds evaluated for one parameter set; inputs echoed.

    Entries whose preconditions fail (few-controls bounds with L = 0 or
    M < 2) are None, with the reason recorded in ``notes``.
    """

    speed: float
    lip: float
    smooth: float
    horizon: float
    dim: int
    n_members: int
    n_steps: int
    dt: float
    reach_sets: float
    convex_path: float
    nonconvex_path: float
    controls_path_dt: float | None
    controls_path_dt2: float | None
    coco_radius: float | None
    psi_hull_radius: float
    notes: tuple = ()

    def as_dict(self) -> dict:
        return {
            "inputs": {
                "speed": self.speed,
                "lip": self.lip,
                "smooth": self.smooth,
                "horizon": self.horizon,
                "dim": self.dim,
                "n_members": self.n_members,
                "n_steps": self.n_steps,
                "dt": self.dt,
            },
            "reach_sets": self.reach_sets,
            "convex_path": self.convex_path,
            "nonconvex_path": self.nonconvex_path,
            "controls_path_dt": self.controls_path_dt,
            "controls_path_dt2": self.controls_path_dt2,
            "coco_radius": self.coco_radius,
            "psi_hull_radius": self.psi_hull_radius,
            "notes": list(self.notes),
        }


def bound_sheet(speed: float, lip: float, smooth: float, horizon: float,
                dim: int, n_members: int, n_steps: int) -> BoundSheet:
    """Evaluate every bound for dt = horizon / n_steps."""
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    dt = horizon / n_steps
    notes = []
    controls = (None, None)
    coco = None
    if n_members < 2:
        notes.append("few-controls bounds need at least 2 members")
    elif lip <= 0:
        notes.append("few-controls path bound needs lip > 0")
        coco = coco_radius(speed, lip, smooth, n_members, dt)
    else:
        controls = bound_controls_path(speed, lip, smooth, horizon, n_members, dt)
        coco = coco_radius(speed, lip, smooth, n_members, dt)
    return BoundSheet(
        speed=speed,
        lip=lip,
        smooth=smooth,
        horizon=horizon,
        dim=dim,
        n_members=n_members,
        n_steps=n_steps,
        dt=dt,
        reach_sets=bound_reach_sets(speed, lip, horizon, dim, dt),
        convex_path=bound_convex_path(speed, lip, horizon, dt),
        nonconvex_path=bound_nonconvex_path(speed, lip, horizon, dim, dt),
        controls_path_dt=controls[0],
        controls_path_dt2=controls[1],
        coco_radius=coco,
        psi_hull_radius=psi_hull_radius(speed, smooth, n_members, dt),
        notes=tuple(notes),
    )
