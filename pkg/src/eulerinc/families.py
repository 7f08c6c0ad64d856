"""Set-valued right-hand sides given as finite families of smooth fields.

A ControlFamily holds M vector fields f_1..f_M on R^d together with
certified constants: a speed bound (every |f_i(x)| stays below it), a
Lipschitz/Jacobian bound, and a smoothness constant bounding the Taylor
defect |f_i(x) - f_i(z) - f_i'(z)(x - z)| / |x - z|^2. The constants are
supplied by the problem definition and only audited here by deterministic
sampling; certifying global bounds is out of scope.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .geometry import PointCloud, hausdorff_finite

__all__ = [
    "ControlFamily",
    "AffineFamily",
    "ProblemSpec",
    "ConstantsReport",
    "eval_family",
    "validate_constants",
    "load_problem",
    "benchmark_names",
    "get_benchmark",
]


@dataclass(frozen=True)
class ControlFamily:
    """Finite family {f_1..f_M} with certified constants.

    Members must accept both a single point (d,) and a batch (n, d) and
    return the matching shape. Jacobian callables take a single point and
    return a (d, d) array.
    """

    dim: int
    members: tuple
    jacobians: tuple
    speed: float      # bound on |f_i(x)|
    lip: float        # bound on the Jacobian operator norm
    smooth: float     # Taylor defect constant; 0 for affine families
    label: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if len(self.members) < 1:
            raise ValueError("family needs at least one member")
        if len(self.members) != len(self.jacobians):
            raise ValueError("members and jacobians must pair up")
        if self.speed <= 0 or self.lip < 0 or self.smooth < 0:
            raise ValueError("constants must satisfy speed > 0, lip >= 0, smooth >= 0")

    @property
    def n_members(self) -> int:
        return len(self.members)

    def eval_member(self, i: int, x: np.ndarray) -> np.ndarray:
        """Evaluate member i (1-based) on a point or a batch of points."""
        if not 1 <= i <= self.n_members:
            raise ValueError(f"member index {i} out of range 1..{self.n_members}")
        out = np.asarray(self.members[i - 1](np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError(f"member {i} produced a non-finite value")
        return out

    def jacobian(self, i: int, x: np.ndarray) -> np.ndarray:
        if not 1 <= i <= self.n_members:
            raise ValueError(f"member index {i} out of range 1..{self.n_members}")
        return np.asarray(self.jacobians[i - 1](np.asarray(x, dtype=float)), dtype=float)


def eval_family(family: ControlFamily, x) -> PointCloud:
    """Velocity cloud {f_1(x), ..., f_M(x)} in member order.

    The order is part of the contract: trackers record member indices.
    """
    pt = np.asarray(x, dtype=float).reshape(-1)
    if pt.shape[0] != family.dim:
        raise ValueError(f"point has dim {pt.shape[0]}, family has dim {family.dim}")
    rows = [family.eval_member(i, pt) for i in range(1, family.n_members + 1)]
    return PointCloud(np.vstack([r.reshape(1, -1) for r in rows]))


@dataclass(frozen=True)
class AffineFamily:
    """Payload for families f_i(x) = b_i + A_i (x - anchor); smoothness is 0."""

    offsets: np.ndarray   # (M, d)
    matrices: np.ndarray  # (M, d, d)
    anchor: np.ndarray    # (d,)

    def __post_init__(self):
        b = np.asarray(self.offsets, dtype=float)
        a = np.asarray(self.matrices, dtype=float)
        x0 = np.asarray(self.anchor, dtype=float).reshape(-1)
        if b.ndim != 2:
            raise ValueError("offsets must be an (M, d) array")
        m, d = b.shape
        if m < 1 or d < 1:
            raise ValueError("need M >= 1 and d >= 1")
        if a.shape != (m, d, d):
            raise ValueError(f"matrices must have shape ({m}, {d}, {d})")
        if x0.shape[0] != d:
            raise ValueError("anchor dimension mismatch")
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "matrices", a)
        object.__setattr__(self, "anchor", x0)

    def to_family(self, speed: float, lip: float, label: str = "affine") -> ControlFamily:
        d = self.offsets.shape[1]
        members = []
        jacobians = []
        for bi, ai in zip(self.offsets, self.matrices):
            def f(x, bi=bi, ai=ai):
                return bi + (np.asarray(x, dtype=float) - self.anchor) @ ai.T

            def jac(x, ai=ai):
                return ai.copy()

            members.append(f)
            jacobians.append(jac)
        return ControlFamily(
            dim=d,
            members=tuple(members),
            jacobians=tuple(jacobians),
            speed=speed,
            lip=lip,
            smooth=0.0,
            label=label,
        )


@dataclass(frozen=True)
class ProblemSpec:
    """A family plus initial point, horizon, and a validation box.

    The box is axis-aligned and contains the ball of radius |x0| + speed * T,
    which confines every trajectory.
    """

    family: ControlFamily
    x0: np.ndarray
    horizon: float
    box_lo: np.ndarray = field(default=None)
    box_hi: np.ndarray = field(default=None)
    label: str = ""

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.shape[0] != self.family.dim:
            raise ValueError("x0 dimension does not match the family")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        radius = float(np.linalg.norm(x0)) + self.family.speed * self.horizon
        lo = self.box_lo
        hi = self.box_hi
        if lo is None or hi is None:
            lo = np.full(self.family.dim, -radius)
            hi = np.full(self.family.dim, radius)
        else:
            lo = np.asarray(lo, dtype=float).reshape(-1)
            hi = np.asarray(hi, dtype=float).reshape(-1)
            if np.any(lo > -radius) or np.any(hi < radius):
                raise ValueError("box must contain the ball of radius |x0| + speed*T")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "box_lo", lo)
        object.__setattr__(self, "box_hi", hi)


@dataclass
class ConstantsReport:
    """Sampled audit of a family's certified constants."""

    label: str
    samples: int
    max_speed: float
    max_jacobian_norm: float
    max_taylor_ratio: float
    max_lipschitz_ratio: float
    violations: list

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "samples": self.samples,
            "max_speed": self.max_speed,
            "max_jacobian_norm": self.max_jacobian_norm,
            "max_taylor_ratio": self.max_taylor_ratio,
            "max_lipschitz_ratio": self.max_lipschitz_ratio,
            "violations": list(self.violations),
            "passed": self.passed,
        }


def _operator_norm_power(a: np.ndarray, iters: int = 50) -> float:
    """Largest singular value via power iteration on a^T a."""
    d = a.shape[1]
    v = np.ones(d) / np.sqrt(d)
    for _ in range(iters):
        w = a.T @ (a @ v)
        n = np.linalg.norm(w)
        if n == 0:
            return 0.0
        v = w / n
    return float(np.linalg.norm(a @ v))


def validate_constants(family: ControlFamily, box, samples: int = 128) -> ConstantsReport:
    """Audit the certified constants on a deterministic low-discrepancy sample.

    ``box`` is a (lo, hi) pair of arrays. Reports the largest observed speed,
    Jacobian operator norm (power iteration, 50 steps), Taylor defect ratio,
    and set-valued Lipschitz ratio; a violation is recorded when an observed
    value exceeds the certified constant by more than 1e-9. Violations are
    report entries, never exceptions.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    lo, hi = (np.asarray(v, dtype=float).reshape(-1) for v in box)
    d = family.dim
    halton = qmc.Halton(d=d, scramble=False)
    pts = lo + halton.random(samples) * (hi - lo)

    slack = 1e-9
    max_speed = 0.0
    max_jac = 0.0
    max_taylor = 0.0
    max_lip = 0.0
    for i in range(1, family.n_members + 1):
        vals = family.eval_member(i, pts)
        max_speed = max(max_speed, float(np.max(np.linalg.norm(vals, axis=1))))
        for p in pts:
            max_jac = max(max_jac, _operator_norm_power(family.jacobian(i, p)))
    # pairs: consecutive sample points plus a short-offset variant of each
    pairs = [(pts[k], pts[k + 1]) for k in range(samples - 1)]
    pairs += [(pts[k], pts[k] + 0.1 * (pts[k + 1] - pts[k])) for k in range(samples - 1)]
    for x, z in pairs:
        step = x - z
        gap2 = float(step @ step)
        if gap2 < 1e-16:
            continue
        for i in range(1, family.n_members + 1):
            defect = np.linalg.norm(
                family.eval_member(i, x) - family.eval_member(i, z)
                - family.jacobian(i, z) @ step
            )
            max_taylor = max(max_taylor, float(defect) / gap2)
        h = hausdorff_finite(eval_family(family, x), eval_family(family, z))
        max_lip = max(max_lip, h / np.sqrt(gap2))

    violations = []
    if max_speed > family.speed + slack:
        violations.append(f"speed bound exceeded: {max_speed} > {family.speed}")
    if max_jac > family.lip + slack:
        violations.append(f"jacobian bound exceeded: {max_jac} > {family.lip}")
    if max_taylor > family.smooth + slack:
        violations.append(f"smoothness bound exceeded: {max_taylor} > {family.smooth}")
    if max_lip > family.lip + slack:
        violations.append(f"set-valued Lipschitz bound exceeded: {max_lip} > {family.lip}")
    return ConstantsReport(
        label=family.label,
        samples=samples,
        max_speed=max_speed,
        max_jacobian_norm=max_jac,
        max_taylor_ratio=max_taylor,
        max_lipschitz_ratio=max_lip,
        violations=violations,
    )


# --- benchmark registry ----------------------------------------------------

_ROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def _swirl(x: np.ndarray) -> np.ndarray:
    """Bounded rotation field x -> R x / (1 + |x|); speed < 1, Lipschitz 1."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    return (x @ _ROT.T) / (1.0 + r)


def _swirl_jac(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return _ROT.copy()
    return _ROT / (1.0 + r) - np.outer(_ROT @ x, x) / (r * (1.0 + r) ** 2)


def _neg(f):
    return lambda x: -f(x)


def _make_signs1d() -> ProblemSpec:
    members = (
        lambda x: np.full_like(np.asarray(x, dtype=float), -1.0),
        lambda x: np.full_like(np.asarray(x, dtype=float), 1.0),
    )
    jacobians = (lambda x: np.zeros((1, 1)), lambda x: np.zeros((1, 1)))
    fam = ControlFamily(1, members, jacobians, speed=1.0, lip=0.0, smooth=0.0,
                        label="signs1d")
    return ProblemSpec(fam, np.zeros(1), 1.0, label="signs1d")


def _make_rotation2d() -> ProblemSpec:
    fam = ControlFamily(
        2,
        (_swirl, _neg(_swirl)),
        (_swirl_jac, lambda x: -_swirl_jac(x)),
        speed=1.0,
        lip=1.0,
        smooth=1.0,
        label="rotation2d",
    )
    return ProblemSpec(fam, np.array([1.0, 0.0]), 1.0, label="rotation2d")


def _make_single2d() -> ProblemSpec:
    fam = ControlFamily(2, (_swirl,), (_swirl_jac,), speed=1.0, lip=1.0,
                        smooth=1.0, label="single2d")
    return ProblemSpec(fam, np.array([1.0, 0.0]), 1.0, label="single2d")


def _make_affine2d3() -> ProblemSpec:
    payload = AffineFamily(
        offsets=np.array([[1.0, 0.0], [-0.5, 0.8], [-0.2, -0.9]]),
        matrices=np.array([
            [[0.0, -0.3], [0.3, 0.0]],
            [[0.2, 0.0], [0.0, -0.1]],
            [[-0.1, 0.1], [0.0, 0.2]],
        ]),
        anchor=np.zeros(2),
    )
    fam = payload.to_family(speed=2.0, lip=0.3, label="affine2d3")
    return ProblemSpec(fam, np.zeros(2), 1.0, label="affine2d3")


_REGISTRY = {
    "signs1d": _make_signs1d,
    "rotation2d": _make_rotation2d,
    "single2d": _make_single2d,
    "affine2d3": _make_affine2d3,
}


def benchmark_names() -> list:
    return sorted(_REGISTRY)


def get_benchmark(name: str) -> ProblemSpec:
    if name not in _REGISTRY:
        raise ValueError(
            f"unknown benchmark {name!r}; available: {', '.join(benchmark_names())}"
        )
    return _REGISTRY[name]()


def load_problem(config) -> ProblemSpec:
    """Build a ProblemSpec from a config document.

    ``config`` may be a mapping, a JSON string, or a path to a JSON file.
    Either the field ``benchmark`` names a registered problem (optionally
    overriding ``x0`` and ``T``), or the fields
    ``dim, M, b, A, x0, T, K, L`` describe an affine family with matrices in
    row-major order. The smoothness constant of an affine family is 0.
    """
    if isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config) as fh:
            cfg = json.load(fh)
    elif isinstance(config, str):
        cfg = json.loads(config)
    else:
        cfg = dict(config)

    if "benchmark" in cfg:
        base = get_benchmark(cfg["benchmark"])
        x0 = np.asarray(cfg.get("x0", base.x0), dtype=float)
        horizon = float(cfg.get("T", base.horizon))
        return ProblemSpec(base.family, x0, horizon, label=base.label)

    try:
        d = int(cfg["dim"])
        m = int(cfg["M"])
        b = np.asarray(cfg["b"], dtype=float)
        a = np.asarray(cfg["A"], dtype=float)
        x0 = np.asarray(cfg["x0"], dtype=float)
        horizon = float(cfg["T"])
        speed = float(cfg["K"])
        lip = float(cfg["L"])
    except KeyError as exc:
        raise ValueError(f"config is missing field {exc.args[0]!r}") from exc
    if d < 1:
        raise ValueError("dim must be at least 1")
    if m < 1:
        raise ValueError("M must be at least 1")
    if b.shape != (m, d):
        raise ValueError(f"b must be an (M, d) = ({m}, {d}) array")
    if a.shape != (m, d, d):
        raise ValueError(f"A must be an (M, d, d) = ({m}, {d}, {d}) array")
    anchor = np.asarray(cfg.get("anchor", np.zeros(d)), dtype=float)
    payload = AffineFamily(offsets=b, matrices=a, anchor=anchor)
    fam = payload.to_family(speed=speed, lip=lip,
                            label=cfg.get("label", "affine"))
    return ProblemSpec(fam, x0, horizon, label=fam.label)
