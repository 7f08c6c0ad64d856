"""Convex geometry on finite point clouds.

Minkowski algebra, Hausdorff distances, projection onto convex hulls, and
reduction of convex combinations to at most d+1 support points. Everything
operates on small dense clouds in double precision; the unit ball is always
the Euclidean one, and a fattened set "C + r*B" is carried as the pair
(cloud, r) by callers rather than materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

#: tolerance used when collapsing near-duplicate points
DEDUP_TOL = 1e-12

#: default additive accuracy of hull projections
PROJECTION_TOL = 1e-9

#: pairwise scans switch to a KD-tree above this many distance pairs
_FULL_SCAN_LIMIT = 512 * 512


class MinNormPointError(RuntimeError):
    """Hull projection did not converge within the iteration cap.

    Carries the best (largest lower / smallest upper) estimate found so far
    in ``best_value``.
    """

    def __init__(self, message: str, best_value: float):
        super().__init__(message)
        self.best_value = best_value


@dataclass(frozen=True)
class PointCloud:
    """Finite non-empty multiset of points in R^d stored as an (n, d) array.

    A 1-D input array is interpreted as n points on the real line. Entries
    must be finite. The stored array is read-only.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("point cloud must be a non-empty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud entries must be finite")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class HullRepresentation:
    """A convex hull given by support points, optionally with simplex weights.

    When ``weights`` is present the pair represents the single hull point
    ``weights @ support.points``.
    """

    support: PointCloud
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (len(self.support),):
                raise ValueError("weights must match the number of support points")
            if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-12:
                raise ValueError("weights must lie on the probability simplex")
            w = w.copy()
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    def point(self) -> np.ndarray:
        if self.weights is None:
            raise ValueError("representation has no weights")
        return self.weights @ self.support.points


def as_cloud(c) -> PointCloud:
    """Coerce an array-like or PointCloud to a PointCloud."""
    return c if isinstance(c, PointCloud) else PointCloud(c)


def _check_same_dim(a: PointCloud, b: PointCloud):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def first_per_cell(points: np.ndarray, cell: float) -> np.ndarray:
    """Indices of the first point seen in each grid cell of size ``cell``.

    Scan order is index order, so the representative for every cell is the
    earliest point that landed in it; the returned indices are ascending.
    """
    keys = np.floor(points / cell).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    idx.sort()
    return idx


def dedup_cloud(c, tol: float = DEDUP_TOL) -> PointCloud:
    """Collapse points that fall in the same tol-sized grid cell."""
    cloud = as_cloud(c)
    idx = first_per_cell(cloud.points, tol)
    return PointCloud(cloud.points[idx])


def minkowski_sum(c1, c2, dedup_tol: float = DEDUP_TOL) -> PointCloud:
    """Pointwise sum set {a + b : a in c1, b in c2}, deduplicated."""
    a, b = as_cloud(c1), as_cloud(c2)
    _check_same_dim(a, b)
    sums = (a.points[:, None, :] + b.points[None, :, :]).reshape(-1, a.dim)
    idx = first_per_cell(sums, dedup_tol)
    return PointCloud(sums[idx])


def scale_cloud(lam: float, c) -> PointCloud:
    """Scale every point by lam > 0."""
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    cloud = as_cloud(c)
    return PointCloud(lam * cloud.points)


def _directed_hausdorff(p: np.ndarray, q: np.ndarray) -> float:
    """max over p of the distance to the nearest point of q (exact)."""
    if p.shape[0] * q.shape[0] <= _FULL_SCAN_LIMIT:
        return float(cdist(p, q).min(axis=1).max())
    dist, _ = cKDTree(q).query(p, k=1)
    return float(np.max(dist))


def hausdorff_finite(a, b) -> float:
    """Hausdorff distance between two finite clouds (exact, both directions)."""
    ca, cb = as_cloud(a), as_cloud(b)
    _check_same_dim(ca, cb)
    return max(_directed_hausdorff(ca.points, cb.points),
               _directed_hausdorff(cb.points, ca.points))


def _affine_min_norm(ws: np.ndarray) -> np.ndarray:
    """Coefficients alpha (summing to 1, sign-free) minimizing |alpha @ ws|."""
    k = ws.shape[0]
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = ws @ ws.T
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    return sol[:k]


def dist_point_to_hull(p, support, tol: float = PROJECTION_TOL) -> float:
    """Distance from point p to the convex hull of the support cloud.

    Runs the minimum-norm-point scheme of Wolfe: the linear-minimization step
    selects the support vertex best aligned with the current residual, and
    minor cycles re-solve the affine least-norm problem over the active set,
    dropping vertices whose weight would turn negative. The returned value v
    satisfies  true - tol <= v <= true + tol  (v is always an upper bound;
    termination uses the linear-minimization duality gap as a lower bound).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cloud = as_cloud(support)
    pt = np.asarray(p, dtype=float).reshape(-1)
    if pt.shape[0] != cloud.dim:
        raise ValueError(f"dimension mismatch: {pt.shape[0]} vs {cloud.dim}")
    w = cloud.points - pt
    m, d = w.shape

    norms2 = np.einsum("ij,ij->i", w, w)
    j0 = int(np.argmin(norms2))
    active = [j0]
    lam = np.array([1.0])
    x = w[j0].copy()

    cap = 10 * (d + 2) ** 2
    value = float(np.sqrt(norms2[j0]))
    for _ in range(cap):
        xx = float(x @ x)
        value = float(np.sqrt(xx))
        dots = w @ x
        j = int(np.argmin(dots))
        gap = 2.0 * (xx - float(dots[j]))  # duality gap of |y|^2 over the hull
        lower = float(np.sqrt(max(xx - gap, 0.0)))
        if value - lower <= tol:
            return value
        if j not in active:
            active.append(j)
            lam = np.append(lam, 0.0)
        # minor cycles: restore nonnegative weights over the active set
        while True:
            ws = w[active]
            alpha = _affine_min_norm(ws)
            if np.all(alpha >= -1e-14):
                lam = np.maximum(alpha, 0.0)
                s = lam.sum()
                if s > 0:
                    lam = lam / s
                x = lam @ ws
                break
            neg = alpha < -1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            theta = float(np.min(ratios))
            lam = theta * alpha + (1.0 - theta) * lam
            keep = lam > 1e-14
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
    raise MinNormPointError(
        f"hull projection did not reach tol={tol} within {cap} iterations "
        f"(best value {value})",
        best_value=value,
    )


def hausdorff_hulls(a, b, tol: float = PROJECTION_TOL) -> float:
    """Hausdorff distance between the convex hulls of two clouds, within tol.

    The distance function to a convex set is convex, so each directed
    distance is attained at a generator point; it suffices to project every
    generator of one cloud onto the hull of the other.
    """
    ca, cb = as_cloud(a), as_cloud(b)
    _check_same_dim(ca, cb)
    d_ab = max(dist_point_to_hull(pt, cb, tol) for pt in ca.points)
    d_ba = max(dist_point_to_hull(pt, ca, tol) for pt in cb.points)
    return max(d_ab, d_ba)


def caratheodory_reduce(target, support, weights) -> HullRepresentation:
    """Rewrite a convex combination using at most d+1 of the support points.

    While more than d+1 points carry weight, finds a nonzero affine
    dependence among them and shifts the weights along it until one hits
    zero. The represented point never moves, so the reconstruction error of
    the output stays below 1e-9.
    """
    cloud = as_cloud(support)
    tgt = np.asarray(target, dtype=float).reshape(-1)
    lam = np.asarray(weights, dtype=float).copy()
    if lam.shape != (len(cloud),):
        raise ValueError("weights must match the number of support points")
    if np.any(lam < -1e-12) or abs(lam.sum() - 1.0) > 1e-12:
        raise ValueError("weights are not a simplex element")
    if np.linalg.norm(lam @ cloud.points - tgt) > 1e-9:
        raise ValueError("weights do not reconstruct the target point")

    d = cloud.dim
    keep = lam > 0.0
    pts = cloud.points[keep]
    lam = lam[keep]
    while len(lam) > d + 1:
        # affine dependence: c != 0 with c @ pts = 0 and sum(c) = 0
        a = np.vstack([pts.T, np.ones(len(lam))])
        _, _, vh = np.linalg.svd(a)
        c = vh[-1]
        if not np.any(c > 1e-14):
            c = -c
        pos = c > 1e-14
        t = float(np.min(lam[pos] / c[pos]))
        lam = lam - t * c
        lam[lam < 1e-14] = 0.0
        keep = lam > 0.0
        pts = pts[keep]
        lam = lam[keep]
        lam = lam / lam.sum()
    return HullRepresentation(PointCloud(pts), lam)
