"""Experiment harness: convergence studies, inclusion checks, reports.

Every slack that enters a pass/fail decision (pruning budgets, hull sampling
density, reference-oracle accuracy) is carried as an explicit report field,
never folded silently into a threshold. Sampling is seeded so reruns of the
same configuration produce byte-identical reports.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .bounds import bound_reach_sets, coco_radius, psi_hull_radius
from .engine import (StepMaps, evolve_reach, make_step_maps, phi_enumerate,
                     phi_step, psi_sample, quadratic_prune_rule, reference_tube)
from .families import ProblemSpec
from .geometry import PointCloud, dist_point_to_hull, hausdorff_finite

__all__ = [
    "ConvergenceStudy",
    "InclusionCheck",
    "estimate_order",
    "run_convergence_study",
    "check_coco_inclusion",
    "check_psi_hull_inclusion",
    "emit_report",
]

#: default sampling seeds, one per check kind; override per call
COCO_SEED = 101
PSI_HULL_SEED = 202


def estimate_order(pairs) -> float:
    """Least-squares slope of log(error) against log(dt).

    Nonpositive error entries are dropped; at least two must remain.
    """
    clean = [(dt, err) for dt, err in pairs if err > 0.0]
    if len(clean) < 2:
        raise ValueError("need at least two positive (dt, error) pairs")
    dts = np.log([dt for dt, _ in clean])
    errs = np.log([err for _, err in clean])
    slope, _ = np.polyfit(dts, errs, 1)
    return float(slope)


def _amplified_prune_budget(cell: float, n_steps: int, dt: float, lip: float,
                            dim: int) -> float:
    """Worst-case coverage loss of grid pruning, with Lipschitz growth.

    Dropping a point loses at most cell*sqrt(d), and the loss of step k is
    stretched by (1 + L dt) on each later step; summing the geometric series
    gives cell*sqrt(d) * ((1+L dt)^n - 1)/(L dt), which reduces to
    n * cell * sqrt(d) when L = 0.
    """
    unit = cell * math.sqrt(dim)
    if lip == 0.0 or dt == 0.0 or n_steps == 0:
        return n_steps * unit
    growth = (1.0 + lip * dt) ** n_steps
    return unit * (growth - 1.0) / (lip * dt)


@dataclass
class ConvergenceStudy:
    """First-order convergence measurement for one problem.

    errors_max[j] is the largest Hausdorff distance over all times between
    the step-dt_list[j] tube and the reference tube; slack[j] combines the
    coarse pruning budget with the reference oracle budget. fitted_order is
    the log-log slope over the finest half of the grid, or None when too few
    errors are positive.
    """

    problem_label: str
    dt_list: list
    refine: int
    errors_max: list
    errors_final: list
    bounds: list
    slack: list
    prune_cells: list
    reference_budget: float
    fitted_order: float | None
    per_time_errors: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(err <= b + s for err, b, s in
                   zip(self.errors_max, self.bounds, self.slack))

    def as_dict(self) -> dict:
        return {
            "kind": "convergence_study",
            "problem": self.problem_label,
            "dt_list": list(self.dt_list),
            "refine": self.refine,
            "errors_max": list(self.errors_max),
            "errors_final": list(self.errors_final),
            "bounds": list(self.bounds),
            "slack": list(self.slack),
            "prune_cells": list(self.prune_cells),
            "reference_budget": self.reference_budget,
            "fitted_order": self.fitted_order,
            "verdict": "pass" if self.passed else "fail",
        }


def run_convergence_study(problem: ProblemSpec, dt_list, refine: int = 32,
                          prune_rule=quadratic_prune_rule) -> ConvergenceStudy:
    """Measure reach-set errors on a grid of step sizes against one bound.

    For each dt the discrete tube is compared per time slice against a
    refined reference tube; when every coarse step count divides the finest
    one (the usual halving grid), a single reference at the finest scale is
    shared across the whole grid. The fitted order uses only the finest half
    of the grid to suppress preasymptotic pollution.
    """
    dts = [float(dt) for dt in dt_list]
    if len(dts) < 3:
        raise ValueError("need at least 3 step sizes")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt_list must be strictly decreasing")
    fam = problem.family
    horizon = problem.horizon
    n_list = []
    for dt in dts:
        n = round(horizon / dt)
        if abs(n * dt - horizon) > 1e-9:
            raise ValueError(f"dt={dt} does not divide the horizon {horizon}")
        n_list.append(n)

    n_max = max(n_list)
    shared = all(n_max % n == 0 for n in n_list)
    if shared:
        ref = reference_tube(problem, refine, n_max, prune_rule)
        ref_budget = ref.oracle_budget

    errors_max, errors_final, bound_list, slack_list = [], [], [], []
    prune_cells, per_time = [], []
    for dt, n in zip(dts, n_list):
        if not shared:
            ref = reference_tube(problem, refine, n, prune_rule)
            ref_budget = ref.oracle_budget
        stride = n_max // n if shared else 1
        cell = prune_rule(dt, fam)
        tube = evolve_reach(make_step_maps(problem, n), problem.x0, cell)
        errs = [
            hausdorff_finite(tube.clouds[k], ref.clouds[k * stride])
            for k in range(n + 1)
        ]
        errors_max.append(max(errs))
        errors_final.append(errs[-1])
        per_time.append(errs)
        bound_list.append(bound_reach_sets(fam.speed, fam.lip, horizon,
                                           fam.dim, dt))
        coarse_budget = _amplified_prune_budget(cell, n, dt, fam.lip, fam.dim)
        slack_list.append(coarse_budget + ref_budget)
        prune_cells.append(cell)

    half = max(2, (len(dts) + 1) // 2)
    finest = sorted(zip(dts, errors_max))[:half]
    try:
        order = estimate_order(finest)
    except ValueError:
        order = None  # errors at prune-slack scale; nothing to fit
    return ConvergenceStudy(
        problem_label=problem.label,
        dt_list=dts,
        refine=refine,
        errors_max=errors_max,
        errors_final=errors_final,
        bounds=bound_list,
        slack=slack_list,
        prune_cells=prune_cells,
        reference_budget=float(ref_budget),
        fitted_order=order,
        per_time_errors=per_time,
    )


@dataclass
class InclusionCheck:
    """Result of sampling one fattened hull inclusion.

    max_excess is the largest directed distance from a left-hand sample to
    the right-hand hull minus the permitted radius; at or below tolerance
    certifies the inclusion on the sample.
    """

    theorem_tag: str
    problem_label: str
    dt: float
    sample_count: int
    radius: float
    max_excess: float
    tolerance: float
    sampling_slack: float = 0.0
    two_sided_gap: float | None = None
    seed: int | None = None

    @property
    def passed(self) -> bool:
        if self.max_excess > self.tolerance:
            return False
        if self.two_sided_gap is not None:
            return self.two_sided_gap <= self.sampling_slack + self.tolerance
        return True

    def as_dict(self) -> dict:
        return {
            "kind": "inclusion_check",
            "theorem_tag": self.theorem_tag,
            "problem": self.problem_label,
            "dt": self.dt,
            "sample_count": self.sample_count,
            "radius": self.radius,
            "max_excess": self.max_excess,
            "tolerance": self.tolerance,
            "sampling_slack": self.sampling_slack,
            "two_sided_gap": self.two_sided_gap,
            "seed": self.seed,
            "verdict": "pass" if self.passed else "fail",
        }


def _caratheodory_samples(rng, points: np.ndarray, count: int,
                          dim: int) -> np.ndarray:
    """Random hull points as convex mixtures of d+1 generators each."""
    out = np.empty((count, points.shape[1]))
    k = min(dim + 1, points.shape[0])
    for s in range(count):
        idx = rng.choice(points.shape[0], size=k, replace=False)
        w = rng.dirichlet(np.ones(k))
        out[s] = w @ points[idx]
    return out


def check_coco_inclusion(problem: ProblemSpec, dt: float, samples: int = 200,
                         seed: int = COCO_SEED, tol: float = 1e-9,
                         pass_tol: float = 1e-6) -> InclusionCheck:
    """Sampled check that the hull of all M-step images is covered by the
    union over first steps of the hulls of the remaining M-1 steps, fattened
    by the explicit radius.

    Requires M >= d+1 members. Samples are random convex mixtures of the
    enumerated M-step images, with a fixed seed for reproducibility.
    """
    fam = problem.family
    m = fam.n_members
    if m < fam.dim + 1:
        raise ValueError(
            f"the hull inclusion requires M >= d+1 members (got M={m}, d={fam.dim})"
        )
    maps = StepMaps(fam, dt)
    full, _ = phi_enumerate(maps, problem.x0, m)
    branch_clouds = [
        phi_enumerate(maps, phi_step(maps, problem.x0, i), m - 1)[0]
        for i in range(1, m + 1)
    ]
    radius = coco_radius(fam.speed, fam.lip, fam.smooth, m, dt)
    rng = np.random.default_rng(seed)
    zs = _caratheodory_samples(rng, full.points, samples, fam.dim)
    max_excess = -math.inf
    for z in zs:
        nearest = min(dist_point_to_hull(z, cloud, tol)
                      for cloud in branch_clouds)
        max_excess = max(max_excess, nearest - radius)
    return InclusionCheck(
        theorem_tag="coco",
        problem_label=problem.label,
        dt=dt,
        sample_count=samples,
        radius=radius,
        max_excess=float(max_excess),
        tolerance=pass_tol + tol,
        seed=seed,
    )


def check_psi_hull_inclusion(problem: ProblemSpec, dt: float, z=None,
                             grid_res: int = 8, samples: int = 200,
                             seed: int = PSI_HULL_SEED, tol: float = 1e-9,
                             pass_tol: float = 1e-6) -> InclusionCheck:
    """Sampled check that one relaxed step of the hull of (M-1)-step images
    stays inside the hull of M-step images fattened by the smoothness radius.

    Left-hand samples apply the sampled relaxed step to every enumerated
    (M-1)-step image and to random convex mixtures of them. For smoothness
    constant 0 the inclusion is an equality of hulls, so the check is
    two-sided with the hull sampling density as the only allowance.
    """
    fam = problem.family
    m = fam.n_members
    maps = StepMaps(fam, dt)
    base = np.asarray(problem.x0 if z is None else z, dtype=float)
    window, _ = phi_enumerate(maps, base, m - 1)
    target, _ = phi_enumerate(maps, base, m)
    rng = np.random.default_rng(seed)
    ys = window.points
    if samples > 0 and len(window) > 1:
        ys = np.vstack([ys, _caratheodory_samples(rng, window.points,
                                                  samples, fam.dim)])
    lhs = np.vstack([psi_sample(maps, y, grid_res).points for y in ys])
    radius = psi_hull_radius(fam.speed, fam.smooth, m, dt)
    excesses = [dist_point_to_hull(s, target, tol) - radius for s in lhs]
    max_excess = float(max(excesses))
    slack = 2.0 * fam.speed * dt / grid_res
    two_sided = None
    if fam.smooth == 0.0:
        lhs_cloud = PointCloud(lhs)
        back = max(dist_point_to_hull(p, lhs_cloud, tol)
                   for p in target.points)
        two_sided = max(max_excess + radius, back)
    return InclusionCheck(
        theorem_tag="psi_hull",
        problem_label=problem.label,
        dt=dt,
        sample_count=int(lhs.shape[0]),
        radius=radius,
        max_excess=max_excess,
        tolerance=pass_tol + tol,
        sampling_slack=slack,
        two_sided_gap=two_sided,
        seed=seed,
    )


def _study_rows(study: ConvergenceStudy) -> list:
    rows = []
    for j, dt in enumerate(study.dt_list):
        rows.append({
            "problem": study.problem_label,
            "dt": dt,
            "error_max": study.errors_max[j],
            "error_final": study.errors_final[j],
            "bound": study.bounds[j],
            "slack": study.slack[j],
            "prune_cell": study.prune_cells[j],
        })
    return rows


def _check_rows(check: InclusionCheck) -> list:
    return [{
        "problem": check.problem_label,
        "theorem_tag": check.theorem_tag,
        "dt": check.dt,
        "samples": check.sample_count,
        "radius": check.radius,
        "max_excess": check.max_excess,
        "two_sided_gap": check.two_sided_gap,
        "verdict": "pass" if check.passed else "fail",
    }]


def emit_report(results, out_dir: str, name: str = "report") -> tuple:
    """Write results as {name}.json and {name}.csv under out_dir.

    ``results`` is a study, a check, or a list of them. Returns
    (json_path, csv_path, all_passed). Raises on an empty list.
    """
    if not isinstance(results, (list, tuple)):
        results = [results]
    if not results:
        raise ValueError("nothing to report")
    os.makedirs(out_dir, exist_ok=True)
    payload = [r.as_dict() for r in results]
    all_passed = all(r.passed for r in results)
    json_path = os.path.join(out_dir, f"{name}.json")
    with open(json_path, "w") as fh:
        json.dump({"results": payload, "all_passed": all_passed}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    rows = []
    for r in results:
        rows.extend(_study_rows(r) if isinstance(r, ConvergenceStudy)
                    else _check_rows(r))
    fieldnames = sorted({k for row in rows for k in row})
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return json_path, csv_path, all_passed
