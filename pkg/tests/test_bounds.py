"""Error constants: worked values, edge behavior, and a high-precision
cross-check of every formula on a parameter grid."""

import math

import mpmath
import numpy as np
import pytest

from eulerinc.bounds import (bound_controls_path, bound_convex_path,
                             bound_nonconvex_path, bound_reach_sets,
                             bound_sheet, coco_radius, psi_hull_radius)

mpmath.mp.dps = 50


# --- independent high-precision formulas (mpmath, written separately) --------

def mp_reach_sets(k, l, t, d, dt):
    return (k * mpmath.exp(l * t) * (k * d * (d + 1) + l * t) + 2 * k * d) * dt


def mp_convex_path(k, l, t, dt):
    return k * l * t * mpmath.exp(l * t) * dt


def mp_nonconvex_path(k, l, t, d, dt):
    return k * (mpmath.exp(l * t) * d * (d + 1) + 2 * d
                + l * t * mpmath.exp(l * t)) * dt


def mp_controls_path(k, l, s, t, m, dt):
    elt = mpmath.exp(l * t)
    g1 = (elt * (k * l * t + k * (8 * m - 10)) + 2 * k * (m - 1)) * dt
    g2 = elt * (k * l * (m - 1) * (m - 2)
                + 2 * k * l * ((m - 1) ** 3 - (m - 1)) / mpmath.mpf(3)
                * (1 + l * dt) ** (m - 3)
                + 2 * s * k ** 2 * m * (m - 1) * (2 * m - 1) / (3 * l)) * dt ** 2
    return g1, g2


def mp_coco_radius(k, l, s, m, dt):
    return ((8 * m - 10) * k * l * dt ** 2
            + (2 * k * l ** 2 * ((m - 1) ** 3 - (m - 1)) / mpmath.mpf(3)
               * (1 + l * dt) ** (m - 3)
               + s * k ** 2 * m * (m - 1) * (2 * m - 1) / mpmath.mpf(3)) * dt ** 3)


def mp_psi_hull_radius(k, s, m, dt):
    return s * k ** 2 * m * (m - 1) * (2 * m - 1) / mpmath.mpf(3) * dt ** 3


# --- worked values -------------------------------------------------------------

def test_reach_sets_worked_values():
    assert bound_reach_sets(1, 1, 1, 1, 0.1) == pytest.approx(
        1.0154845485377136, rel=1e-12)
    assert bound_reach_sets(1, 0, 1, 1, 0.1) == pytest.approx(0.4, rel=1e-12)
    # linear in dt
    full = bound_reach_sets(2, 0.5, 1, 2, 0.1)
    assert bound_reach_sets(2, 0.5, 1, 2, 0.05) == pytest.approx(full / 2, rel=1e-15)


def test_convex_path_worked_values():
    assert bound_convex_path(1, 1, 1, 0.1) == pytest.approx(
        0.27182818284590454, rel=1e-12)
    assert bound_convex_path(1, 0, 1, 0.1) == 0.0
    assert bound_convex_path(1, 1, 2, 0.1) > 2 * bound_convex_path(1, 1, 1, 0.1)


def test_nonconvex_path_worked_values():
    assert bound_nonconvex_path(1, 1, 1, 1, 0.1) == pytest.approx(
        1.0154845485377136, rel=1e-12)
    assert bound_nonconvex_path(1, 1, 1, 2, 0.1) == pytest.approx(
        (7 * math.e + 4) * 0.1, rel=1e-12)
    assert bound_nonconvex_path(1, 0, 1, 1, 0.1) == pytest.approx(0.4, rel=1e-12)


def test_nonconvex_decomposition_exact():
    # implemented as convex bound + the window term, so equality is bitwise
    for k, l, t, d, dt in [(1, 1, 1, 1, 0.1), (2, 0.3, 1.5, 2, 0.05),
                           (0.7, 0, 2, 3, 0.2)]:
        extra = k * (math.exp(l * t) * d * (d + 1) + 2 * d) * dt
        assert bound_nonconvex_path(k, l, t, d, dt) == \
            bound_convex_path(k, l, t, dt) + extra


def test_controls_path_worked_values():
    g1, g2 = bound_controls_path(1, 1, 1, 1, 2, 0.1)
    assert g1 == pytest.approx(2.1027972799213317, rel=1e-12)
    assert g2 == pytest.approx(0.10873127313836181, rel=1e-12)
    # M = 2 zeroes the (M-1)^3-(M-1) and (M-1)(M-2) terms
    _, g2_s0 = bound_controls_path(1, 1, 0, 1, 2, 0.1)
    assert g2_s0 == 0.0


def test_controls_path_rejects_lip_zero():
    with pytest.raises(ValueError, match="lip > 0"):
        bound_controls_path(1, 0, 1, 1, 2, 0.1)


def test_coco_radius_worked_values():
    assert coco_radius(1, 1, 1, 2, 0.1) == pytest.approx(0.062, rel=1e-12)
    assert coco_radius(1, 1, 0, 2, 0.1) == pytest.approx(0.06, rel=1e-12)
    assert coco_radius(1, 1, 1, 2, 0.0) == 0.0


def test_psi_hull_radius_worked_values():
    assert psi_hull_radius(1, 1, 2, 0.1) == pytest.approx(0.002, rel=1e-12)
    assert psi_hull_radius(1, 0, 2, 0.1) == 0.0
    assert psi_hull_radius(1, 1, 1, 0.1) == 0.0


# --- high-precision grid cross-check -------------------------------------------

def _grid(seed=1234, count=100):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield {
            "k": float(rng.uniform(0.1, 3.0)),
            "l": float(rng.uniform(0.05, 2.0)),
            "s": float(rng.uniform(0.0, 2.0)),
            "t": float(rng.uniform(0.1, 3.0)),
            "d": int(rng.integers(1, 4)),
            "m": int(rng.integers(2, 6)),
            "dt": float(rng.uniform(1e-3, 0.5)),
        }


def test_formulas_match_high_precision_on_grid():
    for p in _grid():
        k, l, s, t, d, m, dt = (p["k"], p["l"], p["s"], p["t"], p["d"],
                                p["m"], p["dt"])
        assert bound_reach_sets(k, l, t, d, dt) == pytest.approx(
            float(mp_reach_sets(k, l, t, d, dt)), rel=1e-12)
        assert bound_convex_path(k, l, t, dt) == pytest.approx(
            float(mp_convex_path(k, l, t, dt)), rel=1e-12)
        assert bound_nonconvex_path(k, l, t, d, dt) == pytest.approx(
            float(mp_nonconvex_path(k, l, t, d, dt)), rel=1e-12)
        g1, g2 = bound_controls_path(k, l, s, t, m, dt)
        mg1, mg2 = mp_controls_path(k, l, s, t, m, dt)
        assert g1 == pytest.approx(float(mg1), rel=1e-12)
        assert g2 == pytest.approx(float(mg2), rel=1e-12)
        assert coco_radius(k, l, s, m, dt) == pytest.approx(
            float(mp_coco_radius(k, l, s, m, dt)), rel=1e-12)
        assert psi_hull_radius(k, s, m, dt) == pytest.approx(
            float(mp_psi_hull_radius(k, s, m, dt)), rel=1e-12)


def test_monotone_in_speed_horizon_dt():
    base = dict(k=1.0, l=0.8, s=0.5, t=1.0, d=2, m=3, dt=0.1)
    for name, hi in [("k", 1.5), ("t", 1.5), ("dt", 0.15)]:
        lo_p = dict(base)
        hi_p = dict(base, **{name: hi})
        for fn, args in [
            (bound_reach_sets, ("k", "l", "t", "d", "dt")),
            (bound_convex_path, ("k", "l", "t", "dt")),
            (bound_nonconvex_path, ("k", "l", "t", "d", "dt")),
            (coco_radius, ("k", "l", "s", "m", "dt")),
            (psi_hull_radius, ("k", "s", "m", "dt")),
        ]:
            if name not in args:
                continue
            lo_v = fn(*(lo_p[a] for a in args))
            hi_v = fn(*(hi_p[a] for a in args))
            assert hi_v >= lo_v
        lo_g = bound_controls_path(*(lo_p[a] for a in ("k", "l", "s", "t", "m", "dt")))
        hi_g = bound_controls_path(*(hi_p[a] for a in ("k", "l", "s", "t", "m", "dt")))
        assert sum(hi_g) >= sum(lo_g)


def test_bound_sheet_roundtrip():
    sheet = bound_sheet(1.0, 1.0, 1.0, 1.0, 1, 2, 10)
    d = sheet.as_dict()
    assert d["reach_sets"] == pytest.approx(1.0154845485377136, rel=1e-12)
    assert d["coco_radius"] == pytest.approx(0.062, rel=1e-12)
    assert d["inputs"]["dt"] == pytest.approx(0.1)

    lip_free = bound_sheet(1.0, 0.0, 1.0, 1.0, 1, 2, 10)
    assert lip_free.controls_path_dt is None
    assert any("lip" in note for note in lip_free.notes)
    single = bound_sheet(1.0, 1.0, 1.0, 1.0, 1, 1, 10)
    assert single.coco_radius is None
    assert single.psi_hull_radius == 0.0
