"""Randomized invariant checks for every module.

Each check takes ``(dim, trials, rng)`` and returns a :class:`Metric`: the
worst observed error (or number of failures) together with the number of
trials actually evaluated.  Thresholds live in :data:`CHECKS`; the CLI
property suite and the acceptance tests compare against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import causal_chart as cc
from . import core_lorentz as cl
from . import moebius as mb
from . import rigidity as rg

GUARD = 1e-8


@dataclass
class Metric:
    value: float
    trials: int


def _rand_chart(rng, dim, lo=-2.0, hi=2.0):
    return rng.uniform(lo, hi, dim)


def _rand_cone(rng, dim):
    x = rng.uniform(-1.0, 1.0, dim)
    x[0] = np.linalg.norm(x[1:]) * rng.uniform(1.0, 2.0) + rng.uniform(1e-3, 1.0)
    return x


# -------------------------------------------------------------------- algebra


def jordan_commutativity(dim, trials, rng) -> Metric:
    worst = 0.0
    for _ in range(trials):
        x, y = _rand_chart(rng, dim), _rand_chart(rng, dim)
        worst = max(worst, float(np.max(np.abs(cl.jordan_mul(x, y) - cl.jordan_mul(y, x)))))
    return Metric(worst, trials)


def jordan_identity(dim, trials, rng) -> Metric:
    """``x^2 (x y) = x (x^2 y)`` residual."""
    worst = 0.0
    for _ in range(trials):
        x, y = _rand_chart(rng, dim), _rand_chart(rng, dim)
        x2 = cl.jordan_mul(x, x)
        lhs = cl.jordan_mul(x2, cl.jordan_mul(x, y))
        rhs = cl.jordan_mul(x, cl.jordan_mul(x2, y))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return Metric(worst, trials)


def jordan_neutral(dim, trials, rng) -> Metric:
    e = cl.neutral(dim)
    worst = 0.0
    for _ in range(trials):
        x = _rand_chart(rng, dim)
        worst = max(worst, float(np.max(np.abs(cl.jordan_mul(e, x) - x))))
    return Metric(worst, trials)


def jordan_inverse(dim, trials, rng) -> Metric:
    e = cl.neutral(dim)
    worst, used = 0.0, 0
    while used < trials:
        x = _rand_chart(rng, dim)
        if abs(cl.lorentz_form(x)) < 1e-6:
            continue
        used += 1
        worst = max(worst, float(np.max(np.abs(cl.jordan_mul(x, cl.jordan_inv(x)) - e))))
    return Metric(worst, used)


def inverse_form_product(dim, trials, rng) -> Metric:
    """Relative error of ``Delta(x^-1) Delta(x) = 1``."""
    worst, used = 0.0, 0
    while used < trials:
        x = _rand_chart(rng, dim)
        d = cl.lorentz_form(x)
        if abs(d) < 1e-6:
            continue
        used += 1
        worst = max(worst, abs(cl.lorentz_form(cl.jordan_inv(x)) * d - 1.0))
    return Metric(worst, used)


def cone_convexity(dim, trials, rng) -> Metric:
    bad = 0
    for _ in range(trials):
        x, y = _rand_cone(rng, dim), _rand_cone(rng, dim)
        t = rng.uniform()
        bad += not cl.in_cone(t * x + (1 - t) * y)
    return Metric(bad, trials)


def cone_invariance(dim, trials, rng) -> Metric:
    bad = 0
    for _ in range(trials):
        g = cl.random_cone_automorphism(dim, rng)
        bad += not cl.in_cone(g @ _rand_cone(rng, dim))
    return Metric(bad, trials)


# ---------------------------------------------------------------------- chart


def chart_round_trip(dim, trials, rng) -> Metric:
    worst = 0.0
    for _ in range(trials):
        x = _rand_chart(rng, dim)
        x[0] = rng.uniform(1e-3, 10.0)
        back = cc.hyperboloid_to_chart(cc.chart_to_hyperboloid(x))
        worst = max(worst, float(np.max(np.abs(back - x))))
    return Metric(worst, trials)


def hyperboloid_constraint(dim, trials, rng) -> Metric:
    worst = 0.0
    for _ in range(trials):
        x = _rand_chart(rng, dim)
        x[0] = rng.uniform(1e-2, 10.0)
        y = cc.chart_to_hyperboloid(x)
        worst = max(worst, abs(cc.minkowski(y, y) - 1.0) / max(1.0, float(np.dot(y, y))))
    return Metric(worst, trials)


def order_isomorphism(dim, trials, rng) -> Metric:
    """Disagreements between the chart and hyperboloid orders outside the guard band.

    Pairs mix points in the future of ``z`` with unrelated points so both
    answers occur often.
    """
    bad, used = 0, 0
    while used < trials:
        z = _rand_chart(rng, dim)
        z[0] = rng.uniform(0.1, 3.0)
        w = _rand_chart(rng, dim, -1.0, 1.0) * z[0]
        w[0] = abs(w[0])
        x = z - w
        if x[0] <= 0:
            continue
        d = z - x
        yz, yx = cc.chart_to_hyperboloid(z), cc.chart_to_hyperboloid(x)
        gaps = (cl.lorentz_form(d), d[0], cc.minkowski(yx, yz) - 1.0, yx[0] - yz[0])
        if min(abs(g) for g in gaps) < GUARD:
            continue
        used += 1
        bad += cc.future_contains(z, x) != cc.order_geq_hyperboloid(yx, yz)
    return Metric(bad, used)


def future_boundedness(dim, trials, rng) -> Metric:
    """Points of the future of ``z`` beyond ``|z| + 2 z0`` (rejection sampling, vectorized)."""
    bad = 0
    per = 1000
    done = 0
    while done < trials:
        count = min(per, trials - done)
        z = _rand_chart(rng, dim)
        z[0] = rng.uniform(0.1, 3.0)
        box = z + rng.uniform(-3.0, 3.0, (count, dim)) * z[0]
        w = z - box
        inside = (w[:, 0] ** 2 - np.sum(w[:, 1:] ** 2, axis=1) >= 0) & (w[:, 0] >= 0) & (box[:, 0] > 0)
        far = np.linalg.norm(box, axis=1) > np.linalg.norm(z) + 2 * z[0]
        bad += int(np.count_nonzero(inside & far))
        done += count
    return Metric(bad, trials)


def boundary_segment(dim, trials, rng) -> Metric:
    """Segments from ``z`` to points on its boundary sphere stay in its future."""
    bad = 0
    for _ in range(trials):
        z = _rand_chart(rng, dim)
        z[0] = rng.uniform(0.1, 3.0)
        ball = cc.future_boundary_ball(z)
        p = mb.sphere_samples(ball, 1, rng)[0]
        x = cc.segment_point(z, p, rng.uniform(0.0, 1.0))
        bad += not cc.future_contains(z, x, margin=GUARD)
    return Metric(bad, trials)


def order_transitivity(dim, trials, rng) -> Metric:
    bad = 0
    for _ in range(trials):
        z = _rand_chart(rng, dim)
        z[0] = rng.uniform(0.5, 3.0)
        w1 = _rand_cone(rng, dim)
        w1 *= rng.uniform(0.05, 0.45) * z[0] / w1[0]
        x = z - w1
        w2 = _rand_cone(rng, dim)
        w2 *= rng.uniform(0.05, 0.9) * x[0] / w2[0]
        w = x - w2
        if cc.future_contains(z, x) and cc.future_contains(x, w):
            bad += not cc.future_contains(z, w)
        else:
            bad += 1
    return Metric(bad, trials)


# -------------------------------------------------------------------- moebius


def _rand_boundary(rng, k, scale=2.0):
    return rng.uniform(-scale, scale, k)


def _rand_sphere(rng, k):
    if rng.uniform() < 0.5:
        return mb.Hypersphere(_rand_boundary(rng, k), rng.uniform(0.2, 3.0))
    return mb.Hyperplane(_rand_boundary(rng, k), _rand_boundary(rng, k))


def limit_identity(dim, trials, rng, eps: float = 1e-6) -> Metric:
    """Normalized hyperboloid image of ``(eps, p)`` against the normalized lift of ``p``."""
    worst = 0.0
    for _ in range(trials):
        p = _rand_boundary(rng, dim - 1)
        y = cc.chart_to_hyperboloid(np.concatenate(([eps], p)))
        lift = mb.lift_point(p)
        worst = max(worst, float(np.max(np.abs(y / np.linalg.norm(y) - lift / np.linalg.norm(lift)))))
    return Metric(worst, trials)


def lift_inner_product(dim, trials, rng) -> Metric:
    worst = 0.0
    for _ in range(trials):
        p, q = _rand_boundary(rng, dim - 1), _rand_boundary(rng, dim - 1)
        val = cc.minkowski(mb.lift_point(p), mb.lift_point(q))
        worst = max(worst, abs(val + float(np.dot(p - q, p - q)) / 2.0))
    return Metric(worst, trials)


def reflection_involution(dim, trials, rng) -> Metric:
    """``R R = I``, relative to the squared entry size of ``R``."""
    worst = 0.0
    eye = np.eye(dim + 1)
    for _ in range(trials):
        r = mb.reflection_matrix(_rand_sphere(rng, dim - 1))
        # entries grow like 1/radius^2, so rounding in r @ r scales with |r|^2
        scale = max(1.0, float(np.max(np.abs(r))) ** 2)
        worst = max(worst, float(np.max(np.abs(r @ r - eye))) / scale)
    return Metric(worst, trials)


def reflection_matches_formula(dim, trials, rng) -> Metric:
    """Matrix reflection against the pointwise inversion formula."""
    worst = 0.0
    for _ in range(trials):
        s = _rand_sphere(rng, dim - 1)
        p = _rand_boundary(rng, dim - 1)
        a = mb.apply(mb.reflection_matrix(s), p)
        b = mb.reflect_sphere(s, p)
        worst = max(worst, mb.chordal_distance(a, b))
    return Metric(worst, trials)


def _rand_moebius(rng, dim):
    return rg.random_group_element(dim, int(rng.integers(2**31)), int(rng.integers(1, 6)))[0]


def composition_consistency(dim, trials, rng) -> Metric:
    worst = 0.0
    for _ in range(trials):
        m1, m2 = _rand_moebius(rng, dim), _rand_moebius(rng, dim)
        p = _rand_boundary(rng, dim - 1)
        a = mb.apply(mb.compose(m1, m2), p)
        b = mb.apply(m1, mb.apply(m2, p))
        # chordal distance stays bounded near poles
        worst = max(worst, mb.chordal_distance(a, b))
    return Metric(worst, trials)


def inverse_consistency(dim, trials, rng) -> Metric:
    worst = 0.0
    eye = np.eye(dim + 1)
    for _ in range(trials):
        m = _rand_moebius(rng, dim)
        prod = mb.compose(m, mb.invert(m))
        worst = max(worst, float(np.max(np.abs(prod - eye))))
    return Metric(worst, trials)


def unique_continuation(dim, trials, rng, n_points: int | None = None) -> Metric:
    """Fits from two disjoint, pole-free balls of the same map agree.

    Returns the largest relative Frobenius gap between the two fitted matrices.
    """
    k = dim - 1
    n_points = n_points or k + 5
    worst, used = 0.0, 0
    while used < trials:
        m = _rand_moebius(rng, dim)
        pl = mb.pole(m)
        balls = []
        for _ in range(2):
            c = _rand_boundary(rng, k, 3.0)
            balls.append(cc.Ball(c, rng.uniform(0.2, 0.8)))
        b1, b2 = balls
        if np.linalg.norm(b1.center - b2.center) <= b1.radius + b2.radius:
            continue
        if pl is not mb.INF and (b1.contains(pl, 0.1) or b2.contains(pl, 0.1)):
            continue
        fits = []
        for b in balls:
            d = rng.standard_normal((n_points, k))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            pts = b.center + b.radius * rng.uniform(0.3, 1.0, (n_points, 1)) * d
            fits.append(mb.fit_moebius([(p, mb.apply(m, p)) for p in pts]).matrix)
        used += 1
        gap = np.linalg.norm(fits[0] - fits[1]) / max(1.0, np.linalg.norm(fits[1]))
        worst = max(worst, float(gap))
    return Metric(worst, used)


def similarity_detection(dim, trials, rng) -> Metric:
    """Mismatches between "fixes infinity" and "preserves distance ratios"."""
    k = dim - 1
    bad = 0
    for i in range(trials):
        if i % 2 == 0:
            m = mb.make_similarity(rng.uniform(0.3, 3.0), cl.haar_orthogonal(k, rng), _rand_boundary(rng, k))
        else:
            m = _rand_moebius(rng, dim)
        pts = [_rand_boundary(rng, k) for _ in range(3)]
        imgs = [mb.apply(m, p) for p in pts]
        if any(q is mb.INF for q in imgs):
            preserves = False
        else:
            r_src = np.linalg.norm(pts[0] - pts[1]) / np.linalg.norm(pts[0] - pts[2])
            r_img = np.linalg.norm(imgs[0] - imgs[1]) / np.linalg.norm(imgs[0] - imgs[2])
            preserves = abs(r_img / r_src - 1.0) <= 1e-8
        bad += mb.fixes_infinity(m) != preserves
    return Metric(bad, trials)


def tangency_witnesses(dim, trials, rng) -> Metric:
    """Failures of the interior/boundary tangency characterization."""
    k = dim - 1
    bad = 0
    for _ in range(trials):
        b = cc.Ball(_rand_boundary(rng, k), rng.uniform(0.2, 3.0))
        d = rng.standard_normal(k)
        d /= np.linalg.norm(d)
        x = b.center + b.radius * rng.uniform(0.0, 0.95) * d
        b1, b2 = mb.interior_witness_balls(b, x)
        touch = mb.single_contact_point(b1, b2, 1e-9)
        ok = mb.ball_inside(b1, b, 1e-9) and mb.ball_inside(b2, b, 1e-9)
        ok = ok and touch is not None and np.linalg.norm(touch - x) <= 1e-9 * max(1.0, b.radius)
        xb = b.center + b.radius * d
        b3 = mb.boundary_witness_ball(b, xb, rng.uniform(0.1, 2.0))
        touch3 = mb.single_contact_point(b, b3, 1e-9)
        ok = ok and touch3 is not None and np.linalg.norm(touch3 - xb) <= 1e-9 * max(1.0, b.radius)
        bad += not ok
    return Metric(bad, trials)


def sphere_image_duality(dim, trials, rng) -> Metric:
    """Boundary samples of a ball land on the sphere of its predicted image."""
    k = dim - 1
    worst, used = 0.0, 0
    while used < trials:
        m = _rand_moebius(rng, dim)
        b = cc.Ball(_rand_boundary(rng, k), rng.uniform(0.2, 2.0))
        try:
            img = mb.image_of_ball(m, b)
        except mb.ImageNotBall:
            continue
        if img.radius > 1e3:
            continue
        used += 1
        for p in mb.sphere_samples(b, 4, rng):
            q = mb.apply(m, p)
            err = abs(np.linalg.norm(q - img.center) - img.radius) / max(1.0, img.radius)
            worst = max(worst, float(err))
    return Metric(worst, used)


def ball_image_interior(dim, trials, rng) -> Metric:
    """The center of a ball maps into the interior of its predicted image."""
    k = dim - 1
    bad, used = 0, 0
    while used < trials:
        m = _rand_moebius(rng, dim)
        b = cc.Ball(_rand_boundary(rng, k), rng.uniform(0.2, 2.0))
        try:
            img = mb.image_of_ball(m, b)
        except mb.ImageNotBall:
            continue
        used += 1
        bad += not img.contains(mb.apply(m, b.center))
    return Metric(bad, used)


def fit_identity_holdout(dim, trials, rng) -> Metric:
    k = dim - 1
    worst = 0.0
    for _ in range(trials):
        pts = rng.uniform(-2, 2, (dim + 3, k))
        m = mb.fit_from_point_correspondences([(p, p) for p in pts])
        for q in rng.uniform(-2, 2, (5, k)):
            worst = max(worst, float(np.linalg.norm(mb.apply(m, q) - q)))
    return Metric(worst, trials)


def fit_inversion_holdout(dim, trials, rng) -> Metric:
    k = dim - 1
    worst = 0.0
    for _ in range(trials):
        pts = rng.uniform(0.5, 3.0, (dim + 3, k)) * rng.choice([-1, 1], (dim + 3, k))
        m = mb.fit_from_point_correspondences([(p, mb.j_minus(p)) for p in pts])
        for q in rng.uniform(0.5, 3.0, (5, k)):
            worst = max(worst, float(np.linalg.norm(mb.apply(m, q) - mb.j_minus(q))))
    return Metric(worst, trials)


# ------------------------------------------------------------------- rigidity


def generator_actions(dim, trials, rng) -> Metric:
    """Generator matrices conjugated through the chart against the chart formulas."""
    worst = 0.0
    for _ in range(trials):
        g = rg._random_generator(dim, rng)
        m = rg.generator_matrix(g, dim)
        x = _rand_chart(rng, dim)
        x[0] = rng.uniform(0.1, 3.0)
        if isinstance(g, rg.Invert) and cl.lorentz_form(x) <= 1e-3:
            x[1:] *= 0.5 * x[0] / max(np.linalg.norm(x[1:]), 1e-12)
        y = m @ cc.chart_to_hyperboloid(x)
        got = cc.hyperboloid_to_chart(y)
        want = rg.chart_action(g, x)
        worst = max(worst, float(np.linalg.norm(got - want) / max(1.0, np.linalg.norm(want))))
    return Metric(worst, trials)


def conal_closure(dim, trials, rng) -> Metric:
    """Order violations of composed group-element oracles on sampled pairs."""
    bad = 0
    for _ in range(trials):
        m = _rand_moebius(rng, dim) @ _rand_moebius(rng, dim)
        f = rg.oracle_from_matrix(m)
        try:
            f.spot_check(rng, trials=20)
        except rg.NotConal:
            bad += 1
    return Metric(bad, trials)


@dataclass
class RecoveryStats:
    frobenius: float
    interior: float
    ball: float
    sqrt2: float
    sequence_steps: int
    trials: int
    failures: int


def recovery_trials(dim, seeds, perturb: float = 0.0) -> RecoveryStats:
    """Run the full pipeline for ``random_group_element(dim, seed, 1 + (seed - 1) % 8)``."""
    fro = interior = ball = 0.0
    sqrt2 = -math.inf
    steps = failures = 0
    for seed in seeds:
        truth, _ = rg.random_group_element(dim, seed, 1 + (seed - 1) % 8)
        f = rg.oracle_from_matrix(truth)
        rec = rg.recover_boundary(f, seed=seed)
        ext = rg.extend_to_causal(rec.matrix)
        if perturb:
            ext = ext.copy()
            ext[0, 0] += perturb
        report = rg.verify_extension(
            f, ext, 100, seed=seed + 7919, traces=rec.traces, base=rec.base, conjugator=rec.conjugator
        )
        failures += not report.verified
        fro = max(fro, min(np.linalg.norm(ext - truth), np.linalg.norm(ext + truth)))
        interior = max(interior, report.max_interior_deviation)
        ball = max(ball, report.max_ball_deviation)
        sqrt2 = max(sqrt2, max(t.sqrt2_violation() for t in rec.traces))
        steps += sum(t.steps for t in rec.traces)
    return RecoveryStats(fro, interior, ball, sqrt2, steps, len(seeds), failures)


def recovery_injectivity(dim, trials, rng) -> Metric:
    """Smallest gap between recovered matrices of distinct group elements (negated for ``<=``)."""
    smallest = math.inf
    used = 0
    while used < trials:
        s1, s2 = (int(s) for s in rng.integers(1, 2**31, 2))
        m1, _ = rg.random_group_element(dim, s1, 3)
        m2, _ = rg.random_group_element(dim, s2, 3)
        if np.linalg.norm(m1 - m2) < 1e-3:
            continue
        used += 1
        r1 = rg.recover_mobius(rg.oracle_from_matrix(m1), cross_check=False)
        r2 = rg.recover_mobius(rg.oracle_from_matrix(m2), cross_check=False)
        smallest = min(smallest, float(np.linalg.norm(r1 - r2)))
    return Metric(smallest, used)


@dataclass(frozen=True)
class Check:
    fn: Callable
    threshold: float
    # "max": metric must be <= threshold; "min": metric must be >= threshold
    sense: str = "max"
    cost: int = 1


CHECKS: dict[str, Check] = {
    "jordan_commutativity": Check(jordan_commutativity, 0.0),
    "jordan_identity": Check(jordan_identity, 1e-10),
    "jordan_neutral": Check(jordan_neutral, 0.0),
    "jordan_inverse": Check(jordan_inverse, 1e-10),
    "inverse_form_product": Check(inverse_form_product, 1e-10),
    "cone_convexity": Check(cone_convexity, 0),
    "cone_invariance": Check(cone_invariance, 0),
    "chart_round_trip": Check(chart_round_trip, 1e-10),
    "hyperboloid_constraint": Check(hyperboloid_constraint, 1e-9),
    "order_isomorphism": Check(order_isomorphism, 0),
    "future_boundedness": Check(future_boundedness, 0),
    "boundary_segment": Check(boundary_segment, 0),
    "order_transitivity": Check(order_transitivity, 0),
    "limit_identity": Check(limit_identity, 1e-5),
    "lift_inner_product": Check(lift_inner_product, 1e-10),
    "reflection_involution": Check(reflection_involution, 1e-10),
    "reflection_matches_formula": Check(reflection_matches_formula, 1e-10),
    "composition_consistency": Check(composition_consistency, 1e-8),
    "inverse_consistency": Check(inverse_consistency, 1e-10, cost=1),
    "unique_continuation": Check(unique_continuation, 1e-6, cost=10),
    "similarity_detection": Check(similarity_detection, 0),
    "tangency_witnesses": Check(tangency_witnesses, 0),
    "sphere_image_duality": Check(sphere_image_duality, 1e-9),
    "ball_image_interior": Check(ball_image_interior, 0),
    "fit_identity_holdout": Check(fit_identity_holdout, 1e-8, cost=10),
    "fit_inversion_holdout": Check(fit_inversion_holdout, 1e-8, cost=10),
    "generator_actions": Check(generator_actions, 1e-9),
    "conal_closure": Check(conal_closure, 0, cost=20),
    "recovery_injectivity": Check(recovery_injectivity, 1e-4, sense="min", cost=2000),
}


def passes(check: Check, value: float) -> bool:
    if check.sense == "min":
        return bool(value >= check.threshold)
    return bool(value <= check.threshold)


def run_suite(dim: int, trials: int, seed: int, perturb: float = 0.0) -> dict:
    """Run every check plus a recovery batch; returns a JSON-ready report."""
    rng = np.random.default_rng(seed)
    results = {}
    for name, check in CHECKS.items():
        n = max(1, trials // check.cost)
        metric = check.fn(dim, n, rng)
        results[name] = {
            "value": float(metric.value),
            "threshold": check.threshold,
            "sense": check.sense,
            "trials": metric.trials,
            "passed": passes(check, metric.value),
        }
    n_rec = max(1, trials // 200)
    stats = recovery_trials(dim, list(range(seed + 1, seed + 1 + n_rec)), perturb)
    recovery_checks = {
        "recovery_exactness": (stats.frobenius, 1e-6),
        "recovery_interior": (stats.interior, 1e-6),
        "ball_onto_ball": (stats.ball, 1e-6),
        "sqrt2_bound": (stats.sqrt2, 1e-9),
        "recovery_verified": (stats.failures, 0),
    }
    for name, (value, thr) in recovery_checks.items():
        results[name] = {
            "value": float(value),
            "threshold": thr,
            "sense": "max",
            "trials": stats.trials,
            "passed": bool(value <= thr),
        }
    return {
        "dim": dim,
        "trials": trials,
        "seed": seed,
        "passed": all(r["passed"] for r in results.values()),
        "checks": results,
    }
