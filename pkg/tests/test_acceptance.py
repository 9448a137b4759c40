"""Acceptance criteria, one test per criterion, at the pinned tolerances.

Each test prints a single ``[acceptance N] PASS|FAIL`` line to the terminal.
"""

import json
import time

import numpy as np
import pytest

from causal_rigidity import causal_chart as cc
from causal_rigidity import moebius as mb
from causal_rigidity import properties as props
from causal_rigidity import rigidity as rg
from causal_rigidity.cli import main
from causal_rigidity.errors import DegenerateConfiguration, NotConal

DIMS = (2, 3, 4, 5)
SEEDS = range(1, 26)
TRIALS = 10_000


def announce(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def reconstruction():
    """Criterion 1 runs: every (dim, seed) pair with word length 1 + (seed - 1) % 8 <= 8."""
    start = time.perf_counter()
    stats = {dim: props.recovery_trials(dim, list(SEEDS)) for dim in DIMS}
    return stats, time.perf_counter() - start


def test_criterion_1_rigidity_reconstruction(reconstruction, capsys):
    stats, elapsed = reconstruction
    fro = max(s.frobenius for s in stats.values())
    interior = max(s.interior for s in stats.values())
    failures = sum(s.failures for s in stats.values())
    trials = sum(s.trials for s in stats.values())
    ok = fro <= 1e-6 and interior <= 1e-6 and failures == 0 and elapsed <= 60.0 and trials == 100
    announce(
        capsys,
        1,
        ok,
        f"{trials} trials, max Frobenius error {fro:.2e}, max interior deviation {interior:.2e}, "
        f"{failures} unverified, {elapsed:.1f} s",
    )


def test_criterion_2_chart_isomorphism(capsys):
    rng = np.random.default_rng(2)
    round_trip = max(props.chart_round_trip(d, TRIALS, rng).value for d in DIMS)
    order = [props.order_isomorphism(d, TRIALS, rng) for d in DIMS]
    disagreements = sum(m.value for m in order)
    ok = round_trip <= 1e-10 and disagreements == 0 and all(m.trials == TRIALS for m in order)
    announce(
        capsys,
        2,
        ok,
        f"round trip {round_trip:.2e} over {TRIALS} points/dim, "
        f"{disagreements} order disagreements over {TRIALS} pairs/dim",
    )


def _boundary_limits_on_image_sphere(dim, count, rng):
    """Limits of a group-element oracle from z toward points of the sphere of B(z).

    They must land on the sphere of the future boundary ball of f(z).
    """
    worst = 0.0
    done = 0
    while done < count:
        m, _ = rg.random_group_element(dim, int(rng.integers(2**31)), int(rng.integers(0, 9)))
        f = rg.oracle_from_matrix(m)
        z = np.concatenate(([rng.uniform(0.2, 2.0)], rng.uniform(-1, 1, dim - 1)))
        try:
            fz = f(z)
        except rg.NotInChartDomain:
            continue
        target = cc.future_boundary_ball(fz)
        for p in mb.sphere_samples(cc.future_boundary_ball(z), 10, rng):
            lim = rg.boundary_limit(f, z, p)
            err = abs(np.linalg.norm(lim - target.center) - target.radius)
            worst = max(worst, err / max(1.0, target.radius))
            done += 1
    return worst, done


def test_criterion_3_future_geometry(capsys):
    rng = np.random.default_rng(3)
    sphere = [_boundary_limits_on_image_sphere(d, 1000, rng) for d in DIMS]
    worst = max(w for w, _ in sphere)
    outside = sum(props.future_boundedness(d, 100_000, rng).value for d in DIMS)
    ok = worst <= 1e-6 and outside == 0 and all(n >= 1000 for _, n in sphere)
    announce(
        capsys,
        3,
        ok,
        f"{min(n for _, n in sphere)}+ boundary limits/dim, max distance to predicted sphere {worst:.2e}; "
        f"{outside} of 10^5 rejection samples/dim outside |z| + 2 z0",
    )


def test_criterion_4_sqrt2_bound(reconstruction, capsys):
    stats, _ = reconstruction
    steps = sum(s.sequence_steps for s in stats.values())
    worst = max(s.sqrt2 for s in stats.values())
    ok = steps >= 10_000 and worst <= 1e-9
    announce(capsys, 4, ok, f"{steps} recorded sequence steps, max excess over sqrt(2) bound {worst:.2e}")


def test_criterion_5_moebius_algebra(capsys):
    rng = np.random.default_rng(5)
    per_dim = TRIALS // len(DIMS)
    results = {}
    for name, tol in (
        ("reflection_involution", 1e-10),
        ("composition_consistency", 1e-8),
        ("lift_inner_product", 1e-10),
        ("unique_continuation", 1e-6),
    ):
        metrics = [props.CHECKS[name].fn(d, per_dim, rng) for d in DIMS]
        results[name] = (max(m.value for m in metrics), sum(m.trials for m in metrics), tol)
    hold_id = max(props.fit_identity_holdout(d, 200, rng).value for d in DIMS)
    hold_j = max(props.fit_inversion_holdout(d, 200, rng).value for d in DIMS)
    ok = all(v <= tol and n >= TRIALS for v, n, tol in results.values()) and hold_id <= 1e-8 and hold_j <= 1e-8
    parts = [f"{k} {v:.1e} ({n} trials)" for k, (v, n, _) in results.items()]
    announce(capsys, 5, ok, "; ".join(parts) + f"; held-out identity {hold_id:.1e}, j- {hold_j:.1e}")


def test_criterion_6_jordan_algebra(capsys):
    rng = np.random.default_rng(6)
    ident = max(props.jordan_identity(d, TRIALS, rng).value for d in DIMS)
    inv = [props.jordan_inverse(d, TRIALS, rng) for d in DIMS]
    inv_worst = max(m.value for m in inv)
    ok = ident <= 1e-10 and inv_worst <= 1e-10 and all(m.trials == TRIALS for m in inv)
    announce(capsys, 6, ok, f"Jordan identity {ident:.2e}, x x^-1 = e residual {inv_worst:.2e} over {TRIALS} trials/dim")


def test_criterion_7_negative_controls(tmp_path, capsys):
    outcomes = {}

    # perturbed matrix fails verification through the CLI
    truth = tmp_path / "truth.json"
    main(["gen-conal", "--dim", "3", "--seed", "7", "--word-length", "5", "-o", str(truth)])
    doc = json.loads(truth.read_text())
    doc["matrix"][0][0] += 1e-2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code = main(["verify", "--map", str(truth), "--candidate", str(bad), "--report", str(tmp_path / "r.json")])
    outcomes["perturbed verify exit 1"] = code == 1

    # non-Moebius map
    rng = np.random.default_rng(7)
    cube = lambda p: np.array([p[0] ** 3, p[1]])  # noqa: E731
    samples = mb.sample_ball_images(cube, [cc.Ball([0.0, 0.0], 1.0)], 16, rng)
    outcomes["x -> (x1^3, x2) not ball preserving"] = not mb.check_ball_preserving(samples)

    # non-conal stub
    stub = rg.ConalOracle.from_chart_map(lambda x: np.concatenate(([3.0 - x[0]], x[1:])), 3, "reversing stub")
    try:
        rg.boundary_limit(stub, [1.0, 0.0, 0.0], [0.3, 0.4])
        outcomes["stub raises NotConal"] = False
    except NotConal:
        outcomes["stub raises NotConal"] = True

    # co-spherical fit input
    t = np.linspace(0, 2 * np.pi, 7)[:-1]
    circle = np.stack([np.cos(t), np.sin(t)], axis=1)
    try:
        mb.fit_from_point_correspondences([(p, p) for p in circle])
        outcomes["co-spherical fit degenerate"] = False
    except DegenerateConfiguration:
        outcomes["co-spherical fit degenerate"] = True

    ok = all(outcomes.values())
    announce(capsys, 7, ok, ", ".join(f"{k}: {'ok' if v else 'MISSED'}" for k, v in outcomes.items()))
