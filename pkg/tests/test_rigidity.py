import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from causal_rigidity import moebius as mb
from causal_rigidity import rigidity as rg
from causal_rigidity.causal_chart import (
    Ball,
    chart_to_hyperboloid,
    future_boundary_ball,
    hyperboloid_to_chart,
)
from causal_rigidity.core_lorentz import haar_orthogonal, lorentz_form
from causal_rigidity.errors import (
    InvalidInput,
    NoAdmissibleConjugator,
    NotConal,
    NotInChartDomain,
    ToleranceNotMet,
)

E3 = np.array([1.0, 0.0, 0.0])


def sign_free_gap(a, b):
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b))


def sample_generators(dim, rng):
    k = dim - 1
    return [
        rg.TranslateVminus(rng.uniform(-1, 1, k)),
        rg.Dilate(float(rng.uniform(0.5, 2.0))),
        rg.Rotate(haar_orthogonal(k, rng)),
        rg.Invert(),
    ]


# ------------------------------------------------------------------ generators


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_generator_matrices_match_chart_formulas(dim, rng):
    for g in sample_generators(dim, rng):
        m = rg.generator_matrix(g, dim)
        done = 0
        while done < 100:
            x = np.concatenate(([rng.uniform(0.05, 3.0)], rng.uniform(-2, 2, dim - 1)))
            if isinstance(g, rg.Invert) and abs(lorentz_form(x)) < 1e-3:
                continue
            got = hyperboloid_to_chart(m @ chart_to_hyperboloid(x))
            want = rg.chart_action(g, x)
            assert np.linalg.norm(got - want) <= 1e-9 * max(1.0, np.linalg.norm(want)), g
            done += 1


def test_generator_examples(rng):
    np.testing.assert_allclose(rg.generator_matrix(rg.Dilate(1.0), 3), np.eye(4), atol=1e-15)
    a = haar_orthogonal(2, rng)
    m = rg.generator_matrix(rg.Rotate(a), 3)
    y = np.array([0.3, 1.0, -2.0, 0.7])
    out = m @ y
    assert out[0] == y[0] and out[-1] == y[-1]
    np.testing.assert_allclose(out[1:-1], a @ y[1:-1])


def test_invert_anchor():
    y = chart_to_hyperboloid([2, 1, 0])
    np.testing.assert_allclose(y, [-0.5, 0.5, 0, 1], atol=1e-15)
    out = rg.generator_matrix(rg.Invert(), 3) @ y
    np.testing.assert_allclose(out, [0.5, -0.5, 0, 1], atol=1e-15)
    np.testing.assert_allclose(hyperboloid_to_chart(out), [2 / 3, -1 / 3, 0], atol=1e-15)


def test_raw_invert_reverses_time_orientation():
    m = rg.generator_matrix(rg.Invert(), 3)
    assert not mb.is_time_oriented(m)
    assert mb.is_time_oriented(rg.word_matrix([rg.Invert()], 3))


def test_generator_validation():
    with pytest.raises(InvalidInput):
        rg.Dilate(0.0)
    with pytest.raises(InvalidInput):
        rg.Rotate([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(InvalidInput):
        rg.generator_matrix(rg.TranslateVminus([1.0, 2.0, 3.0]), 3)
    with pytest.raises(InvalidInput):
        rg.generator_from_dict({"type": "shear"})


def test_generator_dict_round_trip(rng):
    for g in sample_generators(4, rng):
        assert rg.generator_from_dict(rg.generator_to_dict(g)) == g


def test_random_group_element_contract():
    m, word = rg.random_group_element(3, 1, 0)
    np.testing.assert_array_equal(m, np.eye(4))
    assert word == []
    a, wa = rg.random_group_element(4, 9, 7)
    b, wb = rg.random_group_element(4, 9, 7)
    np.testing.assert_array_equal(a, b)
    assert wa == wb
    for seed in range(1, 40):
        m, _ = rg.random_group_element(2 + seed % 4, seed, 8)
        mb.check_causal_matrix(m)
    with pytest.raises(InvalidInput):
        rg.random_group_element(1, 0, 2)
    with pytest.raises(InvalidInput):
        rg.random_group_element(3, 0, -1)


# --------------------------------------------------------------------- oracles


def test_oracle_examples():
    x = np.array([0.7, 0.2, -0.4])
    np.testing.assert_allclose(rg.oracle_from_matrix(np.eye(4))(x), x, atol=1e-15)
    dil = rg.oracle_from_matrix(rg.word_matrix([rg.Dilate(2.0)], 3))
    np.testing.assert_allclose(dil(E3), [2, 0, 0], atol=1e-14)
    tr = rg.oracle_from_matrix(rg.word_matrix([rg.TranslateVminus([1.0, 0.0])], 3))
    np.testing.assert_allclose(tr(E3), [1, 1, 0], atol=1e-14)


def test_oracle_leaving_chart_raises():
    # the oriented inversion acts as x -> -x / Delta(x), which sends the cone out of the chart
    f = rg.oracle_from_matrix(rg.word_matrix([rg.Invert()], 3))
    with pytest.raises(NotInChartDomain):
        f(E3)
    x = np.array([0.5, 1.0, 0.0])
    np.testing.assert_allclose(f(x), -x / lorentz_form(x), atol=1e-14)


def phi_formula(x):
    """Chart-to-hyperboloid formula without the domain check."""
    d = lorentz_form(x)
    return np.concatenate(([(1 - d) / (2 * x[0])], x[1:] / x[0], [(1 + d) / (2 * x[0])]))


def test_word_oracles_follow_chart_actions(rng):
    word = [rg.TranslateVminus([0.3, -0.2]), rg.Dilate(1.5), rg.Invert(), rg.Rotate(haar_orthogonal(2, rng))]
    f = rg.oracle_from_matrix(rg.word_matrix(word, 3))
    for _ in range(50):
        x = np.concatenate(([rng.uniform(0.5, 2)], rng.uniform(-0.3, 0.3, 2)))
        want = x
        for g in word:
            want = rg.chart_action(g, want)
        # orienting may flip the overall sign of the lift
        assert sign_free_gap(f.lift(x), phi_formula(want)) <= 1e-12 * np.linalg.norm(f.lift(x))


def test_order_reversing_stub_is_caught(rng):
    stub = rg.ConalOracle.from_chart_map(lambda x: np.concatenate(([3.0 - x[0]], x[1:])), 3, "stub")
    with pytest.raises(NotConal):
        stub.spot_check(rng, trials=50)
    with pytest.raises(NotConal):
        rg.boundary_limit(stub, E3, [0.3, 0.4])


def test_conal_closure(rng):
    for seed in range(10):
        m1, _ = rg.random_group_element(3, seed, 4)
        m2, _ = rg.random_group_element(3, seed + 50, 4)
        rg.oracle_from_matrix(m1 @ m2).spot_check(rng, trials=100)


# ------------------------------------------------------------- boundary limits


def test_boundary_limit_examples():
    p = np.array([0.3, 0.4])
    np.testing.assert_allclose(rg.boundary_limit(rg.oracle_from_matrix(np.eye(4)), E3, p), p, atol=1e-9)
    dil = rg.oracle_from_matrix(rg.word_matrix([rg.Dilate(2.0)], 3))
    np.testing.assert_allclose(rg.boundary_limit(dil, E3, p), [0.6, 0.8], atol=1e-9)


def test_boundary_limit_errors():
    f = rg.oracle_from_matrix(np.eye(4))
    with pytest.raises(InvalidInput):
        rg.boundary_limit(f, E3, [1.5, 0.0])
    with pytest.raises(ToleranceNotMet):
        rg.boundary_limit(f, E3, [0.3, 0.4], tol=1e-9, max_iter=5)


@given(st.integers(1, 10_000), st.floats(0.0, 0.999), st.floats(0, 2 * np.pi))
def test_sqrt2_bound(seed, frac, theta):
    m, _ = rg.random_group_element(3, seed, 4)
    f = rg.oracle_from_matrix(m)
    phi = rg.find_conjugator(f.lift(E3))
    g = f.conjugated(phi)
    p = frac * np.array([np.cos(theta), np.sin(theta)])
    trace = rg.trace_boundary_limit(g, E3, p)
    assert trace.sqrt2_violation() <= 1e-9


def test_sample_boundary_correspondences():
    ident = rg.oracle_from_matrix(np.eye(4))
    for p, q in rg.sample_boundary_correspondences(ident, E3, 10):
        np.testing.assert_allclose(q, p, atol=1e-9)
    with pytest.raises(InvalidInput):
        rg.sample_boundary_correspondences(ident, E3, 4)
    dil = rg.oracle_from_matrix(rg.word_matrix([rg.Dilate(2.0)], 3))
    for p, q in rg.sample_boundary_correspondences(dil, E3, 10):
        np.testing.assert_allclose(q, 2 * p, atol=1e-8)


def test_sample_points_lie_on_radius_levels():
    z = np.array([2.0, 1.0, -1.0, 0.5])
    pts = rg.sample_boundary_points(z, 9, seed=3)
    radii = np.linalg.norm(pts - z[1:], axis=1) / z[0]
    np.testing.assert_allclose(sorted(set(np.round(radii, 12))), [0.3, 0.6, 0.9])


def test_global_boundary_apply():
    p = np.array([0.2, -0.1])
    ident = rg.oracle_from_matrix(np.eye(4))
    got = rg.global_boundary_apply(ident, p, phi=np.eye(4), z=E3)
    np.testing.assert_allclose(got, rg.boundary_limit(ident, E3, p), atol=1e-15)
    for _, phi in rg.conjugator_candidates(ident.lift(E3)):
        try:
            got = rg.global_boundary_apply(ident, p, phi=phi, z=E3)
        except NoAdmissibleConjugator:
            continue
        np.testing.assert_allclose(got, p, atol=1e-8)


def test_global_boundary_apply_conjugator_consistency():
    m, _ = rg.random_group_element(3, 21, 6)
    f = rg.oracle_from_matrix(m)
    p = np.array([0.1, 0.3])
    vals = []
    for _, phi in rg.conjugator_candidates(f.lift(E3)):
        try:
            vals.append(rg.global_boundary_apply(f, p, phi=phi, z=E3))
        except (NoAdmissibleConjugator, ToleranceNotMet):
            continue
    assert len(vals) >= 2
    truth = mb.apply(m, p)
    for v in vals:
        assert mb.boundary_distance(v, truth) <= 2e-6


def test_no_admissible_conjugator():
    ident = rg.oracle_from_matrix(np.eye(4))
    # -I sends every chart point to y0 + yn < 0
    with pytest.raises(NoAdmissibleConjugator):
        rg.global_boundary_apply(ident, [0.1, 0.1], phi=-np.eye(4), z=E3)


# --------------------------------------------------------------------- recovery


def test_recover_identity_and_dilation():
    np.testing.assert_allclose(rg.recover_mobius(rg.oracle_from_matrix(np.eye(4))), np.eye(4), atol=1e-8)
    dil = rg.word_matrix([rg.Dilate(2.0)], 3)
    got = rg.recover_mobius(rg.oracle_from_matrix(dil))
    np.testing.assert_allclose(got, mb.make_similarity(2.0, np.eye(2), [0, 0]), atol=1e-7)


def test_recover_seed7_word5(rng):
    m, _ = rg.random_group_element(3, 7, 5)
    got = rg.recover_mobius(rg.oracle_from_matrix(m))
    for p in rng.uniform(-2, 2, (50, 2)):
        assert mb.chordal_distance(mb.apply(got, p), mb.apply(m, p)) <= 1e-6


def test_recover_when_base_image_leaves_chart():
    for seed in range(1, 200):
        m, _ = rg.random_group_element(3, seed, 6)
        y = m @ chart_to_hyperboloid(E3)
        if y[0] + y[-1] < 0:
            break
    else:
        pytest.skip("no seed sends e out of the chart")
    rec = rg.recover_boundary(rg.oracle_from_matrix(m))
    assert sign_free_gap(rg.extend_to_causal(rec.matrix), m) <= 1e-6


def test_extend_to_causal_examples():
    np.testing.assert_array_equal(rg.extend_to_causal(np.eye(4)), np.eye(4))
    dil = rg.word_matrix([rg.Dilate(2.0)], 3)
    ext = rg.extend_to_causal(rg.recover_mobius(rg.oracle_from_matrix(dil)))
    np.testing.assert_allclose(ext @ chart_to_hyperboloid(E3), chart_to_hyperboloid([2, 0, 0]), atol=1e-7)
    with pytest.raises(InvalidInput):
        rg.extend_to_causal(np.diag([1.0, 2.0, 1.0, 1.0]))


def test_verify_extension_examples():
    ident = rg.oracle_from_matrix(np.eye(4))
    rep = rg.verify_extension(ident, np.eye(4))
    assert rep.verified
    assert rep.max_interior_deviation == 0.0 and rep.max_ball_deviation <= 1e-15
    m, _ = rg.random_group_element(4, 3, 6)
    f = rg.oracle_from_matrix(m)
    rep = rg.verify_extension(f, m)
    assert rep.verified and rep.max_interior_deviation <= 1e-9 and rep.max_ball_deviation <= 1e-9
    bad = m.copy()
    bad[0, 0] += 1e-2
    assert rg.verify_extension(f, bad).status == "failed"


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_pipeline_recovers_truth(dim):
    for seed in (1, 2, 3):
        m, _ = rg.random_group_element(dim, seed, 1 + (seed - 1) % 8)
        report, rec = rg.run_pipeline(rg.oracle_from_matrix(m), seed=seed)
        assert report.verified
        assert sign_free_gap(report.recovered, m) <= 1e-6
        assert report.sqrt2_bound_max_violation <= 1e-9
        assert rec.cross_check_error <= 1e-6
        d = report.to_dict()
        assert d["status"] == "verified" and d["samples"] == rec.samples_used


def test_ball_onto_ball(rng):
    m, _ = rg.random_group_element(3, 12, 5)
    f = rg.oracle_from_matrix(m)
    rec = rg.recover_boundary(f)
    seen = rec.conjugator @ rg.extend_to_causal(rec.matrix)
    g = f.conjugated(rec.conjugator)
    for _ in range(20):
        zp = np.concatenate(([rng.uniform(0.2, 0.8)], rng.uniform(-0.1, 0.1, 2)))
        pred = mb.image_of_ball(seen, future_boundary_ball(zp))
        want = future_boundary_ball(g(zp))
        np.testing.assert_allclose(pred.center, want.center, atol=1e-6)
        assert abs(pred.radius - want.radius) <= 1e-6


def test_distinct_maps_have_distinct_boundary_maps():
    a, _ = rg.random_group_element(3, 101, 3)
    b, _ = rg.random_group_element(3, 202, 3)
    assert np.linalg.norm(a - b) >= 1e-3
    ra = rg.recover_mobius(rg.oracle_from_matrix(a))
    rb = rg.recover_mobius(rg.oracle_from_matrix(b))
    assert np.linalg.norm(ra - rb) >= 1e-4


def test_recover_rejects_small_sample_count():
    with pytest.raises(InvalidInput):
        rg.recover_boundary(rg.oracle_from_matrix(np.eye(4)), m=4)


def test_cross_check_uses_disjoint_ball():
    rec = rg.recover_boundary(rg.oracle_from_matrix(np.eye(4)))
    first = rec.traces[: len(rec.traces) // 2]
    second = rec.traces[len(rec.traces) // 2 :]
    b1 = future_boundary_ball(rec.base)
    for t in second:
        assert not b1.contains(t.boundary_point)
    assert all(b1.contains(t.boundary_point) for t in first)
    assert isinstance(b1, Ball)
