"""Recovering an order-preserving injection from its boundary behaviour.

Pipeline:

1. Walk increasing sequences ``z_i`` from a base point ``z`` toward boundary
   points ``p`` of its future ball and read off the limits of ``f(z_i)``.
   The image sits within ``sqrt(2) * f(z_i)_0`` of the limit, which gives the
   stopping rule.
2. When ``f(z)`` leaves the chart, compose with a conjugator ``phi`` that
   brings it back; the boundary map of ``f`` is ``phi^-1`` applied to that of
   ``phi o f``.
3. Fit a Moebius matrix to the boundary correspondences, cross-check it on a
   second, disjoint ball, and read the same matrix as a linear map of the
   hyperboloid.
4. Compare the extension against the oracle on interior points and balls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import moebius as mb
from .causal_chart import (
    Ball,
    ball_to_future_apex,
    chart_to_hyperboloid,
    future_boundary_ball,
    geometric_point,
    hyperboloid_to_chart,
)
from .core_lorentz import as_chart_vector, haar_orthogonal, jordan_inv
from .errors import (
    DegenerateConfiguration,
    InvalidInput,
    NoAdmissibleConjugator,
    NotConal,
    NotInChartDomain,
    ToleranceNotMet,
)

LIMIT_TOL = 1e-9
FIT_TOL = 1e-7
VERIFY_TOL = 1e-6
MAX_ITER = 60
SQRT2 = math.sqrt(2.0)
RADIUS_LEVELS = (0.3, 0.6, 0.9)


# --------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class TranslateVminus:
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(c) for c in np.ravel(self.v)))


@dataclass(frozen=True)
class Dilate:
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise InvalidInput(f"dilation factor must be positive, got {self.r!r}")


@dataclass(frozen=True)
class Rotate:
    a: tuple

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        if a.shape[0] != a.shape[1] or np.max(np.abs(a.T @ a - np.eye(a.shape[0]))) > 1e-10:
            raise InvalidInput("Rotate needs an orthogonal matrix")
        object.__setattr__(self, "a", tuple(tuple(row) for row in a.tolist()))


@dataclass(frozen=True)
class Invert:
    pass


Generator = TranslateVminus | Dilate | Rotate | Invert


def generator_matrix(g: Generator, dim: int) -> np.ndarray:
    """Hyperboloid matrix of a generator acting on the chart of dimension ``dim``.

    The matrix of ``Invert`` is ``diag(-1, ..., -1, 1)``; it realizes
    ``x -> x^-1`` exactly and reverses the time orientation, so products
    containing it are oriented afterwards (see :func:`random_group_element`).
    """
    k = dim - 1
    if isinstance(g, TranslateVminus):
        if len(g.v) != k:
            raise InvalidInput(f"translation vector must have length {k}")
        return mb.translation_matrix(g.v)
    if isinstance(g, Dilate):
        # chart dilation x -> r x scales the boundary the same way
        return mb.dilation_matrix(g.r, k)
    if isinstance(g, Rotate):
        if len(g.a) != k:
            raise InvalidInput(f"rotation must be {k} x {k}")
        return mb.rotation_matrix(g.a)
    if isinstance(g, Invert):
        m = -np.eye(dim + 1)
        m[-1, -1] = 1.0
        return m
    raise InvalidInput(f"unknown generator {g!r}")


def chart_action(g: Generator, x) -> np.ndarray:
    """Direct chart formula for a generator, independent of the matrices."""
    x = as_chart_vector(x)
    if isinstance(g, TranslateVminus):
        return x + np.concatenate(([0.0], g.v))
    if isinstance(g, Dilate):
        return g.r * x
    if isinstance(g, Rotate):
        return np.concatenate(([x[0]], np.asarray(g.a) @ x[1:]))
    if isinstance(g, Invert):
        return jordan_inv(x)
    raise InvalidInput(f"unknown generator {g!r}")


def generator_to_dict(g: Generator) -> dict:
    if isinstance(g, TranslateVminus):
        return {"type": "translate", "v": list(g.v)}
    if isinstance(g, Dilate):
        return {"type": "dilate", "r": g.r}
    if isinstance(g, Rotate):
        return {"type": "rotate", "a": [list(r) for r in g.a]}
    return {"type": "invert"}


def generator_from_dict(d: dict) -> Generator:
    kind = d.get("type")
    if kind == "translate":
        return TranslateVminus(d["v"])
    if kind == "dilate":
        return Dilate(float(d["r"]))
    if kind == "rotate":
        return Rotate(d["a"])
    if kind == "invert":
        return Invert()
    raise InvalidInput(f"unknown generator type {kind!r}")


def word_matrix(word: Sequence[Generator], dim: int) -> np.ndarray:
    """Oriented matrix of the word, first generator applied first."""
    m = np.eye(dim + 1)
    for g in word:
        m = generator_matrix(g, dim) @ m
    return mb.orient(m)


def _random_generator(dim: int, rng: np.random.Generator) -> Generator:
    k = dim - 1
    kind = int(rng.integers(4))
    if kind == 0:
        d = rng.standard_normal(k)
        d /= np.linalg.norm(d)
        return TranslateVminus(d * rng.uniform() ** (1.0 / k))
    if kind == 1:
        return Dilate(float(np.exp(rng.uniform(-math.log(2), math.log(2)))))
    if kind == 2:
        return Rotate(haar_orthogonal(k, rng))
    return Invert()


def random_group_element(dim: int, seed: int, word_length: int) -> tuple[np.ndarray, list]:
    """Seeded random word in the generators and its oriented matrix."""
    if dim < 2:
        raise InvalidInput("dimension must be at least 2")
    if word_length < 0:
        raise InvalidInput("word length must be nonnegative")
    rng = np.random.default_rng(seed)
    word = [_random_generator(dim, rng) for _ in range(word_length)]
    return word_matrix(word, dim), word


# --------------------------------------------------------------------------
# oracles


def _phi(x: np.ndarray) -> np.ndarray:
    # chart_to_hyperboloid without validation, for inner loops
    d = x[0] * x[0] - np.dot(x[1:], x[1:])
    y = np.empty(x.shape[0] + 1)
    y[0] = (1.0 - d) / (2.0 * x[0])
    y[1:-1] = x[1:] / x[0]
    y[-1] = (1.0 + d) / (2.0 * x[0])
    return y


class ConalOracle:
    """Black-box map of the chart component into the hyperboloid.

    ``lift(x)`` returns the image as a hyperboloid point and is total for
    matrix oracles.  Calling the oracle returns the chart image and raises
    NotInChartDomain when the image has left the chart component.
    """

    def __init__(self, lift: Callable[[np.ndarray], np.ndarray], dim: int, name: str = "oracle"):
        self._lift = lift
        self.dim = dim
        self.name = name

    @classmethod
    def from_chart_map(cls, fn: Callable, dim: int, name: str = "chart map") -> "ConalOracle":
        def lift(x):
            return chart_to_hyperboloid(fn(x))

        return cls(lift, dim, name)

    def lift(self, x) -> np.ndarray:
        return np.asarray(self._lift(np.asarray(x, dtype=float)), dtype=float)

    def __call__(self, x) -> np.ndarray:
        y = self.lift(x)
        s = y[0] + y[-1]
        if not s > 0:
            raise NotInChartDomain(f"{self.name}: image has y0 + yn = {s!r}, outside the chart")
        return hyperboloid_to_chart(y)

    def conjugated(self, phi) -> "ConalOracle":
        """The oracle ``phi o f`` for a causal matrix ``phi``."""
        phi = np.asarray(phi, dtype=float)
        inner = self._lift
        return ConalOracle(lambda x: phi @ inner(x), self.dim, f"phi o {self.name}")

    def spot_check(self, rng: np.random.Generator, trials: int = 200, guard: float = 1e-9) -> None:
        """Check order preservation on random comparable chart pairs; raise NotConal."""
        k = self.dim - 1
        for _ in range(trials):
            z = np.concatenate(([rng.uniform(0.2, 2.0)], rng.uniform(-1, 1, k)))
            p = z[1:] + z[0] * rng.uniform(-1, 1, k) / math.sqrt(k)
            x = geometric_point(z, p, rng.uniform(0.05, 0.95))
            try:
                fz, fx = self(z), self(x)
            except NotInChartDomain:
                continue
            if not _in_future(fz, fx, guard):
                raise NotConal(f"{self.name} breaks the order at z={z}, x={x}")


def oracle_from_matrix(m) -> ConalOracle:
    m = mb.check_causal_matrix(m, require_orientation=False)
    return ConalOracle(lambda x: m @ _phi(x), m.shape[0] - 1, "matrix oracle")


def _in_future(a: np.ndarray, b: np.ndarray, guard: float) -> bool:
    """``b`` in the future of ``a`` up to a relative guard band."""
    w = a - b
    slack = guard * max(1.0, float(np.dot(a, a)))
    return bool(w[0] * w[0] - np.dot(w[1:], w[1:]) >= -slack and w[0] >= -slack and b[0] > 0)


# --------------------------------------------------------------------------
# boundary limits


@dataclass
class BoundaryTrace:
    """Increasing sequence toward a boundary point and its image limit."""

    boundary_point: np.ndarray
    images: list = field(default_factory=list)
    limit: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return len(self.images)

    def sqrt2_violation(self) -> float:
        """Largest ``|f(z_i) - (0, limit)| - sqrt(2) f(z_i)_0`` along the sequence."""
        if self.limit is None or not self.images:
            return 0.0
        worst = -math.inf
        for img in self.images:
            gap = math.sqrt(img[0] ** 2 + float(np.sum((img[1:] - self.limit) ** 2)))
            worst = max(worst, gap - SQRT2 * img[0])
        return worst


def trace_boundary_limit(
    f: ConalOracle,
    z,
    boundary_point,
    tol: float = LIMIT_TOL,
    max_iter: int = MAX_ITER,
    guard: float = 1e-9,
) -> BoundaryTrace:
    """Follow ``z_i`` (fraction ``2^-i`` of the way from the boundary) and record ``f(z_i)``."""
    z = as_chart_vector(z)
    p = np.asarray(boundary_point, dtype=float)
    if np.linalg.norm(p - z[1:]) > z[0] * (1 + 1e-12):
        raise InvalidInput("boundary point lies outside the future boundary ball of z")
    trace = BoundaryTrace(p)
    prev = f(z)
    for i in range(1, max_iter + 1):
        zi = geometric_point(z, p, 2.0 ** (-i))
        img = f(zi)
        if not _in_future(prev, img, guard):
            raise NotConal(f"image sequence stopped increasing at step {i}")
        trace.images.append(img)
        prev = img
        if SQRT2 * img[0] <= tol:
            trace.limit = img[1:].copy()
            return trace
    raise ToleranceNotMet(f"boundary limit not within {tol:.3g} after {max_iter} steps")


def boundary_limit(f: ConalOracle, z, boundary_point, tol: float = LIMIT_TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    return trace_boundary_limit(f, z, boundary_point, tol, max_iter).limit


def sample_boundary_points(z, m: int, seed: int = 0) -> np.ndarray:
    """``m`` points inside the future ball of ``z`` at radius levels 0.3, 0.6, 0.9."""
    ball = future_boundary_ball(z)
    k = ball.center.shape[0]
    rng = np.random.default_rng(seed)
    if k == 1:
        # spheres in R^1 have two points; spread the levels instead
        fr = np.linspace(-0.9, 0.9, m)
        return ball.center + ball.radius * fr.reshape(-1, 1)
    pts = []
    for i in range(m):
        d = rng.standard_normal(k)
        d /= np.linalg.norm(d)
        pts.append(ball.center + RADIUS_LEVELS[i % 3] * ball.radius * d)
    return np.array(pts)


def _lift_rank_ok(points) -> bool:
    x = np.stack([mb.lift_point(p) for p in points], axis=1)
    x = x / np.linalg.norm(x, axis=0)
    sv = np.linalg.svd(x, compute_uv=False)
    return bool(sv[-1] > mb.RANK_TOL * sv[0] and x.shape[1] >= x.shape[0])


def conjugator_candidates(y, rng: np.random.Generator | None = None, n_random: int = 4) -> list:
    """Candidate causal matrices ``phi`` to bring the hyperboloid point ``y`` into the chart.

    Identity, the oriented inversion, and the oriented inversion after a
    translation by ``v`` (the translation centering ``y`` plus a few random ones).
    """
    dim = y.shape[0] - 1
    k = dim - 1
    inv = mb.orient(generator_matrix(Invert(), dim))
    cands = [("identity", np.eye(dim + 1)), ("invert", inv)]
    p = y[0] + y[-1]
    vs = []
    if abs(p) > 1e-12:
        vs.append(-y[1:-1] / p)
    if np.linalg.norm(y[1:-1]) > 0:
        vs.append(y[1:-1] * (2.0 / max(np.dot(y[1:-1], y[1:-1]), 1e-12)))
    rng = rng if rng is not None else np.random.default_rng(0)
    vs.extend(rng.uniform(-2, 2, (n_random, k)))
    for v in vs:
        cands.append(("invert o translate", mb.orient(inv @ mb.translation_matrix(v))))
    return cands


def find_conjugator(y, normalize: bool = True) -> np.ndarray:
    """Best-conditioned admissible conjugator for the hyperboloid point ``y``.

    Admissible means the image has ``y0 + yn > 0``; among those, the one whose
    chart image is closest to ``e`` (in log-radius and center) wins.  With
    ``normalize`` the winner is followed by the translation and dilation that
    move the chart image exactly to ``e``, so its future ball is the unit ball.
    """
    y = np.asarray(y, dtype=float)
    best, best_score = None, math.inf
    for _, phi in conjugator_candidates(y):
        w = phi @ y
        s = w[0] + w[-1]
        if not s > 1e-9 * np.linalg.norm(w):
            continue
        score = abs(math.log(s)) + float(np.linalg.norm(w[1:-1] / s))
        if score < best_score:
            best, best_score = phi, score
    if best is None:
        raise NoAdmissibleConjugator("no candidate brings the image into the chart")
    if normalize:
        x = hyperboloid_to_chart(best @ y)
        k = x.shape[0] - 1
        best = mb.dilation_matrix(1.0 / x[0], k) @ mb.translation_matrix(-x[1:]) @ best
    return best


def global_boundary_apply(
    f: ConalOracle,
    boundary_point,
    phi=None,
    z=None,
    tol: float = LIMIT_TOL,
    max_iter: int = MAX_ITER,
):
    """Boundary map value ``phi^-1 ((phi o f)^-(p))``; may be ``INF``.

    Without ``z`` the base is the apex ``(0.5, p)``.  Without ``phi`` the best
    admissible conjugator for ``f(z)`` is used.
    """
    p = np.asarray(boundary_point, dtype=float)
    z = np.concatenate(([0.5], p)) if z is None else as_chart_vector(z)
    if phi is None:
        phi = find_conjugator(f.lift(z))
    phi = np.asarray(phi, dtype=float)
    g = f.conjugated(phi)
    try:
        g(z)
    except NotInChartDomain as exc:
        raise NoAdmissibleConjugator("phi does not bring f(z) into the chart") from exc
    lim = boundary_limit(g, z, p, tol, max_iter)
    return mb.apply(mb.invert(phi), lim)


def sample_boundary_correspondences(
    f: ConalOracle,
    z,
    m: int,
    tol: float = LIMIT_TOL,
    seed: int = 0,
    phi=None,
    max_iter: int = MAX_ITER,
) -> list:
    """Pairs ``(p, f^-(p))`` for ``m`` boundary points of the future ball of ``z``."""
    z = as_chart_vector(z, f.dim)
    if m < f.dim + 2:
        raise InvalidInput(f"need at least {f.dim + 2} samples, got {m}")
    if phi is None:
        phi = find_conjugator(f.lift(z))
    pts = sample_boundary_points(z, m, seed)
    if not _lift_rank_ok(pts):
        raise DegenerateConfiguration("sampled boundary points do not span the lift space")
    back = mb.invert(phi)
    g = f.conjugated(phi)
    return [(p, mb.apply(back, boundary_limit(g, z, p, tol, max_iter))) for p in pts]


# --------------------------------------------------------------------------
# recovery


@dataclass
class BoundaryRecovery:
    matrix: np.ndarray
    fit_residual: float
    samples_used: int
    base: np.ndarray
    conjugator: np.ndarray
    traces: list
    cross_check_error: float


def _fit_on_ball(f, z, m, tol, tol_fit, seed, max_iter):
    z = as_chart_vector(z, f.dim)
    phi = find_conjugator(f.lift(z))
    g = f.conjugated(phi)
    g(z)
    pts = sample_boundary_points(z, m, seed)
    if not _lift_rank_ok(pts):
        raise DegenerateConfiguration("sampled boundary points do not span the lift space")
    traces = [trace_boundary_limit(g, z, p, tol, max_iter) for p in pts]
    # fit phi o f on the boundary, then undo phi; same map as fitting f^- pairs
    fit = mb.fit_moebius([(t.boundary_point, t.limit) for t in traces], tol_fit)
    return mb.compose(mb.invert(phi), fit.matrix), fit.residual, phi, traces


def _matrix_gap(a, b) -> float:
    a, b = mb.orient(a), mb.orient(b)
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def recover_boundary(
    f: ConalOracle,
    z=None,
    m: int | None = None,
    tol: float = LIMIT_TOL,
    tol_fit: float = FIT_TOL,
    seed: int = 0,
    cross_check: bool = True,
    cross_tol: float = VERIFY_TOL,
    max_iter: int = MAX_ITER,
) -> BoundaryRecovery:
    """Recover the boundary Moebius matrix of ``f`` with full diagnostics."""
    dim = f.dim
    z = np.eye(dim)[0] if z is None else as_chart_vector(z, dim)
    m = 3 * (dim + 2) if m is None else m
    if m < dim + 2:
        raise InvalidInput(f"need at least {dim + 2} samples, got {m}")
    mat, resid, phi, traces = _fit_on_ball(f, z, m, tol, tol_fit, seed, max_iter)
    gap = 0.0
    if cross_check:
        # a second ball disjoint from the first
        b = future_boundary_ball(z)
        shift = np.zeros(dim - 1)
        shift[0] = 2.5 * b.radius
        z2 = ball_to_future_apex(Ball(b.center + shift, 0.5 * b.radius))
        mat2, resid2, _, traces2 = _fit_on_ball(f, z2, m, tol, tol_fit, seed + 1, max_iter)
        gap = _matrix_gap(mat2, mat)
        if gap > cross_tol:
            raise ToleranceNotMet(f"fits on disjoint balls disagree by {gap:.3g}")
        traces = traces + traces2
        resid = max(resid, resid2)
    return BoundaryRecovery(mat, resid, len(traces), z, phi, traces, gap)


def recover_mobius(f: ConalOracle, z=None, m: int | None = None, tol: float = LIMIT_TOL, **kw) -> np.ndarray:
    return recover_boundary(f, z, m, tol, **kw).matrix


def extend_to_causal(boundary_matrix) -> np.ndarray:
    """The boundary matrix read as a map of the hyperboloid.

    Lift coordinates and hyperboloid coordinates coincide, so this is the
    same matrix after validating form preservation and time orientation.
    """
    m = mb.check_causal_matrix(boundary_matrix, require_orientation=False)
    return mb.check_causal_matrix(mb.orient(m))


# --------------------------------------------------------------------------
# verification


@dataclass
class RecoveryReport:
    recovered: np.ndarray
    fit_residual: float
    boundary_samples_used: int
    max_interior_deviation: float
    max_ball_deviation: float
    sqrt2_bound_max_violation: float
    status: str

    @property
    def verified(self) -> bool:
        return self.status == "verified"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "fit_residual": self.fit_residual,
            "max_interior_deviation": self.max_interior_deviation,
            "max_ball_deviation": self.max_ball_deviation,
            "sqrt2_bound_max_violation": self.sqrt2_bound_max_violation,
            "samples": self.boundary_samples_used,
            "recovered": self.recovered.tolist(),
        }


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def verify_extension(
    f: ConalOracle,
    ext,
    samples: int = 100,
    tol: float = VERIFY_TOL,
    seed: int = 0,
    traces: Sequence[BoundaryTrace] = (),
    base=None,
    conjugator=None,
    fit_residual: float = 0.0,
) -> RecoveryReport:
    """Compare the extension ``ext`` with the oracle.

    Interior deviation: relative gap between chart images (hyperboloid images
    when the oracle leaves the chart) at random chart points.  Ball deviation:
    predicted image of future balls of points after ``base`` versus the future
    ball of the oracle image, both seen through ``conjugator``.
    """
    ext = np.asarray(ext, dtype=float)
    dim = f.dim
    k = dim - 1
    rng = np.random.default_rng(seed)
    worst_interior = 0.0
    for _ in range(samples):
        x = np.concatenate(([rng.uniform(0.05, 2.0)], rng.uniform(-2.0, 2.0, k)))
        truth = f.lift(x)
        pred = ext @ _phi(x)
        if truth[0] + truth[-1] > 1e-9 * np.linalg.norm(truth) and pred[0] + pred[-1] > 0:
            dev = _rel(hyperboloid_to_chart(pred), hyperboloid_to_chart(truth))
        else:
            dev = _rel(pred, truth)
        worst_interior = max(worst_interior, dev)

    z = np.eye(dim)[0] if base is None else as_chart_vector(base, dim)
    phi = find_conjugator(f.lift(z)) if conjugator is None else np.asarray(conjugator, float)
    g = f.conjugated(phi)
    seen = phi @ ext
    ball = future_boundary_ball(z)
    worst_ball = 0.0
    n_balls = max(1, samples // 5)
    for _ in range(n_balls):
        d = rng.standard_normal(k)
        d /= np.linalg.norm(d)
        p = ball.center + 0.8 * ball.radius * rng.uniform() ** (1.0 / k) * d
        zp = geometric_point(z, p, rng.uniform(0.2, 0.8))
        target = future_boundary_ball(g(zp))
        try:
            pred_ball = mb.image_of_ball(seen, future_boundary_ball(zp))
        except mb.ImageNotBall:
            worst_ball = math.inf
            continue
        scale = max(1.0, target.radius, float(np.linalg.norm(target.center)))
        dev = max(float(np.linalg.norm(pred_ball.center - target.center)), abs(pred_ball.radius - target.radius))
        worst_ball = max(worst_ball, dev / scale)

    viol = max([t.sqrt2_violation() for t in traces], default=0.0)
    viol = max(0.0, viol)
    ok = worst_interior <= tol and worst_ball <= tol and viol <= tol
    return RecoveryReport(
        recovered=ext,
        fit_residual=fit_residual,
        boundary_samples_used=sum(1 for _ in traces),
        max_interior_deviation=worst_interior,
        max_ball_deviation=worst_ball,
        sqrt2_bound_max_violation=viol,
        status="verified" if ok else "failed",
    )


def run_pipeline(
    f: ConalOracle,
    m: int | None = None,
    tol: float = LIMIT_TOL,
    tol_fit: float = FIT_TOL,
    tol_verify: float = VERIFY_TOL,
    samples: int = 100,
    seed: int = 0,
    max_iter: int = MAX_ITER,
) -> tuple[RecoveryReport, BoundaryRecovery]:
    """Recover, extend and verify in one go."""
    rec = recover_boundary(f, None, m, tol, tol_fit, seed, max_iter=max_iter)
    ext = extend_to_causal(rec.matrix)
    report = verify_extension(
        f,
        ext,
        samples,
        tol_verify,
        seed + 7919,
        traces=rec.traces,
        base=rec.base,
        conjugator=rec.conjugator,
        fit_residual=rec.fit_residual,
    )
    return report, rec
