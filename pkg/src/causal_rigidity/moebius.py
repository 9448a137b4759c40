"""Moebius maps of R^{k} U {oo} (k = n - 1) in the null-cone model.

A point ``x`` of the boundary lifts to the null vector

    l(x) = ((1 + |x|^2)/2, x, (1 - |x|^2)/2)      l(oo) = (1/2, 0, -1/2)

of R^{1,n} with form ``<u, v> = -u0 v0 + u1 v1 + ... + un vn``, and
``<l(x), l(y)> = -|x - y|^2 / 2``.  Every Moebius map is then a Lorentz
matrix acting projectively on the future null cone.  The same matrices act
linearly on the hyperboloid (see :mod:`causal_rigidity.rigidity`).

Matrix gauge: ``M^T Q M = Q`` with ``Q = diag(-1, 1, ..., 1)`` and ``M``
time oriented, meaning ``(M l(0))_0 > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .causal_chart import Ball, minkowski
from .errors import (
    DegenerateConfiguration,
    DimensionMismatch,
    ImageNotBall,
    InvalidInput,
    NotConal,
    NotNull,
    ToleranceNotMet,
)

FORM_TOL = 1e-8
NULL_TOL = 1e-9
INF_TOL = 1e-14
FIT_TOL = 1e-7
RANK_TOL = 1e-9
SPHERE_FIT_TOL = 1e-6


class _Infinity:
    """The point at infinity.  Use the module constant ``INF``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(x) -> bool:
    return x is INF or (isinstance(x, str) and x.lower() in ("inf", "infinity"))


def as_extended(x, k: int | None = None):
    """Normalize an extended point: ``INF`` or a finite float array of length k."""
    if is_inf(x):
        return INF
    v = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise InvalidInput("finite boundary point has non-finite coordinates")
    if k is not None and v.shape[0] != k:
        raise DimensionMismatch(f"expected a point of R^{k}, got length {v.shape[0]}")
    return v


# --------------------------------------------------------------------------
# spheres and reflections


@dataclass(frozen=True)
class Hypersphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InvalidInput("hypersphere radius must be positive")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class Hyperplane:
    """The set ``|x - a| = |x - b|`` (plus infinity)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float).reshape(-1)
        b = np.array(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise DimensionMismatch("hyperplane points of different dimension")
        if np.linalg.norm(a - b) <= 1e-12:
            raise InvalidInput("hyperplane defining points must be distinct")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def normal(self) -> np.ndarray:
        d = self.b - self.a
        return d / np.linalg.norm(d)

    @property
    def offset(self) -> float:
        return float(np.dot(self.normal, (self.a + self.b) / 2))


Sphere = Hypersphere | Hyperplane


def reflect_sphere(s: Sphere, x):
    x = as_extended(x)
    if isinstance(s, Hyperplane):
        if x is INF:
            return INF
        u = s.normal
        return x - 2.0 * (np.dot(x, u) - s.offset) * u
    if x is INF:
        return s.center.copy()
    d = x - s.center
    dd = float(np.dot(d, d))
    if dd == 0.0:
        return INF
    return s.center + (s.radius * s.radius / dd) * d


def j_minus(x):
    """Inversion in the unit sphere, ``x -> x / |x|^2``."""
    x = as_extended(x)
    k = 1 if x is INF else x.shape[0]
    return reflect_sphere(Hypersphere(np.zeros(k), 1.0), x)


# --------------------------------------------------------------------------
# lifts


def form_matrix(n_plus_1: int) -> np.ndarray:
    q = np.eye(n_plus_1)
    q[0, 0] = -1.0
    return q


def lift_point(x, k: int | None = None) -> np.ndarray:
    """Null lift of a boundary point.  ``k`` is required for ``INF``."""
    x = as_extended(x, k)
    if x is INF:
        if k is None:
            raise InvalidInput("lifting INF needs the boundary dimension k")
        v = np.zeros(k + 2)
        v[0], v[-1] = 0.5, -0.5
        return v
    s = float(np.dot(x, x))
    return np.concatenate(([(1.0 + s) / 2.0], x, [(1.0 - s) / 2.0]))


def unlift(v, check: bool = True, scale: float = 0.0):
    """Boundary point of a future or past null vector (projective class).

    ``check=False`` skips the nullness test, for images under fitted matrices
    that are Lorentz only up to roundoff.  ``scale`` is the magnitude of the
    quantities ``v`` was computed from; ``v0 + vn`` below roundoff at that
    magnitude counts as infinity.
    """
    v = np.asarray(v, dtype=float)
    nrm2 = float(np.dot(v, v))
    if nrm2 == 0.0:
        raise NotNull("zero vector")
    if check and abs(minkowski(v, v)) > NULL_TOL * nrm2:
        raise NotNull(f"<v,v> = {minkowski(v, v)!r} is not null")
    if v[0] < 0:
        v = -v
    s = v[0] + v[-1]
    if abs(s) <= INF_TOL * max(np.sqrt(nrm2), scale):
        return INF
    return v[1:-1] / s


def lift_sphere(b: Ball | Sphere) -> np.ndarray:
    """Unit spacelike vector ``s`` with ``<l(x), s> = 0`` exactly on the sphere.

    For balls and hyperspheres ``<l(x), s> > 0`` in the interior.
    """
    if isinstance(b, Hyperplane):
        u = b.normal
        d = b.offset
        return np.concatenate(([d], u, [-d]))
    c = np.asarray(b.center, dtype=float)
    r = float(b.radius)
    if not r > 0:
        raise InvalidInput("sphere radius must be positive")
    cc = float(np.dot(c, c))
    return np.concatenate(([(1.0 + cc - r * r) / 2.0], c, [(1.0 - cc + r * r) / 2.0])) / r


# --------------------------------------------------------------------------
# matrices


def check_causal_matrix(m, require_orientation: bool = True, tol: float = FORM_TOL) -> np.ndarray:
    """Validate form preservation (relative to ``|M|^2``) and time orientation."""
    m = np.array(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 3:
        raise InvalidInput(f"causal matrix must be square of size >= 3, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("causal matrix has non-finite entries")
    q = form_matrix(m.shape[0])
    err = np.max(np.abs(m.T @ q @ m - q))
    scale = max(1.0, float(np.max(np.abs(m))) ** 2)
    if err > tol * scale:
        raise InvalidInput(f"matrix does not preserve the Lorentz form (error {err:.3g})")
    if require_orientation and not is_time_oriented(m):
        raise InvalidInput("matrix reverses time orientation")
    return m


def form_error(m) -> float:
    m = np.asarray(m, dtype=float)
    q = form_matrix(m.shape[0])
    return float(np.max(np.abs(m.T @ q @ m - q)))


def is_time_oriented(m) -> bool:
    m = np.asarray(m, dtype=float)
    return bool(m[0, 0] + m[0, -1] > 0)


def orient(m) -> np.ndarray:
    """Pick the sign of ``m`` that is time oriented (same Moebius action)."""
    m = np.asarray(m, dtype=float)
    return m if is_time_oriented(m) else -m


def renormalize(m) -> np.ndarray:
    """Rescale so ``M^T Q M = Q`` on average, then orient."""
    m = np.asarray(m, dtype=float)
    q = form_matrix(m.shape[0])
    c = np.trace(q @ m.T @ q @ m) / m.shape[0]
    if not c > 0:
        raise DegenerateConfiguration("matrix is not a multiple of a Lorentz matrix")
    return orient(m / np.sqrt(c))


def identity(dim: int) -> np.ndarray:
    """Identity causal matrix for chart dimension ``dim`` (size dim + 1)."""
    return np.eye(dim + 1)


def compose(m1, m2) -> np.ndarray:
    """Matrix of ``m1 o m2``."""
    m1 = np.asarray(m1, dtype=float)
    m2 = np.asarray(m2, dtype=float)
    if m1.shape != m2.shape:
        raise DimensionMismatch("cannot compose matrices of different size")
    return renormalize(m1 @ m2)


def invert(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    q = form_matrix(m.shape[0])
    return renormalize(q @ m.T @ q)


def apply(m, x):
    m = np.asarray(m, dtype=float)
    k = m.shape[0] - 2
    lift = lift_point(x, k)
    v = m @ lift
    # v may come out of cancellation, so judge v0 + vn against the inputs
    return unlift(v, check=False, scale=float(np.linalg.norm(m) * np.linalg.norm(lift)))


def translation_matrix(v) -> np.ndarray:
    """Boundary action ``x -> x + v``; on the hyperboloid, chart translation by ``(0, v)``."""
    v = np.asarray(v, dtype=float).reshape(-1)
    k = v.shape[0]
    m = np.eye(k + 2)
    vv = float(np.dot(v, v))
    # y0' = y0 + v.y_ + |v|^2 (y0 + yn)/2,  y_' = y_ + v (y0 + yn),  yn' = yn - v.y_ - |v|^2 (y0 + yn)/2
    m[0, 0] += vv / 2
    m[0, -1] += vv / 2
    m[0, 1:-1] = v
    m[1:-1, 0] = v
    m[1:-1, -1] = v
    m[-1, 0] -= vv / 2
    m[-1, -1] -= vv / 2
    m[-1, 1:-1] = -v
    return m


def dilation_matrix(r: float, k: int) -> np.ndarray:
    """Boundary action ``x -> r x``; a boost in the (0, n) plane."""
    if not (np.isfinite(r) and r > 0):
        raise InvalidInput(f"dilation factor must be positive, got {r!r}")
    m = np.eye(k + 2)
    ch = (r + 1.0 / r) / 2.0
    sh = (r - 1.0 / r) / 2.0
    m[0, 0] = m[-1, -1] = ch
    m[0, -1] = m[-1, 0] = -sh
    return m


def rotation_matrix(a) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    k = a.shape[0]
    if a.shape != (k, k) or np.max(np.abs(a.T @ a - np.eye(k))) > 1e-10:
        raise InvalidInput("rotation part must be an orthogonal matrix")
    m = np.eye(k + 2)
    m[1:-1, 1:-1] = a
    return m


def make_similarity(r: float, a, t) -> np.ndarray:
    """Matrix of ``x -> r A x + t``."""
    t = np.asarray(t, dtype=float).reshape(-1)
    return translation_matrix(t) @ dilation_matrix(r, t.shape[0]) @ rotation_matrix(a)


def reflection_matrix(s: Sphere) -> np.ndarray:
    """Lorentz reflection ``I - 2 s <s, .>`` in the unit spacelike lift of ``s``."""
    v = lift_sphere(s)
    q = form_matrix(v.shape[0])
    return np.eye(v.shape[0]) - 2.0 * np.outer(v, q @ v)


def fixes_infinity(m, tol: float = 1e-9) -> bool:
    m = np.asarray(m, dtype=float)
    k = m.shape[0] - 2
    li = lift_point(INF, k)
    w = m @ li
    # parallel to l(oo) iff the component orthogonal to it vanishes
    resid = w - np.dot(w, li) / np.dot(li, li) * li
    return bool(np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(w)))


def pole(m):
    """The point sent to infinity by ``m``."""
    return apply(invert(m), INF)


def image_of_ball(m, b: Ball) -> Ball:
    """Image of a closed ball under a Moebius matrix whose pole avoids the ball."""
    m = orient(np.asarray(m, dtype=float))
    s = m @ lift_sphere(b)
    kappa = s[0] + s[-1]
    if kappa <= 1e-12 * np.linalg.norm(s):
        raise ImageNotBall(f"pole {pole(m)!r} lies in the ball; the image is unbounded")
    return Ball(s[1:-1] / kappa, 1.0 / kappa)


def boundary_distance(a, b) -> float:
    """Distance used for boundary residuals.

    Finite pairs: ``|a - b| / max(1, |b|)``.  Pairs involving ``INF`` use the
    chordal distance on the sphere.
    """
    a = as_extended(a)
    b = as_extended(b)
    if a is INF and b is INF:
        return 0.0
    if a is INF or b is INF:
        p = b if a is INF else a
        return float(2.0 / np.sqrt(1.0 + np.dot(p, p)))
    return float(np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b)))


def chordal_distance(a, b) -> float:
    """Distance between the stereographic images on the unit sphere; ``INF`` is the pole."""
    a = as_extended(a)
    b = as_extended(b)
    if a is INF and b is INF:
        return 0.0
    if a is INF or b is INF:
        p = b if a is INF else a
        return float(2.0 / np.sqrt(1.0 + np.dot(p, p)))
    den = np.sqrt((1.0 + np.dot(a, a)) * (1.0 + np.dot(b, b)))
    return float(2.0 * np.linalg.norm(a - b) / den)


# --------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class MoebiusFit:
    matrix: np.ndarray
    residual: float
    scales: np.ndarray


def _pack(points: Sequence, k: int, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates (zeros for INF) and a finite mask; rejects repeated points."""
    finite = np.array([p is not INF for p in points])
    if np.count_nonzero(~finite) > 1:
        raise InvalidInput(f"{what} contain INF more than once")
    coords = np.array([p if p is not INF else np.zeros(k) for p in points])
    d = _pairwise_distance(coords, finite)
    np.fill_diagonal(d, np.inf)
    if np.min(d) <= 1e-12:
        raise InvalidInput(f"{what} are not pairwise distinct")
    return coords, finite


def _pairwise_distance(coords: np.ndarray, finite: np.ndarray) -> np.ndarray:
    # <l(p), l(q)> = -d^2/2 with d = 1 whenever one of p, q is INF
    d = np.linalg.norm(coords[:, None, :] - coords[None, :, :], axis=-1)
    d[~finite, :] = 1.0
    d[:, ~finite] = 1.0
    return d


def _lifts(coords: np.ndarray, finite: np.ndarray) -> np.ndarray:
    s = np.einsum("ij,ij->i", coords, coords)
    out = np.column_stack([(1.0 + s) / 2.0, coords, (1.0 - s) / 2.0]).T
    out[:, ~finite] = 0.0
    out[0, ~finite], out[-1, ~finite] = 0.5, -0.5
    return out


def _residual(mat: np.ndarray, x: np.ndarray, coords: np.ndarray, finite: np.ndarray) -> float:
    """Vectorized ``max boundary_distance(apply(mat, x_i), y_i)``."""
    v = mat @ x
    v = v * np.where(v[0] < 0, -1.0, 1.0)
    s = v[0] + v[-1]
    img_inf = np.abs(s) <= INF_TOL * np.linalg.norm(v, axis=0)
    worst = 0.0
    one = img_inf ^ ~finite
    if np.any(one):
        # chordal distance to INF from whichever side is finite
        img = (v[1:-1] / np.where(img_inf, 1.0, s)).T
        pts = np.where(img_inf[:, None], coords, img)
        worst = max(worst, float(np.max(2.0 / np.sqrt(1.0 + np.einsum("ij,ij->i", pts, pts))[one])))
    fin = ~img_inf & finite
    if np.any(fin):
        img = (v[1:-1, fin] / s[fin]).T
        tgt = coords[fin]
        err = np.linalg.norm(img - tgt, axis=1) / np.maximum(1.0, np.linalg.norm(tgt, axis=1))
        worst = max(worst, float(np.max(err)))
    return worst


def fit_moebius(pairs: Iterable, tol: float = FIT_TOL, refine: int = 2) -> MoebiusFit:
    """Fit the Moebius matrix carrying each source point to its target.

    Scales ``lambda_i`` with ``M l(x_i) = lambda_i l(y_i)`` come from the
    log-linear system ``log lambda_i + log lambda_j = 2 log d(x_i, x_j) - 2 log d(y_i, y_j)``;
    ``M`` then solves a linear least-squares problem.  ``refine`` extra passes
    re-estimate the scales from the current matrix.
    """
    pairs = [(as_extended(s), as_extended(t)) for s, t in pairs]
    finite = [p for pr in pairs for p in pr if p is not INF]
    if not finite:
        raise InvalidInput("no finite points in correspondences")
    k = finite[0].shape[0]
    if any(p.shape[0] != k for p in finite):
        raise DimensionMismatch("correspondence points of mixed dimension")
    m = len(pairs)
    if m < k + 3:
        raise InvalidInput(f"need at least {k + 3} pairs for boundary dimension {k}, got {m}")
    src, src_fin = _pack([p[0] for p in pairs], k, "sources")
    dst, dst_fin = _pack([p[1] for p in pairs], k, "targets")

    x = _lifts(src, src_fin)
    y = _lifts(dst, dst_fin)
    w = 1.0 / np.linalg.norm(x, axis=0)
    xs = x * w
    sv = np.linalg.svd(xs, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        raise DegenerateConfiguration(
            f"source lifts have rank < {k + 2} (singular values {sv[-1]:.3g} / {sv[0]:.3g}); "
            "points lie on a common sphere"
        )

    iu, ju = np.triu_indices(m, 1)
    rows = np.zeros((iu.shape[0], m))
    rows[np.arange(iu.shape[0]), iu] = 1.0
    rows[np.arange(iu.shape[0]), ju] = 1.0
    rhs = 2.0 * np.log(_pairwise_distance(src, src_fin)[iu, ju]) - 2.0 * np.log(
        _pairwise_distance(dst, dst_fin)[iu, ju]
    )
    log_lam = np.linalg.lstsq(rows, rhs, rcond=None)[0]
    lam = np.exp(log_lam)

    q = form_matrix(k + 2)
    for it in range(refine + 1):
        ys = y * (lam * w)
        mat = np.linalg.lstsq(xs.T, ys.T, rcond=None)[0].T
        c = np.trace(q @ mat.T @ q @ mat) / (k + 2)
        if not c > 0:
            raise ToleranceNotMet("correspondences are not consistent with a Moebius map")
        mat = mat / np.sqrt(c)
        if it < refine:
            # lambda_i from projecting M l(x_i) on l(y_i)
            img = mat @ x
            lam = np.einsum("ij,ij->j", img, y) / np.einsum("ij,ij->j", y, y)
            if np.any(lam <= 0):
                break

    img = mat @ x
    if np.any(img[0] <= 0):
        raise NotConal("fitted map sends a source lift off the future null cone")
    scale = max(1.0, float(np.max(np.abs(mat)))) ** 2
    ferr = form_error(mat)
    if ferr > 1e-6 * scale:
        raise ToleranceNotMet(f"fitted matrix is not Lorentz (form error {ferr:.3g})")
    mat = renormalize(mat)
    resid = _residual(mat, x, dst, dst_fin)
    if not resid <= tol:
        raise ToleranceNotMet(f"fit residual {resid:.3g} exceeds tolerance {tol:.3g}")
    return MoebiusFit(mat, float(resid), lam)


def fit_from_point_correspondences(pairs: Iterable, tol: float = FIT_TOL) -> np.ndarray:
    return fit_moebius(pairs, tol).matrix


# --------------------------------------------------------------------------
# ball preservation


def fit_hypersphere(points) -> tuple[np.ndarray, float, float]:
    """Algebraic least-squares sphere through ``points``.

    Returns ``(center, radius, residual)``; the residual is the largest
    geometric deviation ``||p - c| - r|`` divided by ``max(1, r)``.  Radius
    is NaN when the fit is not a real sphere.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.hstack([2.0 * p, np.ones((p.shape[0], 1))])
    b = np.einsum("ij,ij->i", p, p)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    c = sol[:-1]
    r2 = sol[-1] + float(np.dot(c, c))
    if not r2 > 0:
        return c, float("nan"), float("inf")
    r = float(np.sqrt(r2))
    resid = float(np.max(np.abs(np.linalg.norm(p - c, axis=1) - r)) / max(1.0, r))
    return c, r, resid


def sphere_samples(b: Ball, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` points drawn uniformly on the boundary sphere of ``b``."""
    g = rng.standard_normal((count, b.center.shape[0]))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return b.center + b.radius * g


def sample_ball_images(fn: Callable, balls: Iterable[Ball], count: int, rng: np.random.Generator):
    """Pair each ball with the images under ``fn`` of points on its boundary sphere."""
    return [(b, np.array([fn(p) for p in sphere_samples(b, count, rng)])) for b in balls]


def check_ball_preserving(map_samples, tol: float = SPHERE_FIT_TOL) -> bool:
    """True iff every sampled ball boundary maps onto a common finite sphere."""
    ok = True
    for b, images in map_samples:
        images = np.atleast_2d(np.asarray(images, dtype=float))
        need = b.center.shape[0] + 2
        if images.shape[0] < need:
            raise InvalidInput(f"need at least {need} image samples per ball, got {images.shape[0]}")
        _, r, resid = fit_hypersphere(images)
        if not (np.isfinite(r) and r > 0 and resid <= tol):
            ok = False
    return ok


# --------------------------------------------------------------------------
# tangency witnesses


def ball_inside(inner: Ball, outer: Ball, tol: float = 1e-12) -> bool:
    return bool(np.linalg.norm(inner.center - outer.center) + inner.radius <= outer.radius + tol)


def single_contact_point(b1: Ball, b2: Ball, tol: float = 1e-12):
    """The unique common point of two tangent balls, or ``None``.

    Only external tangency gives a one-point intersection of closed balls
    (internal tangency shares the smaller ball).
    """
    d = b2.center - b1.center
    dist = float(np.linalg.norm(d))
    if dist == 0.0 or abs(dist - (b1.radius + b2.radius)) > tol * max(1.0, dist):
        return None
    return b1.center + (b1.radius / dist) * d


def _unit_direction(x, c):
    d = x - c
    nd = float(np.linalg.norm(d))
    if nd > 0:
        return d / nd
    u = np.zeros_like(x)
    u[0] = 1.0
    return u


def interior_witness_balls(b: Ball, x) -> tuple[Ball, Ball]:
    """Two balls inside ``b`` touching exactly at the interior point ``x``."""
    x = np.asarray(x, dtype=float)
    dist = float(np.linalg.norm(x - b.center))
    delta = (b.radius - dist) / 2.0
    if not delta > 0:
        raise InvalidInput("point is not in the interior of the ball")
    u = _unit_direction(x, b.center)
    if x.shape[0] > 1 and dist > 0:
        # any unit vector orthogonal to x - c
        basis = np.linalg.svd(u.reshape(1, -1))[2]
        u = basis[1]
    return Ball(x - delta * u, delta), Ball(x + delta * u, delta)


def boundary_witness_ball(b: Ball, x, delta: float = 1.0) -> Ball:
    """A ball meeting ``b`` only at the boundary point ``x``."""
    x = np.asarray(x, dtype=float)
    u = _unit_direction(x, b.center)
    return Ball(x + delta * u, delta)
