"""Two models of the one-sheeted hyperboloid and their causal orders.

Chart model: vectors ``x`` in R^n with ``x0 > 0`` (the component ``V_- + Omega_+``),
ordered by ``x >= z`` iff ``x`` lies in ``z - closure(Omega)``.  Points move
"to the future" by decreasing ``x0``; the future of ``z`` is a bounded cone
whose base is a ball in ``V_- = R^{n-1}``.

Hyperboloid model: ``y`` in R^{n+1} with ``-y0^2 + y1^2 + ... + yn^2 = 1``,
ordered by ``y >= x`` iff ``y0 >= x0`` and ``<x, y> >= 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_lorentz import as_chart_vector, lorentz_form
from .errors import ChartSingularity, DimensionMismatch, InvalidInput, NotInChartDomain

HYPERBOLOID_TOL = 1e-9
CHART_SINGULAR_TOL = 1e-12


def minkowski(u, v) -> float:
    """``-u0 v0 + u1 v1 + ... + un vn``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(-u[0] * v[0] + np.dot(u[1:], v[1:]))


def as_hyperboloid_point(y, dim: int | None = None, renormalize: bool = False) -> np.ndarray:
    """Validate ``y`` as a point of the hyperboloid in R^{n+1}.

    With ``renormalize=True`` a spacelike vector is rescaled onto the
    hyperboloid instead of rejected.
    """
    v = np.array(y, dtype=float)
    if v.ndim != 1 or v.shape[0] < 3:
        raise InvalidInput(f"hyperboloid point needs shape (n+1,) with n >= 2, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("hyperboloid point has non-finite entries")
    if dim is not None and v.shape[0] != dim + 1:
        raise DimensionMismatch(f"expected {dim + 1} coordinates, got {v.shape[0]}")
    q = minkowski(v, v)
    if renormalize:
        if q <= 0:
            raise InvalidInput("cannot renormalize a non-spacelike vector onto the hyperboloid")
        return v / np.sqrt(q)
    if abs(q - 1.0) > HYPERBOLOID_TOL * max(1.0, float(np.dot(v, v))):
        raise InvalidInput(f"point is off the hyperboloid: <y,y> = {q!r}")
    return v


def in_chart_component(x) -> bool:
    x = as_chart_vector(x)
    return bool(x[0] > 0.0)


def _require_chart(x, dim=None) -> np.ndarray:
    x = as_chart_vector(x, dim)
    if not x[0] > 0.0:
        raise NotInChartDomain(f"x0 = {x[0]!r} is not positive")
    return x


def chart_to_hyperboloid(x) -> np.ndarray:
    x = _require_chart(x)
    d = lorentz_form(x)
    y = np.empty(x.shape[0] + 1)
    y[0] = (1.0 - d) / (2.0 * x[0])
    y[1:-1] = x[1:] / x[0]
    y[-1] = (1.0 + d) / (2.0 * x[0])
    return y


def hyperboloid_to_chart(y) -> np.ndarray:
    """Inverse of :func:`chart_to_hyperboloid`.

    Points with ``y0 + yn < 0`` map to chart vectors with ``x0 < 0``, i.e.
    outside the chart component; callers that need the component check it.
    """
    y = np.asarray(y, dtype=float)
    s = y[0] + y[-1]
    if abs(s) <= CHART_SINGULAR_TOL:
        raise ChartSingularity(f"y0 + yn = {s!r}; the point is at infinity in the chart")
    x = np.empty(y.shape[0] - 1)
    x[0] = 1.0 / s
    x[1:] = y[1:-1] / s
    return x


def order_geq_hyperboloid(y, x) -> bool:
    """``y >= x`` on the hyperboloid."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if y.shape != x.shape:
        raise DimensionMismatch("hyperboloid points of different dimension")
    return bool(y[0] >= x[0] and minkowski(x, y) >= 1.0)


def future_contains(z, x, margin: float = 0.0) -> bool:
    """True iff ``x`` lies in the future of ``z`` (both chart vectors).

    ``margin`` relaxes the two closed conditions; the default is the exact
    closed predicate.
    """
    z = _require_chart(z)
    x = as_chart_vector(x, z.shape[0])
    w = z - x
    return bool(lorentz_form(w) >= -margin and w[0] >= -margin and x[0] > 0.0)


def is_causal_segment(start, end) -> bool:
    """Whether the straight segment ``start -> end`` is a causal curve.

    Its constant derivative ``end - start`` must lie in ``-closure(Omega)``.
    """
    start = _require_chart(start)
    end = _require_chart(end, start.shape[0])
    d = start - end
    return bool(lorentz_form(d) >= 0.0 and d[0] >= 0.0)


@dataclass(frozen=True)
class Ball:
    """Closed ball in R^{n-1} with finite, strictly positive radius."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(-1)
        r = float(self.radius)
        if not (np.isfinite(r) and r > 0.0):
            raise InvalidInput(f"ball radius must be finite and positive, got {r!r}")
        if not np.all(np.isfinite(c)):
            raise InvalidInput("ball center has non-finite entries")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        """Ambient chart dimension n (the ball lives in R^{n-1})."""
        return self.center.shape[0] + 1

    def contains(self, p, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.asarray(p, float) - self.center) <= self.radius + tol)

    def __eq__(self, other):
        if not isinstance(other, Ball):
            return NotImplemented
        return bool(self.radius == other.radius and np.array_equal(self.center, other.center))

    def __hash__(self):
        return hash((self.radius, self.center.tobytes()))


def future_boundary_ball(z) -> Ball:
    """The ball ``(z1, ..., z_{n-1})``, radius ``z0`` bounding the future of ``z``."""
    z = _require_chart(z)
    return Ball(z[1:], z[0])


def ball_to_future_apex(b: Ball) -> np.ndarray:
    """The chart point whose future boundary is ``b``."""
    if not isinstance(b, Ball):
        b = Ball(*b)
    return np.concatenate(([b.radius], b.center))


def segment_point(z, boundary_point, t: float) -> np.ndarray:
    """``t * (0, p) + (1 - t) * z`` on the segment from ``z`` to the boundary point ``p``."""
    return geometric_point(as_chart_vector(z), boundary_point, 1.0 - t)


def geometric_point(z, boundary_point, s: float) -> np.ndarray:
    """Segment point ``s * z + (1 - s) * (0, p)``.

    Parametrizing by the distance ``s`` to the boundary keeps full relative
    precision in ``x0`` when ``s`` is tiny.
    """
    p = np.asarray(boundary_point, dtype=float)
    out = np.empty_like(z)
    out[0] = s * z[0]
    out[1:] = p + s * (z[1:] - p)
    return out
