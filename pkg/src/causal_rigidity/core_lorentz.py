"""The spin-factor Jordan algebra on R^n with the Lorentz form.

A chart vector is a 1-d float array ``(x0, x1, ..., x_{n-1})`` with ``n >= 2``.
The product is

    (x y)_0 = x . y            (Euclidean dot product)
    (x y)_j = x0 y_j + x_j y0  (j >= 1)

with neutral element ``e = (1, 0, ..., 0)``.  All functions are pure and
return fresh arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, InvalidInput, SingularInversion

SINGULAR_TOL = 1e-12


def as_chart_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate ``x`` as a chart vector and return it as a float array."""
    v = np.array(x, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise InvalidInput(f"chart vector needs shape (n,) with n >= 2, got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInput("chart vector has non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    return v


def _pair(x, y):
    x = as_chart_vector(x)
    y = as_chart_vector(y, x.shape[0])
    return x, y


def neutral(dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[0] = 1.0
    return e


def jordan_mul(x, y) -> np.ndarray:
    x, y = _pair(x, y)
    z = x[0] * y[1:] + x[1:] * y[0]
    return np.concatenate(([np.dot(x, y)], z))


def lorentz_form(x) -> float:
    """``x0^2 - x1^2 - ... - x_{n-1}^2``."""
    x = as_chart_vector(x)
    return float(x[0] * x[0] - np.dot(x[1:], x[1:]))


def alpha(x) -> np.ndarray:
    """The involution fixing ``x0`` and negating the remaining coordinates."""
    x = as_chart_vector(x)
    out = -x
    out[0] = x[0]
    return out


def jordan_inv(x) -> np.ndarray:
    """Jordan inverse ``alpha(x) / Delta(x)``.

    Raises SingularInversion when ``|Delta(x)| <= 1e-12 * max(1, |x|^2)``.
    """
    x = as_chart_vector(x)
    d = lorentz_form(x)
    if abs(d) <= SINGULAR_TOL * max(1.0, float(np.dot(x, x))):
        raise SingularInversion(f"Delta(x) = {d!r} is too close to zero to invert")
    return alpha(x) / d


def in_cone(x, closed: bool = False, margin: float = 0.0) -> bool:
    """Membership in the Lorentz cone (open) or its closure.

    Comparisons are strict floating point; ``margin`` only widens the closed
    test (``Delta >= -margin`` and ``x0 >= -margin``).
    """
    x = as_chart_vector(x)
    d = lorentz_form(x)
    if closed:
        return bool(d >= -margin and x[0] >= -margin)
    return bool(d > 0.0 and x[0] > 0.0)


def split_parts(x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``((x + alpha x)/2, (x - alpha x)/2)``, i.e. the time and space parts."""
    x = as_chart_vector(x)
    plus = np.zeros_like(x)
    plus[0] = x[0]
    minus = x.copy()
    minus[0] = 0.0
    return plus, minus


def boost(dim: int, axis: int, rapidity: float) -> np.ndarray:
    """Lorentz boost of R^{1,dim-1} mixing coordinate 0 with coordinate ``axis``."""
    if not 1 <= axis < dim:
        raise InvalidInput(f"boost axis must lie in [1, {dim - 1}]")
    b = np.eye(dim)
    ch, sh = np.cosh(rapidity), np.sinh(rapidity)
    b[0, 0] = b[axis, axis] = ch
    b[0, axis] = b[axis, 0] = sh
    return b


def haar_orthogonal(k: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed element of O(k) (QR of a Gaussian matrix, sign-corrected)."""
    if k == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def random_cone_automorphism(dim: int, rng: np.random.Generator, n_factors: int = 4) -> np.ndarray:
    """A random element ``r * A`` of R_+ x O(1, dim-1)^+ as a dim x dim matrix."""
    a = np.eye(dim)
    for _ in range(n_factors):
        a = boost(dim, int(rng.integers(1, dim)), rng.uniform(-1.5, 1.5)) @ a
        rot = np.eye(dim)
        rot[1:, 1:] = haar_orthogonal(dim - 1, rng)
        a = rot @ a
    return np.exp(rng.uniform(-1.0, 1.0)) * a
