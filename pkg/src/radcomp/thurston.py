"""Closed-form base charts on the eight Thurston model geometries.

Each chart maps ``x in R^3`` into target coordinates: an embedding in
``R^4`` for S3, H3 and the two products, and the model's own coordinates
for E3, Nil, Sol and SL2tilde. :func:`volume_check` compares the pulled-back
Riemannian volume with Lebesgue measure.

The S3 and H3 rows of the table, ``(lambda(r) x, -+1 + r^2/2)``, satisfy the
embedding constraint but are equal-area only in two dimensions: their
volume factor is ``lambda(r)``. ``variant="volume-matched"`` replaces them
by the equal-area Lambert lift about the south pole, which has unit
Jacobian in every dimension.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charts import Chart, ball_volume_radius
from .errors import DomainError
from .manifold import ManifoldSpec

KINDS = ("E3", "S3", "H3", "S2xR", "H2xR", "Nil", "Sol", "SL2tilde")
ASSERTED = ("E3", "S3", "H3", "S2xR", "H2xR", "Nil", "Sol")
TABLE = "table"
VOLUME_MATCHED = "volume-matched"

_EUCLID4 = np.ones(4)
_LORENTZ4 = np.array([1.0, 1.0, 1.0, -1.0])
_LORENTZ_PRODUCT = np.array([1.0, 1.0, -1.0, 1.0])


def _ones(x):
    return np.ones(np.shape(x)[:-1])


@dataclass(frozen=True)
class ThurstonGeometry:
    """A model geometry and its volume density in the chart's target coordinates.

    ``metric`` is the ambient signature for embedded targets and ``None``
    when the target coordinates are the model's own.
    """

    kind: str
    volume_density: Callable
    metric: np.ndarray | None = None


GEOMETRIES = {
    "E3": ThurstonGeometry("E3", _ones),
    "S3": ThurstonGeometry("S3", _ones, _EUCLID4),
    "H3": ThurstonGeometry("H3", _ones, _LORENTZ4),
    "S2xR": ThurstonGeometry("S2xR", _ones, _EUCLID4),
    "H2xR": ThurstonGeometry("H2xR", _ones, _LORENTZ_PRODUCT),
    "Nil": ThurstonGeometry("Nil", _ones),
    "Sol": ThurstonGeometry("Sol", _ones),
    # candidate density for the Iwasawa coordinates; not asserted
    "SL2tilde": ThurstonGeometry("SL2tilde", lambda y: np.exp(2.0 * np.asarray(y)[..., 0])),
}


def geometry(kind: str) -> ThurstonGeometry:
    try:
        return GEOMETRIES[kind]
    except KeyError:
        raise DomainError(f"unknown Thurston geometry {kind!r}; expected one of {KINDS}") from None


def star_radius(kind: str, variant: str = TABLE) -> float:
    """Radius of the star domain in the first (curved) block; ``inf`` if unbounded."""
    if kind in ("S3", "S2xR"):
        if variant == VOLUME_MATCHED and kind == "S3":
            return float(ball_volume_radius(ManifoldSpec("sphere", 3), np.nextafter(math.pi, 0)))
        return 2.0
    return math.inf


def _lambert_block(x, sign):
    # azimuthal Lambert about the pole (0, ..., 0, -sign)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    if sign > 0 and np.any(r2 >= 4.0):
        raise DomainError("point outside the star domain r < 2")
    lam = np.sqrt(1.0 - sign * r2 / 4.0)
    return np.concatenate([lam * x, -sign + r2 / 2.0], axis=-1)


@functools.lru_cache(maxsize=4)
def _matched_chart(kind: str) -> Chart:
    spec = ManifoldSpec("sphere" if kind == "S3" else "hyperbolic", 3)
    pole = np.array([0.0, 0.0, 0.0, -1.0 if kind == "S3" else 1.0])
    return Chart(spec, "lambert", convention="equal-area", pole=pole)


def thurston_chart(kind: str, x, variant: str = TABLE):
    """Target coordinates of ``x`` (shape (..., 3)) under the geometry's base chart."""
    geometry(kind)
    if variant not in (TABLE, VOLUME_MATCHED):
        raise DomainError(f"unknown variant {variant!r}")
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise DomainError("Thurston charts act on R^3")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite input")
    if kind == "E3":
        return x.copy()
    if kind in ("S3", "H3"):
        if variant == VOLUME_MATCHED:
            r = np.linalg.norm(x, axis=-1)
            if np.any(r >= star_radius(kind, variant)):
                raise DomainError("point outside the star domain")
            return _matched_chart(kind).forward_vec(x)
        return _lambert_block(x, 1 if kind == "S3" else -1)
    if kind in ("S2xR", "H2xR"):
        head = _lambert_block(x[..., :2], 1 if kind == "S2xR" else -1)
        return np.concatenate([head, x[..., 2:]], axis=-1)
    a, b, c = x[..., 0], x[..., 1], x[..., 2]
    if kind == "Nil":
        return np.stack([a, b, c + a * b / 2.0], axis=-1)
    if kind == "Sol":
        return np.stack([np.exp(c / 2.0) * a, np.exp(-c / 2.0) * b, c], axis=-1)
    return np.stack([a, b * np.exp(-2.0 * a), c], axis=-1)


def volume_factor(kind: str, x, h: float = 1e-5, variant: str = TABLE):
    """Pulled-back volume per unit Lebesgue volume, by central differences.

    Embedded targets use the Gram determinant of the differential in the
    ambient signature; the others use the Euclidean Jacobian determinant
    times the volume density at the image.
    """
    geo = geometry(kind)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        cols.append((thurston_chart(kind, x + e, variant) - thurston_chart(kind, x - e, variant)) / (2 * h))
    J = np.stack(cols, axis=-1)
    if geo.metric is not None:
        gram = np.einsum("...ki,k,...kj->...ij", J, geo.metric, J)
        return np.sqrt(np.linalg.det(gram))
    det = np.abs(np.linalg.det(J))
    return det * geo.volume_density(thurston_chart(kind, x, variant))


def volume_check(kind: str, x, h: float = 1e-5, variant: str = TABLE):
    """``|volume factor - 1|`` at each point of ``x``."""
    return np.abs(volume_factor(kind, x, h, variant) - 1.0)


def random_interior_points(kind: str, n: int, rng: np.random.Generator, variant: str = TABLE):
    """Uniform points in ``[-1, 1]^3`` with the curved block kept inside 95% of its star radius."""
    x = rng.uniform(-1.0, 1.0, size=(n, 3))
    rad = star_radius(kind, variant)
    if math.isfinite(rad):
        block = 3 if kind == "S3" else 2
        # rescale so the curved block fills the ball of radius 0.95 * rad
        u = rng.standard_normal((n, block))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        r = 0.95 * rad * rng.random(n) ** (1.0 / block)
        x[:, :block] = r[:, None] * u
    return x


def min_pairwise_distance(kind: str, x, y, variant: str = TABLE) -> float:
    """Smallest image distance over paired points ``x[i]``, ``y[i]``."""
    a = thurston_chart(kind, x, variant)
    b = thurston_chart(kind, y, variant)
    return float(np.min(np.linalg.norm(a - b, axis=-1)))
