"""Constant-curvature geometry: spheres, hyperboloids and flat space.

Points live in an ambient embedding. A sphere of radius ``R_c`` sits in
R^{n+1} with ``|p| = R_c``; hyperbolic space is the upper sheet of the
hyperboloid ``<p, p>_L = -R_c^2`` in Minkowski space R^{n,1} (last
coordinate time-like and positive); flat space is plain R^n.

Tangent vectors at a pole are expressed in polar form ``(r, u)`` with
``u`` given in a deterministic orthonormal frame of the tangent space,
see :func:`tangent_frame`.

All functions broadcast over leading array axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import CutLocusError, DomainError

SPHERE = "sphere"
HYPERBOLIC = "hyperbolic"
FLAT = "flat"

_ALIASES = {
    "sphere": SPHERE,
    "spherical": SPHERE,
    "s": SPHERE,
    "hyperbolic": HYPERBOLIC,
    "hyperboloid": HYPERBOLIC,
    "h": HYPERBOLIC,
    "flat": FLAT,
    "euclidean": FLAT,
    "e": FLAT,
}

# x = r/R_c below which log(s/r) uses its even Taylor series
SERIES_SWITCH = 1e-2

# log(sin x / x) = sum_k c_k x^{2k}; for sinh multiply c_k by (-1)^k
_LOG_SRATIO_COEFFS = (
    -1.0 / 6.0,
    -1.0 / 180.0,
    -1.0 / 2835.0,
    -1.0 / 37800.0,
    -1.0 / 467775.0,
    -691.0 / 3831077250.0,
)


@dataclass(frozen=True)
class ManifoldSpec:
    """A complete, simply connected constant-curvature manifold.

    Parameters
    ----------
    kind : {"sphere", "hyperbolic", "flat"}
    n : int
        Intrinsic dimension.
    rc : float
        Curvature radius. Ignored for flat space.
    """

    kind: str
    n: int
    rc: float = 1.0

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise DomainError(f"unknown manifold kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.rc) and self.rc > 0):
            raise DomainError(f"curvature radius must be positive, got {self.rc!r}")
        object.__setattr__(self, "rc", float(self.rc))

    @property
    def curvature(self) -> float:
        if self.kind == SPHERE:
            return 1.0 / self.rc**2
        if self.kind == HYPERBOLIC:
            return -1.0 / self.rc**2
        return 0.0

    @property
    def sign(self) -> int:
        return {SPHERE: 1, HYPERBOLIC: -1, FLAT: 0}[self.kind]

    @property
    def r_max(self) -> float:
        return math.pi * self.rc if self.kind == SPHERE else math.inf

    @property
    def ambient_dim(self) -> int:
        return self.n if self.kind == FLAT else self.n + 1

    def with_rc(self, rc: float) -> "ManifoldSpec":
        return ManifoldSpec(self.kind, self.n, rc)


class TangentPolar(NamedTuple):
    """Tangent vector ``r * u`` at a pole, ``u`` in the pole's frame."""

    r: np.ndarray
    u: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.asarray(self.r)[..., None] * np.asarray(self.u)


# --------------------------------------------------------------------------
# curvature-dependent trig factors


def s_kappa(spec: ManifoldSpec, r):
    """Polar volume factor ``s_k(r)``: ``R_c sin(r/R_c)``, ``R_c sinh(r/R_c)`` or ``r``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == SPHERE:
        return spec.rc * np.sin(r / spec.rc)
    if spec.kind == HYPERBOLIC:
        return spec.rc * np.sinh(r / spec.rc)
    return r.copy()


def c_kappa(spec: ManifoldSpec, r):
    """Companion factor ``c_k(r)``: ``R_c cos``, ``R_c cosh`` or ``R_c``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == SPHERE:
        return spec.rc * np.cos(r / spec.rc)
    if spec.kind == HYPERBOLIC:
        return spec.rc * np.cosh(r / spec.rc)
    return np.full_like(r, spec.rc)


def log_sratio(spec: ManifoldSpec, r):
    """``log(s_k(r) / r)``, smooth through ``r = 0``.

    Uses a six-term even Taylor series for ``r/R_c < 1e-2``.
    """
    r = np.asarray(r, dtype=float)
    if spec.kind == FLAT:
        return np.zeros_like(r)
    x = r / spec.rc
    out = np.empty_like(x)
    small = np.abs(x) < SERIES_SWITCH
    xs = x[small]
    x2 = xs * xs
    acc = np.zeros_like(xs)
    for k in range(len(_LOG_SRATIO_COEFFS), 0, -1):
        acc = acc * x2 + _LOG_SRATIO_COEFFS[k - 1] * spec.sign**k
    out[small] = acc * x2
    xl = x[~small]
    if spec.kind == SPHERE:
        with np.errstate(divide="ignore", invalid="ignore"):
            out[~small] = np.log(np.sin(xl) / xl)
    else:
        ax = np.abs(xl)
        big = ax > 20.0
        # sinh overflows past ~710; use x - log(2x) + log1p(-e^{-2x}) there
        with np.errstate(over="ignore"):
            direct = np.log(np.sinh(np.where(big, 1.0, ax)) / np.where(big, 1.0, ax))
        asym = ax + np.log1p(-np.exp(-2 * ax)) - math.log(2.0) - np.log(ax)
        out[~small] = np.where(big, asym, direct)
    return out


def dlog_sratio(spec: ManifoldSpec, r):
    """Radial derivative ``d/dr log(s_k(r)/r)``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == FLAT:
        return np.zeros_like(r)
    x = r / spec.rc
    out = np.empty_like(x)
    small = np.abs(x) < SERIES_SWITCH
    xs = x[small]
    x2 = xs * xs
    acc = np.zeros_like(xs)
    # d/dx sum c_k x^{2k} = sum 2k c_k x^{2k-1}
    for k in range(len(_LOG_SRATIO_COEFFS), 0, -1):
        acc = acc * x2 + 2 * k * _LOG_SRATIO_COEFFS[k - 1] * spec.sign**k
    out[small] = acc * xs
    xl = x[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind == SPHERE:
            out[~small] = 1.0 / np.tan(xl) - 1.0 / xl
        else:
            out[~small] = 1.0 / np.tanh(xl) - 1.0 / xl
    return out / spec.rc


def d2log_sratio(spec: ManifoldSpec, r):
    """Second radial derivative of ``log(s_k(r)/r)``."""
    r = np.asarray(r, dtype=float)
    if spec.kind == FLAT:
        return np.zeros_like(r)
    x = r / spec.rc
    out = np.empty_like(x)
    small = np.abs(x) < SERIES_SWITCH
    xs = x[small]
    x2 = xs * xs
    acc = np.zeros_like(xs)
    for k in range(len(_LOG_SRATIO_COEFFS), 0, -1):
        acc = acc * x2 + 2 * k * (2 * k - 1) * _LOG_SRATIO_COEFFS[k - 1] * spec.sign**k
    out[small] = acc
    xl = x[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        if spec.kind == SPHERE:
            out[~small] = -1.0 / np.sin(xl) ** 2 + 1.0 / xl**2
        else:
            out[~small] = -1.0 / np.sinh(xl) ** 2 + 1.0 / xl**2
    return out / spec.rc**2


def ars(spec: ManifoldSpec, z):
    """``arcsin`` on the sphere, ``arsinh`` on hyperbolic space, identity if flat."""
    z = np.asarray(z, dtype=float)
    if spec.kind == SPHERE:
        if np.any(np.abs(z) > 1.0):
            raise DomainError("ars: |z| > 1 on the sphere")
        return np.arcsin(z)
    if spec.kind == HYPERBOLIC:
        return np.arcsinh(z)
    return z.copy()


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def log_polar_volume(spec: ManifoldSpec, r):
    """``log(A_{n-1} s_k(r)^{n-1})``: log-area of the geodesic sphere of radius r."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return math.log(unit_sphere_area(spec.n)) + (spec.n - 1) * np.log(s_kappa(spec, r))


# --------------------------------------------------------------------------
# embedding, frames, exp/log


def minkowski_inner(a, b):
    """Lorentzian inner product with the last coordinate time-like."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a[..., :-1] * b[..., :-1], axis=-1) - a[..., -1] * b[..., -1]


def _inner(spec: ManifoldSpec, a, b):
    if spec.kind == HYPERBOLIC:
        return minkowski_inner(a, b)
    return np.sum(np.asarray(a) * np.asarray(b), axis=-1)


def default_pole(spec: ManifoldSpec) -> np.ndarray:
    """North pole ``(0, ..., 0, R_c)``; the origin for flat space."""
    if spec.kind == FLAT:
        return np.zeros(spec.n)
    p = np.zeros(spec.n + 1)
    p[-1] = spec.rc
    return p


def south_pole(spec: ManifoldSpec) -> np.ndarray:
    if spec.kind != SPHERE:
        raise DomainError("antipodal pole only exists on the sphere")
    return -default_pole(spec)


def project(spec: ManifoldSpec, p):
    """Renormalize ambient coordinates onto the manifold."""
    p = np.array(p, dtype=float)
    if p.shape[-1] != spec.ambient_dim:
        raise DomainError(f"expected ambient dimension {spec.ambient_dim}, got {p.shape[-1]}")
    if spec.kind == SPHERE:
        return spec.rc * p / np.linalg.norm(p, axis=-1, keepdims=True)
    if spec.kind == HYPERBOLIC:
        space = p[..., :-1]
        p[..., -1] = np.sqrt(spec.rc**2 + np.sum(space * space, axis=-1))
        return p
    return p


def embedding_residual(spec: ManifoldSpec, p):
    """Violation of the embedding constraint (0 for exact points)."""
    p = np.asarray(p, dtype=float)
    if spec.kind == SPHERE:
        return np.abs(np.linalg.norm(p, axis=-1) - spec.rc)
    if spec.kind == HYPERBOLIC:
        return np.abs(minkowski_inner(p, p) + spec.rc**2) + np.where(p[..., -1] > 0, 0.0, np.inf)
    return np.zeros(p.shape[:-1])


def tangent_frame(spec: ManifoldSpec, pole) -> np.ndarray:
    """Orthonormal tangent frame at ``pole`` as an ``(n, ambient)`` array.

    Gram-Schmidt on the standard basis (in the manifold's ambient inner
    product), so the frame is a deterministic function of the pole.
    """
    pole = np.asarray(pole, dtype=float)
    if spec.kind == FLAT:
        return np.eye(spec.n)
    dim = spec.n + 1
    frame = []
    for i in range(dim):
        v = np.zeros(dim)
        v[i] = 1.0
        if spec.kind == SPHERE:
            v = v - (v @ pole) / spec.rc**2 * pole
        else:
            v = v + minkowski_inner(v, pole) / spec.rc**2 * pole
        for e in frame:
            v = v - _inner(spec, v, e) * e
        nrm2 = _inner(spec, v, v)
        if nrm2 > 1e-10:
            frame.append(v / math.sqrt(nrm2))
        if len(frame) == spec.n:
            break
    return np.array(frame)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DomainError("non-finite input")


def exp_map(spec: ManifoldSpec, pole, r, u):
    """Point at geodesic distance ``r`` from ``pole`` in frame direction ``u``.

    Parameters
    ----------
    r : array_like, shape (...)
    u : array_like, shape (..., n)
        Unit directions in the frame of :func:`tangent_frame`.
    """
    pole = np.asarray(pole, dtype=float)
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_finite(pole, r, u)
    if np.any(r < 0):
        raise DomainError("tangent radius must be nonnegative")
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    frame = tangent_frame(spec, pole)
    v = u @ frame
    rr = r[..., None]
    if spec.kind == SPHERE:
        x = rr / spec.rc
        q = np.cos(x) * pole + spec.rc * np.sin(x) * v
    elif spec.kind == HYPERBOLIC:
        x = rr / spec.rc
        q = np.cosh(x) * pole + spec.rc * np.sinh(x) * v
    else:
        q = pole + rr * v
    return project(spec, q)


def _distance_and_normal(spec: ManifoldSpec, p, q):
    """Geodesic distance plus the (unnormalized) initial direction at p."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if spec.kind == FLAT:
        w = q - p
        return np.linalg.norm(w, axis=-1), w
    rc2 = spec.rc**2
    if spec.kind == SPHERE:
        c = np.clip(np.sum(p * q, axis=-1) / rc2, -1.0, 1.0)
        w = q - c[..., None] * p
        sin_part = np.linalg.norm(w, axis=-1) / spec.rc
        # atan2 keeps full relative accuracy near 0 and pi
        return spec.rc * np.arctan2(sin_part, c), w
    c = np.maximum(-minkowski_inner(p, q) / rc2, 1.0)
    w = q - c[..., None] * p
    sinh_part = np.sqrt(np.maximum(minkowski_inner(w, w), 0.0)) / spec.rc
    d = np.where(c < 2.0, np.arcsinh(sinh_part), np.arccosh(c))
    return spec.rc * d, w


def geodesic_distance(spec: ManifoldSpec, p, q):
    """Geodesic distance between embedded points (broadcasting)."""
    return _distance_and_normal(spec, p, q)[0]


def log_map(spec: ManifoldSpec, pole, q) -> TangentPolar:
    """Inverse of :func:`exp_map`; raises :class:`CutLocusError` near the antipode."""
    pole = np.asarray(pole, dtype=float)
    q = np.asarray(q, dtype=float)
    _check_finite(pole, q)
    r, w = _distance_and_normal(spec, pole, q)
    if spec.kind == SPHERE and np.any(r >= spec.r_max - 1e-9):
        raise CutLocusError("point lies on the cut locus of the pole")
    frame = tangent_frame(spec, pole)
    if spec.kind == HYPERBOLIC:
        coords = minkowski_inner(w[..., None, :], frame)
    else:
        coords = w @ frame.T
    nrm = np.linalg.norm(coords, axis=-1, keepdims=True)
    e1 = np.zeros(spec.n)
    e1[0] = 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(nrm > 0, coords / np.where(nrm > 0, nrm, 1.0), e1)
    return TangentPolar(np.asarray(r), u)


def sample_uniform_direction(n: int, rng: np.random.Generator, size=None):
    """Uniform draws on S^{n-1} by normalizing standard normals.

    Returns shape ``(n,)`` when ``size`` is None, else ``(size, n)``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    shape = (n,) if size is None else (size, n)
    z = rng.standard_normal(shape)
    nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    while np.any(nrm == 0):  # pragma: no cover - probability zero
        bad = (nrm == 0)[..., 0]
        z[bad] = rng.standard_normal((int(np.sum(bad)), n))
        nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    return z / nrm
