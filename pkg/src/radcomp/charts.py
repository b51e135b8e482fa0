"""Scalar-Jacobian azimuthal charts built as Lambert lifts.

A chart sends a tangent vector ``r u`` at the pole to the point at
geodesic distance ``R_T(r)`` in direction ``u``. All charts here are
Lambert lifts ``T_rho = L o (rho(r) u)``: the radial profile ``rho``
reprofiles the tangent radius and an equal-area base chart ``L`` turns a
profile value into a geodesic radius.

Two conventions exist for the base chart's radius map:

``"paper"``
    ``R = 2 R_c ars(rho / (2 R_c))``, the azimuthal Lambert radius map.
    It is equal-area only for ``n = 2``.
``"equal-area"``
    ``R = V^{-1}(rho)`` with ``V(R)^n = n int_0^R s_k(t)^{n-1} dt``, the
    geodesic-ball volume match. Equal-area for every ``n``.

Both agree at ``n = 2``. The default is ``"paper"`` for ``n <= 2`` and
``"equal-area"`` otherwise. :func:`jacobian_consistency_check` measures
how far a chart's declared log-determinant is from the Riemannian one.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import manifold as mf
from .errors import ConvergenceError, CutLocusError, DomainError
from .manifold import FLAT, HYPERBOLIC, SPHERE, ManifoldSpec

PAPER = "paper"
EQUAL_AREA = "equal-area"

EXP = "exp"
LAMBERT = "lambert"
BEXP = "bexp"
GCL = "gcl"

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


# --------------------------------------------------------------------------
# bExp radial profile


class BExpProfile:
    """Radial profile ``rho_alpha`` of the balanced-exponential chart.

    ``rho^n(r) = n int_0^r t^{n-1} (s_k(t)/t)^{(n-1) alpha} dt``, evaluated by
    composite Gauss-Legendre quadrature on panels that are graded
    geometrically toward the sphere's cut radius, where the integrand has
    a fractional-power zero. The derivative comes from the ODE
    ``(rho/r)^{n-1} rho' = (s_k(r)/r)^{(n-1) alpha}``.
    """

    def __init__(self, spec: ManifoldSpec, alpha: float):
        if not 0.0 <= alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
        self.spec = spec
        self.alpha = float(alpha)
        self.n = spec.n
        self.trivial = self.alpha == 0.0 or spec.n == 1 or spec.kind == FLAT
        self._table = None
        if not self.trivial:
            if spec.kind == SPHERE:
                half = 0.5 * math.pi * spec.rc
                inner = np.linspace(0.0, half, 17)
                outer = math.pi * spec.rc - half * 0.5 ** np.arange(1, 49)
                self._build(np.concatenate([inner, outer]))
            else:
                self._build(np.arange(0.0, 8.0 * spec.rc + 1e-12, 0.25 * spec.rc))

    def _integrand(self, t):
        t = np.asarray(t, dtype=float)
        e = (self.n - 1) * self.alpha
        return t ** (self.n - 1) * np.exp(e * mf.log_sratio(self.spec, t))

    def _panel(self, a, b):
        """Gauss-Legendre integral of the integrand over ``[a, b]`` (arrays)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        half = 0.5 * (b - a)
        t = a[..., None] + half[..., None] * (_GL_NODES + 1.0)
        return half * np.sum(_GL_WEIGHTS * self._integrand(t), axis=-1)

    def _build(self, edges):
        # edges and cumulative integrals are swapped in as one tuple so that
        # concurrent readers never see a mismatched pair
        cum = np.concatenate([[0.0], np.cumsum(self._panel(edges[:-1], edges[1:]))])
        self._table = (edges, cum)

    def _extend(self, r_hi):
        # hyperbolic space only: grow the uniform panel grid to cover r_hi
        step = 0.25 * self.spec.rc
        top = self._table[0][-1]
        while top < r_hi:
            top = 2.0 * top
        self._build(np.arange(0.0, top + 0.5 * step, step))

    def power(self, r):
        """``rho(r)^n``."""
        r = np.asarray(r, dtype=float)
        if self.trivial:
            return r**self.n
        if np.any(r < 0) or np.any(r >= self.spec.r_max):
            raise DomainError("profile radius outside [0, R_max)")
        if r.size and np.max(r) > self._table[0][-1]:
            self._extend(float(np.max(r)))
        edges, cum = self._table
        k = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
        return self.n * (cum[k] + self._panel(edges[k], r))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.trivial:
            if np.any(r < 0) or np.any(r >= self.spec.r_max):
                raise DomainError("profile radius outside [0, R_max)")
            return r.copy()
        return self.power(r) ** (1.0 / self.n)

    def log_ratio(self, r):
        """``log(rho(r)/r)``, equal to 0 at ``r = 0``."""
        r = np.asarray(r, dtype=float)
        if self.trivial:
            return np.zeros_like(r)
        rho = self(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(rho / r)
        return np.where(r > 0, out, 0.0)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.trivial:
            return np.ones_like(r)
        e = (self.n - 1) * (self.alpha * mf.log_sratio(self.spec, r) - self.log_ratio(r))
        return np.exp(e)


@functools.lru_cache(maxsize=64)
def _profile(spec: ManifoldSpec, alpha: float) -> BExpProfile:
    return BExpProfile(spec, alpha)


def bexp_profile(spec: ManifoldSpec, alpha: float, r):
    """``rho_alpha(r)`` for the balanced-exponential chart."""
    return _profile(spec, float(alpha))(r)


def bexp_profile_deriv(spec: ManifoldSpec, alpha: float, r):
    """``rho_alpha'(r)`` from the defining ODE."""
    return _profile(spec, float(alpha)).deriv(r)


def ball_volume_radius(spec: ManifoldSpec, R):
    """``V(R) = [n int_0^R s_k^{n-1}]^{1/n}``; equals the ``alpha = 1`` profile."""
    return bexp_profile(spec, 1.0, R)


# --------------------------------------------------------------------------
# monotone inversion


def invert_increasing(f, fprime, y, lo, hi, tol=1e-12, max_iter=200):
    """Solve ``f(x) = y`` elementwise for increasing ``f`` on ``[lo, hi]``.

    Bisection shrinks each bracket below ``1e-6``, then safeguarded Newton
    polishes to ``tol``. ``hi`` may be ``inf``; the bracket is then grown
    by doubling.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    lo = np.broadcast_to(np.asarray(lo, dtype=float), y.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), y.shape).copy()
    inf = ~np.isfinite(hi)
    if np.any(inf):
        guess = np.maximum(2.0 * np.abs(y[inf]), 1.0)
        for _ in range(200):
            short = f(guess) < y[inf]
            if not np.any(short):
                break
            guess = np.where(short, 2.0 * guess, guess)
        else:
            raise ConvergenceError("could not bracket the root")
        hi[inf] = guess
    for _ in range(max_iter):
        width = hi - lo
        active = width > 1e-6 * np.maximum(1.0, np.abs(hi))
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        above = f(mid) >= y
        hi = np.where(active & above, mid, hi)
        lo = np.where(active & ~above, mid, lo)
    x = 0.5 * (lo + hi)
    for _ in range(50):
        d = fprime(x)
        step = (f(x) - y) / d
        new = np.clip(x - step, lo, hi)
        done = np.abs(new - x) <= tol * np.maximum(1.0, np.abs(x))
        x = new
        if np.all(done):
            return x
    resid = np.abs(f(x) - y)
    if np.all(resid <= 1e3 * tol * np.maximum(1.0, np.abs(y))):
        return x
    raise ConvergenceError("Newton polish did not converge")


# --------------------------------------------------------------------------
# profiles as first-class values


@dataclass(frozen=True)
class RadialProfile:
    """A radial profile ``rho`` with its derivative on ``[0, domain)``."""

    eval: Callable
    deriv: Callable
    domain: float = math.inf

    def check_admissible(self, n_grid: int = 2001, upper: float | None = None) -> bool:
        hi = upper if upper is not None else min(self.domain, 10.0)
        r = np.linspace(0.0, hi, n_grid, endpoint=upper is not None)[1:]
        rho0 = float(self.eval(0.0))
        d0 = float(self.deriv(0.0))
        d = np.asarray(self.deriv(r))
        return abs(rho0) < 1e-12 and abs(d0 - 1.0) < 1e-8 and bool(np.all(d > 0))


# --------------------------------------------------------------------------
# charts


class Chart:
    """Scalar-Jacobian azimuthal chart about ``pole``.

    Parameters
    ----------
    spec : ManifoldSpec
    kind : {"exp", "lambert", "bexp", "gcl"}
    alpha : float, optional
        Dial of the bExp chart. ``lambert`` is ``bexp`` with ``alpha = 0``.
    convention : {"paper", "equal-area"}, optional
    pole : array_like, optional
        Defaults to :func:`radcomp.manifold.default_pole`.
    """

    def __init__(self, spec, kind, alpha=None, convention=None, pole=None):
        kind = str(kind).lower()
        if kind not in (EXP, LAMBERT, BEXP, GCL):
            raise DomainError(f"unknown chart kind {kind!r}")
        if kind == LAMBERT:
            alpha = 0.0
        if kind == BEXP:
            if alpha is None:
                raise DomainError("bexp chart needs alpha")
            alpha = float(alpha)
            if not 0.0 <= alpha <= 1.0:
                raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
        elif kind != LAMBERT:
            alpha = None
        if convention is None:
            convention = PAPER if spec.n <= 2 else EQUAL_AREA
        if convention not in (PAPER, EQUAL_AREA):
            raise DomainError(f"unknown base convention {convention!r}")
        self.spec = spec
        self.kind = kind
        self.alpha = alpha
        self.convention = convention
        self.pole = mf.default_pole(spec) if pole is None else mf.project(spec, pole)
        self._r_dom = None

    def __repr__(self):
        a = "" if self.alpha is None else f", alpha={self.alpha}"
        return f"Chart({self.kind}{a}, {self.spec}, convention={self.convention!r})"

    def label(self) -> str:
        if self.kind == BEXP:
            return f"bexp:alpha={self.alpha:g}"
        return self.kind

    def with_pole(self, pole) -> "Chart":
        return Chart(self.spec, self.kind, self.alpha, self.convention, pole)

    # -- profile -------------------------------------------------------

    def profile(self, r):
        """Radial profile ``rho(r)`` of the Lambert lift."""
        spec = self.spec
        r = np.asarray(r, dtype=float)
        if self.kind in (LAMBERT, BEXP):
            return bexp_profile(spec, self.alpha, r)
        # exp and gcl share the point map R_T(r) = r
        if self.convention == PAPER or spec.n <= 2:
            return 2.0 * mf.s_kappa(spec, 0.5 * r)
        return ball_volume_radius(spec, r)

    def profile_deriv(self, r):
        spec = self.spec
        r = np.asarray(r, dtype=float)
        if self.kind in (LAMBERT, BEXP):
            return bexp_profile_deriv(spec, self.alpha, r)
        if self.convention == PAPER or spec.n <= 2:
            return mf.c_kappa(spec, 0.5 * r) / spec.rc
        return bexp_profile_deriv(spec, 1.0, r)

    def as_radial_profile(self) -> RadialProfile:
        return RadialProfile(self.profile, self.profile_deriv, self.domain)

    @property
    def profile_max(self) -> float:
        """Largest profile value the base chart can map (``rho_*``)."""
        spec = self.spec
        if spec.kind != SPHERE:
            return math.inf
        if self.convention == PAPER:
            return 2.0 * spec.rc
        return float(ball_volume_radius(spec, np.nextafter(spec.r_max, 0.0)))

    # -- base chart radius map -----------------------------------------

    def base_radius(self, rho):
        """Geodesic radius of the base chart at profile value ``rho``."""
        spec = self.spec
        rho = np.asarray(rho, dtype=float)
        if spec.kind == FLAT:
            return rho.copy()
        if self.convention == PAPER:
            z = rho / (2.0 * spec.rc)
            if spec.kind == SPHERE and np.any(z > 1.0):
                raise DomainError("profile value exceeds the Lambert disk (rho > 2 R_c)")
            return 2.0 * spec.rc * mf.ars(spec, z)
        if spec.kind == SPHERE and np.any(rho > self.profile_max * (1 + 1e-14)):
            raise DomainError("profile value exceeds the sphere's volume radius")
        hi = spec.r_max if spec.kind == SPHERE else math.inf
        hi = np.nextafter(hi, 0.0) if math.isfinite(hi) else hi
        flat = rho.reshape(-1)
        out = invert_increasing(
            lambda R: ball_volume_radius(spec, R),
            lambda R: bexp_profile_deriv(spec, 1.0, R),
            flat,
            0.0,
            hi,
        )
        return out.reshape(rho.shape)

    def base_radius_deriv(self, rho):
        spec = self.spec
        rho = np.asarray(rho, dtype=float)
        if spec.kind == FLAT:
            return np.ones_like(rho)
        if self.convention == PAPER:
            z = rho / (2.0 * spec.rc)
            return 1.0 / np.sqrt(1.0 - spec.sign * z * z)
        return 1.0 / bexp_profile_deriv(spec, 1.0, self.base_radius(rho))

    # -- radius map ----------------------------------------------------

    @property
    def domain(self) -> float:
        """Supremum of admissible tangent radii."""
        if self._r_dom is None:
            spec = self.spec
            if spec.kind != SPHERE or self.kind in (EXP, GCL):
                self._r_dom = spec.r_max
            else:
                rho_star = self.profile_max
                top = np.nextafter(spec.r_max, 0.0)
                if float(self.profile(top)) <= rho_star:
                    self._r_dom = spec.r_max
                elif self.kind == LAMBERT or self.alpha == 0.0:
                    self._r_dom = rho_star
                else:
                    self._r_dom = float(
                        invert_increasing(self.profile, self.profile_deriv, [rho_star], 0.0, top)[0]
                    )
        return self._r_dom

    def _check_r(self, r):
        if np.any(r < 0) or np.any(~np.isfinite(r)):
            raise DomainError("tangent radius must be finite and nonnegative")
        if np.any(r >= self.spec.r_max):
            raise DomainError("tangent radius beyond R_max")

    def radius_map(self, r):
        """Geodesic radius ``R_T(r) = d(p, T(r u))``."""
        r = np.asarray(r, dtype=float)
        self._check_r(r)
        if self.kind == EXP:
            return r.copy()
        return self.base_radius(self.profile(r))

    def radius_map_deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == EXP:
            return np.ones_like(r)
        return self.base_radius_deriv(self.profile(r)) * self.profile_deriv(r)

    def radius_map_inverse(self, R):
        """Tangent radius whose image lies at geodesic radius ``R``."""
        R = np.asarray(R, dtype=float)
        spec = self.spec
        if np.any(R < 0) or np.any(R >= spec.r_max):
            raise DomainError("geodesic radius outside [0, R_max)")
        if self.kind in (EXP, GCL):
            return R.copy()
        if spec.kind == SPHERE and self.domain == spec.r_max:
            R_top = float(self.radius_map(np.nextafter(spec.r_max, 0.0)))
            if np.any(R > R_top):
                raise DomainError("geodesic radius beyond the chart's image")
        # invert the base chart first, then the profile
        if self.convention == PAPER or spec.n <= 2 or spec.kind == FLAT:
            rho = 2.0 * mf.s_kappa(spec, 0.5 * R) if spec.kind != FLAT else R.copy()
        else:
            rho = ball_volume_radius(spec, R)
        if self.alpha == 0.0 or spec.kind == FLAT:
            return rho
        flat = rho.reshape(-1)
        hi = self.domain
        hi = np.nextafter(hi, 0.0) if math.isfinite(hi) else hi
        out = invert_increasing(self.profile, self.profile_deriv, flat, 0.0, hi)
        return out.reshape(R.shape)

    # -- log-determinant -----------------------------------------------

    def log_det(self, r):
        """Declared scalar ``log|det DT|`` at tangent radius ``r``."""
        spec = self.spec
        r = np.asarray(r, dtype=float)
        n = spec.n
        if self.kind == EXP:
            return (n - 1) * mf.log_sratio(spec, r)
        if self.kind in (LAMBERT, BEXP):
            return (n - 1) * self.alpha * mf.log_sratio(spec, r)
        if self.convention == PAPER:
            half = 0.5 * r
            with np.errstate(divide="ignore"):
                return (n - 1) * mf.log_sratio(spec, half) + np.log(mf.c_kappa(spec, half) / spec.rc)
        return (n - 1) * mf.log_sratio(spec, r)

    # -- point maps ----------------------------------------------------

    def forward(self, r, u):
        """Point ``T(r u)`` on the manifold."""
        return mf.exp_map(self.spec, self.pole, self.radius_map(r), u)

    def forward_vec(self, x):
        """Point ``T(x)`` for Cartesian tangent coordinates ``x`` of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        e1 = np.zeros(self.spec.n)
        e1[0] = 1.0
        safe = np.where(r > 0, r, 1.0)[..., None]
        u = np.where(r[..., None] > 0, x / safe, e1)
        return self.forward(r, u)

    def inverse(self, q) -> mf.TangentPolar:
        """Polar tangent coordinates of ``q``."""
        pol = mf.log_map(self.spec, self.pole, q)
        return mf.TangentPolar(self.radius_map_inverse(pol.r), pol.u)


def make_chart(spec: ManifoldSpec, text: str, convention: str | None = None, pole=None) -> Chart:
    """Parse ``exp``, ``lambert``, ``bexp:alpha=0.5`` or ``gcl``."""
    head, _, body = str(text).strip().partition(":")
    head = head.strip().lower()
    alpha = None
    if body.strip():
        key, eq, val = body.partition("=")
        if key.strip().lower() != "alpha" or not eq:
            raise DomainError(f"bad chart parameter {body!r}")
        try:
            alpha = float(val)
        except ValueError:
            raise DomainError(f"bad alpha value {val!r}") from None
    if head == BEXP and alpha is None:
        raise DomainError("bexp chart needs alpha, e.g. bexp:alpha=0.5")
    if head != BEXP and alpha is not None:
        raise DomainError(f"chart {head!r} takes no parameters")
    return Chart(spec, head, alpha, convention, pole)


# --------------------------------------------------------------------------
# diagnostics on charts


def jacobian_consistency_check(chart: Chart, r, h: float = 1e-6):
    """Declared log-det minus the Riemannian polar log-Jacobian.

    The Riemannian value is ``(n-1) log(s_k(R_T(r))/r) + log R_T'(r)``
    with ``R_T'`` taken by central differences.
    """
    spec = chart.spec
    r = np.asarray(r, dtype=float)
    step = h * np.maximum(r, 1.0)
    d = (chart.radius_map(r + step) - chart.radius_map(r - step)) / (2 * step)
    R = chart.radius_map(r)
    true = (spec.n - 1) * np.log(mf.s_kappa(spec, R) / r) + np.log(d)
    return chart.log_det(r) - true


def numerical_log_jacobian(chart: Chart, x, h: float = 1e-6):
    """``log|det DT(x)|`` from central differences of the forward map.

    The determinant is the volume of the pushed-forward coordinate frame,
    ``sqrt(det(J^T G J))`` with ``G`` the ambient (Euclidean or Minkowski)
    inner product restricted to the tangent plane.
    """
    spec = chart.spec
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(spec.n):
        e = np.zeros(spec.n)
        e[k] = h
        cols.append((chart.forward_vec(x + e) - chart.forward_vec(x - e)) / (2 * h))
    J = np.stack(cols, axis=-1)
    metric = np.ones(J.shape[-2])
    if spec.kind == HYPERBOLIC:
        metric[-1] = -1.0
    gram = np.einsum("...ki,k,...kj->...ij", J, metric, J)
    return 0.5 * np.log(np.linalg.det(gram))


def geodesic_mismatch(chart: Chart, r):
    """``|R_T(r) - r|``."""
    r = np.asarray(r, dtype=float)
    return np.abs(chart.radius_map(r) - r)


def lambert_geodesic(spec: ManifoldSpec, rho):
    """``G(rho) = 2 R_c ars(rho / (2 R_c))``."""
    rho = np.asarray(rho, dtype=float)
    if spec.kind == FLAT:
        return rho.copy()
    return 2.0 * spec.rc * mf.ars(spec, rho / (2.0 * spec.rc))


def variational_energy(spec: ManifoldSpec, alpha: float, profile: RadialProfile, r_star: float) -> float:
    """Volume/geodesic trade-off energy of a radial profile on ``[0, r_star]``.

    ``(1-a) int r^{n-1} [(n-1) log(rho/r) + log rho']^2 dr
    + a int r^{n-1} [G(rho) - r]^2 dr``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if not r_star < spec.r_max:
        raise DomainError("r_star must be below R_max")
    n = spec.n

    def vol(r):
        rho = float(profile.eval(r))
        d = float(profile.deriv(r))
        if rho <= 0 or d <= 0:
            raise DomainError("profile is not increasing")
        return r ** (n - 1) * ((n - 1) * math.log(rho / r) + math.log(d)) ** 2

    def geo(r):
        rho = float(profile.eval(r))
        return r ** (n - 1) * (float(lambert_geodesic(spec, rho)) - r) ** 2

    opts = dict(epsabs=1e-15, epsrel=1e-11, limit=400)
    total = 0.0
    if alpha < 1.0:
        total += (1.0 - alpha) * integrate.quad(vol, 0.0, r_star, **opts)[0]
    if alpha > 0.0:
        total += alpha * integrate.quad(geo, 0.0, r_star, **opts)[0]
    return total


def bilipschitz_constants(chart: Chart, delta: float, R: float, n_grid: int = 4001):
    """Lower and upper Lipschitz constants of the chart on the shell ``[delta, R]``.

    Uses the polar singular values of the differential: ``R_T'(r)``
    radially and ``s_k(R_T(r))/r`` in the ``n - 1`` angular directions.
    """
    if not 0 < delta < R < chart.domain:
        raise DomainError("need 0 < delta < R < chart domain")
    r = np.linspace(delta, R, n_grid)
    radial = chart.radius_map_deriv(r)
    sv = [radial]
    if chart.spec.n > 1:
        sv.append(mf.s_kappa(chart.spec, chart.radius_map(r)) / r)
    sv = np.concatenate(sv)
    return float(np.min(sv)), float(np.max(sv))


def log_det_radial_derivative(chart: Chart, r, h: float = 1e-7):
    r = np.asarray(r, dtype=float)
    step = h * np.maximum(r, 1.0)
    return (chart.log_det(r + step) - chart.log_det(r - step)) / (2 * step)


def cutlocus_blowup_rate(chart: Chart, r_grid) -> float:
    """Log-log slope of ``|d/dr log_det|`` against the distance to the cut radius.

    Only meaningful on the sphere; a divergence like ``c / (pi R_c - r)``
    gives slope ``-1``.
    """
    spec = chart.spec
    if spec.kind != SPHERE:
        raise DomainError("no cut locus: R_max is infinite")
    r = np.asarray(r_grid, dtype=float)
    if np.any(r >= spec.r_max) or np.any(r <= 0):
        raise DomainError("grid must lie inside (0, pi R_c)")
    g = np.abs(log_det_radial_derivative(chart, r))
    slope, _ = np.polyfit(np.log(spec.r_max - r), np.log(g), 1)
    return float(slope)


# --------------------------------------------------------------------------
# two-chart atlas on the sphere


def _bump_f(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def smooth_step(t):
    """C-infinity monotone step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = _bump_f(t)
    b = _bump_f(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class AtlasGate:
    """Smooth partition of unity for the antipodal two-chart atlas.

    ``psi_plus`` is 1 near the north pole and vanishes within ``delta`` of
    the north chart's cut locus (the south pole); ``psi_minus = 1 - psi_plus``.
    """

    delta: float
    width: float

    def __post_init__(self):
        if not (self.delta > 0 and self.width > 0):
            raise DomainError("delta and width must be positive")

    def check(self, spec: ManifoldSpec):
        if spec.kind != SPHERE:
            raise DomainError("the two-chart atlas lives on the sphere")
        if self.width + 2 * self.delta >= math.pi * spec.rc:
            raise DomainError("gate width too large: need width + 2 delta < pi R_c")

    def psi_plus(self, spec: ManifoldSpec, q, north=None):
        self.check(spec)
        north = mf.default_pole(spec) if north is None else north
        R = mf.geodesic_distance(spec, north, q)
        return smooth_step((spec.r_max - self.delta - R) / self.width)

    def psi_minus(self, spec: ManifoldSpec, q, north=None):
        return 1.0 - self.psi_plus(spec, q, north)

    def seam_radius(self, spec: ManifoldSpec) -> float:
        """Distance from the north pole where both gates equal 1/2."""
        return spec.r_max - self.delta - 0.5 * self.width


def atlas_log_density(gate: AtlasGate, model_north, model_south, q):
    """Gate-weighted blend of two chart-wise log densities.

    Each model must expose ``spec``, ``pole`` and ``log_density_volume(q)``.
    A chart is only evaluated where its gate weight is nonzero.
    """
    spec = model_north.spec
    q = np.asarray(q, dtype=float)
    pts = q.reshape(-1, q.shape[-1])
    wp = np.atleast_1d(gate.psi_plus(spec, pts, model_north.pole))
    wm = 1.0 - wp
    out = np.zeros(len(pts))
    on_p = wp > 0
    on_m = wm > 0
    if np.any(on_p):
        out[on_p] += wp[on_p] * np.atleast_1d(model_north.log_density_volume(pts[on_p]))
    if np.any(on_m):
        out[on_m] += wm[on_m] * np.atleast_1d(model_south.log_density_volume(pts[on_m]))
    return out.reshape(q.shape[:-1]) if q.ndim > 1 else float(out[0])


def manifold_gradient(spec: ManifoldSpec, func, q, h: float = 1e-5):
    """Riemannian gradient norm of a scalar function at points ``q`` by central differences."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    out = np.empty(len(q))
    for i, point in enumerate(q):
        grads = []
        for k in range(spec.n):
            u = np.zeros(spec.n)
            u[k] = 1.0
            fp = func(mf.exp_map(spec, point, h, u))
            fm = func(mf.exp_map(spec, point, h, -u))
            grads.append((fp - fm) / (2 * h))
        out[i] = math.sqrt(sum(g * g for g in grads))
    return out


def atlas_gradient_sup(gate: AtlasGate, model_north, model_south, band, n_grid: int = 64):
    """Sup of ``|grad log p|`` over the band ``band[0] <= R <= band[1]`` (``n = 2``)."""
    spec = model_north.spec
    if spec.n != 2:
        raise DomainError("gradient sweep is implemented for n = 2")
    lo, hi = band
    radii = np.linspace(lo, hi, n_grid)
    angles = np.linspace(0.0, 2 * math.pi, n_grid, endpoint=False)
    rr, aa = np.meshgrid(radii, angles)
    u = np.stack([np.cos(aa), np.sin(aa)], axis=-1)
    pts = mf.exp_map(spec, model_north.pole, rr.ravel(), u.reshape(-1, 2))
    f = lambda x: atlas_log_density(gate, model_north, model_south, x)
    return float(np.max(manifold_gradient(spec, f, pts)))


def atlas_seam_gradient_jump(gate: AtlasGate, model_north, model_south, n_dirs: int = 8, h: float = 1e-4) -> float:
    """Largest mismatch of one-sided radial derivatives of the blended log density at the seam.

    Second-order one-sided stencils are taken along meridians through the
    seam circle at ``n_dirs`` longitudes (``n = 2``).
    """
    spec = model_north.spec
    if spec.n != 2:
        raise DomainError("seam check is implemented for n = 2")
    R0 = gate.seam_radius(spec)
    f = lambda R, u: atlas_log_density(gate, model_north, model_south, mf.exp_map(spec, model_north.pole, R, u))
    worst = 0.0
    for t in np.linspace(0.0, 2 * math.pi, n_dirs, endpoint=False):
        u = np.array([math.cos(t), math.sin(t)])
        f0, fp1, fp2 = (f(R0 + k * h, u) for k in (0, 1, 2))
        fm1, fm2 = f(R0 - h, u), f(R0 - 2 * h, u)
        right = (-3 * f0 + 4 * fp1 - fp2) / (2 * h)
        left = (3 * f0 - 4 * fm1 + fm2) / (2 * h)
        worst = max(worst, abs(right - left))
    return worst


def cut_distance_check(spec: ManifoldSpec, pole, q, margin: float):
    """Raise if ``q`` lies within ``margin`` of the pole's cut locus."""
    if spec.kind == SPHERE:
        R = mf.geodesic_distance(spec, pole, q)
        if np.any(R > spec.r_max - margin):
            raise CutLocusError("point within the exclusion margin of the cut locus")
