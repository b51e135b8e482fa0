"""Radial Compensation: samplers and densities whose geodesic radius has a set law.

An :class:`RcModel` pairs a scalar-Jacobian chart with a 1D radial law.
Sampling draws ``R`` from the law and a uniform direction, then places the
point at tangent radius ``R_T^{-1}(R)`` so that ``d(pole, Q) = R`` for every
chart. Densities come in two conventions:

* radial: ``log law.pdf(R)``, the 1D density of the geodesic radius;
* volume: the same minus ``log(A_{n-1} s_k(R)^{n-1})``, a density with
  respect to the Riemannian volume.

Neither depends on the chart, only on ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from . import manifold as mf
from .charts import Chart, make_chart
from .errors import DomainError, EnvelopeError
from .manifold import ManifoldSpec
from .radial import RadialLaw, fd_step, fisher_1d


@dataclass(frozen=True, eq=False)
class RcModel:
    """Chart plus radial law. ``law.r_max`` must equal the manifold's ``R_max``."""

    chart: Chart
    law: RadialLaw

    def __post_init__(self):
        if not math.isclose(self.law.r_max, self.chart.spec.r_max, rel_tol=1e-12) and not (
            math.isinf(self.law.r_max) and math.isinf(self.chart.spec.r_max)
        ):
            raise DomainError(
                f"law truncation {self.law.r_max} does not match R_max = {self.chart.spec.r_max}"
            )

    @classmethod
    def build(cls, spec: ManifoldSpec, chart: str | Chart, law: RadialLaw, convention=None, pole=None):
        if isinstance(chart, str):
            chart = make_chart(spec, chart, convention, pole)
        return cls(chart, law)

    @property
    def spec(self) -> ManifoldSpec:
        return self.chart.spec

    @property
    def pole(self) -> np.ndarray:
        return self.chart.pole

    def sample(self, n_samples: int, rng: np.random.Generator) -> "RcSample":
        return sample_rc(self, n_samples, rng)

    def log_density_radial(self, q):
        return log_density_radial(self, q)

    def log_density_volume(self, q):
        return log_density_volume(self, q)


@dataclass(frozen=True, eq=False)
class WrappedModel:
    """Isotropic tangent Gaussian ``N(0, sigma^2 I_n)`` pushed through the exponential map."""

    spec: ManifoldSpec
    sigma: float
    pole: np.ndarray | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.pole is None:
            object.__setattr__(self, "pole", mf.default_pole(self.spec))

    @property
    def chart(self) -> Chart:
        return Chart(self.spec, "exp", pole=self.pole)


class RcSample(NamedTuple):
    """Points with their geodesic radii, tangent radii and directions."""

    points: np.ndarray
    radii: np.ndarray
    tangent_r: np.ndarray
    directions: np.ndarray


# --------------------------------------------------------------------------
# base density, sampling, densities


def rc_base_radial_density(model: RcModel, r):
    """Tangent radial density ``law.pdf(R_T(r)) R_T'(r)``; integrates to 1."""
    chart = model.chart
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r >= chart.domain):
        raise DomainError("tangent radius outside the chart domain")
    return model.law.pdf(chart.radius_map(r)) * chart.radius_map_deriv(r)


def sample_rc(model: RcModel, n_samples: int, rng: np.random.Generator) -> RcSample:
    """Draw ``R ~ law`` and ``Omega`` uniform, then map ``R_T^{-1}(R) Omega`` through the chart.

    Radii are drawn before directions, both from ``rng``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    R = np.asarray(model.law.sample(rng, n_samples), dtype=float)
    omega = mf.sample_uniform_direction(model.spec.n, rng, n_samples)
    r = model.chart.radius_map_inverse(R)
    q = model.chart.forward(r, omega)
    return RcSample(q, R, r, omega)


def _radius(model, q):
    pol = mf.log_map(model.spec, model.pole, q)
    return pol.r


def log_density_radial(model: RcModel, q):
    """``log law.pdf(d(pole, q))``."""
    return model.law.log_pdf(_radius(model, q))


def log_density_volume(model: RcModel, q):
    """Log density with respect to the Riemannian volume."""
    R = _radius(model, q)
    return model.law.log_pdf(R) - mf.log_polar_volume(model.spec, R)


def sample_wrapped(model: WrappedModel, n_samples: int, rng: np.random.Generator) -> RcSample:
    """Raw baseline: ``X ~ N(0, sigma^2 I_n)`` and ``Q = exp_pole(X)``.

    ``radii`` are true geodesic distances, so on the sphere a tangent norm
    past ``pi R_c`` folds back.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    spec = model.spec
    x = model.sigma * rng.standard_normal((n_samples, spec.n))
    r = np.linalg.norm(x, axis=-1)
    u = x / np.where(r > 0, r, 1.0)[:, None]
    u[r == 0] = np.eye(spec.n)[0]
    q = mf.exp_map(spec, model.pole, r, u)
    R = mf.geodesic_distance(spec, model.pole, q)
    return RcSample(q, R, r, u)


# --------------------------------------------------------------------------
# radius diagnostics


def _default_upper(law) -> float:
    return law.r_max if math.isfinite(law.r_max) else 5.0


def radius_kl(samples_r, law: RadialLaw, grid_points: int = 500, method: str = "kde", r_upper=None) -> float:
    """KL of the empirical radius density against ``law.pdf`` on a shared grid.

    ``grid_points`` cells partition ``[0, r_upper)`` (default ``r_max``, or
    5 for infinite support). With ``method="hist"`` the empirical density is
    a histogram on those cells; with ``method="kde"`` it is a Gaussian KDE
    (Silverman bandwidth, reflected at 0 and at a finite ``r_max``)
    evaluated at the cell midpoints. Both densities are renormalized on the
    grid and cells with zero empirical mass contribute 0.
    """
    r = np.asarray(samples_r, dtype=float).ravel()
    if r.size < 1000:
        raise DomainError("radius_kl needs at least 1000 samples")
    upper = _default_upper(law) if r_upper is None else float(r_upper)
    edges = np.linspace(0.0, upper, grid_points + 1)
    width = edges[1] - edges[0]
    mid = 0.5 * (edges[:-1] + edges[1:])
    if method == "hist":
        counts, _ = np.histogram(r, bins=edges)
        p = counts / (counts.sum() * width)
    elif method == "kde":
        p = _reflected_kde(r, mid, law.r_max)
        p = p / (p.sum() * width)
    else:
        raise DomainError(f"unknown KL method {method!r}")
    q = np.asarray(law.pdf(mid), dtype=float)
    q = q / (q.sum() * width)
    pos = p > 0
    with np.errstate(divide="ignore"):
        terms = p[pos] * (np.log(p[pos]) - np.log(q[pos]))
    return float(np.sum(terms) * width)


def _reflected_kde(samples, grid, r_max):
    # binned KDE: reflected centres go into bins of width h/20, then the
    # Gaussian kernel is summed over bin centres (relative error ~ 1e-4)
    n = samples.size
    h = 1.06 * np.std(samples) * n ** -0.2
    if not h > 0:
        h = 1e-3
    centres = [samples, -samples]
    if math.isfinite(r_max):
        centres.append(2.0 * r_max - samples)
    centres = np.concatenate(centres)
    lo = grid[0] - 8.0 * h
    hi = grid[-1] + 8.0 * h
    centres = centres[(centres > lo) & (centres < hi)]
    n_bins = int(math.ceil((hi - lo) / (h / 20.0)))
    counts, edges = np.histogram(centres, bins=n_bins, range=(lo, hi))
    mids = 0.5 * (edges[:-1] + edges[1:])
    used = counts > 0
    z = (grid[:, None] - mids[None, used]) / h
    out = np.exp(-0.5 * z * z) @ counts[used]
    return out / (n * h * math.sqrt(2 * math.pi))


class FisherEstimate(NamedTuple):
    value: float
    stderr: float


def _scores(law: RadialLaw, index: int, R):
    theta = law.params[index]
    h = fd_step(theta)
    up = law.with_param(index, theta + h).log_pdf(R)
    dn = law.with_param(index, theta - h).log_pdf(R)
    return (up - dn) / (2 * h)


def fisher_manifold_mc(model: RcModel, param_index: int, n_samples: int, rng) -> FisherEstimate:
    """Monte Carlo ``E[(d/dtheta log law.pdf(R))^2]`` with ``R = d(pole, Q)`` from RC samples."""
    s = sample_rc(model, n_samples, rng)
    R = mf.geodesic_distance(model.spec, model.pole, s.points)
    sq = _scores(model.law, param_index, R) ** 2
    return FisherEstimate(float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size)))


class ChartTermVariance(NamedTuple):
    alphas: np.ndarray
    variance: np.ndarray
    ratio: np.ndarray
    stderr_alpha1: float


def chart_term(spec: ManifoldSpec, alpha: float, R):
    """``chi_alpha(R) = alpha (n-1) log(s_k(R)/R)``."""
    return alpha * (spec.n - 1) * mf.log_sratio(spec, R)


def chart_term_variance(model: RcModel, alphas: Sequence[float], n_samples: int, rng) -> ChartTermVariance:
    """Sample variance of ``chi_alpha(R)`` under the RC radius law, and its ratio to ``alpha = 1``."""
    alphas = np.asarray(alphas, dtype=float)
    R = sample_rc(model, n_samples, rng).radii
    base = chart_term(model.spec, 1.0, R)
    v1 = float(np.var(base))
    var = np.array([np.var(a * base) for a in alphas])
    centred = (base - base.mean()) ** 2
    se = float(centred.std(ddof=1) / math.sqrt(base.size))
    return ChartTermVariance(alphas, var, var / v1, se)


def chart_term_variance_oracle(spec: ManifoldSpec, law: RadialLaw, alpha: float = 1.0) -> float:
    """``Var[chi_alpha(R)]`` by quadrature under ``law``."""
    f = lambda r: float(chart_term(spec, alpha, r))
    m1 = law.expect(f)
    m2 = law.expect(lambda r: f(r) ** 2)
    return m2 - m1 * m1


class MisspecResult(NamedTuple):
    sup_dprime: float
    bound: float
    ratio: float
    gradient_factor: float


def misspec_sensitivity(
    spec: ManifoldSpec, spec_tilde: ManifoldSpec, R0: float, alpha: float = 1.0, n_grid: int = 4001
) -> MisspecResult:
    """``sup_{r <= R0} |Delta'(r)|`` for ``Delta = log(s_k~(r)/s_k(r))``.

    ``bound`` is the small-radius model ``|k - k~| R0 / 3`` and
    ``gradient_factor = alpha (n-1) sup|Delta'|`` multiplies the score
    Lipschitz constant in the gradient perturbation bound.
    """
    if spec.n != spec_tilde.n:
        raise DomainError("both manifolds need the same dimension")
    if not 0 < R0 < min(spec.r_max, spec_tilde.r_max):
        raise DomainError("R0 must lie in (0, min(R_max, R~_max))")
    delta = lambda r: mf.log_sratio(spec_tilde, r) - mf.log_sratio(spec, r)
    r = np.linspace(0.0, R0, n_grid)
    h = 1e-6 * max(R0, 1.0)
    rr = np.clip(r, h, None)
    d = (delta(rr + h) - delta(rr - h)) / (2 * h)
    d[0] = 0.0
    sup = float(np.max(np.abs(d)))
    bound = abs(spec.curvature - spec_tilde.curvature) * R0 / 3.0
    ratio = sup / bound if bound > 0 else (0.0 if sup == 0 else math.inf)
    return MisspecResult(sup, bound, ratio, alpha * (spec.n - 1) * sup)


# --------------------------------------------------------------------------
# products


class ProductSample(NamedTuple):
    points: list
    radii: np.ndarray


def rc_product(models: Sequence[RcModel], n_samples: int, rng) -> ProductSample:
    """Independent RC draws on each factor of a product manifold."""
    if len(models) < 2:
        raise DomainError("a product needs at least two factors")
    draws = [sample_rc(m, n_samples, rng) for m in models]
    return ProductSample([d.points for d in draws], np.stack([d.radii for d in draws], axis=-1))


def product_fisher_mc(models: Sequence[RcModel], param_index: int, n_samples: int, rng):
    """MC Fisher of a parameter shared by all factors, and the sum of the factors' 1D values.

    The joint score is the sum of per-factor scores since the factor radii
    are independent.
    """
    prod = rc_product(models, n_samples, rng)
    score = sum(_scores(m.law, param_index, prod.radii[:, i]) for i, m in enumerate(models))
    sq = score**2
    est = FisherEstimate(float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size)))
    return est, float(sum(fisher_1d(m.law, param_index) for m in models))


# --------------------------------------------------------------------------
# balanced polar pushforward


@dataclass(frozen=True)
class PolarVolumeFactor:
    """Geodesic polar volume density ``J(r, u)`` about a pole (``u`` unit vectors)."""

    J: Callable
    n: int
    radial_only: bool = True

    @classmethod
    def constant_curvature(cls, spec: ManifoldSpec) -> "PolarVolumeFactor":
        return cls(lambda r, u: mf.s_kappa(spec, r) ** (spec.n - 1), spec.n, True)

    def angular_mean(self, r):
        """``Jbar(r)``: trapezoid over 256 angles for ``n = 2``, a fixed direction set otherwise."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.n == 2:
            t = np.linspace(0.0, 2 * math.pi, 256, endpoint=False)
            dirs = np.stack([np.cos(t), np.sin(t)], axis=-1)
        else:
            dirs = mf.sample_uniform_direction(self.n, np.random.default_rng(0), 4096)
        vals = self.J(r[:, None], dirs[None, :, :])
        return np.mean(vals, axis=1)


class PolarSample(NamedTuple):
    r: np.ndarray
    directions: np.ndarray
    acceptance: float


def balanced_polar_sample(factor: PolarVolumeFactor, law, n_samples: int, rng, envelope: float = 1.0):
    """Polar samples whose radius has ``law`` exactly.

    For a radial-only factor the direction is uniform. Otherwise the
    joint density is taken as ``law.pdf(r) J(r, u) / Jbar(r)`` (per
    uniform direction measure) and sampled by rejection with bound
    ``envelope`` on ``J / Jbar``; the radius marginal is still ``law``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    if factor.radial_only:
        r = law.sample(rng, n_samples)
        u = mf.sample_uniform_direction(factor.n, rng, n_samples)
        return PolarSample(np.asarray(r), u, 1.0)
    if not envelope >= 1.0:
        raise DomainError("envelope must be at least 1")
    rs, us = [], []
    have = 0
    proposed = 0
    while have < n_samples:
        m = max(2 * (n_samples - have), 256)
        r = np.asarray(law.sample(rng, m))
        u = mf.sample_uniform_direction(factor.n, rng, m)
        ratio = factor.J(r, u) / factor.angular_mean(r)
        if np.any(ratio > envelope):
            raise EnvelopeError(f"J/Jbar reached {float(np.max(ratio)):.4g} > envelope {envelope}")
        keep = rng.random(m) * envelope < ratio
        proposed += m
        rs.append(r[keep])
        us.append(u[keep])
        have += int(keep.sum())
    r = np.concatenate(rs)[:n_samples]
    u = np.concatenate(us)[:n_samples]
    return PolarSample(r, u, have / proposed)


# --------------------------------------------------------------------------
# KL on the manifold


def manifold_kl(model_p: RcModel, model_q: RcModel, n_angles: int = 64) -> float:
    """``KL(p || q)`` of two volume densities by polar quadrature about ``model_p``'s pole.

    Gauss-Kronrod in the radius, trapezoid in the angle (``n = 2`` only).
    """
    spec = model_p.spec
    if spec.n != 2:
        raise DomainError("polar KL quadrature is implemented for n = 2")
    t = np.linspace(0.0, 2 * math.pi, n_angles, endpoint=False)
    dirs = np.stack([np.cos(t), np.sin(t)], axis=-1)

    def ring(R):
        q = mf.exp_map(spec, model_p.pole, np.full(n_angles, R), dirs)
        lp = log_density_volume(model_p, q)
        lq = log_density_volume(model_q, q)
        return float(np.mean(np.exp(lp) * (lp - lq))) * 2 * math.pi * float(mf.s_kappa(spec, R))

    law = model_p.law
    upper = law.r_max if math.isfinite(law.r_max) else float(law.quantile(1.0 - 1e-14))
    pts = [float(law.quantile(p)) for p in (0.01, 0.25, 0.5, 0.75, 0.99)]
    val, _ = integrate.quad(ring, 0.0, upper, points=pts, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val
