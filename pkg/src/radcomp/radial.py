"""One-dimensional radial laws on ``[0, r_max)``.

Every law is the untruncated family conditioned on ``[0, r_max)``; with
``r_max = inf`` (hyperbolic or flat manifolds) nothing is truncated.
Sampling is inverse-CDF for every family so a shared uniform stream gives
identical radii everywhere.

The string syntax accepted by :func:`parse_law` is
``family:key=value,key=value``, e.g. ``truncnormal:mu=1.0,sigma=0.35``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .errors import DivergentMomentError, DomainError

PARAM_NAMES: dict[str, tuple[str, ...]] = {
    "truncnormal": ("mu", "sigma"),
    "halfnormal": ("sigma",),
    "gamma": ("k", "beta"),
    "weibull": ("k", "lam"),
    "lognormal": ("mu", "sigma"),
    "halfcauchy": ("s",),
}

_FAMILY_ALIASES = {
    "truncnormal": "truncnormal",
    "truncnorm": "truncnormal",
    "normal": "truncnormal",
    "halfnormal": "halfnormal",
    "halfnorm": "halfnormal",
    "gamma": "gamma",
    "weibull": "weibull",
    "lognormal": "lognormal",
    "lognorm": "lognormal",
    "halfcauchy": "halfcauchy",
    "cauchy": "halfcauchy",
}

# parameters that may be zero or negative
_SIGNED = {("truncnormal", 0), ("lognormal", 0)}


def fd_step(theta: float) -> float:
    """Central-difference step used for every finite-difference score."""
    return 1e-5 * max(abs(theta), 1.0)


@dataclass(frozen=True)
class RadialLaw:
    """A radial density on ``[0, r_max)``.

    Parameters
    ----------
    family : str
        One of ``truncnormal``, ``halfnormal``, ``gamma``, ``weibull``,
        ``lognormal``, ``halfcauchy``.
    params : tuple of float
        In the order of ``PARAM_NAMES[family]``.
    r_max : float
        Upper support bound; ``inf`` for no truncation.
    """

    family: str
    params: tuple
    r_max: float = math.inf
    _dist: object = field(init=False, repr=False, compare=False)
    _log_mass: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fam = _FAMILY_ALIASES.get(str(self.family).lower())
        if fam is None:
            raise DomainError(f"unknown radial family {self.family!r}")
        object.__setattr__(self, "family", fam)
        params = tuple(float(p) for p in self.params)
        names = PARAM_NAMES[fam]
        if len(params) != len(names):
            raise DomainError(f"{fam} takes parameters {names}, got {params}")
        for i, p in enumerate(params):
            if not math.isfinite(p):
                raise DomainError(f"{fam}: parameter {names[i]} is not finite")
            if (fam, i) not in _SIGNED and p <= 0:
                raise DomainError(f"{fam}: parameter {names[i]} must be positive")
        object.__setattr__(self, "params", params)
        if not self.r_max > 0:
            raise DomainError("r_max must be positive")
        object.__setattr__(self, "r_max", float(self.r_max))

        dist = _base_distribution(fam, params, self.r_max)
        if fam == "truncnormal":
            log_mass = 0.0  # truncnorm is already normalized on [0, r_max]
        elif math.isinf(self.r_max):
            log_mass = 0.0
        else:
            log_mass = float(dist.logcdf(self.r_max))
        if not math.isfinite(log_mass):
            raise DomainError(f"{fam} has no mass on [0, {self.r_max})")
        object.__setattr__(self, "_dist", dist)
        object.__setattr__(self, "_log_mass", log_mass)

    # -- parameters ------------------------------------------------------

    @property
    def param_names(self) -> tuple[str, ...]:
        return PARAM_NAMES[self.family]

    @property
    def truncated(self) -> bool:
        return math.isfinite(self.r_max)

    @property
    def mass(self) -> float:
        """Mass of the untruncated family on ``[0, r_max)``."""
        if self.family == "truncnormal":
            mu, sigma = self.params
            base = stats.norm(mu, sigma)
            return float(base.cdf(self.r_max) - base.cdf(0.0))
        return math.exp(self._log_mass)

    def with_param(self, index: int, value: float) -> "RadialLaw":
        params = list(self.params)
        params[index] = value
        return RadialLaw(self.family, tuple(params), self.r_max)

    def with_r_max(self, r_max: float) -> "RadialLaw":
        return RadialLaw(self.family, self.params, r_max)

    # -- density ---------------------------------------------------------

    def _check_support(self, r):
        if np.any(r < 0) or np.any(r >= self.r_max) or np.any(np.isnan(r)):
            raise DomainError(f"radius outside support [0, {self.r_max})")

    def log_pdf(self, r):
        r = np.asarray(r, dtype=float)
        self._check_support(r)
        with np.errstate(divide="ignore"):
            return self._dist.logpdf(r) - self._log_mass

    def pdf(self, r):
        return np.exp(self.log_pdf(r))

    def cdf(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("negative radius")
        rc = np.minimum(r, self.r_max)
        out = self._dist.cdf(rc) / math.exp(self._log_mass)
        return np.clip(out, 0.0, 1.0)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any((p < 0) | (p > 1)):
            raise DomainError("probability outside [0, 1]")
        out = self._dist.ppf(p * math.exp(self._log_mass))
        if self.truncated:
            # keep draws strictly inside the open support
            out = np.minimum(out, np.nextafter(self.r_max, 0.0))
        return out

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-CDF draws."""
        return self.quantile(rng.random(size))

    # -- moments ---------------------------------------------------------

    def moment(self, m: int) -> float:
        """Raw moment ``E[R^m]`` by adaptive quadrature."""
        if m < 1 or int(m) != m:
            raise DomainError("moment order must be a positive integer")
        if self.family == "halfcauchy" and not self.truncated:
            raise DivergentMomentError("untruncated half-Cauchy has no finite moments")
        f = lambda r: r**m * float(self.pdf(r))
        return _integrate_support(self, f)

    def mean(self) -> float:
        return self.moment(1)

    def var(self) -> float:
        m1 = self.moment(1)
        return self.moment(2) - m1 * m1

    def expect(self, func: Callable[[float], float]) -> float:
        """``E[func(R)]`` by adaptive quadrature."""
        return _integrate_support(self, lambda r: func(r) * float(self.pdf(r)))

    # -- text form -------------------------------------------------------

    def render(self) -> str:
        body = ",".join(f"{k}={v!r}" for k, v in zip(self.param_names, self.params))
        return f"{self.family}:{body}"


def _base_distribution(family, params, r_max):
    if family == "truncnormal":
        mu, sigma = params
        b = (r_max - mu) / sigma if math.isfinite(r_max) else np.inf
        return stats.truncnorm((0.0 - mu) / sigma, b, loc=mu, scale=sigma)
    if family == "halfnormal":
        return stats.halfnorm(scale=params[0])
    if family == "gamma":
        return stats.gamma(a=params[0], scale=params[1])
    if family == "weibull":
        return stats.weibull_min(c=params[0], scale=params[1])
    if family == "lognormal":
        return stats.lognorm(s=params[1], scale=math.exp(params[0]))
    if family == "halfcauchy":
        return stats.halfcauchy(scale=params[0])
    raise DomainError(family)  # pragma: no cover


def _breakpoints(law: RadialLaw) -> list[float]:
    """Interior points where the integrand has most of its structure."""
    fam, p = law.family, law.params
    if fam == "truncnormal":
        pts = [p[0] + k * p[1] for k in (-3, 0, 3)]
    elif fam in ("halfnormal", "halfcauchy"):
        pts = [p[0], 5 * p[0]]
    elif fam == "gamma":
        pts = [p[0] * p[1], (p[0] + 6 * math.sqrt(p[0])) * p[1]]
    elif fam == "weibull":
        pts = [p[1], 4 * p[1]]
    else:
        pts = [math.exp(p[0]), math.exp(p[0] + 4 * p[1])]
    return sorted(x for x in pts if 0 < x < law.r_max)


def _integrate_support(law: RadialLaw, f) -> float:
    pts = [0.0] + _breakpoints(law)
    edges = pts + [law.r_max]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=400)
        total += val
    return total


# --------------------------------------------------------------------------
# Fisher information


def score(law: RadialLaw, index: int, r):
    """Finite-difference score ``d/dtheta log pdf(r)`` for one parameter."""
    theta = law.params[index]
    h = fd_step(theta)
    up = law.with_param(index, theta + h).log_pdf(r)
    dn = law.with_param(index, theta - h).log_pdf(r)
    return (up - dn) / (2 * h)


def fisher_1d(law: RadialLaw, param_index: int) -> float:
    """Scalar Fisher information of the 1D radial model by quadrature."""
    theta = law.params[param_index]
    h = fd_step(theta)
    up = law.with_param(param_index, theta + h)
    dn = law.with_param(param_index, theta - h)

    def integrand(r):
        s = (float(up.log_pdf(r)) - float(dn.log_pdf(r))) / (2 * h)
        return s * s * float(law.pdf(r))

    return _integrate_support(law, integrand)


def kl_divergence(p: RadialLaw, q: RadialLaw) -> float:
    """``KL(p || q)`` between two radial laws by quadrature."""
    def integrand(r):
        lp = float(p.log_pdf(r))
        return math.exp(lp) * (lp - float(q.log_pdf(r)))

    return _integrate_support(p, integrand)


# --------------------------------------------------------------------------
# truncated half-Cauchy closed forms


def halfcauchy_normalizer(s: float, r_max: float = math.pi) -> float:
    """Mass of HalfCauchy(s) on ``[0, r_max)``: ``(2/pi) arctan(r_max/s)``."""
    return 2.0 / math.pi * math.atan(r_max / s)


def halfcauchy_truncated_mean(s: float, r_max: float = math.pi) -> float:
    return s * math.log1p((r_max / s) ** 2) / (2.0 * math.atan(r_max / s))


def halfcauchy_truncated_second_moment(s: float, r_max: float = math.pi) -> float:
    return r_max * s / math.atan(r_max / s) - s * s


# --------------------------------------------------------------------------
# laws with a reflected radius (used by the two-chart atlas)


@dataclass(frozen=True)
class ReflectedLaw:
    """Law of ``r_max - R`` for ``R ~ base``; needs a finite ``r_max``."""

    base: RadialLaw

    def __post_init__(self):
        if not self.base.truncated:
            raise DomainError("reflection needs a finite r_max")

    @property
    def r_max(self) -> float:
        return self.base.r_max

    def log_pdf(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0) or np.any(r >= self.r_max):
            raise DomainError("radius outside open support")
        return self.base.log_pdf(self.r_max - r)

    def pdf(self, r):
        return np.exp(self.log_pdf(r))

    def cdf(self, r):
        return 1.0 - self.base.cdf(self.r_max - np.asarray(r, dtype=float))

    def quantile(self, p):
        return self.r_max - self.base.quantile(1.0 - np.asarray(p, dtype=float))

    def sample(self, rng, size=None):
        return self.quantile(rng.random(size))


# --------------------------------------------------------------------------
# parsing


def parse_law(text: str, r_max: float = math.inf) -> RadialLaw:
    """Parse ``family:key=value,...`` into a :class:`RadialLaw`."""
    if not isinstance(text, str) or not text.strip():
        raise DomainError("empty law specification")
    head, _, body = text.strip().partition(":")
    fam = _FAMILY_ALIASES.get(head.strip().lower())
    if fam is None:
        raise DomainError(f"unknown radial family {head!r}")
    names = PARAM_NAMES[fam]
    values: dict[str, float] = {}
    if body.strip():
        for item in body.split(","):
            key, eq, val = item.partition("=")
            key = key.strip().lower()
            if not eq or key not in names:
                raise DomainError(f"bad law parameter {item!r} for {fam} (expected {names})")
            try:
                values[key] = float(val)
            except ValueError:
                raise DomainError(f"bad numeric value {val!r} in law {text!r}") from None
    missing = [k for k in names if k not in values]
    if missing:
        raise DomainError(f"law {text!r} is missing parameters {missing}")
    return RadialLaw(fam, tuple(values[k] for k in names), r_max)

