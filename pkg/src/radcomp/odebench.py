"""Dormand-Prince 5(4) with exact NFE accounting, plus chart-term benchmarks.

The solver is a plain FSAL implementation: the first step costs one extra
evaluation, every attempted step costs six more, so
``nfes = 1 + 6 (accepted + rejected)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import manifold as mf
from .charts import Chart
from .errors import DomainError, StepSizeUnderflow
from .manifold import ManifoldSpec

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

SAFETY = 0.9
BETA1 = 0.7 / 5
BETA2 = 0.4 / 5
FAC_MIN = 0.2
FAC_MAX = 10.0


@dataclass(frozen=True)
class OdeProblem:
    """``y' = rhs(t, y)`` on ``t_span`` with scalar tolerances."""

    dim: int
    rhs: Callable
    t_span: tuple
    rtol: float = 1e-6
    atol: float = 1e-9

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise DomainError("tolerances must be positive")


@dataclass(frozen=True)
class NfeRecord:
    nfes: int
    accepted: int
    rejected: int
    alpha: float | None = None


def dopri45(problem: OdeProblem, y0, fixed_step: float | None = None, h0: float | None = None):
    """Integrate ``problem`` from ``y0``; returns ``(y_final, NfeRecord)``.

    Adaptive stepping uses the RMS error norm with weights
    ``atol + rtol max(|y|, |y_new|)`` and a PI controller. With
    ``fixed_step`` every step is accepted at that size (last one clipped).
    """
    t0, t1 = map(float, problem.t_span)
    y = np.array(y0, dtype=float).reshape(problem.dim)
    span = t1 - t0
    direction = 1.0 if span >= 0 else -1.0
    nfe = 0

    def f(t, z):
        nonlocal nfe
        nfe += 1
        out = np.asarray(problem.rhs(t, z), dtype=float)
        if not np.all(np.isfinite(out)):
            raise DomainError(f"rhs not finite at t={t}")
        return out

    if span == 0:
        return y, NfeRecord(0, 0, 0)
    k0 = f(t0, y)
    rtol, atol = problem.rtol, problem.atol
    if fixed_step is not None:
        h = abs(float(fixed_step))
    elif h0 is not None:
        h = abs(float(h0))
    else:
        scale = atol + rtol * np.abs(y)
        d0 = math.sqrt(np.mean((y / scale) ** 2))
        d1 = math.sqrt(np.mean((k0 / scale) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, abs(span))
    h_min = 1e-12 * abs(span)
    t = t0
    accepted = rejected = 0
    err_prev = 1e-4
    k = [k0] + [None] * 6
    while direction * (t1 - t) > 0:
        remaining = abs(t1 - t)
        # absorb round-off slivers into the final step
        last = h >= remaining - 1e-12 * abs(span)
        h = remaining if last else h
        if h < h_min and direction * (t1 - t) > h_min:
            raise StepSizeUnderflow(f"step {h:.3g} below minimum {h_min:.3g} at t={t}")
        hs = direction * h
        for i in range(1, 7):
            dy = sum(_A[i][j] * k[j] for j in range(i))
            k[i] = f(t + _C[i] * hs, y + hs * dy)
        # the seventh stage is evaluated at the 5th-order solution (FSAL)
        y_new = y + hs * sum(_B[j] * k[j] for j in range(6))
        if fixed_step is not None:
            t, y = (t1 if last else t + hs), y_new
            k[0] = k[6]
            accepted += 1
            continue
        err_vec = hs * sum(_E[j] * k[j] for j in range(7))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(np.mean((err_vec / scale) ** 2))
        if err <= 1.0:
            err = max(err, 1e-10)
            fac = SAFETY * err ** (-BETA1) * err_prev**BETA2
            fac = min(FAC_MAX, max(FAC_MIN, fac))
            t, y = (t1 if last else t + hs), y_new
            k[0] = k[6]
            err_prev = err
            accepted += 1
            h = h * fac
        else:
            fac = max(FAC_MIN, SAFETY * err ** (-BETA1))
            h = h * fac
            rejected += 1
    return y, NfeRecord(nfe, accepted, rejected)


def convergence_order(problem: OdeProblem, y0, exact, steps: Sequence[int] = (10, 20, 40, 80)) -> float:
    """Empirical order from fixed-step runs with successively halved steps."""
    t0, t1 = problem.t_span
    errs = []
    for m in steps:
        y, _ = dopri45(problem, y0, fixed_step=(t1 - t0) / m)
        errs.append(np.max(np.abs(y - exact)))
    slope, _ = np.polyfit(np.log(1.0 / np.asarray(steps, dtype=float)), np.log(errs), 1)
    return float(slope)


# --------------------------------------------------------------------------
# chart-conditioned synthetic CNF


def chart_term_grad(spec: ManifoldSpec, alpha: float, x):
    """Euclidean gradient of ``chi_alpha(|x|) = alpha (n-1) log(s_k(r)/r)``."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    d = alpha * (spec.n - 1) * mf.dlog_sratio(spec, r)
    return np.where(r > 0, d / np.where(r > 0, r, 1.0), 0.0) * x


class CnfBenchResult(NamedTuple):
    alphas: np.ndarray
    mean_nfe: np.ndarray
    sd_nfe: np.ndarray
    fit_a: float
    fit_b: float
    r_squared: float
    chart_var: np.ndarray
    records: list


def default_target(spec: ManifoldSpec) -> np.ndarray:
    """Off-pole target of the contraction field: radius ``0.8 pi R_c`` along ``e1``."""
    x = np.zeros(spec.n)
    x[0] = 0.8 * math.pi * spec.rc
    return x


def fit_inverse_alpha(alphas, values):
    """Least-squares ``a + b / alpha``; returns ``(a, b, R^2)``."""
    alphas = np.asarray(alphas, dtype=float)
    values = np.asarray(values, dtype=float)
    X = np.stack([np.ones_like(alphas), 1.0 / alphas], axis=-1)
    coef, *_ = np.linalg.lstsq(X, values, rcond=None)
    resid = values - X @ coef
    tot = np.sum((values - values.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / tot if tot > 0 else 1.0
    return float(coef[0]), float(coef[1]), float(r2)


def chart_cnf_bench(
    spec: ManifoldSpec,
    law,
    alphas: Sequence[float],
    tol: float,
    n_trajectories: int,
    rng: np.random.Generator,
    target=None,
    t1: float = 1.0,
    field_scale: float = 1.0,
) -> CnfBenchResult:
    """NFEs of the augmented ODE ``(x, l)`` for each chart dial ``alpha``.

    ``x' = -field_scale (x - target)`` in tangent coordinates and
    ``l' = grad chi_alpha(x) . x'``, so ``l`` tracks the chart term along the
    trajectory. Initial tangent points are ``R_T^{-1}(R) Omega`` of the
    bExp chart for RC draws ``(R, Omega)``; the draws are shared by all
    ``alpha`` values. ``rtol = atol = tol``.
    """
    alphas = np.asarray(alphas, dtype=float)
    if np.any(alphas <= 0) or np.any(alphas > 1):
        raise DomainError("alphas must lie in (0, 1]")
    target = default_target(spec) if target is None else np.asarray(target, dtype=float)
    R = np.asarray(law.sample(rng, n_trajectories))
    omega = mf.sample_uniform_direction(spec.n, rng, n_trajectories)
    mean, sd, cvar, records = [], [], [], []
    n = spec.n
    for a in alphas:
        chart = Chart(spec, "bexp", a)
        x0 = chart.radius_map_inverse(R)[:, None] * omega

        def rhs(t, z, a=a):
            x = z[:n]
            v = -field_scale * (x - target)
            return np.concatenate([v, [chart_term_grad(spec, a, x) @ v]])

        recs = []
        for start in x0:
            prob = OdeProblem(n + 1, rhs, (0.0, t1), tol, tol)
            _, rec = dopri45(prob, np.concatenate([start, [0.0]]))
            recs.append(NfeRecord(rec.nfes, rec.accepted, rec.rejected, float(a)))
        nf = np.array([r.nfes for r in recs], dtype=float)
        mean.append(nf.mean())
        sd.append(nf.std(ddof=1) if nf.size > 1 else 0.0)
        cvar.append(np.var(a * (n - 1) * mf.log_sratio(spec, R)))
        records.append(recs)
    mean = np.array(mean)
    fa, fb, r2 = fit_inverse_alpha(alphas, mean)
    return CnfBenchResult(alphas, mean, np.array(sd), fa, fb, r2, np.array(cvar), records)


# --------------------------------------------------------------------------
# Hutchinson trace of the chart-term Hessian


def chart_term_hessian(spec: ManifoldSpec, alpha: float, x):
    """Hessian of ``chi_alpha(|x|)``: ``h'' u u^T + (h'/r)(I - u u^T)``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    if np.any(r <= 0):
        raise DomainError("Hessian needs x away from the pole")
    u = x / r[:, None]
    c = alpha * (n - 1)
    h1 = c * mf.dlog_sratio(spec, r)
    h2 = c * mf.d2log_sratio(spec, r)
    uu = u[:, :, None] * u[:, None, :]
    eye = np.eye(n)[None]
    return h2[:, None, None] * uu + (h1 / r)[:, None, None] * (eye - uu)


def chart_term_laplacian(spec: ManifoldSpec, alpha: float, x):
    """Exact trace ``h'' + (n-1) h'/r``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    c = alpha * (n - 1)
    return c * (mf.d2log_sratio(spec, r) + (n - 1) * mf.dlog_sratio(spec, r) / r)


class HutchinsonResult(NamedTuple):
    estimates: np.ndarray
    variance: float
    mean: float
    exact_mean: float
    stderr: float


def hutchinson_chart_divergence(spec: ManifoldSpec, alpha: float, samples, n_probes: int, rng) -> HutchinsonResult:
    """Rademacher estimates ``eps^T H eps`` of the chart-term divergence.

    ``variance`` is the per-point variance across probes averaged over
    points; ``mean`` and ``stderr`` summarize all estimates against the
    exact mean Laplacian ``exact_mean``.
    """
    if n_probes < 1:
        raise DomainError("need at least one probe")
    x = np.atleast_2d(np.asarray(samples, dtype=float))
    H = chart_term_hessian(spec, alpha, x)
    eps = rng.choice([-1.0, 1.0], size=(x.shape[0], n_probes, x.shape[1]))
    est = np.einsum("npi,nij,npj->np", eps, H, eps)
    var = float(np.mean(np.var(est, axis=1, ddof=1))) if n_probes > 1 else 0.0
    flat = est.ravel()
    se = float(flat.std(ddof=1) / math.sqrt(flat.size)) if flat.size > 1 else 0.0
    exact = float(np.mean(chart_term_laplacian(spec, alpha, x)))
    return HutchinsonResult(est, var, float(flat.mean()), exact, se)
