import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from radcomp.errors import DivergentMomentError, DomainError
from radcomp.radial import (
    RadialLaw,
    ReflectedLaw,
    fd_step,
    fisher_1d,
    halfcauchy_normalizer,
    halfcauchy_truncated_mean,
    halfcauchy_truncated_second_moment,
    kl_divergence,
    parse_law,
    score,
)

PI = math.pi
LAWS = [
    RadialLaw("truncnormal", (1.0, 0.35), PI),
    RadialLaw("truncnormal", (0.5, 1.0)),
    RadialLaw("halfnormal", (0.8,)),
    RadialLaw("halfnormal", (0.8,), PI),
    RadialLaw("gamma", (2.0, 0.5)),
    RadialLaw("gamma", (2.0, 0.5), PI),
    RadialLaw("weibull", (1.5, 1.0)),
    RadialLaw("weibull", (1.5, 1.0), PI),
    RadialLaw("lognormal", (0.0, 0.5)),
    RadialLaw("lognormal", (0.0, 0.5), PI),
    RadialLaw("halfcauchy", (1.0,), PI),
    RadialLaw("halfcauchy", (0.3,), 2 * PI),
]
IDS = [f"{law.family}-{law.r_max:.3g}" for law in LAWS]


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_normalization_and_cdf(law):
    hi = law.r_max if law.truncated else float(law.quantile(1 - 1e-15))
    total = integrate.quad(lambda r: float(law.pdf(r)), 0.0, hi, limit=400, points=[float(law.quantile(0.5))])[0]
    assert total == pytest.approx(1.0, abs=1e-8)
    assert law.cdf(0.0) == 0.0
    assert law.cdf(np.nextafter(law.r_max, 0) if law.truncated else 1e6) == pytest.approx(1.0, abs=1e-12)
    r = np.linspace(0.0, hi * 0.999, 500)
    assert np.all(np.diff(law.cdf(r)) >= 0)
    assert np.all(law.pdf(r[1:]) >= 0)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_quantile_inverts_cdf(law):
    r = law.quantile(np.linspace(0.01, 0.99, 99))
    keep = law.pdf(r) > 1e-12
    assert np.allclose(law.quantile(law.cdf(r[keep])), r[keep], atol=1e-9, rtol=0)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_sample_mean_matches_moment(law):
    x = law.sample(np.random.default_rng(5), 100_000)
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - law.mean()) <= 4 * se
    assert np.all((x >= 0) & (x < law.r_max))


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_ks_against_cdf(law):
    x = law.sample(np.random.default_rng(6), 10_000)
    d = stats.kstest(x, law.cdf).statistic
    assert d < 1.63 / math.sqrt(10_000)


@pytest.mark.parametrize("law", LAWS, ids=IDS)
def test_fisher_positive(law):
    for i in range(len(law.params)):
        assert fisher_1d(law, i) > 0


def test_reference_values():
    tn = RadialLaw("truncnormal", (1.0, 0.35), PI)
    assert tn.mean() == pytest.approx(1.0024, abs=5e-5)
    assert tn.var() == pytest.approx(0.1201, abs=5e-5)
    hn = RadialLaw("halfnormal", (0.8,))
    assert hn.mean() == pytest.approx(0.8 * math.sqrt(2 / PI), rel=1e-10)
    assert hn.var() == pytest.approx(0.64 * (1 - 2 / PI), rel=1e-9)
    assert hn.pdf(0.0) == pytest.approx(2 / (0.8 * math.sqrt(2 * PI)))
    assert RadialLaw("halfnormal", (1.0,)).cdf(1.0) == pytest.approx(special.erf(1 / math.sqrt(2)), rel=1e-14)
    assert RadialLaw("halfcauchy", (2.5,)).quantile(0.5) == pytest.approx(2.5, rel=1e-12)
    g = RadialLaw("gamma", (3.0, 0.4))
    assert g.mean() == pytest.approx(1.2, rel=1e-10)
    assert g.sample(np.random.default_rng(0), 100_000).mean() == pytest.approx(1.2, abs=4 * math.sqrt(3 * 0.16 / 1e5))


def test_half_cauchy_on_sphere():
    law = RadialLaw("halfcauchy", (PI,), PI)
    assert law.mass == pytest.approx(0.5, abs=1e-15)
    assert halfcauchy_normalizer(PI) == pytest.approx(0.5, abs=1e-15)
    assert law.pdf(0.0) == pytest.approx(4 / PI**2, rel=1e-13)


@pytest.mark.parametrize("s", [0.3, 1.0, PI, 5.0])
def test_half_cauchy_moments(s):
    law = RadialLaw("halfcauchy", (s,), PI)
    assert halfcauchy_truncated_mean(s) == pytest.approx(law.moment(1), abs=1e-10)
    assert halfcauchy_truncated_second_moment(s) == pytest.approx(law.moment(2), abs=1e-10)


def test_untruncated_half_cauchy_moment_diverges():
    with pytest.raises(DivergentMomentError):
        RadialLaw("halfcauchy", (1.0,)).moment(1)


def test_fisher_oracles():
    assert fisher_1d(RadialLaw("halfnormal", (0.7,)), 0) == pytest.approx(2 / 0.49, rel=1e-6)
    i1 = fisher_1d(RadialLaw("halfnormal", (1.0,)), 0)
    i2 = fisher_1d(RadialLaw("halfnormal", (2.0,)), 0)
    assert i2 == pytest.approx(i1 / 4, rel=1e-6)
    tn = fisher_1d(RadialLaw("truncnormal", (1.0, 0.35), PI), 0)
    assert tn == pytest.approx(1 / 0.35**2, rel=2e-2)
    # truncation lowers the location information slightly
    assert tn < 1 / 0.35**2


def test_score_mean_zero():
    law = RadialLaw("gamma", (2.0, 0.5), PI)
    for i in range(2):
        assert law.expect(lambda r: float(score(law, i, r))) == pytest.approx(0.0, abs=1e-7)


def test_fd_step():
    assert fd_step(0.0) == 1e-5
    assert fd_step(-200.0) == pytest.approx(2e-3)


def test_kl():
    p = RadialLaw("halfnormal", (0.8,))
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-14)
    q = RadialLaw("halfnormal", (1.0,))
    # two half-normals: log(s2/s1) + s1^2/(2 s2^2) - 1/2
    want = math.log(1.0 / 0.8) + 0.64 / 2 - 0.5
    assert kl_divergence(p, q) == pytest.approx(want, rel=1e-9)


def test_support_errors():
    law = RadialLaw("truncnormal", (1.0, 0.35), PI)
    with pytest.raises(DomainError):
        law.pdf(PI)
    with pytest.raises(DomainError):
        law.pdf(-0.1)
    with pytest.raises(DomainError):
        law.quantile(1.5)
    with pytest.raises(DomainError):
        law.moment(0)
    assert law.quantile(1.0) < PI


@pytest.mark.parametrize(
    "family,params", [("gamma", (0.0, 1.0)), ("halfnormal", (-1.0,)), ("weibull", (1.0,)), ("nope", (1.0,)), ("halfnormal", (math.inf,))]
)
def test_bad_parameters(family, params):
    with pytest.raises(DomainError):
        RadialLaw(family, params)


def test_signed_location_allowed():
    assert RadialLaw("lognormal", (-1.0, 0.5)).mean() == pytest.approx(math.exp(-1 + 0.125), rel=1e-9)
    assert RadialLaw("truncnormal", (-0.5, 1.0), PI).mean() > 0


class TestReflected:
    def test_reflection(self):
        base = RadialLaw("truncnormal", (1.0, 0.35), PI)
        ref = ReflectedLaw(base)
        r = np.linspace(0.1, 3.0, 7)
        assert np.allclose(ref.pdf(r), base.pdf(PI - r))
        assert np.allclose(ref.cdf(r), 1 - base.cdf(PI - r))
        assert np.allclose(ref.cdf(ref.quantile([0.1, 0.5, 0.9])), [0.1, 0.5, 0.9])
        x = ref.sample(np.random.default_rng(0), 50_000)
        assert x.mean() == pytest.approx(PI - base.mean(), abs=0.01)

    def test_needs_finite_support(self):
        with pytest.raises(DomainError):
            ReflectedLaw(RadialLaw("halfnormal", (1.0,)))


class TestParse:
    def test_round_trip(self):
        for law in LAWS:
            assert parse_law(law.render(), law.r_max) == law

    def test_example(self):
        law = parse_law("truncnormal:mu=1.0,sigma=0.35", PI)
        assert law.params == (1.0, 0.35) and law.r_max == PI

    @pytest.mark.parametrize(
        "text", ["", "truncnormal", "truncnormal:mu=1.0", "truncnormal:mu=x,sigma=1", "foo:sigma=1", "halfnormal:tau=1", "halfnormal:sigma"]
    )
    def test_malformed(self, text):
        with pytest.raises(DomainError):
            parse_law(text, PI)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 3.0), st.floats(0.05, 2.0))
    def test_render_parse_property(self, mu, sigma):
        law = RadialLaw("truncnormal", (mu, sigma), PI)
        assert parse_law(law.render(), PI) == law
