import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from radcomp import charts
from radcomp.charts import (
    AtlasGate,
    Chart,
    RadialProfile,
    bexp_profile,
    bexp_profile_deriv,
    invert_increasing,
    make_chart,
    smooth_step,
)
from radcomp.errors import DomainError
from radcomp.manifold import ManifoldSpec, c_kappa, default_pole, exp_map, geodesic_distance, s_kappa, south_pole
from radcomp.radial import RadialLaw, ReflectedLaw
from radcomp.rc import RcModel

S2 = ManifoldSpec("sphere", 2)
H2 = ManifoldSpec("hyperbolic", 2)
S3 = ManifoldSpec("sphere", 3)
H3 = ManifoldSpec("hyperbolic", 3)
E2 = ManifoldSpec("flat", 2)


def _quad_profile(spec, alpha, r):
    # independent oracle: adaptive quadrature of the defining integral
    n = spec.n
    f = lambda t: t ** ((n - 1) * (1 - alpha)) * float(s_kappa(spec, t)) ** ((n - 1) * alpha)
    val = integrate.quad(f, 0.0, r, epsabs=0.0, epsrel=1e-13, limit=200)[0]
    return (n * val) ** (1.0 / n)


def _all_charts(spec, convention=None):
    return [make_chart(spec, t, convention) for t in ("exp", "lambert", "bexp:alpha=0.25", "bexp:alpha=0.5", "bexp:alpha=0.75", "bexp:alpha=1", "gcl")]


class TestProfile:
    def test_endpoints(self):
        r = np.linspace(0, 3.1, 50)
        assert np.array_equal(bexp_profile(S2, 0.0, r), r)
        assert np.max(np.abs(bexp_profile(S2, 1.0, r) - 2 * np.sin(r / 2))) <= 1e-10
        assert bexp_profile(S2, 1.0, math.pi / 2) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_small_r_value(self):
        # the truncated series is good to O(r^5); the closed form is exact
        assert bexp_profile(S2, 1.0, 0.1) == pytest.approx(0.0999583, abs=1e-7)
        assert bexp_profile(S2, 1.0, 0.1) == pytest.approx(2 * math.sin(0.05), abs=1e-15)

    @pytest.mark.parametrize("spec", [S2, H2, S3, H3, ManifoldSpec("sphere", 4, 2.0), ManifoldSpec("hyperbolic", 2, 0.5)])
    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
    def test_against_quadrature(self, spec, alpha):
        hi = 0.999 * spec.r_max if spec.kind == "sphere" else 6.0 * spec.rc
        for r in np.linspace(0.05, hi, 9):
            assert float(bexp_profile(spec, alpha, r)) == pytest.approx(_quad_profile(spec, alpha, r), rel=1e-10)

    def test_hyperbolic_lazy_extension(self):
        spec = ManifoldSpec("hyperbolic", 2, 0.7)
        r = 20.0 * spec.rc
        assert float(bexp_profile(spec, 0.5, r)) == pytest.approx(_quad_profile(spec, 0.5, r), rel=1e-9)

    @pytest.mark.parametrize("spec", [S2, H2, S3])
    def test_derivative_matches_fd_and_is_positive(self, spec):
        hi = 0.99 * spec.r_max if spec.kind == "sphere" else 5.0
        r = np.linspace(0.05, hi, 40)
        h = 1e-6
        for a in np.linspace(0.0, 1.0, 11):
            fd = (bexp_profile(spec, a, r + h) - bexp_profile(spec, a, r - h)) / (2 * h)
            d = bexp_profile_deriv(spec, a, r)
            assert np.allclose(d, fd, rtol=1e-6)
            assert np.all(d > 0)
            assert bexp_profile_deriv(spec, a, 0.0) == pytest.approx(1.0)

    def test_errors(self):
        with pytest.raises(DomainError):
            bexp_profile(S2, 1.5, 0.3)
        with pytest.raises(DomainError):
            bexp_profile(S2, 0.5, math.pi)

    def test_admissible(self):
        assert Chart(S2, "bexp", 0.5).as_radial_profile().check_admissible()
        bad = RadialProfile(lambda r: 2 * r, lambda r: 2.0 + 0 * np.asarray(r))
        assert not bad.check_admissible()


class TestInvert:
    def test_accuracy(self):
        y = np.linspace(0.0, 50.0, 101)
        x = invert_increasing(np.sinh, np.cosh, y, 0.0, np.inf)
        assert np.allclose(x, np.arcsinh(y), atol=1e-12)
        x = invert_increasing(np.sin, np.cos, [0.3, 0.9], 0.0, math.pi / 2)
        assert np.allclose(x, np.arcsin([0.3, 0.9]), atol=1e-12)


class TestRadiusMap:
    def test_lambert_value(self):
        assert Chart(S2, "lambert").radius_map(1.0) == pytest.approx(math.pi / 3, abs=1e-14)

    def test_bexp1_identity_at_n2(self):
        r = np.linspace(0, 3.0, 31)
        assert np.allclose(Chart(S2, "bexp", 1.0).radius_map(r), r, atol=1e-10)

    @pytest.mark.parametrize("spec", [S3, H3])
    def test_equal_area_coincidence(self, spec):
        r = np.linspace(0.01, 3.0, 20)
        for c in ("bexp:alpha=1", "gcl", "exp"):
            assert np.allclose(make_chart(spec, c).radius_map(r), r, atol=1e-10)

    def test_domains(self):
        assert Chart(S2, "bexp", 0.5).domain == pytest.approx(2.244, abs=1e-3)
        assert Chart(S2, "lambert").domain == pytest.approx(2.0)
        assert Chart(S3, "bexp", 1.0, convention="paper").domain == pytest.approx(math.pi)
        assert math.isinf(Chart(H2, "lambert").domain)
        with pytest.raises(DomainError):
            Chart(S2, "bexp", 0.5).radius_map(2.5)

    @pytest.mark.parametrize("spec", [S2, H2, S3, H3])
    def test_inverse_and_monotone(self, spec):
        for chart in _all_charts(spec):
            hi = min(chart.domain, 5.0)
            r = np.linspace(0.0, 0.99 * hi, 200)
            R = chart.radius_map(r)
            assert np.all(np.diff(R) > 0)
            assert np.allclose(chart.radius_map_inverse(R), r, atol=1e-9)
            d = chart.radius_map_deriv(r[1:-1])
            fd = (chart.radius_map(r[1:-1] + 1e-6) - chart.radius_map(r[1:-1] - 1e-6)) / 2e-6
            assert np.allclose(d, fd, rtol=1e-5)


class TestForwardInverse:
    @pytest.mark.parametrize("spec", [S2, H2, S3, H3, E2])
    def test_round_trip(self, spec):
        rng = np.random.default_rng(0)
        for chart in _all_charts(spec):
            hi = min(0.9 * chart.domain, 0.9 * spec.r_max, 4.0)
            r = rng.uniform(0, hi, 1000)
            u = rng.standard_normal((1000, spec.n))
            u /= np.linalg.norm(u, axis=-1, keepdims=True)
            back = chart.inverse(chart.forward(r, u))
            err = np.abs(back.r - r) + np.abs(back.r[:, None] * (back.u - u)).max(axis=-1)
            assert np.max(err) <= 1e-9, chart

    @pytest.mark.parametrize("spec", [S2, H2])
    def test_geodesic_exactness(self, spec):
        rng = np.random.default_rng(1)
        x = rng.uniform(-1.5, 1.5, (500, 2))
        for c in ("exp", "gcl"):
            chart = make_chart(spec, c)
            d = geodesic_distance(spec, chart.pole, chart.forward_vec(x))
            assert np.max(np.abs(d - np.linalg.norm(x, axis=-1))) <= 1e-10

    def test_zero_is_pole(self):
        for chart in _all_charts(S2):
            assert np.allclose(chart.forward_vec(np.zeros(2)), default_pole(S2))
            assert chart.log_det(0.0) == 0.0

    def test_other_pole(self):
        pole = exp_map(S2, default_pole(S2), 1.0, [0.6, 0.8])
        chart = Chart(S2, "bexp", 0.5, pole=pole)
        q = chart.forward(1.2, np.array([0.0, 1.0]))
        assert geodesic_distance(S2, pole, q) == pytest.approx(float(chart.radius_map(1.2)), abs=1e-12)
        assert chart.with_pole(default_pole(S2)).pole[-1] == 1.0


class TestLogDet:
    def test_examples(self):
        assert Chart(S2, "bexp", 0.5).log_det(math.pi / 2) == pytest.approx(0.5 * math.log(2 / math.pi), abs=1e-14)
        assert Chart(S2, "gcl").log_det(1.0) == pytest.approx(math.log(math.sin(1.0)), abs=1e-14)
        r = np.linspace(0.1, 3.0, 30)
        for chart in _all_charts(E2):
            assert np.all(chart.log_det(r) == 0.0)

    @given(st.floats(0.0, 1.0), st.floats(0.0, 3.0))
    def test_alpha_linearity(self, a, r):
        lhs = Chart(S2, "bexp", a).log_det(r)
        rhs = a * Chart(S2, "bexp", 1.0).log_det(r)
        assert abs(lhs - rhs) <= 1e-14

    @pytest.mark.parametrize("spec", [S2, H2])
    def test_scalar_jacobian_numerically(self, spec):
        rng = np.random.default_rng(2)
        for chart in _all_charts(spec):
            for r in (0.3, 1.0, 1.8):
                if r >= chart.domain:
                    continue
                t = rng.uniform(0, 2 * math.pi, 8)
                x = r * np.stack([np.cos(t), np.sin(t)], -1)
                num = charts.numerical_log_jacobian(chart, x)
                assert np.max(np.abs(num - chart.log_det(r))) <= 1e-8, chart

    @pytest.mark.parametrize("spec", [S2, H2])
    def test_consistency_n2(self, spec):
        r = np.linspace(0.05, 1.9, 20)
        for chart in _all_charts(spec):
            assert np.max(np.abs(charts.jacobian_consistency_check(chart, r))) <= 1e-8, chart

    def test_consistency_exp_any_n(self):
        for spec in (S3, H3, ManifoldSpec("sphere", 5)):
            assert np.max(np.abs(charts.jacobian_consistency_check(Chart(spec, "exp"), np.linspace(0.1, 2.5, 10)))) <= 1e-8

    def test_consistency_equal_area_n3(self):
        for spec in (S3, H3):
            for chart in _all_charts(spec, "equal-area"):
                r = np.linspace(0.1, min(0.95 * chart.domain, 2.5), 10)
                assert np.max(np.abs(charts.jacobian_consistency_check(chart, r))) <= 1e-8, chart

    def test_paper_gcl_gap_at_n3(self):
        chart = Chart(S3, "gcl", convention="paper")
        r = np.array([0.5, 1.0, 2.0])
        rho = chart.profile(r)
        # declared minus true equals -((n-2)/2) log(1 - kappa rho^2 / 4)
        want = -0.5 * np.log(1 - rho**2 / 4)
        assert np.allclose(charts.jacobian_consistency_check(chart, r), want, atol=1e-8)
        assert float(charts.jacobian_consistency_check(chart, 1.0)) == pytest.approx(0.1306, abs=1e-4)

    def test_gcl_r2_coefficient(self):
        r = np.linspace(0.01, 0.1, 40)
        for spec in (S2, H2, ManifoldSpec("sphere", 2, 3.0)):
            ld = Chart(spec, "gcl").log_det(r)
            coef = np.linalg.lstsq(np.stack([r**2, r**4, r**6], -1), ld, rcond=None)[0][0]
            assert coef == pytest.approx(-spec.curvature * 4 / 24, abs=1e-6)
            assert np.max(np.abs(ld)) > 0


class TestMismatch:
    def test_exact_charts(self):
        r = np.linspace(0, 2.5, 11)
        assert np.max(charts.geodesic_mismatch(Chart(S2, "exp"), r)) == 0.0
        assert np.max(charts.geodesic_mismatch(Chart(S2, "gcl"), r)) <= 1e-15

    def test_monotone_in_alpha(self):
        r = np.linspace(0.2, 1.4, 7)
        m25 = charts.geodesic_mismatch(Chart(S2, "bexp", 0.25), r)
        m75 = charts.geodesic_mismatch(Chart(S2, "bexp", 0.75), r)
        assert np.all(m25 >= m75)
        assert np.max(charts.geodesic_mismatch(Chart(S2, "bexp", 1.0), r)) <= 1e-10

    @pytest.mark.parametrize("spec", [S2, H2])
    def test_cubic_small_r(self, spec):
        r = np.geomspace(1e-3, 1e-1, 20)
        m = charts.geodesic_mismatch(Chart(spec, "lambert"), r)
        slope = np.polyfit(np.log(r), np.log(m), 1)[0]
        assert slope == pytest.approx(3.0, abs=0.1)


def _perturb(profile, eps, c, r_star):
    k = np.arange(len(c))
    phi = lambda r: float(np.sum(c * np.cos(k * math.pi * r / r_star)))
    dphi = lambda r: float(np.sum(-c * k * math.pi / r_star * np.sin(k * math.pi * r / r_star)))
    return RadialProfile(
        lambda r: float(profile.eval(r)) + eps * r * r * phi(r),
        lambda r: float(profile.deriv(r)) + eps * (2 * r * phi(r) + r * r * dphi(r)),
        profile.domain,
    )


class TestEnergy:
    def test_endpoint_minimisers(self):
        lam = Chart(S2, "lambert").as_radial_profile()
        assert charts.variational_energy(S2, 0.0, lam, 1.5) == pytest.approx(0.0, abs=1e-20)
        geo = Chart(S2, "bexp", 1.0).as_radial_profile()
        assert charts.variational_energy(S2, 1.0, geo, 1.5) <= 1e-20

    @pytest.mark.parametrize("spec,alpha", [(S2, 0.0), (S2, 1.0), (H2, 0.0), (H2, 1.0)])
    def test_endpoint_optimality_under_perturbation(self, spec, alpha):
        base = Chart(spec, "bexp", alpha).as_radial_profile()
        e0 = charts.variational_energy(spec, alpha, base, 1.5)
        rng = np.random.default_rng(3)
        for _ in range(10):
            p = _perturb(base, 1e-2, rng.standard_normal(4) / (1 + np.arange(4)), 1.5)
            assert charts.variational_energy(spec, alpha, p, 1.5) >= e0

    def test_interior_alpha_is_not_a_critical_point(self):
        # the bExp profile does not minimise the mixed energy at interior alpha
        base = Chart(S2, "bexp", 0.5).as_radial_profile()
        e0 = charts.variational_energy(S2, 0.5, base, 1.5)
        c = np.array([1.0, 0.0, 0.0, 0.0])
        plus = charts.variational_energy(S2, 0.5, _perturb(base, 1e-2, c, 1.5), 1.5)
        minus = charts.variational_energy(S2, 0.5, _perturb(base, -1e-2, c, 1.5), 1.5)
        assert min(plus, minus) < e0

    def test_domain_errors(self):
        lam = Chart(S2, "lambert").as_radial_profile()
        with pytest.raises(DomainError):
            charts.variational_energy(S2, 1.2, lam, 1.0)
        with pytest.raises(DomainError):
            charts.variational_energy(S2, 0.5, lam, 4.0)


class TestBiLipschitz:
    def test_flat_isometry(self):
        m, L = charts.bilipschitz_constants(Chart(E2, "exp"), 0.5, 2.5)
        assert m == pytest.approx(1.0) and L == pytest.approx(1.0)

    def test_sphere_exp_shell(self):
        m, L = charts.bilipschitz_constants(Chart(S2, "exp"), 0.5, 2.5)
        assert L == pytest.approx(1.0)
        assert m == pytest.approx(math.sin(2.5) / 2.5, rel=1e-12)

    @pytest.mark.parametrize("spec,kind", [(S2, "exp"), (S2, "bexp:alpha=0.5"), (H2, "gcl"), (H2, "lambert")])
    def test_monte_carlo_pairs(self, spec, kind):
        chart = make_chart(spec, kind)
        R = min(1.8, 0.9 * chart.domain)
        m, L = charts.bilipschitz_constants(chart, 0.3, R)
        rng = np.random.default_rng(4)
        t = rng.uniform(0, 2 * math.pi, (1000, 2))
        rad = rng.uniform(0.3, R, (1000, 2))
        x = rad[:, 0, None] * np.stack([np.cos(t[:, 0]), np.sin(t[:, 0])], -1)
        y = rad[:, 1, None] * np.stack([np.cos(t[:, 1]), np.sin(t[:, 1])], -1)
        d = geodesic_distance(spec, chart.forward_vec(x), chart.forward_vec(y))
        e = np.linalg.norm(x - y, axis=-1)
        assert np.all(m * e <= d + 1e-12)
        if kind in ("exp", "gcl"):
            # segments may leave the shell, so the upper bound is checked where it applies to the whole ball
            assert np.all(d <= max(L, 1.0) * e + 1e-12)


class TestCutLocus:
    def test_blowup_exponent(self):
        slope = charts.cutlocus_blowup_rate(Chart(S2, "gcl"), np.linspace(2.8, 3.13, 40))
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_scaled_sphere(self):
        spec = ManifoldSpec("sphere", 2, 2.0)
        slope = charts.cutlocus_blowup_rate(Chart(spec, "gcl"), np.linspace(5.6, 6.26, 40))
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_hyperbolic_rejected(self):
        with pytest.raises(DomainError):
            charts.cutlocus_blowup_rate(Chart(H2, "gcl"), np.linspace(1, 3, 10))
        g = np.abs(charts.log_det_radial_derivative(Chart(H2, "gcl"), np.linspace(0.5, 10, 40)))
        assert np.all(np.isfinite(g)) and np.max(g) < 1.0


class TestAtlas:
    def test_smooth_step(self):
        t = np.linspace(-1, 2, 301)
        s = smooth_step(t)
        assert np.all(np.diff(s) >= 0)
        assert np.all(s[t <= 0] == 0) and np.all(s[t >= 1] == 1)
        assert smooth_step(0.5) == pytest.approx(0.5)

    def test_partition_and_supports(self):
        gate = AtlasGate(0.3, 1.0)
        rng = np.random.default_rng(5)
        R = np.arccos(rng.uniform(-1, 1, 10_000))
        q = exp_map(S2, default_pole(S2), R, rng.standard_normal((10_000, 2)))
        pp, pm = gate.psi_plus(S2, q), gate.psi_minus(S2, q)
        assert np.max(np.abs(pp + pm - 1)) <= 1e-12
        assert np.all(pp[R >= math.pi - 0.3] == 0)
        assert np.all(pp[R <= math.pi - 1.3] == 1)

    def test_bad_gate(self):
        with pytest.raises(DomainError):
            AtlasGate(0.0, 1.0)
        with pytest.raises(DomainError):
            AtlasGate(1.0, 1.5).check(S2)
        with pytest.raises(DomainError):
            AtlasGate(0.3, 1.0).check(H2)

    @pytest.fixture
    def models(self):
        law = RadialLaw("truncnormal", (1.0, 0.35), math.pi)
        north = RcModel(Chart(S2, "bexp", 0.5), law)
        south = RcModel(Chart(S2, "gcl", pole=south_pole(S2)), ReflectedLaw(law))
        return north, south

    def test_blend_values(self, models):
        north, south = models
        gate = AtlasGate(0.3, 1.0)
        p = exp_map(S2, default_pole(S2), 0.4, [1.0, 0.0])
        assert charts.atlas_log_density(gate, north, south, p) == pytest.approx(float(north.log_density_volume(p)))
        # both models describe one density, so the blend equals it everywhere
        R = np.linspace(0.1, 3.0, 30)
        q = exp_map(S2, default_pole(S2), R, np.tile([0.0, 1.0], (30, 1)))
        blend = charts.atlas_log_density(gate, north, south, q)
        assert np.allclose(blend, north.log_density_volume(q), atol=1e-10)

    def test_seam_and_band(self, models):
        north, south = models
        gate = AtlasGate(0.3, 1.0)
        assert charts.atlas_seam_gradient_jump(gate, north, south) <= 1e-4
        seam = gate.seam_radius(S2)
        sup = charts.atlas_gradient_sup(gate, north, south, (seam - 0.3, seam + 0.3), n_grid=24)
        assert math.isfinite(sup) and sup > 0

    def test_cut_distance_check(self):
        from radcomp.errors import CutLocusError

        with pytest.raises(CutLocusError):
            charts.cut_distance_check(S2, default_pole(S2), south_pole(S2), 0.1)
        charts.cut_distance_check(S2, default_pole(S2), default_pole(S2), 0.1)


class TestParse:
    def test_kinds(self):
        assert make_chart(S2, "exp").kind == "exp"
        c = make_chart(S2, "bexp:alpha=0.5")
        assert c.alpha == 0.5 and c.label() == "bexp:alpha=0.5"
        assert make_chart(S2, "lambert").alpha == 0.0
        assert make_chart(S3, "gcl").convention == "equal-area"
        assert make_chart(S2, "gcl").convention == "paper"
        assert make_chart(S3, "gcl", "paper").convention == "paper"

    @pytest.mark.parametrize("text", ["bexp", "bexp:alpha=2", "bexp:beta=1", "exp:alpha=1", "foo", "bexp:alpha=x"])
    def test_errors(self, text):
        with pytest.raises(DomainError):
            make_chart(S2, text)

    def test_bad_convention(self):
        with pytest.raises(DomainError):
            Chart(S2, "exp", convention="mercator")


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.01, 2.0), st.floats(0.0, 2 * math.pi))
def test_forward_distance_property(alpha, r, t):
    chart = Chart(S2, "bexp", alpha)
    if r >= chart.domain:
        return
    q = chart.forward(r, np.array([math.cos(t), math.sin(t)]))
    assert geodesic_distance(S2, chart.pole, q) == pytest.approx(float(chart.radius_map(r)), abs=1e-10)
