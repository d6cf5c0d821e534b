import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hhmeans.errors import DomainError
from hhmeans.means import (
    MeanKind,
    NodeVector,
    arithmetic,
    bivariate_identric_mean,
    bivariate_log_mean,
    check_mean_axioms,
    evaluate,
    geometric,
    harmonic,
    harmonic_integral_dual,
    identric_mean,
    log_mean_bb,
    log_mean_cal,
)
from hhmeans.measures import MeasureSpec, WeightVector
from hhmeans.quadrature import integrate


@pytest.fixture(autouse=True, scope="module")
def _mp_precision():
    with mpmath.workdps(40):
        yield

INTEGRAL = (MeanKind.LOGCAL, MeanKind.LOGBB, MeanKind.IDENTRIC)


def random_case(rng, n, floor=0.03):
    raw = rng.dirichlet(np.ones(n + 1))
    lam = floor + (1.0 - floor * (n + 1)) * raw
    w = WeightVector(tuple(float(v) for v in lam[:n]))
    a = NodeVector(tuple(float(x) for x in rng.uniform(0.2, 10.0, size=n + 1)))
    return w, a


def mp_L(lam, a, b):
    lam, a, b = mpmath.mpf(lam), mpmath.mpf(a), mpmath.mpf(b)
    g = a ** (1 - lam) * b**lam
    return ((1 - lam) / lam * (a - g) + lam / (1 - lam) * (g - b)) / (mpmath.log(a) - mpmath.log(b))


def mp_I(lam, a, b):
    lam, a, b = mpmath.mpf(lam), mpmath.mpf(a), mpmath.mpf(b)
    m = (1 - lam) * a + lam * b
    p = m ** ((1 - 2 * lam) * m / (lam * (1 - lam) * (b - a)))
    q = (b ** (lam * b / (1 - lam)) / a ** ((1 - lam) * a / lam)) ** (1 / (b - a))
    return p * q / mpmath.e


def mp_mu_expectation_n1(lam2, g):
    """E[g(t)] for t = weight of the first node under Mu((1-lam2,)), n = 1."""
    c = mpmath.mpf(1 - lam2) / lam2
    # t = x**(1/c) turns c t**(c-1) dt into dx
    return mpmath.quad(lambda x: g(x ** (1 / c)), [0, 0.5, 1])


class TestClassicalMeans:
    def test_examples(self):
        assert arithmetic(WeightVector.uniform(2), (1, 2, 3)) == pytest.approx(2.0)
        assert arithmetic(WeightVector.parse("1/3,1/6"), (0.5, 1, 2)) == pytest.approx(4 / 3)
        w = WeightVector((0.5,))
        assert harmonic(w, (1, 4)) == pytest.approx(1.6)
        assert geometric(w, (1, 4)) == pytest.approx(2.0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 4), st.integers(0, 10**6))
    def test_ordering_and_constant(self, n, seed):
        w, a = random_case(np.random.default_rng(seed), n)
        assert harmonic(w, a) <= geometric(w, a) * (1 + 1e-14)
        assert geometric(w, a) <= arithmetic(w, a) * (1 + 1e-14)
        const = (3.7,) * (n + 1)
        for fn in (arithmetic, harmonic, geometric):
            assert fn(w, const) == pytest.approx(3.7, rel=1e-14)

    def test_validation(self):
        with pytest.raises(DomainError):
            arithmetic(WeightVector((0.5,)), (1, 2, 3))
        with pytest.raises(DomainError):
            NodeVector((1.0, -2.0))
        with pytest.raises(DomainError):
            NodeVector((1.0,))


class TestBivariateClosedForms:
    def test_table_values(self):
        assert bivariate_log_mean(1 / 3, 2, 1) == pytest.approx(1.61423, abs=5e-4)
        assert bivariate_log_mean(0.9, 4, 3) == pytest.approx(3.09162, abs=5e-4)
        assert bivariate_identric_mean(3 / 4, 3, 1) == pytest.approx(1.43367, abs=5e-4)
        assert bivariate_identric_mean(0.2, 6.5, 6) == pytest.approx(6.39893, abs=5e-4)

    def test_symmetric_cases(self):
        assert bivariate_log_mean(0.5, math.e, 1) == pytest.approx(math.e - 1, rel=1e-14)
        # I(1, e) = e**(1/(e-1)), 40-digit reference
        assert bivariate_identric_mean(0.5, 1, math.e) == pytest.approx(1.78957239684183, rel=1e-13)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0.01, 0.99), st.floats(0.01, 100.0), st.floats(0.01, 100.0))
    def test_against_mpmath(self, lam, a, b):
        if abs(math.log(a / b)) < 1e-6:
            return
        assert bivariate_log_mean(lam, a, b) == pytest.approx(float(mp_L(lam, a, b)), rel=1e-11)
        assert bivariate_identric_mean(lam, a, b) == pytest.approx(float(mp_I(lam, a, b)), rel=1e-11)

    @pytest.mark.parametrize("delta", [1e-4, 1e-7, 1e-10, 0.0])
    def test_near_diagonal_is_continuous(self, delta):
        a = 2.5
        b = a * (1 + delta)
        for fn in (bivariate_log_mean, bivariate_identric_mean):
            v = fn(0.3, a, b)
            assert a <= v <= b or v == pytest.approx(a, rel=1e-12)

    def test_endpoints(self):
        assert bivariate_log_mean(0.0, 2, 5) == 2
        assert bivariate_log_mean(1.0, 2, 5) == 5
        assert bivariate_identric_mean(0.0, 2, 5) == 2
        assert bivariate_identric_mean(1.0, 2, 5) == 5

    def test_domain(self):
        with pytest.raises(DomainError):
            bivariate_log_mean(0.5, -1, 2)
        with pytest.raises(DomainError):
            bivariate_identric_mean(1.5, 1, 2)


class TestIntegralMeans:
    @pytest.mark.parametrize(
        "w,a,kind,ref",
        [
            ("1/3,1/6", (0.5, 1, 2), "logcal", 1.19393),
            ("1/3,1/6", (0.5, 1, 2), "logbb", 1.19612),
            ("0.2,0.25", (1.3, 1.5, 1.9), "logcal", 1.66722),
            ("0.2,0.25", (1.3, 1.5, 1.9), "logbb", 1.66599),
            ("1/3,1/6", (0.5, 1, 2), "identric", 1.26771),
            ("0.05,0.2", (19, 1, 1), "logcal", 1.36040),
            ("0.05,0.2", (19, 1, 1), "identric", 1.35253),
        ],
    )
    def test_reference_values(self, w, a, kind, ref):
        assert evaluate(kind, WeightVector.parse(w), a).value == pytest.approx(ref, abs=5e-4)

    def test_n1_against_mpmath(self):
        # second-node weight 0.9 at (4, 3) and 1/4 at (3, 1)
        lam2, a, b = 0.9, 4.0, 3.0
        w = WeightVector((1 - lam2,))
        cal = mp_mu_expectation_n1(lam2, lambda t: a**t * b ** (1 - t))
        bb = 1 / mp_mu_expectation_n1(lam2, lambda t: 1 / (t * a + (1 - t) * b))
        assert log_mean_cal(w, (a, b)).value == pytest.approx(float(cal), rel=1e-9)
        assert log_mean_bb(w, (a, b)).value == pytest.approx(float(bb), rel=1e-9)
        lam2, a, b = 0.25, 3.0, 1.0
        w = WeightVector((1 - lam2,))
        ident = mpmath.exp(mp_mu_expectation_n1(lam2, lambda t: mpmath.log(t * a + (1 - t) * b)))
        assert identric_mean(w, (a, b)).value == pytest.approx(float(ident), rel=1e-9)

    def test_n2_against_mpmath(self):
        w = WeightVector.parse("1/3,1/6")
        a = (0.5, 1.0, 2.0)
        c1, c2 = mpmath.mpf(2) / 3, mpmath.mpf(1) / 3
        norm = mpmath.gamma(c1 + c2 + 1) / (mpmath.gamma(c1) * mpmath.gamma(c2))
        # substitute t1 = x**(1/c1), t2 = y**(1/c2) to remove the endpoint singularities
        def expect(g):
            def inner(x):
                t1 = x ** (1 / c1)
                ymax = (1 - t1) ** c2
                return mpmath.quad(lambda y: g(t1, y ** (1 / c2)), [0, ymax])
            return norm / (c1 * c2) * mpmath.quad(inner, [0, 1])
        with mpmath.workdps(20):
            cal = expect(lambda t1, t2: mpmath.mpf(0.5) ** t1 * 2 ** (1 - t1 - t2))
        assert log_mean_cal(w, a).value == pytest.approx(float(cal), rel=1e-7)

    @pytest.mark.parametrize("kind", INTEGRAL)
    def test_constant_nodes(self, kind):
        for n in (1, 2, 3):
            w, _ = random_case(np.random.default_rng(n), n)
            assert evaluate(kind, w, (2.75,) * (n + 1)).value == pytest.approx(2.75, rel=1e-9)

    def test_error_bounds_are_propagated(self):
        res = log_mean_bb(WeightVector.parse("0.2,0.25"), (1.3, 1.5, 1.9))
        assert res.estimate is not None
        assert 0 < res.error_bound < 1e-7
        assert evaluate("arithmetic", WeightVector.parse("0.2,0.25"), (1.3, 1.5, 1.9)).estimate is None

    def test_bivariate_kind_needs_n1(self):
        with pytest.raises(DomainError):
            evaluate("bivl", WeightVector.parse("0.2,0.25"), (1, 2, 3))
        # the scalar parameter is the second node's weight
        assert evaluate("bivl", WeightVector((0.1,)), (4, 3)).value == pytest.approx(
            bivariate_log_mean(0.9, 4, 3), rel=1e-15
        )

    def test_harmonic_dual(self):
        w = WeightVector((0.5,))
        v = harmonic_integral_dual(w, (1, 4)).value
        assert 1.6 <= v <= 2.0
        assert v == pytest.approx(1 / log_mean_bb(w, (1, 0.25)).value, rel=1e-12)
        assert harmonic_integral_dual(WeightVector.parse("0.2,0.3"), (1.5,) * 3).value == pytest.approx(1.5)


class TestMeanProperties:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_bounds_and_chains(self, n):
        rng = np.random.default_rng(40 + n)
        for _ in range(200 // 3 + 1):
            w, a = random_case(rng, n)
            cal = log_mean_cal(w, a)
            bb = log_mean_bb(w, a)
            ide = identric_mean(w, a)
            dual = harmonic_integral_dual(w, a)
            lo, hi = min(a.a), max(a.a)
            for r in (cal, bb, ide, dual):
                assert lo - r.error_bound <= r.value <= hi + r.error_bound
            g, h, ar = geometric(w, a), harmonic(w, a), arithmetic(w, a)
            assert g <= cal.value + cal.error_bound and cal.value <= ar + cal.error_bound
            assert h <= bb.value + bb.error_bound and bb.value <= ar + bb.error_bound
            assert g <= ide.value + ide.error_bound and ide.value <= ar + ide.error_bound
            assert bb.value <= ide.value + bb.error_bound + ide.error_bound
            assert h <= dual.value + dual.error_bound
            assert dual.value <= cal.value + dual.error_bound + cal.error_bound

    @pytest.mark.parametrize("kind", INTEGRAL)
    def test_homogeneity(self, kind):
        rng = np.random.default_rng(8)
        for n in (1, 2, 3):
            w, a = random_case(rng, n)
            base = evaluate(kind, w, a)
            for s in (0.1, 7.3):
                scaled = evaluate(kind, w, tuple(s * x for x in a.a))
                tol = scaled.error_bound + s * base.error_bound + 1e-12 * s * base.value
                assert abs(scaled.value - s * base.value) <= tol

    @pytest.mark.parametrize("n", [1, 2])
    def test_uniform_weight_reduction(self, n):
        a = np.array([0.7, 1.9, 4.2])[: n + 1]
        w = WeightVector.uniform(n)
        uni = MeasureSpec.uniform(n)
        cal = integrate(lambda p: np.exp(p @ np.log(a)), uni).value
        bb = 1 / integrate(lambda p: 1 / (p @ a), uni).value
        assert log_mean_cal(w, a).value == pytest.approx(cal, abs=1e-9)
        assert log_mean_bb(w, a).value == pytest.approx(bb, abs=1e-9)

    def test_half_weight_collapse(self):
        for a, b in ((1.0, 4.0), (2.5, 0.3), (10.0, 11.0)):
            w = WeightVector((0.5,))
            L = float(mp_L(0.5, a, b))
            assert log_mean_cal(w, (a, b)).value == pytest.approx(L, abs=1e-6)
            assert log_mean_bb(w, (a, b)).value == pytest.approx(L, abs=1e-6)
            assert identric_mean(w, (a, b)).value == pytest.approx(float(mp_I(0.5, a, b)), abs=1e-6)

    def test_noncomparability_witnesses(self):
        def gap(k1, k2, w, a):
            r1, r2 = evaluate(k1, WeightVector.parse(w), a), evaluate(k2, WeightVector.parse(w), a)
            return r1.value - r2.value, r1.error_bound + r2.error_bound

        d, m = gap("logcal", "logbb", "1/3,1/6", (0.5, 1, 2))
        assert d < -m
        d, m = gap("logcal", "logbb", "0.2,0.25", (1.3, 1.5, 1.9))
        assert d > m
        d, m = gap("logcal", "identric", "1/3,1/6", (0.5, 1, 2))
        assert d < -m
        d, m = gap("logcal", "identric", "0.05,0.2", (19, 1, 1))
        assert d > m


class TestAxioms:
    @pytest.mark.parametrize("kind", ["geometric", "logcal", "logbb", "identric"])
    def test_examples_pass(self, kind):
        rep = check_mean_axioms(kind, WeightVector.parse("1/3,1/6"), (0.5, 1, 2))
        assert rep.all_ok, rep
        assert len(rep.corners) == 3
        assert rep.partials == pytest.approx((1 / 3, 1 / 6, 1 / 2), abs=1e-4)

    def test_arithmetic_and_bivariate(self):
        for kind in ("arithmetic", "harmonic", "bivl", "bivi"):
            assert check_mean_axioms(kind, WeightVector((0.3,)), (2.0, 5.0)).all_ok

    def test_detects_a_non_mean(self, monkeypatch):
        # a map that ignores the weights fails the partials axiom
        import hhmeans.means as means

        real = means.evaluate

        def fake(kind, w, a, cfg=None):
            return real(kind, WeightVector.uniform(w.n), a, cfg)

        monkeypatch.setattr(means, "evaluate", fake)
        rep = check_mean_axioms("geometric", WeightVector.parse("0.1,0.2"), (1, 2, 3))
        assert rep.bounds_ok and rep.symmetric_ok
        assert not rep.partials_ok
