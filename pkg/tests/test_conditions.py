import math
import time

import numpy as np
import pytest

from kosolve import conditions as cond
from kosolve.catalog import LONG_HORIZONS, VERDICT_CATALOG, F_CATALOG, decaying_weight
from kosolve.conditions import Status
from kosolve.errors import RangeExhausted
from kosolve.model import ProblemSpec
from kosolve.quadrature import RadialGrid


def _sym(**kw):
    return ProblemSpec.symmetric(2, 3, 1.0, **kw)


def test_F_linear_diagonal_exact():
    Ftab = cond.build_F(_sym(f="u"), 50.0)
    np.testing.assert_allclose(Ftab.F, Ftab.s**2, rtol=1e-12, atol=1e-14)


def test_F_constant_source():
    Ftab = cond.build_F(_sym(f="1"), 50.0)
    np.testing.assert_allclose(Ftab.F, 2 * Ftab.s, rtol=1e-12)


def test_F_cubic_second_order():
    errs = []
    for M in (1000, 2000, 4000):
        Ftab = cond.build_F(_sym(f="u*u*u"), None, nodes=np.linspace(0.0, 10.0, M + 1))
        errs.append(np.max(np.abs(Ftab.F - Ftab.s**4 / 2)))
    assert 3 <= errs[0] / errs[1] <= 5 and 3 <= errs[1] / errs[2] <= 5


def test_I_log_case():
    Ftab = cond.build_F(_sym(f="u"), 1e3)
    assert cond.I_of(Ftab, math.e, 2) == pytest.approx(1.0, rel=1e-4)
    assert cond.I_of(Ftab, 1.0, 2) == 0.0
    assert cond.I_inverse(Ftab, 1.0, 2) == pytest.approx(math.e, rel=1e-4)
    assert cond.I_inverse(Ftab, 0.0, 2) == 1.0


def test_I_finite_range():
    Ftab = cond.build_F(_sym(f="3*u^2"), 1e8)
    for r in (4.0, 100.0, 1e6):
        assert cond.I_of(Ftab, r, 2) == pytest.approx(math.sqrt(2) * (1 - r**-0.5), rel=1e-3)
    with pytest.raises(RangeExhausted):
        cond.I_inverse(Ftab, 1.5, 2)


def test_I_round_trip():
    Ftab = cond.build_F(_sym(f="u+v"), 1e4)
    s, _ = Ftab.I_table(2)
    cell = np.max(np.diff(s))
    rng = np.random.default_rng(4)
    for r in rng.uniform(1.0, 5e3, 100):
        back = cond.I_inverse(Ftab, cond.I_of(Ftab, r, 2), 2)
        assert abs(back - r) <= 2 * cell


def test_divergence_engine_basics():
    assert cond.check_divergence(lambda t: 1 / t, lower=1.0).status is Status.DIVERGENT
    assert cond.check_divergence(lambda t: t**-2, lower=1.0).status is Status.CONVERGENT
    assert cond.check_divergence(lambda t: np.exp(-t), lower=0.0).status is Status.CONVERGENT
    assert cond.check_divergence(lambda t: np.exp(t), lower=0.0).status is Status.DIVERGENT
    v = cond.check_divergence(lambda t: t**-2, (10.0, 100.0, 1000.0), lower=1.0)
    assert v.status is Status.INCONCLUSIVE


def test_verdict_fields():
    v = cond.check_divergence(lambda t: 1 / t, lower=1.0)
    assert [T for T, _ in v.partial_values] == list(cond.DEFAULT_HORIZONS)
    assert v.tail_slope == pytest.approx(-1.0, abs=1e-3)
    d = v.to_dict()
    assert d["status"] == "Divergent" and len(d["partial_values"]) == 4


@pytest.mark.parametrize("entry", VERDICT_CATALOG, ids=lambda e: e.label)
def test_frozen_catalog(entry):
    assert entry.run().status is entry.expected


def test_catalog_size_and_runtime():
    analytic = [e for e in VERDICT_CATALOG if not e.derived]
    assert len(analytic) >= 15
    t0 = time.perf_counter()
    for e in VERDICT_CATALOG:
        e.run()
    assert time.perf_counter() - t0 < 30


def test_bounded5_and_necessary13_share_the_integral():
    spec = decaying_weight(4)
    b5 = cond.check_bounded5(spec)
    n13 = cond.check_necessary13(spec)
    assert [v.status for v in b5.values()] == [v.status for v in n13.values()]
    assert cond.satisfied_for_some_epsilon(b5)
    assert not cond.holds_for_all_tested_epsilon(n13)
    assert cond.holds_for_all_tested_epsilon(cond.check_necessary13(_sym()))


def test_large12_and_5b_are_per_component():
    spec = ProblemSpec.from_strings(2, 3, 1.0, a1="1", a2="(1+r)^(-4)")
    l12 = cond.check_large12(spec)
    assert l12[1].status is Status.DIVERGENT and l12[2].status is Status.CONVERGENT
    nb = cond.check_nonexistence5b(spec)
    assert nb[1].status is Status.DIVERGENT and nb[2].status is Status.CONVERGENT


def test_KO_at_other_exponent():
    # F = s^2: the integrand s^{-2/q} diverges only for q >= 2
    assert cond.check_KO(_sym(f="u"), q=3.0).status is Status.DIVERGENT
    assert cond.check_KO(_sym(f="u"), q=1.2).status is Status.CONVERGENT
    assert cond.check_KO1(_sym(f="u")).condition_id is cond.ConditionId.KO1


def test_weight_monotone():
    g = RadialGrid.graded(5.0)
    assert cond.check_weight_monotone(_sym(), 0.0, g).nondecreasing
    assert cond.check_weight_monotone(_sym(a="(1+r)^(-4)"), 0.0, g).nondecreasing
    bad = cond.check_weight_monotone(_sym(a="exp(-r^2)"), 0.0, g)
    assert not bad.nondecreasing
    # r^4 e^{-2 r^2} peaks at r = sqrt(2)
    assert bad.first_violation == pytest.approx(math.sqrt(2), abs=0.01)


def test_horizon_extension_never_flips_a_decided_verdict():
    short = cond.DEFAULT_HORIZONS
    for f in F_CATALOG:
        spec = _sym(f=f)
        for check in (cond.check_KO, cond.check_LZZ):
            a = check(spec, horizons=short).status
            b = check(spec, horizons=LONG_HORIZONS).status
            if a is not Status.INCONCLUSIVE and b is not Status.INCONCLUSIVE:
                assert a is b, (f, check.__name__)
