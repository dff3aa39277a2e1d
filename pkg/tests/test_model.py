import pytest

from kosolve.errors import InvalidProblem
from kosolve.model import ProblemSpec, ensure_valid, validate
from kosolve.operator import apply_S
from kosolve.quadrature import RadialGrid
from kosolve.solver import solve_fixed_point


def test_reference_problem_is_clean():
    rep = validate(ProblemSpec.symmetric(2, 3, 1, a="1", h="1", f="u+v"))
    assert rep.ok and rep.hard_errors == [] and rep.warnings == []


@pytest.mark.parametrize(
    "kwargs, needle",
    [
        (dict(p=3, N=3, b=1), "p > N-1"),
        (dict(p=1, N=3, b=1), "p <= 1"),
        (dict(p=1.0005, N=3, b=1), "numerical guard"),
        (dict(p=2, N=2, b=1), "N < 3"),
        (dict(p=2, N=3.5, b=1), "integer"),
        (dict(p=2, N=3, b=0), "b <= 0"),
    ],
)
def test_structural_hard_errors(kwargs, needle):
    rep = validate(ProblemSpec.symmetric(**kwargs))
    assert not rep.ok
    assert any(needle in e for e in rep.hard_errors)


def test_domain_error_on_lattice_is_hard():
    rep = validate(ProblemSpec.symmetric(2, 3, 1, f="log(u)"))
    assert any("domain error" in e for e in rep.hard_errors)


def test_hypothesis_violations_are_warnings():
    rep = validate(ProblemSpec.from_strings(2, 3, 1, a1="1-r", f2="u-v"))
    assert rep.ok
    assert any(w.startswith("a1") for w in rep.warnings)
    assert any(w.startswith("f2") and "nondecreasing" in w for w in rep.warnings)


def test_zero_coefficient_warns():
    rep = validate(ProblemSpec.symmetric(2, 3, 1, a="0"))
    assert rep.ok and any("identically zero" in w for w in rep.warnings)


def test_validate_is_idempotent():
    spec = ProblemSpec.symmetric(2, 3, 1, a="1-r")
    assert validate(spec).to_dict() == validate(spec).to_dict()


def test_downstream_operations_fail_fast_with_same_report():
    spec = ProblemSpec.symmetric(3, 3, 1)
    grid = RadialGrid.graded(1.0, 50)
    with pytest.raises(InvalidProblem) as first:
        ensure_valid(spec)
    for call in (lambda: solve_fixed_point(spec, grid),
                 lambda: apply_S(spec, None)):
        with pytest.raises(InvalidProblem) as info:
            call()
        assert info.value.report.hard_errors == first.value.report.hard_errors


def test_string_round_trip():
    spec = ProblemSpec.symmetric(2, 3, 1, a="(1+r)^(-4)")
    again = ProblemSpec.from_strings(**spec.as_strings())
    assert again == spec
