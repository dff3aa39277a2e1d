"""Problem instances and their validation.

A :class:`ProblemSpec` describes the radial system

    Δ_p u_j + h_j(r) |∇u_j|^{p-1} = a_j(r) f_j(u_1, u_2),   j = 1, 2,

on R^N together with the central value b (``u_j(0) = b/2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DomainError, InvalidProblem
from .expr import Expr, SampleSpec, check_sampled_properties, parse

P_GUARD = 1e-3

COEFF_VARS = frozenset({"r"})
NONLIN_VARS = frozenset({"u", "v"})


@dataclass(frozen=True)
class ProblemSpec:
    p: float
    N: int
    b: float
    a1: Expr
    a2: Expr
    h1: Expr
    h2: Expr
    f1: Expr
    f2: Expr

    @classmethod
    def from_strings(cls, p, N, b, a1="1", a2="1", h1="0", h2="0", f1="u+v", f2="u+v"):
        return cls(
            p=float(p),
            N=N,
            b=float(b),
            a1=parse(str(a1), COEFF_VARS),
            a2=parse(str(a2), COEFF_VARS),
            h1=parse(str(h1), COEFF_VARS),
            h2=parse(str(h2), COEFF_VARS),
            f1=parse(str(f1), NONLIN_VARS),
            f2=parse(str(f2), NONLIN_VARS),
        )

    @classmethod
    def symmetric(cls, p, N, b, a="1", h="0", f="u+v"):
        return cls.from_strings(p, N, b, a, a, h, h, f, f)

    def a(self, j):
        return (self.a1, self.a2)[j - 1]

    def h(self, j):
        return (self.h1, self.h2)[j - 1]

    def f(self, j):
        return (self.f1, self.f2)[j - 1]

    @property
    def exponent(self):
        """The outer exponent 1/(p-1)."""
        return 1.0 / (self.p - 1.0)

    def as_strings(self):
        return {
            "p": self.p,
            "N": self.N,
            "b": self.b,
            **{k: str(getattr(self, k)) for k in ("a1", "a2", "h1", "h2", "f1", "f2")},
        }

    @cached_property
    def _validation(self):
        return validate(self)


@dataclass
class ValidationReport:
    hard_errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.hard_errors

    def to_dict(self):
        return {"hard_errors": list(self.hard_errors), "warnings": list(self.warnings)}


def _structural_errors(spec):
    errors = []
    p, N, b = spec.p, spec.N, spec.b
    if isinstance(N, bool) or not isinstance(N, int):
        errors.append(f"N must be an integer, got {N!r}")
    elif N < 3:
        errors.append(f"N < 3 (N = {N})")
    if p <= 1:
        errors.append(f"p <= 1 (p = {p:g})")
    if p < 1 + P_GUARD:
        errors.append(f"p < 1 + {P_GUARD:g} (numerical guard, p = {p:g})")
    if isinstance(N, int) and p > N - 1:
        errors.append(f"p > N-1 ({p:g} > {N - 1})")
    if not b > 0:
        errors.append(f"b <= 0 (b = {b:g})")
    return errors


def validate(spec, sample_spec=SampleSpec()):
    """Structural checks (hard errors) plus sampled audits of the hypotheses (warnings)."""
    report = ValidationReport(hard_errors=_structural_errors(spec))

    def audit(name, expr, kinds):
        for kind in kinds:
            try:
                bad = check_sampled_properties(expr, kind, sample_spec)
            except DomainError as exc:
                report.hard_errors.append(f"{name} = {expr}: domain error on sample lattice ({exc})")
                return
            if bad:
                first = bad[0]
                report.warnings.append(
                    f"{name} = {expr}: {kind} violated at {len(bad)} sample(s), "
                    f"first at {first.point} ({first.detail})"
                )

    for j in (1, 2):
        a = spec.a(j)
        audit(f"a{j}", a, ["nonneg_on_ray"])
        audit(f"h{j}", spec.h(j), ["nonneg_on_ray"])
        if not any(e.startswith(f"a{j} ") for e in report.hard_errors):
            ray = np.linspace(0.0, sample_spec.ray_max, sample_spec.ray_points)
            vals = np.broadcast_to(a.eval({"r": ray}), ray.shape)
            if np.all(vals == 0):
                report.warnings.append(f"a{j} = {a}: identically zero on the sampled ray")
    for j in (1, 2):
        audit(f"f{j}", spec.f(j), ["nonneg_on_ray", "nondecreasing_each_var", "positive_when_positive"])
    return report


def ensure_valid(spec):
    """Raise :class:`InvalidProblem` if ``spec`` carries hard errors."""
    report = spec._validation
    if report.hard_errors:
        raise InvalidProblem(report)
    return report
