"""Named reference problems and the frozen verdict catalog.

Analytic entries follow from power tails or closed-form antiderivatives.
Borderline entries (``derived=True``) were frozen from engine runs at the
stated horizons and act as regression values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import conditions as cond
from .conditions import Status
from .model import ProblemSpec

DEFAULT_HORIZONS = cond.DEFAULT_HORIZONS
LONG_HORIZONS = tuple(10.0**k for k in range(1, 9))
MEDIUM_HORIZONS = tuple(10.0**k for k in range(1, 7))

# f-catalog: diagonal behaviour from sublinear to superquadratic, plus the
# borderline u log(e+u)^2 that separates the two divergence conditions
F_CATALOG = (
    "1",
    "sqrt(u)",
    "u",
    "u+v",
    "u*log(exp(1)+u)",
    "u*log(exp(1)+u)^2",
    "u^1.5",
    "u^2",
    "3*u^2",
    "u*v",
    "u*u*u",
)


def constant_source(p, N, b=1.0):
    return ProblemSpec.symmetric(p, N, b, f="1")


def constant_source_exact(p, N, b=1.0):
    """u(r) = b/2 + (1/N)^{1/(p-1)} (p-1)/p r^{p/(p-1)} for a ≡ 1, h ≡ 0, f ≡ 1."""
    c = (1.0 / N) ** (1.0 / (p - 1)) * (p - 1) / p
    return lambda r: 0.5 * b + c * np.asarray(r, dtype=float) ** (p / (p - 1))


def linear_sum():
    """p=2, N=3, a ≡ 1, h ≡ 0, f_1 = f_2 = u + v, b = 1."""
    return ProblemSpec.symmetric(2, 3, 1.0, f="u+v")


def cubic():
    """KO-failing source f = u^3: radial solutions blow up at a finite radius."""
    return ProblemSpec.symmetric(2, 3, 1.0, f="u*u*u")


def quartic_manufactured():
    """u = 1/2 + r^4 solves the p=2, N=3 problem with a = 20 r^2, f ≡ 1."""
    return ProblemSpec.from_strings(2, 3, 1.0, a1="20*r^2", a2="20*r^2", f1="1", f2="1")


def decaying_weight(sigma, p=2.0, N=3, f="u+v"):
    return ProblemSpec.symmetric(p, N, 1.0, a=f"(1+r)^(-{sigma:g})", f=f)


@dataclass(frozen=True)
class CatalogVerdict:
    label: str
    check: str
    expected: Status
    problem: dict | None = None
    options: dict = field(default_factory=dict)
    derived: bool = False

    def spec(self):
        return None if self.problem is None else ProblemSpec.from_strings(**self.problem)

    def run(self):
        """Evaluate the entry and return the resulting ConditionVerdict."""
        opts = dict(self.options)
        horizons = opts.pop("horizons", None)
        if self.check == "divergence":
            integrand = _INTEGRANDS[opts["integrand"]]
            return cond.check_divergence(integrand, horizons or DEFAULT_HORIZONS, lower=opts["lower"])
        spec = self.spec()
        if self.check == "KO":
            return cond.check_KO(spec, opts.get("q", 2.0), horizons=horizons)
        if self.check == "LZZ":
            return cond.check_LZZ(spec, horizons=horizons)
        if self.check in ("bounded5", "necessary13"):
            fn = cond.check_bounded5 if self.check == "bounded5" else cond.check_necessary13
            eps = opts["epsilon"]
            return fn(spec, [eps], horizons)[eps]
        if self.check == "large12":
            return cond.check_large12(spec, horizons)[opts["j"]]
        if self.check == "nonexistence5b":
            return cond.check_nonexistence5b(spec, horizons)[opts["j"]]
        raise ValueError(f"unknown check {self.check!r}")


_INTEGRANDS = {
    "1/t": lambda t: 1.0 / t,
    "1/t^2": lambda t: 1.0 / t**2,
    "1/(t ln t)": lambda t: 1.0 / (t * np.log(t)),
}


def _sym(p=2, N=3, a="1", h="0", f="u+v"):
    return {"p": p, "N": N, "b": 1.0, "a1": a, "a2": a, "h1": h, "h2": h, "f1": f, "f2": f}


D, C, I = Status.DIVERGENT, Status.CONVERGENT, Status.INCONCLUSIVE
POW4 = "(1+r)^(-4)"

VERDICT_CATALOG = (
    CatalogVerdict("harmonic 1/t", "divergence", D, None, {"integrand": "1/t", "lower": 1.0}),
    CatalogVerdict("1/t^2", "divergence", C, None, {"integrand": "1/t^2", "lower": 1.0}),
    CatalogVerdict("KO f=u", "KO", D, _sym(f="u")),
    CatalogVerdict("KO f=3u^2", "KO", C, _sym(f="3*u^2")),
    CatalogVerdict("LZZ f=u", "LZZ", D, _sym(f="u")),
    CatalogVerdict("LZZ f=u^2", "LZZ", C, _sym(f="u^2")),
    CatalogVerdict("bounded5 a=1 eps=0.1", "bounded5", D, _sym(), {"epsilon": 0.1}),
    CatalogVerdict("bounded5 a=1 eps=0.5", "bounded5", D, _sym(), {"epsilon": 0.5}),
    CatalogVerdict("bounded5 a=1 eps=1", "bounded5", D, _sym(), {"epsilon": 1.0}),
    CatalogVerdict("bounded5 a=(1+r)^-4 eps=0.5", "bounded5", C, _sym(a=POW4), {"epsilon": 0.5}),
    CatalogVerdict("bounded5 h=1 a=e^-4r eps=0.5", "bounded5", C, _sym(a="exp(-4*r)", h="1"), {"epsilon": 0.5}),
    CatalogVerdict("large12 a=1 j=1", "large12", D, _sym(), {"j": 1}),
    CatalogVerdict("large12 a=1 j=2", "large12", D, _sym(), {"j": 2}),
    CatalogVerdict("large12 a=(1+r)^-4 j=1", "large12", C, _sym(a=POW4), {"j": 1}),
    CatalogVerdict("nonexistence5b a=1 j=1", "nonexistence5b", D, _sym(), {"j": 1}),
    CatalogVerdict("nonexistence5b a=(1+r)^-4 j=1", "nonexistence5b", C, _sym(a=POW4), {"j": 1}),
    CatalogVerdict("nonexistence5b h=1 a=e^2r j=1", "nonexistence5b", D, _sym(a="exp(2*r)", h="1"), {"j": 1}),
    CatalogVerdict("necessary13 a=1 eps=0.1", "necessary13", D, _sym(), {"epsilon": 0.1}),
    CatalogVerdict("necessary13 a=(1+r)^-4 eps=0.5", "necessary13", C, _sym(a=POW4), {"epsilon": 0.5}),
    # borderline and numerically evaluated entries, frozen from engine runs
    CatalogVerdict("1/(t ln t) default horizons", "divergence", I, None,
                   {"integrand": "1/(t ln t)", "lower": 2.0}, derived=True),
    CatalogVerdict("1/(t ln t) horizons to 1e6", "divergence", I, None,
                   {"integrand": "1/(t ln t)", "lower": 2.0, "horizons": MEDIUM_HORIZONS}, derived=True),
    CatalogVerdict("1/(t ln t) horizons to 1e8", "divergence", D, None,
                   {"integrand": "1/(t ln t)", "lower": 2.0, "horizons": LONG_HORIZONS}, derived=True),
    CatalogVerdict("KO f=u ln(e+u)^2 horizons to 1e8", "KO", D, _sym(f="u*log(exp(1)+u)^2"),
                   {"horizons": LONG_HORIZONS}, derived=True),
    CatalogVerdict("LZZ f=u ln(e+u)^2 horizons to 1e8", "LZZ", C, _sym(f="u*log(exp(1)+u)^2"),
                   {"horizons": LONG_HORIZONS}, derived=True),
    CatalogVerdict("large12 h=1 a=1 j=1", "large12", D, _sym(h="1"),
                   {"j": 1, "horizons": (1.0, 10.0, 100.0, 1000.0)}, derived=True),
)
