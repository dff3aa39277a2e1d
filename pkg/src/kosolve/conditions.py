"""Integral conditions on a_j, h_j, f_j and a finite-horizon divergence engine.

Every "= ∞ / < ∞" question is answered by :func:`check_divergence`, which
returns Divergent, Convergent or Inconclusive.  The engine looks at the
partial integrals P(T_k) at the horizons and estimates the local power
exponent σ of the integrand from consecutive increments:

* σ ≥ -1 + δ, or increments per unit log-width not shrinking  ->  Divergent
* σ ≤ -1 - δ, and not drifting back into the dead band         ->  Convergent

Borderline tails (σ within the dead band) are re-examined in the variable
x = ln T (integrand t·g(t)) and then y = ln ln T, which separates e.g.
1/(t ln t) from 1/(t ln² t).  The log-scale passes only run when the
horizon list contains four horizons whose logarithms successively at
least double; otherwise the verdict stays Inconclusive.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, RangeExhausted
from .model import ensure_valid
from .quadrature import RadialGrid, accumulate_kernel, cumulative_integral, decay_factors, sample

DEFAULT_HORIZONS = (1e1, 1e2, 1e3, 1e4)
DEFAULT_EPSILONS = (0.1, 0.5, 1.0)
DELTA = 0.1


class Status(str, enum.Enum):
    DIVERGENT = "Divergent"
    CONVERGENT = "Convergent"
    INCONCLUSIVE = "Inconclusive"


class ConditionId(str, enum.Enum):
    KO = "KO"
    KO1 = "KO1"
    LZZ = "LZZ"
    BOUNDED5 = "Bounded5"
    LARGE12 = "Large12"
    NO_BOUNDED5B = "NoBounded5b"
    NECESSARY13 = "Necessary13"
    WEIGHT_MONOTONE = "WeightMonotone"


@dataclass
class ConditionVerdict:
    status: Status
    partial_values: list
    tail_slope: float
    condition_id: ConditionId | None = None
    level: int = 1
    note: str = ""
    parameters: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "condition": self.condition_id.value if self.condition_id else None,
            "status": self.status.value,
            "tail_slope": _json_float(self.tail_slope),
            "level": self.level,
            "note": self.note,
            "parameters": self.parameters,
            "partial_values": [[float(T), _json_float(P)] for T, P in self.partial_values],
        }


def _json_float(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


# ---------------------------------------------------------------------------
# verdict engine


def divergence_grid(lower, horizons, per_decade=400, head=2000):
    """Sampling nodes from ``lower`` through every horizon (horizons are nodes)."""
    horizons = [float(T) for T in horizons if T > lower]
    if not horizons:
        raise ValueError("no horizon beyond the lower limit")
    T0 = horizons[0]
    if lower == 0.0:
        parts = [T0 * (np.arange(head + 1) / head) ** 2]
    elif T0 / lower > 2.0:
        parts = [np.geomspace(lower, T0, head + 1)]
    else:
        parts = [np.linspace(lower, T0, head + 1)]
    for lo, hi in zip(horizons[:-1], horizons[1:]):
        n = max(8, int(math.ceil(per_decade * math.log10(hi / lo))))
        parts.append(np.geomspace(lo, hi, n + 1)[1:])
    t = np.concatenate(parts)
    for T in horizons:
        t[np.argmin(np.abs(t - T))] = T
    return t, horizons


def _local_exponents(z, D):
    """Exponent of the mean integrand between successive windows in variable z."""
    widths = np.diff(z)
    mids = np.sqrt(z[1:] * z[:-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        gbar = D / widths
        return np.log(gbar[1:] / gbar[:-1]) / np.log(mids[1:] / mids[:-1])


def _decide(z, D, delta):
    """Verdict from the last three windows in variable ``z``; None if borderline."""
    z = np.asarray(z, dtype=float)
    D = np.asarray(D, dtype=float)[-3:]
    z = z[-4:]
    if D[-1] == 0.0:
        return Status.CONVERGENT, -math.inf
    if D[-2] == 0.0:
        return Status.DIVERGENT, math.inf
    sig = _local_exponents(z, D)
    prev, last = float(sig[-2]), float(sig[-1])
    per_log = D / np.log(z[1:] / z[:-1])
    if last >= -1.0 + delta or per_log[-1] >= per_log[-2] * (1.0 - 1e-4):
        return Status.DIVERGENT, last
    drift = max(0.0, last - prev)
    if last <= -1.0 - delta and last + drift <= -1.0 - delta:
        return Status.CONVERGENT, last
    return None, last


def _log_chain(horizons, lower):
    """Horizons whose logarithms successively double, ending at the last one."""
    usable = [T for T in horizons if T > max(lower, math.e)]
    if not usable:
        return []
    chain = [usable[-1]]
    for T in reversed(usable[:-1]):
        if math.log(T) <= 0.5 * math.log(chain[-1]) * (1 + 1e-9):
            chain.append(T)
    return chain[::-1]


def check_divergence_sampled(t, g, horizons, delta=DELTA, lower=None):
    """Verdict for ``∫ g`` from samples on nodes ``t`` that include every horizon."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(g, dtype=float)
    lower = float(t[0]) if lower is None else lower
    horizons = [float(T) for T in horizons if T > lower]
    if np.any(g < 0):
        raise ValueError("the integrand must be nonnegative")
    with np.errstate(over="ignore", invalid="ignore"):
        P = cumulative_integral(g, t)
    idx = [int(np.argmin(np.abs(t - T))) for T in horizons]
    PT = np.array([P[i] for i in idx])
    partial = list(zip(horizons, PT.tolist()))
    if not np.all(np.isfinite(PT)):
        return ConditionVerdict(Status.DIVERGENT, partial, math.inf, note="integrand overflow")
    if len(horizons) < 4:
        return ConditionVerdict(Status.INCONCLUSIVE, partial, math.nan, note="need four horizons")
    D = np.diff(PT)
    status, slope = _decide(horizons, D, delta)
    if status is not None:
        return ConditionVerdict(status, partial, slope, level=1)
    chain = _log_chain(horizons, lower)
    if len(chain) < 4:
        return ConditionVerdict(Status.INCONCLUSIVE, partial, slope, level=1,
                                note="borderline tail; horizons too short for log-scale refinement")
    Pc = np.array([PT[horizons.index(T)] for T in chain])
    Dc = np.diff(Pc)
    x = np.log(chain)
    for level, z in ((2, x), (3, np.log(x))):
        status, s = _decide(z, Dc, delta)
        if status is not None:
            return ConditionVerdict(status, partial, s, level=level)
    return ConditionVerdict(Status.INCONCLUSIVE, partial, s, level=3, note="borderline at every scale")


def check_divergence(integrand, horizons=DEFAULT_HORIZONS, lower=0.0, delta=DELTA, per_decade=400):
    """Verdict for ``∫_lower^∞ integrand(t) dt`` with ``integrand`` vectorized in t."""
    t, horizons = divergence_grid(lower, horizons, per_decade)
    with np.errstate(over="ignore", divide="ignore"):
        g = np.broadcast_to(np.asarray(integrand(t), dtype=float), t.shape)
    return check_divergence_sampled(t, g, horizons, delta, lower)


# ---------------------------------------------------------------------------
# F, I and I^{-1}


@dataclass
class DiagonalF:
    b: float
    s: np.ndarray
    F: np.ndarray
    _I: dict = field(default_factory=dict, repr=False)

    def I_table(self, q):
        """Cumulative trapezoid of F^{-1/q} from b over the tabulated nodes >= b."""
        if q not in self._I:
            k = int(np.searchsorted(self.s, self.b))
            s = self.s[k:]
            F = self.F[k:]
            if np.any(F <= 0):
                raise DomainError("F vanishes on [b, s_max]; I is undefined")
            with np.errstate(under="ignore"):
                I = cumulative_integral(F ** (-1.0 / q), s)
            self._I[q] = (s, I)
        return self._I[q]

    @property
    def s_max(self):
        return float(self.s[-1])


def diagonal_source(spec, s):
    s = np.asarray(s, dtype=float)
    total = np.zeros_like(s)
    with np.errstate(over="ignore"):
        for j in (1, 2):
            total = total + np.broadcast_to(spec.f(j).eval({"u": s, "v": s}), s.shape)
    return total


def f_nodes(b, s_max, M_s=None, per_decade=200):
    """Uniform nodes on [0, b] followed by geometric nodes on [b, s_max]."""
    head = 500
    if M_s is None:
        M_s = max(2000, head + int(per_decade * math.log10(max(s_max / b, 10.0))))
    head = min(head, M_s // 4)
    tail = np.geomspace(b, s_max, M_s - head + 1)
    return np.concatenate([np.linspace(0.0, b, head + 1)[:-1], tail])


def build_F(spec, s_max, M_s=None, nodes=None):
    """Table of F(s) = ∫_0^s Σ_i f_i(t,t) dt."""
    b = spec.b
    if nodes is None:
        if not s_max > b:
            raise ValueError("s_max must exceed b")
        nodes = f_nodes(b, s_max, M_s)
    s = np.asarray(nodes, dtype=float)
    with np.errstate(over="ignore"):
        F = cumulative_integral(diagonal_source(spec, s), s)
    return DiagonalF(b, s, F)


def I_of(Ftab, r, q):
    """∫_b^r F(s)^{-1/q} ds, interpolated between table nodes."""
    if r < Ftab.b:
        raise ValueError("I is defined for r >= b")
    s, I = Ftab.I_table(q)
    if r > s[-1]:
        raise RangeExhausted(r, s[-1])
    return float(np.interp(r, s, I))


def I_inverse(Ftab, y, q):
    """r with I(r) = y by monotone interpolation; RangeExhausted beyond the table."""
    s, I = Ftab.I_table(q)
    if y < 0:
        raise ValueError("I^-1 is defined for y >= 0")
    if y >= I[-1]:
        raise RangeExhausted(y, float(I[-1]))
    return float(np.interp(y, I, s))


# ---------------------------------------------------------------------------
# individual conditions


def check_KO(spec, q=2.0, s_max=None, horizons=None, delta=DELTA):
    """Keller-Osserman type condition: does ∫_b^∞ F(s)^{-1/q} ds diverge?"""
    ensure_valid(spec)
    horizons = list(horizons or DEFAULT_HORIZONS)
    if s_max is not None:
        horizons = [T for T in horizons if T <= s_max]
    t, hz = divergence_grid(spec.b, horizons)
    head = np.linspace(0.0, spec.b, 501)[:-1]
    Ftab = build_F(spec, None, nodes=np.concatenate([head, t]))
    F = Ftab.F[head.size:]
    with np.errstate(divide="ignore", over="ignore"):
        g = np.where(F > 0, F ** (-1.0 / q), np.inf)
    verdict = check_divergence_sampled(t, g, hz, delta, spec.b)
    verdict.condition_id = ConditionId.KO
    verdict.parameters = {"q": q}
    return verdict


def check_KO1(spec, horizons=None, delta=DELTA):
    """Classical scalar form with f(s) = f_1(s,s) + f_2(s,s) and q = 2."""
    verdict = check_KO(spec, 2.0, None, horizons, delta)
    verdict.condition_id = ConditionId.KO1
    return verdict


def check_LZZ(spec, horizons=None, delta=DELTA):
    """Divergence of ∫_b^∞ ds / (f_1(s,s) + f_2(s,s))."""
    ensure_valid(spec)

    def integrand(s):
        d = diagonal_source(spec, s)
        with np.errstate(divide="ignore"):
            return np.where(d > 0, 1.0 / d, np.inf)

    verdict = check_divergence(integrand, horizons or DEFAULT_HORIZONS, spec.b, delta)
    verdict.condition_id = ConditionId.LZZ
    return verdict


def _log_weight_sum(spec, t, power):
    """log Σ_j e^{power·H_j(t)} a_j(t), evaluated without overflow."""
    nodes = np.asarray(t, dtype=float)
    total = np.full(nodes.shape, -np.inf)
    for j in (1, 2):
        H = cumulative_integral(sample(spec.h(j), nodes), nodes)
        s, la = spec.a(j).eval_log({"r": nodes})
        s = np.broadcast_to(s, nodes.shape)
        la = np.broadcast_to(la, nodes.shape)
        if np.any(s < 0):
            raise DomainError(f"a{j} is negative on the sampled ray")
        term = np.where(s > 0, power * H + la, -np.inf)
        total = np.logaddexp(total, term)
    return total


def bounded5_integrand(spec, eps, t):
    """t^{1+ε} (Σ_j e^{p/(p-1) H_j(t)} a_j(t))^{2/p} on nodes starting at 0."""
    p = spec.p
    lw = _log_weight_sum(spec, t, p / (p - 1))
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp((1 + eps) * np.log(t) + (2.0 / p) * lw)


def _per_epsilon(spec, epsilons, horizons, delta, cid):
    t, hz = divergence_grid(0.0, horizons or DEFAULT_HORIZONS)
    out = {}
    for eps in epsilons or DEFAULT_EPSILONS:
        verdict = check_divergence_sampled(t, bounded5_integrand(spec, eps, t), hz, delta, 0.0)
        verdict.condition_id = cid
        verdict.parameters = {"epsilon": eps}
        out[float(eps)] = verdict
    return out


def check_bounded5(spec, epsilons=None, horizons=None, delta=DELTA):
    """Per-ε verdicts; the condition holds if any tested ε gives Convergent."""
    ensure_valid(spec)
    return _per_epsilon(spec, epsilons, horizons, delta, ConditionId.BOUNDED5)


def satisfied_for_some_epsilon(per_eps):
    return any(v.status is Status.CONVERGENT for v in per_eps.values())


def check_necessary13(spec, epsilons=None, horizons=None, delta=DELTA):
    """Same integral as :func:`check_bounded5`; must be Divergent for every ε."""
    ensure_valid(spec)
    return _per_epsilon(spec, epsilons, horizons, delta, ConditionId.NECESSARY13)


def holds_for_all_tested_epsilon(per_eps):
    return all(v.status is Status.DIVERGENT for v in per_eps.values())


def large12_integrand(spec, j, t):
    """(e^{-H_j(t)} t^{1-N} ∫_0^t s^{N-1} e^{H_j(s)} a_j(s) ds)^{1/(p-1)}."""
    nodes = np.asarray(t, dtype=float)
    H = cumulative_integral(sample(spec.h(j), nodes), nodes)
    with np.errstate(over="ignore", invalid="ignore"):
        a = sample(spec.a(j), nodes)
        K = accumulate_kernel(nodes, decay_factors(nodes, H, spec.N), a, spec.N)
        return np.power(np.maximum(K, 0.0), spec.exponent)


def check_large12(spec, horizons=None, delta=DELTA):
    """Per-j verdicts; solutions are large when both are Divergent."""
    ensure_valid(spec)
    t, hz = divergence_grid(0.0, horizons or DEFAULT_HORIZONS)
    out = {}
    for j in (1, 2):
        verdict = check_divergence_sampled(t, large12_integrand(spec, j, t), hz, delta, 0.0)
        verdict.condition_id = ConditionId.LARGE12
        verdict.parameters = {"j": j}
        out[j] = verdict
    return out


def nonexistence5b_integrand(spec, j, t):
    """(1/N)^{1/(p-1)} (e^{-H_j(t)} t a_j(t))^{1/(p-1)}."""
    nodes = np.asarray(t, dtype=float)
    H = cumulative_integral(sample(spec.h(j), nodes), nodes)
    s, la = spec.a(j).eval_log({"r": nodes})
    s = np.broadcast_to(s, nodes.shape)
    la = np.broadcast_to(la, nodes.shape)
    if np.any(s < 0):
        raise DomainError(f"a{j} is negative on the sampled ray")
    e = spec.exponent
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        log_val = e * (-math.log(spec.N) - H + np.log(nodes) + la)
        return np.where((s > 0) & (nodes > 0), np.exp(log_val), 0.0)


def check_nonexistence5b(spec, horizons=None, delta=DELTA):
    """Per-j verdicts; Divergent for both j rules out bounded solutions."""
    ensure_valid(spec)
    t, hz = divergence_grid(0.0, horizons or DEFAULT_HORIZONS)
    out = {}
    for j in (1, 2):
        verdict = check_divergence_sampled(t, nonexistence5b_integrand(spec, j, t), hz, delta, 0.0)
        verdict.condition_id = ConditionId.NO_BOUNDED5B
        verdict.parameters = {"j": j}
        out[j] = verdict
    return out


@dataclass
class MonotoneCheck:
    nondecreasing: bool
    first_violation: float | None

    def to_dict(self):
        return {"nondecreasing": self.nondecreasing, "first_violation_radius": self.first_violation}


def check_weight_monotone(spec, R_from, grid):
    """Sampled check that r^{p(N-1)/(p-1)} Σ_j e^{p/(p-1) H_j} a_j is nondecreasing on [R_from, R_max]."""
    ensure_valid(spec)
    nodes = grid.nodes if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)
    p, N = spec.p, spec.N
    lw = _log_weight_sum(spec, nodes, p / (p - 1))
    keep = (nodes >= R_from) & (nodes > 0)
    r = nodes[keep]
    with np.errstate(invalid="ignore"):
        logW = p * (N - 1) / (p - 1) * np.log(r) + lw[keep]
    finite = np.isfinite(logW)
    tol = 1e-12 * np.maximum(1.0, np.abs(logW))
    with np.errstate(invalid="ignore"):
        drops = np.diff(logW) < -tol[1:]
    # a weight that vanishes after being positive is a decrease; -inf to -inf is flat
    drops |= finite[:-1] & ~finite[1:]
    bad = np.nonzero(drops)[0]
    if bad.size:
        return MonotoneCheck(False, float(r[bad[0] + 1]))
    return MonotoneCheck(True, None)
