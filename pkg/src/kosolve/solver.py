"""Monotone successive approximation u^k = S(u^{k-1}) from the constant b/2.

The iterate sums Σ_i u_i^k(R) are checked against the k-uniform bound

    Σ_i u_i^k(R) <= I^{-1}( (p 2^{p-1}/(p-1) Σ_i a_i^R)^{1/p} R + I(b) ),

with I built at exponent 1/p.  When that I has a finite range the bound
is unavailable and the solver runs unguarded.

If an iterate overflows, the grid is cut at the first offending node and
the iteration continues on the remaining prefix (values at r depend only
on [0, r]); the cut position after the last iteration is reported as the
blow-up radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conditions import build_F, I_inverse, I_of
from .errors import BoundUnavailable, IterateOverflow, NonConvergence, RangeExhausted
from .model import ensure_valid
from .operator import ProfilePair, apply_S
from .quadrature import KernelPlan, RadialGrid, sample

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200
BOUND_SLACK = 1e-2
# iterates beyond this are treated as numerical blow-up (f may still square or cube them)
OVERFLOW_LEVEL = 1e150


def power_mean_holds(x1, x2, p):
    """(x1 + x2)^p <= 2^{p-1} (x1^p + x2^p) for nonnegative x1, x2 and p > 1."""
    lhs = (x1 + x2) ** p
    rhs = 2.0 ** (p - 1) * (x1**p + x2**p)
    return lhs <= rhs * (1 + 1e-12) + 1e-300


def sup_coefficient(spec, j, R, grid=None):
    """max of a_j over grid nodes in [0, R]."""
    if not R > 0:
        raise ValueError("R must be positive")
    nodes = (grid or RadialGrid.graded(R)).nodes
    nodes = nodes[nodes <= R * (1 + 1e-12)]
    return float(np.max(sample(spec.a(j), nodes)))


def a_priori_bound(spec, R, grid=None, q=None, s_max=None):
    """Upper bound for Σ_i u_i^k(R), uniform in k.  Raises BoundUnavailable."""
    ensure_valid(spec)
    p = spec.p
    q = p if q is None else q
    total_a = sup_coefficient(spec, 1, R, grid) + sup_coefficient(spec, 2, R, grid)
    c = (p * 2.0 ** (p - 1) / (p - 1) * total_a) ** (1.0 / p)
    b = spec.b
    s_max = s_max or 1e3 * b
    while True:
        Ftab = build_F(spec, s_max)
        y = c * R + I_of(Ftab, b, q)
        try:
            return I_inverse(Ftab, y, q)
        except RangeExhausted as exc:
            if s_max > 1e290:
                raise BoundUnavailable(
                    f"I at exponent 1/{q:g} stays below {exc.y_max:.6g} < {y:.6g}; "
                    "its integral appears to converge"
                ) from exc
            s_max = min(s_max * 1e6, 1e300)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    final: ProfilePair
    sup_change_history: list = field(default_factory=list)
    apriori_bound_at_Rmax: float | None = None
    bound_violated: bool = False
    residual_norm: float | None = None
    sum_at_Rmax_history: list = field(default_factory=list)
    blowup_radius: float | None = None
    bound_note: str = ""
    iterates: list | None = None

    def to_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "sup_change_history": [float(x) for x in self.sup_change_history],
            "apriori_bound_at_Rmax": self.apriori_bound_at_Rmax,
            "bound_violated": self.bound_violated,
            "bound_note": self.bound_note,
            "sum_at_Rmax_history": [float(x) for x in self.sum_at_Rmax_history],
            "residual_norm": self.residual_norm,
            "blowup_radius": self.blowup_radius,
            "R_max": float(self.final.grid.R_max),
            "nodes": len(self.final.grid),
        }


def _scaled_change(new, old):
    d1 = np.abs(new.u1 - old.u1) / (1.0 + np.abs(new.u1))
    d2 = np.abs(new.u2 - old.u2) / (1.0 + np.abs(new.u2))
    return float(max(d1.max(), d2.max()))


def _first_overflow(prof):
    bad = ~np.isfinite(prof.u1) | ~np.isfinite(prof.u2)
    bad |= (np.abs(prof.u1) > OVERFLOW_LEVEL) | (np.abs(prof.u2) > OVERFLOW_LEVEL)
    idx = np.nonzero(bad)[0]
    return int(idx[0]) if idx.size else None


def solve_fixed_point(spec, grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      keep_iterates=False, raise_on_failure=True):
    """Iterate S from (b/2, b/2) until the mixed change falls below ``tol``.

    Raises NonConvergence or IterateOverflow (both carry the partial report)
    unless ``raise_on_failure`` is false, in which case the report is returned.
    """
    ensure_valid(spec)
    if not tol > 0:
        raise ValueError("tol must be positive")
    R = grid.R_max
    report = SolveReport(False, 0, ProfilePair.constant(grid, 0.5 * spec.b))
    try:
        report.apriori_bound_at_Rmax = a_priori_bound(spec, R, grid)
    except BoundUnavailable as exc:
        report.bound_note = str(exc)
    if keep_iterates:
        report.iterates = [report.final]

    plan = KernelPlan(spec, grid)
    prof = report.final
    cut = None
    for k in range(1, max_iter + 1):
        new = apply_S(spec, prof, plan)
        report.iterations = k
        stop = _first_overflow(new)
        if stop is not None:
            if stop < 3:
                report.final = prof
                report.blowup_radius = float(new.grid.nodes[max(stop, 1)])
                break
            cut = stop
            report.blowup_radius = float(new.grid.nodes[stop])
            new = new.truncated(stop)
            prof = prof.truncated(stop)
            plan = KernelPlan(spec, new.grid)
        change = _scaled_change(new, prof)
        report.sup_change_history.append(change)
        if cut is None:
            total = float(new.u1[-1] + new.u2[-1])
            report.sum_at_Rmax_history.append(total)
            bound = report.apriori_bound_at_Rmax
            if bound is not None and total > bound * (1 + BOUND_SLACK):
                report.bound_violated = True
        if keep_iterates:
            report.iterates.append(new)
        prof = new
        report.final = new
        if change <= tol:
            report.converged = cut is None
            break

    if report.blowup_radius is not None:
        exc = IterateOverflow(report.blowup_radius, report=report)
        if raise_on_failure:
            raise exc
        return report
    if not report.converged and raise_on_failure:
        raise NonConvergence(
            f"no convergence after {max_iter} iterations (last change "
            f"{report.sup_change_history[-1]:.3e} > {tol:.1e})",
            report,
        )
    return report

