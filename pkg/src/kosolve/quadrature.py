"""Radial meshes, cumulative trapezoid integrals and the singular inner kernel.

The inner kernel of the integral operator is

    K_j(t) = t^{1-N} e^{-H_j(t)} ∫_0^t s^{N-1} e^{H_j(s)} a_j(s) g(s) ds,
    H_j(t) = ∫_0^t h_j(τ) dτ.

It is accumulated node by node with the decay factor
``(t_{m-1}/t_m)^{N-1} exp(H_{m-1} - H_m)`` so that neither ``t^{1-N}`` at
the origin nor ``e^{H}`` for large H is ever formed on its own.  The
discrete values coincide with a plain cumulative trapezoid of the full
integrand divided by ``t^{N-1} e^{H(t)}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("a radial grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("radial grids start at r = 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def graded(cls, R_max, M=2000, gamma=2.0):
        """Nodes ``r_m = R_max (m/M)^gamma``, clustered at the origin for gamma > 1."""
        if R_max <= 0 or M < 1 or gamma < 1:
            raise ValueError("need R_max > 0, M >= 1, gamma >= 1")
        nodes = R_max * (np.arange(M + 1) / M) ** gamma
        nodes[-1] = R_max
        return cls(nodes, float(gamma))

    @property
    def R_max(self):
        return float(self.nodes[-1])

    @property
    def M(self):
        return self.nodes.size - 1

    def __len__(self):
        return self.nodes.size

    def truncated(self, stop):
        """Grid made of the first ``stop`` nodes."""
        return RadialGrid(self.nodes[:stop], self.gamma)


def cumulative_integral(values, nodes):
    """Composite-trapezoid ``∫_0^{r_m} g``, with 0 at the first node."""
    values = np.asarray(values, dtype=float)
    nodes = np.asarray(getattr(nodes, "nodes", nodes), dtype=float)
    out = np.empty_like(nodes)
    out[0] = 0.0
    np.cumsum(0.5 * np.diff(nodes) * (values[1:] + values[:-1]), out=out[1:])
    return out


def sample(expr, nodes):
    """Evaluate a coefficient expression on every node (constants broadcast)."""
    nodes = np.asarray(getattr(nodes, "nodes", nodes), dtype=float)
    return np.broadcast_to(np.asarray(expr.eval({"r": nodes}), dtype=float), nodes.shape).copy()


def weight_H(spec, j, grid):
    """H_j on the grid: cumulative integral of the sampled h_j."""
    return cumulative_integral(sample(spec.h(j), grid), grid)


def decay_factors(nodes, H, N):
    """``q_m = (t_{m-1}/t_m)^{N-1} exp(H_{m-1} - H_m)``; q_0 and q_1 are unused."""
    t = np.asarray(nodes, dtype=float)
    q = np.zeros_like(t)
    ratio = t[1:-1] / t[2:]
    q[2:] = ratio ** (N - 1) * np.exp(H[1:-1] - H[2:])
    return q


def accumulate_kernel(nodes, q, g, N):
    """Run the kernel recursion for source samples ``g = a_j * fvals``."""
    t = np.asarray(nodes, dtype=float)
    g = np.asarray(g, dtype=float)
    K = np.zeros_like(t)
    if t.size < 2:
        return K
    # leading-order limit on the first cell: K(r_1) = r_1 g(0) / N
    K[1] = t[1] * g[0] / N
    dt = np.diff(t)
    prev = float(K[1])
    qs = q.tolist()
    gs = g.tolist()
    hs = (0.5 * dt).tolist()
    Kl = K.tolist()
    for m in range(2, t.size):
        qm = qs[m]
        prev = qm * prev + hs[m - 1] * (qm * gs[m - 1] + gs[m])
        Kl[m] = prev
    return np.asarray(Kl)


class KernelPlan:
    """Per (spec, grid) cache of the sampled a_j, H_j and decay factors."""

    def __init__(self, spec, grid):
        self.spec = spec
        self.grid = grid
        nodes = grid.nodes
        self.a = [sample(spec.a(j), nodes) for j in (1, 2)]
        self.H = [weight_H(spec, j, grid) for j in (1, 2)]
        self.q = [decay_factors(nodes, H, spec.N) for H in self.H]

    def kernel(self, j, fvals):
        fvals = np.asarray(fvals, dtype=float)
        if np.any(fvals < 0):
            raise DomainError(f"f{j} takes negative values on the profile")
        with np.errstate(over="ignore", invalid="ignore"):
            g = self.a[j - 1] * fvals
            g = np.where(self.a[j - 1] == 0, 0.0, g)
            return accumulate_kernel(self.grid.nodes, self.q[j - 1], g, self.spec.N)


def inner_kernel(spec, j, grid, fvals):
    """K_j on ``grid`` for sampled ``fvals`` (use :class:`KernelPlan` in loops)."""
    return KernelPlan(spec, grid).kernel(j, fvals)
