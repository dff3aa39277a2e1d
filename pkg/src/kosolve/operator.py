"""The integral operator S acting on a pair of radial profiles."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import ensure_valid
from .quadrature import KernelPlan, RadialGrid, cumulative_integral


@dataclass(frozen=True, eq=False)
class ProfilePair:
    grid: RadialGrid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        n = len(self.grid)
        if np.shape(self.u1) != (n,) or np.shape(self.u2) != (n,):
            raise ValueError("profile arrays must match the grid")

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(len(grid), float(value)), np.full(len(grid), float(value)))

    @property
    def r(self):
        return self.grid.nodes

    def component(self, j):
        return (self.u1, self.u2)[j - 1]

    def total(self):
        return self.u1 + self.u2

    def truncated(self, stop):
        return ProfilePair(self.grid.truncated(stop), self.u1[:stop].copy(), self.u2[:stop].copy())


def source_values(spec, j, u1, u2):
    """f_j sampled along a profile, broadcast to the profile length."""
    vals = spec.f(j).eval({"u": u1, "v": u2})
    return np.broadcast_to(np.asarray(vals, dtype=float), np.shape(u1))


def kernels(spec, prof, plan=None):
    """Inner kernels (K_1, K_2) for the nonlinearity evaluated on ``prof``."""
    plan = plan or KernelPlan(spec, prof.grid)
    u1, u2 = prof.u1, prof.u2
    if np.any(u1 < 0) or np.any(u2 < 0):
        warnings.warn("negative profile values clamped to 0 before evaluating f", RuntimeWarning)
        u1, u2 = np.maximum(u1, 0.0), np.maximum(u2, 0.0)
    with np.errstate(over="ignore"):
        return tuple(plan.kernel(j, source_values(spec, j, u1, u2)) for j in (1, 2))


def derivatives(spec, K):
    """u_j' = K_j^{1/(p-1)} node-wise."""
    with np.errstate(over="ignore"):
        return np.power(np.maximum(K, 0.0), spec.exponent)


def apply_S(spec, prof, plan=None):
    """One application of S; returns the new profile pair on the same grid."""
    ensure_valid(spec)
    K1, K2 = kernels(spec, prof, plan)
    half = 0.5 * spec.b
    with np.errstate(over="ignore", invalid="ignore"):
        u1 = half + cumulative_integral(derivatives(spec, K1), prof.grid)
        u2 = half + cumulative_integral(derivatives(spec, K2), prof.grid)
    return ProfilePair(prof.grid, u1, u2)
