"""Certified bound on the midpoint-rule error of the Ritz volume integral.

For a uniform midpoint partition with N intervals of width delta the
bound reads

    |int F - delta sum F(x_j)| <= delta^2/4 sum_j max_{I_j} |F'|  <=  R(theta)

where F = 1/2 u'^2 - f u.  ``max |F'|`` on each interval is bounded by
``r3``, built from local derivative bounds ``r2`` which in turn use the
global weight bounds ``r1``.  All of these are cheap closed-form functions
of the weights, so ``R`` can be added to the training loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .losses import ritz_loss
from .network import CutoffPoly, NetJet, NetworkParams
from .quadrature import QuadratureRule, midpoint_rule


@dataclass(frozen=True)
class RegContext:
    cutoff: CutoffPoly
    problem: object
    N: int
    delta: float = field(init=False)
    rule: QuadratureRule = field(init=False, repr=False)

    def __post_init__(self):
        if not self.problem.has_bounded_data:
            raise ValueError("regularizer requires finite ||f||_inf, ||f'||_inf")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        a, b = self.problem.domain
        object.__setattr__(self, "delta", (b - a) / self.N)
        object.__setattr__(self, "rule", midpoint_rule(a, b, self.N))

    @property
    def midpoints(self) -> np.ndarray:
        return self.rule.points


def r1(params: NetworkParams, n: int) -> float:
    """Global bound on |uhat^(n)| from the weights alone."""
    sup = params.activation.sup_norms
    if n == 0:
        return abs(params.b1) + sup[0] * float(np.sum(np.abs(params.A1)))
    return sup[n] * float(np.sum(np.abs(params.A1) * np.abs(params.A0) ** n))


def _r1_grad(params: NetworkParams, n: int) -> np.ndarray:
    m = params.M
    sup = params.activation.sup_norms
    g = np.zeros(3 * m + 1)
    sA1, sA0 = np.sign(params.A1), np.sign(params.A0)
    absA0 = np.abs(params.A0)
    if n == 0:
        g[2 * m : 3 * m] = sup[0] * sA1
        g[3 * m] = np.sign(params.b1)
    else:
        g[2 * m : 3 * m] = sup[n] * sA1 * absA0**n
        g[:m] = sup[n] * np.abs(params.A1) * n * absA0 ** (n - 1) * sA0
    return g


def _r2_offsets(params, cutoff):
    """The weight-only part of r2: delta-free sums for n = 0, 1, 2."""
    R1 = [r1(params, k) for k in range(4)]
    phi = cutoff.sup_norms
    return [sum(comb(n + 1, k) * R1[k] * phi[n + 1 - k] for k in range(n + 2)) for n in range(3)]


def _r2_all(params, cutoff, ctx):
    jet = NetJet(params, cutoff, ctx.midpoints, 2)
    offs = _r2_offsets(params, cutoff)
    R2 = [np.abs(jet.u[n]) + 0.5 * ctx.delta * offs[n] for n in range(3)]
    return jet, R2


def r2(params, cutoff, ctx: RegContext, j: int, n: int) -> float:
    """Bound on |u^(n)| over the j-th (1-based) midpoint interval."""
    if not 0 <= n <= 2:
        raise ValueError("r2 order must be in 0..2")
    if not 1 <= j <= ctx.N:
        raise IndexError(f"interval index {j} out of range 1..{ctx.N}")
    _, R2 = _r2_all(params, cutoff, ctx)
    return float(R2[n][j - 1])


def _r3_all(R2, problem):
    return R2[1] * R2[2] + problem.f_sup * R2[1] + problem.f_prime_sup * R2[0]


def r3(params, cutoff, ctx: RegContext, j: int) -> float:
    """Bound on the Lipschitz constant of 1/2 u'^2 - f u over interval j."""
    if not 1 <= j <= ctx.N:
        raise IndexError(f"interval index {j} out of range 1..{ctx.N}")
    _, R2 = _r2_all(params, cutoff, ctx)
    return float(_r3_all(R2, ctx.problem)[j - 1])


def r_total(params, cutoff, ctx: RegContext, grad=False):
    jet, R2 = _r2_all(params, cutoff, ctx)
    prob = ctx.problem
    scale = 0.25 * ctx.delta**2
    value = scale * float(np.sum(_r3_all(R2, prob)))
    if not grad:
        return value
    # dR / dR2[n] per interval
    dR2 = [
        np.full(ctx.N, scale * prob.f_prime_sup),
        scale * (R2[2] + prob.f_sup),
        scale * R2[1],
    ]
    g = jet.pullback({n: dR2[n] * np.sign(jet.u[n]) for n in range(3)})
    phi = cutoff.sup_norms
    for n in range(3):
        total = 0.5 * ctx.delta * float(np.sum(dR2[n]))
        for k in range(n + 2):
            g += total * comb(n + 1, k) * phi[n + 1 - k] * _r1_grad(params, k)
    return value, g


def regularized_loss(params, cutoff, problem, ctx: RegContext, grad=False):
    """Midpoint Ritz loss plus the quadrature-error bound."""
    if not grad:
        return ritz_loss(params, cutoff, problem, ctx.rule) + r_total(params, cutoff, ctx)
    v1, g1 = ritz_loss(params, cutoff, problem, ctx.rule, grad=True)
    v2, g2 = r_total(params, cutoff, ctx, grad=True)
    return v1 + v2, g1 + g2
