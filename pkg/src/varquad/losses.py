"""Discrete Ritz, Least-Squares and piecewise-linear surrogate losses.

Every loss has the signature ``loss(params, cutoff, problem, rule_or_mesh,
grad=False)`` and returns the value, or ``(value, gradient)`` when
``grad`` is true.  The gradient is with respect to ``params.flat()``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import NetJet
from .quadrature import Mesh, QuadratureRule, check_finite


class LossTag(enum.Enum):
    RITZ = "ritz"
    LEAST_SQUARES = "ls"
    RITZ_PIECEWISE_LINEAR = "ritz_pl"


@dataclass(frozen=True)
class LossKind:
    tag: LossTag
    mesh: Optional[Mesh] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", LossTag(self.tag))
        if self.tag is LossTag.RITZ_PIECEWISE_LINEAR and self.mesh is None:
            raise ValueError("the piecewise-linear loss needs a mesh")


def _data(fn, x):
    vals = np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)
    check_finite(x, vals)
    return vals


def _neumann(problem):
    xs = np.array(sorted(problem.neumann_data), dtype=float)
    gs = np.array([problem.neumann_data[x] for x in xs])
    ns = np.array([problem.normal(x) for x in xs])
    return xs, gs, ns


def ritz_loss(params, cutoff, problem, rule: QuadratureRule, grad=False):
    """sum w (sigma/2 u'^2 - f u) - sum_Neumann g u."""
    x, w = rule.points, rule.weights
    xb, gb, _ = _neumann(problem)
    k = x.size
    jet = NetJet(params, cutoff, np.concatenate([x, xb]), 1)
    u, du = jet.u[0], jet.u[1]
    f = _data(problem.f, x)
    sig = _data(problem.sigma, x)
    value = float(w @ (0.5 * sig * du[:k] ** 2 - f * u[:k]) - gb @ u[k:])
    if not grad:
        return value
    cot_u = np.concatenate([-w * f, -gb])
    cot_du = np.concatenate([w * sig * du[:k], np.zeros_like(gb)])
    return value, jet.pullback({0: cot_u, 1: cot_du})


def ritz_volume_integrand(params, cutoff, problem, x):
    """Pointwise sigma/2 u'^2 - f u (boundary terms excluded)."""
    x = np.asarray(x, dtype=float)
    jet = NetJet(params, cutoff, x, 1)
    return 0.5 * _data(problem.sigma, x) * jet.u[1] ** 2 - _data(problem.f, x) * jet.u[0]


def ls_loss(params, cutoff, problem, rule: QuadratureRule, grad=False):
    """sum w |sigma u'' + sigma' u' + f|^2 + sum_Neumann |sigma u' n - g|^2."""
    x, w = rule.points, rule.weights
    xb, gb, nb = _neumann(problem)
    k = x.size
    jet = NetJet(params, cutoff, np.concatenate([x, xb]), 2)
    du, d2u = jet.u[1], jet.u[2]
    f = _data(problem.f, x)
    sig = _data(problem.sigma, x)
    dsig = _data(problem.sigma_prime, x)
    sig_b = _data(problem.sigma, xb)
    res = sig * d2u[:k] + dsig * du[:k] + f
    res_b = sig_b * du[k:] * nb - gb
    value = float(w @ res**2 + res_b @ res_b)
    if not grad:
        return value
    cot_du = np.concatenate([2.0 * w * res * dsig, 2.0 * res_b * sig_b * nb])
    cot_d2u = np.concatenate([2.0 * w * res * sig, np.zeros_like(gb)])
    return value, jet.pullback({1: cot_du, 2: cot_d2u})


def ritz_pl_loss(params, cutoff, problem, mesh: Mesh, grad=False):
    """Ritz energy of the piecewise-linear interpolant of u at the mesh breakpoints.

    The gradient term is exact for the interpolant; the source term uses a
    one-point rule on f times the interpolant; Neumann terms use the
    interpolant's endpoint values.
    """
    bp = mesh.breakpoints
    h = mesh.widths
    mid = 0.5 * (bp[:-1] + bp[1:])
    jet = NetJet(params, cutoff, bp, 0)
    u = jet.u[0]
    f = _data(problem.f, mid)
    sig = _data(problem.sigma, mid)
    slope = np.diff(u) / h
    value = float(np.sum(0.5 * sig * slope**2 * h) - np.sum(f * 0.5 * (u[:-1] + u[1:]) * h))
    xb, gb, _ = _neumann(problem)
    ib = np.searchsorted(bp, xb)
    value -= float(gb @ u[ib])
    if not grad:
        return value
    cot = np.zeros_like(u)
    flux = sig * slope  # d/du_r of sigma/2 slope^2 h
    cot[1:] += flux
    cot[:-1] -= flux
    src = 0.5 * f * h
    cot[1:] -= src
    cot[:-1] -= src
    np.subtract.at(cot, ib, gb)
    return value, jet.pullback({0: cot})


def loss_for(kind: LossKind):
    """Return ``fn(params, cutoff, problem, rule, grad=False)`` for a loss kind.

    For the piecewise-linear surrogate the rule argument is ignored and the
    kind's mesh is used.
    """
    if kind.tag is LossTag.RITZ:
        return ritz_loss
    if kind.tag is LossTag.LEAST_SQUARES:
        return ls_loss
    mesh = kind.mesh

    def pl(params, cutoff, problem, _rule=None, grad=False):
        return ritz_pl_loss(params, cutoff, problem, mesh, grad=grad)

    return pl
