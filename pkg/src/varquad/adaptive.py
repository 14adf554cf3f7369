"""h-adaptive integration driven by training/validation mesh disagreement.

The validation mesh is always the global bisection of the training mesh.
On every check each training element's Gauss integral of the Ritz volume
integrand is compared with the sum over its two validation children; an
element whose values differ by more than the tolerance is bisected.

A reasonable tolerance is a small percentage of the loss value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .losses import ritz_volume_integrand
from .network import CutoffPoly
from .quadrature import Mesh, check_finite, gauss_rule, global_refine
from .training import TrainConfig, train


@dataclass(frozen=True)
class Refinement:
    iteration: int
    element: int  # 1-based index in the training mesh at the time of the check
    left: float
    right: float
    delta: float


@dataclass(frozen=True)
class AdaptiveState:
    training_mesh: Mesh
    epsilon: float
    check_period: int = 100
    max_checks: float = float("inf")
    max_refinements: float = float("inf")
    checks_done: int = 0
    refinement_log: tuple = ()
    validation_mesh: Mesh = field(init=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("tolerance must be positive")
        if self.check_period < 1:
            raise ValueError("check_period must be >= 1")
        object.__setattr__(self, "refinement_log", tuple(self.refinement_log))
        object.__setattr__(self, "validation_mesh", global_refine(self.training_mesh))

    @property
    def n_refinements(self) -> int:
        return len(self.refinement_log)

    @property
    def exhausted(self) -> bool:
        return self.checks_done >= self.max_checks or self.n_refinements >= self.max_refinements

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "element_left", "element_right", "delta"])
            for r in self.refinement_log:
                w.writerow([r.iteration, f"{r.left:.17g}", f"{r.right:.17g}", f"{r.delta:.17g}"])


def element_integrals(params, cutoff, problem, mesh: Mesh, order: int) -> np.ndarray:
    rule = gauss_rule(mesh, order)
    vals = ritz_volume_integrand(params, cutoff, problem, rule.points)
    check_finite(rule.points, vals)
    return (rule.weights * vals).reshape(mesh.n_elements, order).sum(axis=1)


def adaptive_check(state: AdaptiveState, params, cutoff, problem, gauss_order=3, iteration=0):
    """One sweep over the training elements; returns ``(new_state, refined)``."""
    coarse = element_integrals(params, cutoff, problem, state.training_mesh, gauss_order)
    fine = element_integrals(params, cutoff, problem, state.validation_mesh, gauss_order)
    delta = fine.reshape(-1, 2).sum(axis=1) - coarse
    marked = np.flatnonzero(np.abs(delta) > state.epsilon)
    budget = state.max_refinements - state.n_refinements
    marked = marked[: int(min(budget, marked.size))]
    bp = state.training_mesh.breakpoints
    log = list(state.refinement_log)
    for j in marked:
        log.append(Refinement(int(iteration), int(j) + 1, float(bp[j]), float(bp[j + 1]), float(delta[j])))
    if marked.size:
        new_bp = np.insert(bp, marked + 1, 0.5 * (bp[marked] + bp[marked + 1]))
        mesh = Mesh(new_bp)
    else:
        mesh = state.training_mesh
    new_state = replace(state, training_mesh=mesh, checks_done=state.checks_done + 1, refinement_log=tuple(log))
    return new_state, bool(marked.size)


@dataclass(frozen=True)
class AdaptiveConfig:
    train: TrainConfig
    epsilon: float = 1e-4
    check_period: int = 100
    max_checks: float = float("inf")
    max_refinements: float = float("inf")


def run_adaptive_training(problem, config: AdaptiveConfig, cutoff: Optional[CutoffPoly] = None):
    """Train with periodic adaptive checks; returns ``(params, state, trace)``."""
    cutoff = cutoff or CutoffPoly.for_problem(problem)
    tc = config.train
    if tc.rule.kind != "gauss":
        raise ValueError("adaptive integration needs a Gauss rule on a mesh")
    order = tc.rule.order
    state = AdaptiveState(
        Mesh.uniform(problem.a, problem.b, tc.rule.elements),
        config.epsilon,
        config.check_period,
        config.max_checks,
        config.max_refinements,
    )
    box = {"state": state}

    def hook(it, params):
        st = box["state"]
        if it == 0 or it % st.check_period or st.exhausted:
            return None
        st, refined = adaptive_check(st, params, cutoff, problem, order, iteration=it)
        box["state"] = st
        if not refined:
            return None
        return gauss_rule(st.training_mesh, order), gauss_rule(st.validation_mesh, order)

    params, trace = train(
        problem,
        cutoff,
        tc,
        hook=hook,
        rule=gauss_rule(state.training_mesh, order),
        validation_rule=gauss_rule(state.validation_mesh, order),
    )
    state = box["state"]
    trace.refinements = list(state.refinement_log)
    return params, state, trace
