"""Full-batch gradient training of the network on a fixed quadrature rule."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .losses import LossKind, LossTag, loss_for, ls_loss, ritz_loss
from .network import ActivationKind, CutoffPoly, NetJet, NetworkParams, init_params
from .quadrature import Mesh, QuadratureRule, gauss_rule, midpoint_rule, monte_carlo_rule, oracle_rule
from .regularizer import RegContext, r_total


class DivergenceError(RuntimeError):
    def __init__(self, iteration, value):
        super().__init__(f"training diverged at iteration {iteration} (loss={value!r})")
        self.iteration = iteration


@dataclass(frozen=True)
class SGD:
    lr: float = 1e-3

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class Adam:
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")


@dataclass(frozen=True)
class RuleSpec:
    """Recipe for a quadrature rule: ``gauss`` | ``midpoint`` | ``montecarlo``."""

    kind: str = "gauss"
    order: int = 3
    elements: int = 4
    N: int = 50
    n: int = 1000
    seed: int = 0

    def build(self, problem, seed_offset: int = 0) -> QuadratureRule:
        a, b = problem.domain
        if self.kind == "gauss":
            return gauss_rule(Mesh.uniform(a, b, self.elements), self.order)
        if self.kind == "midpoint":
            return midpoint_rule(a, b, self.N)
        if self.kind == "montecarlo":
            return monte_carlo_rule(a, b, self.n, self.seed + seed_offset)
        raise ValueError(f"unknown rule kind {self.kind!r}")


@dataclass(frozen=True)
class TrainConfig:
    optimizer: Union[SGD, Adam] = field(default_factory=SGD)
    iterations: int = 1000
    seed: int = 0
    M: int = 10
    activation: ActivationKind = ActivationKind.SIGMOID
    loss: LossKind = field(default_factory=lambda: LossKind(LossTag.RITZ))
    regularizer: bool = False
    rule: RuleSpec = field(default_factory=RuleSpec)
    validation_rule: Optional[RuleSpec] = None
    snapshot_period: int = 100
    mc_resample: bool = False

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.snapshot_period < 1:
            raise ValueError("snapshot_period must be >= 1")
        if self.regularizer and self.rule.kind != "midpoint":
            raise ValueError("the regularized loss is defined for the midpoint rule only")


@dataclass
class TrainTrace:
    iteration: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    reg_value: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)
    params: Optional[NetworkParams] = None
    refinements: list = field(default_factory=list)

    COLUMNS = ("iteration", "train_loss", "val_loss", "reg_value", "wall_ms")

    def append(self, it, train, val, reg, wall_ms):
        self.iteration.append(int(it))
        self.train_loss.append(float(train))
        self.val_loss.append(float(val))
        self.reg_value.append(float(reg))
        self.wall_ms.append(float(wall_ms))

    def rows(self):
        return zip(self.iteration, self.train_loss, self.val_loss, self.reg_value, self.wall_ms)

    def write_csv(self, path, header_comments=()):
        with open(path, "w", newline="") as fh:
            for line in header_comments:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for it, tr, va, rg, ms in self.rows():
                w.writerow([it, f"{tr:.17g}", f"{va:.17g}", f"{rg:.17g}", f"{ms:.3f}"])


@dataclass(frozen=True)
class AdamState:
    theta: np.ndarray
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, theta) -> AdamState:
        theta = np.asarray(theta, dtype=float)
        return cls(theta.copy(), np.zeros_like(theta), np.zeros_like(theta), 0)


def adam_step(state: AdamState, grad, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    t = state.t + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**t)
    vhat = v / (1.0 - beta2**t)
    theta = state.theta - lr * mhat / (np.sqrt(vhat) + eps)
    return AdamState(theta, m, v, t)


def validation_loss(params, cutoff, problem, validation_rule: QuadratureRule, kind: Optional[LossKind] = None) -> float:
    """Loss value on a second point set; never differentiated.

    The piecewise-linear surrogate is validated by the Ritz energy of the
    network itself.
    """
    if kind is not None and kind.tag is LossTag.LEAST_SQUARES:
        return ls_loss(params, cutoff, problem, validation_rule)
    return ritz_loss(params, cutoff, problem, validation_rule)


def solution_error(params, cutoff, problem, norm: str = "L2", rule: Optional[QuadratureRule] = None) -> float:
    """||u_NN - u_exact|| in L2 or full H1, via a fine Gauss oracle."""
    if problem.exact_u is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    rule = rule or oracle_rule(problem)
    jet = NetJet(params, cutoff, rule.points, 1)
    e0 = jet.u[0] - problem.exact_u(rule.points)
    sq = rule.weights @ e0**2
    if norm.upper() == "H1":
        e1 = jet.u[1] - problem.exact_du(rule.points)
        sq += rule.weights @ e1**2
    elif norm.upper() != "L2":
        raise ValueError(f"unknown norm {norm!r}")
    return float(np.sqrt(sq))


def _train_objective(problem, cutoff, config: TrainConfig):
    """Return ``(objective(params, rule, grad), reg_ctx)``.

    The objective returns ``(discrete_loss, reg, total, gradient)``.
    """
    base = loss_for(config.loss)
    ctx = None
    if config.rule.kind == "midpoint" and problem.has_bounded_data and config.loss.tag is LossTag.RITZ:
        ctx = RegContext(cutoff, problem, config.rule.N)
    if config.regularizer and ctx is None:
        raise ValueError("regularizer requires a Ritz loss, a midpoint rule and bounded problem data")

    def objective(params, rule, grad=True):
        value, g = base(params, cutoff, problem, rule, grad=True)
        reg = np.nan
        if config.regularizer:
            reg, gr = r_total(params, cutoff, ctx, grad=True)
            return value, reg, value + reg, g + gr
        return value, reg, value, g

    return objective, ctx


def train(
    problem,
    cutoff: CutoffPoly,
    config: TrainConfig,
    params: Optional[NetworkParams] = None,
    hook: Optional[Callable] = None,
    rule: Optional[QuadratureRule] = None,
    validation_rule: Optional[QuadratureRule] = None,
):
    """Run ``config.iterations`` full-batch optimizer steps.

    ``hook(iteration, params)`` is called before every step and may return a
    ``(training_rule, validation_rule)`` pair to swap in (used by adaptive
    integration).
    """
    if params is None:
        params = init_params(config.M, config.activation, config.seed)
    rule = rule or config.rule.build(problem)
    vrule = validation_rule
    if vrule is None:
        vrule = config.validation_rule.build(problem) if config.validation_rule else rule
    objective, ctx = _train_objective(problem, cutoff, config)
    opt = config.optimizer
    trace = TrainTrace()
    t0 = time.perf_counter()
    theta = params.flat()
    adam = AdamState.start(theta) if isinstance(opt, Adam) else None

    def record(it, p, value, reg):
        if ctx is not None and not config.regularizer:
            reg = r_total(p, cutoff, ctx)
        val = validation_loss(p, cutoff, problem, vrule, config.loss)
        trace.append(it, value, val, reg, 1e3 * (time.perf_counter() - t0))

    for it in range(config.iterations):
        if hook is not None:
            swap = hook(it, params)
            if swap is not None:
                rule, vrule = swap
        if config.mc_resample and config.rule.kind == "montecarlo":
            rule = config.rule.build(problem, seed_offset=it)
        value, reg, total, g = objective(params, rule)
        if not np.isfinite(total) or not np.all(np.isfinite(g)):
            raise DivergenceError(it, total)
        if it % config.snapshot_period == 0:
            record(it, params, value, reg)
        if adam is not None:
            adam = adam_step(adam, g, opt.lr, opt.beta1, opt.beta2, opt.eps)
            theta = adam.theta
        else:
            theta = theta - opt.lr * g
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(it, total)
        params = params.with_flat(theta)

    value, reg, total, _ = objective(params, rule)
    if not np.isfinite(total):
        raise DivergenceError(config.iterations, total)
    record(config.iterations, params, value, reg)
    trace.params = params
    return params, trace
