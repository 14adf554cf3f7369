"""Named experiment setups and flat TOML config loading."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .losses import LossKind, LossTag
from .network import ActivationKind
from .problems import PROBLEMS, get_problem
from .quadrature import Mesh
from .training import SGD, Adam, RuleSpec, TrainConfig


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str = ""
    kind: str = "train"  # "train" | "adaptive" | "mc"
    problem: str = "mp2"
    loss: str = "ritz"  # "ritz" | "ls" | "ritz_pl"
    pl_elements: int = 10
    rule_kind: str = "gauss"
    rule_order: int = 3
    rule_elements: int = 10
    rule_N: int = 50
    rule_n: int = 1000
    rule_seed: int = 0
    val_kind: Optional[str] = None
    val_order: int = 3
    val_elements: int = 20
    val_N: int = 49
    val_n: int = 1000
    val_seed: int = 1
    optimizer: str = "sgd"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    iterations: int = 1000
    ci_iterations: Optional[int] = None
    seed: int = 0
    M: int = 10
    activation: str = "sigmoid"
    regularizer: bool = False
    snapshot_period: Optional[int] = None
    mc_resample: bool = False
    adaptive_epsilon: float = 1e-4
    adaptive_check_period: int = 100
    ci_adaptive_check_period: Optional[int] = None
    adaptive_max_checks: float = float("inf")
    adaptive_max_refinements: float = float("inf")
    # Monte Carlo convergence harness
    mc_exponents: tuple = (2, 3, 4, 5, 6)
    mc_seeds: int = 100
    # metric -> (min, max); None for an open side
    targets: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}")
        if self.kind not in ("train", "adaptive", "mc"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")

    def budget(self, ci: Optional[bool] = None) -> int:
        ci = ci_mode() if ci is None else ci
        if ci:
            return self.ci_iterations if self.ci_iterations is not None else max(1, self.iterations // 10)
        return self.iterations

    def check_period(self, ci: Optional[bool] = None) -> int:
        ci = ci_mode() if ci is None else ci
        if ci and self.ci_adaptive_check_period is not None:
            return self.ci_adaptive_check_period
        return self.adaptive_check_period

    def train_config(self, iterations: Optional[int] = None, seed: Optional[int] = None, ci=None) -> TrainConfig:
        problem = get_problem(self.problem)
        its = self.budget(ci) if iterations is None else iterations
        if self.loss == "ritz_pl":
            loss = LossKind(LossTag.RITZ_PIECEWISE_LINEAR, Mesh.uniform(problem.a, problem.b, self.pl_elements))
        else:
            loss = LossKind(LossTag(self.loss))
        if self.optimizer == "adam":
            opt = Adam(self.lr, self.beta1, self.beta2, self.eps)
        elif self.optimizer == "sgd":
            opt = SGD(self.lr)
        else:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        rule = RuleSpec(self.rule_kind, self.rule_order, self.rule_elements, self.rule_N, self.rule_n, self.rule_seed)
        vrule = None
        if self.val_kind is not None:
            vrule = RuleSpec(self.val_kind, self.val_order, self.val_elements, self.val_N, self.val_n, self.val_seed)
        return TrainConfig(
            optimizer=opt,
            iterations=its,
            seed=self.seed if seed is None else seed,
            M=self.M,
            activation=ActivationKind(self.activation),
            loss=loss,
            regularizer=self.regularizer,
            rule=rule,
            validation_rule=vrule,
            snapshot_period=self.snapshot_period or max(1, its // 200),
            mc_resample=self.mc_resample,
        )


def ci_mode() -> bool:
    return os.environ.get("VARQUAD_CI", "") not in ("", "0")


def _p(**kw):
    return ExperimentPreset(**kw)


_EXP_COMMON = dict(
    problem="mp2",
    loss="ritz",
    rule_kind="midpoint",
    val_kind="midpoint",
    optimizer="adam",
    lr=1e-2,
    M=10,
    activation="tanh",
    iterations=100_000,
    ci_iterations=10_000,
    seed=0,
)

# the overfitting window is the first 10^4 iterations at every scale
_EXP_OFF = {**_EXP_COMMON, "iterations": 10_000, "ci_iterations": 10_000}

PRESETS = {
    p.name: p
    for p in [
        _p(
            name="ritz-mp1-gauss3-fixed",
            description="Ritz, model problem 1, 4 elements x 3-pt Gauss, SGD: loss drops below the exact energy",
            problem="mp1",
            rule_elements=4,
            val_kind="gauss",
            val_elements=8,
            lr=0.05,
            seed=1,
            iterations=40_000,
            ci_iterations=4_000,
            targets={"train_minus_exact": (None, -0.1)},
        ),
        _p(
            name="ritz-mp2-gauss3-fixed",
            description="Ritz, model problem 2, 10 elements x 3-pt Gauss, SGD: quadrature overfitting",
            problem="mp2",
            rule_elements=10,
            val_kind="gauss",
            val_elements=20,
            lr=5e-3,
            seed=2,
            iterations=200_000,
            ci_iterations=20_000,
        ),
        _p(
            name="ls-eq14",
            description="Least squares, -u''=0 on (0,1), one element x 3-pt Gauss",
            problem="ls0",
            loss="ls",
            rule_elements=1,
            val_kind="gauss",
            val_elements=2,
            lr=1e-2,
            seed=0,
            iterations=40_000,
            ci_iterations=4_000,
        ),
        _p(
            name="pl-mp1-4el",
            description="Piecewise-linear surrogate of the network, model problem 1, 4 elements",
            problem="mp1",
            loss="ritz_pl",
            pl_elements=4,
            rule_kind="gauss",
            rule_elements=4,
            val_kind="gauss",
            val_elements=8,
            lr=0.05,
            seed=1,
            iterations=40_000,
            ci_iterations=4_000,
            targets={"train_minus_exact": (-1e-6, None)},
        ),
        _p(
            name="pl-mp1-10el",
            description="Piecewise-linear surrogate of the network, model problem 1, 10 elements",
            problem="mp1",
            loss="ritz_pl",
            pl_elements=10,
            rule_kind="gauss",
            rule_elements=10,
            val_kind="gauss",
            val_elements=20,
            lr=0.05,
            seed=1,
            iterations=40_000,
            ci_iterations=4_000,
            targets={"train_minus_exact": (-1e-6, None)},
        ),
        _p(
            name="pl-mp2-10el",
            description="Piecewise-linear surrogate of the network, model problem 2, 10 elements",
            problem="mp2",
            loss="ritz_pl",
            pl_elements=10,
            rule_kind="gauss",
            rule_elements=10,
            val_kind="gauss",
            val_elements=20,
            lr=1e-3,
            seed=1,
            iterations=200_000,
            ci_iterations=20_000,
            targets={"train_minus_exact": (-1e-9, None)},
        ),
        _p(
            name="adaptive-mp1",
            description="Adaptive h-refinement, model problem 1, start 4 elements, tol 1e-4, check every 100",
            kind="adaptive",
            problem="mp1",
            rule_elements=4,
            lr=0.05,
            seed=1,
            iterations=40_000,
            ci_iterations=4_000,
            adaptive_epsilon=1e-4,
            adaptive_check_period=100,
            targets={"n_refinements": (1, None), "refinements_outside_first": (0, 0)},
        ),
        _p(
            name="adaptive-mp2",
            description="Adaptive h-refinement, model problem 2, start 10 elements, tol 10, check every 10000",
            kind="adaptive",
            problem="mp2",
            rule_elements=10,
            lr=5e-3,
            seed=2,
            iterations=200_000,
            ci_iterations=20_000,
            adaptive_epsilon=10.0,
            adaptive_check_period=10_000,
            ci_adaptive_check_period=1_000,
            targets={"n_refinements": (2, 2), "refinements_outside_first": (0, 0)},
        ),
        _p(
            name="reg-exp1-on",
            description="Midpoint N=50, tanh, Adam 1e-2, loss = F_hat + R (regularized)",
            **_EXP_COMMON,
            rule_N=50,
            val_N=49,
            regularizer=True,
            targets={"train_loss": (-673.0, -659.0), "reg": (12.0, 50.0), "max_rel_val_gap": (None, 0.01)},
        ),
        _p(
            name="reg-exp1-off",
            description="Midpoint N=50, tanh, Adam 1e-2, no regularizer: validation gap opens",
            **_EXP_OFF,
            rule_N=50,
            val_N=49,
            targets={"max_rel_val_gap": (0.05, None)},
        ),
        _p(
            name="reg-exp2-on",
            description="Midpoint N=20, tanh, Adam 1e-2, loss = F_hat + R (regularized)",
            **_EXP_COMMON,
            rule_N=20,
            val_N=19,
            regularizer=True,
            targets={"train_loss": (-645.0, -600.0), "reg": (70.0, 280.0)},
        ),
        _p(
            name="reg-exp2-off",
            description="Midpoint N=20, tanh, Adam 1e-2, no regularizer",
            **_EXP_OFF,
            rule_N=20,
            val_N=19,
            targets={"max_rel_val_gap": (0.05, None)},
        ),
        _p(
            name="mc-convergence",
            description="Monte Carlo error of int_0^10 x^2 vs n = 1e2..1e6, averaged over 100 seeds",
            kind="mc",
            problem="mp2",
            targets={"slope": (-0.6, -0.4)},
        ),
    ]
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(name) from None


_FIELDS = {f.name: f for f in fields(ExperimentPreset)}


def load_config(path) -> ExperimentPreset:
    """Read a flat TOML file; ``base = "<preset>"`` starts from a preset."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    base = data.pop("base", None)
    targets = data.pop("targets", None)
    unknown = set(data) - set(_FIELDS)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "mc_exponents" in data:
        data["mc_exponents"] = tuple(data["mc_exponents"])
    if targets is not None:
        data["targets"] = {k: tuple(None if v == "none" else v for v in rng) for k, rng in targets.items()}
    if base is not None:
        return replace(get_preset(base), **data)
    if "name" not in data:
        raise ValueError("config needs a name (or a base preset)")
    return ExperimentPreset(**data)
