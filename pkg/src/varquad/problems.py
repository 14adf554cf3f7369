"""Boundary-value problem presets.

All problems are of the form ``-(sigma u')' = f`` on ``(a, b)`` with
homogeneous Dirichlet data on part of the boundary and Neumann data
``sigma u' n = g`` on the rest (outward normal -1 at ``a``, +1 at ``b``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


def _const(c):
    return lambda x: np.full(np.shape(x), float(c)) if np.ndim(x) else float(c)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: tuple
    f: Callable
    f_prime: Callable
    f_sup: float
    f_prime_sup: float
    dirichlet_points: tuple
    neumann_data: dict = field(default_factory=dict)
    sigma: Callable = field(default=_const(1.0))
    sigma_prime: Callable = field(default=_const(0.0))
    exact_u: Optional[Callable] = None
    exact_du: Optional[Callable] = None
    exact_energy: Optional[float] = None
    # grading toward a singular endpoint for oracle integration
    singular_at: Optional[float] = None

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError("domain must satisfy a < b")
        dset = set(self.dirichlet_points)
        nset = set(self.neumann_data)
        if dset & nset or dset | nset != {a, b}:
            raise ValueError("Dirichlet and Neumann points must partition {a, b}")

    @property
    def a(self) -> float:
        return self.domain[0]

    @property
    def b(self) -> float:
        return self.domain[1]

    def normal(self, x) -> float:
        return -1.0 if x == self.a else 1.0

    @property
    def has_bounded_data(self) -> bool:
        return bool(np.isfinite(self.f_sup) and np.isfinite(self.f_prime_sup))


def model_problem_1() -> ProblemSpec:
    """-u'' = 0.21 x^-1.3 on (0, 10), u(0) = 0, u'(10) = 0.7 / 10^0.3; u = x^0.7."""
    return ProblemSpec(
        name="mp1",
        domain=(0.0, 10.0),
        f=lambda x: 0.21 * np.power(x, -1.3),
        f_prime=lambda x: -0.273 * np.power(x, -2.3),
        f_sup=np.inf,
        f_prime_sup=np.inf,
        dirichlet_points=(0.0,),
        neumann_data={10.0: 0.7 / 10**0.3},
        exact_u=lambda x: np.power(x, 0.7),
        exact_du=lambda x: 0.7 * np.power(x, -0.3),
        # 0.035 * 10^0.4 / 0.4 from the volume term, 0.7 * 10^0.4 from the boundary
        exact_energy=(0.0875 - 0.7) * 10**0.4,
        singular_at=0.0,
    )


def model_problem_2() -> ProblemSpec:
    """u'' = 2 on (0, 10), u(0) = 0, u'(10) = 20; u = x^2.

    Written as ``-u'' = f`` this means f = -2.
    """
    return ProblemSpec(
        name="mp2",
        domain=(0.0, 10.0),
        f=_const(-2.0),
        f_prime=_const(0.0),
        f_sup=2.0,
        f_prime_sup=0.0,
        dirichlet_points=(0.0,),
        neumann_data={10.0: 20.0},
        exact_u=lambda x: np.square(x),
        exact_du=lambda x: 2.0 * np.asarray(x),
        exact_energy=-2000.0 / 3.0,
    )


def ls_example_problem() -> ProblemSpec:
    """-u'' = 0 on (0, 1), u(0) = u'(1) = 0; u = 0."""
    return ProblemSpec(
        name="ls0",
        domain=(0.0, 1.0),
        f=_const(0.0),
        f_prime=_const(0.0),
        f_sup=0.0,
        f_prime_sup=0.0,
        dirichlet_points=(0.0,),
        neumann_data={1.0: 0.0},
        exact_u=_const(0.0),
        exact_du=_const(0.0),
        exact_energy=0.0,
    )


PROBLEMS = {
    "mp1": model_problem_1,
    "mp2": model_problem_2,
    "ls0": ls_example_problem,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; available: {', '.join(PROBLEMS)}") from None
