"""Meshes and interior quadrature rules on an interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_GAUSS_ORDER = 5


class EvaluationError(ArithmeticError):
    """An integrand produced a non-finite value at a quadrature node."""

    def __init__(self, node, value):
        super().__init__(f"non-finite integrand value {value!r} at node x={node!r}")
        self.node = node
        self.value = value


@dataclass(frozen=True)
class Mesh:
    breakpoints: np.ndarray

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).reshape(-1)
        if bp.size < 2:
            raise ValueError("a mesh needs at least one element")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        bp.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> Mesh:
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls(np.linspace(a, b, n + 1))

    @property
    def n_elements(self) -> int:
        return self.breakpoints.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def element(self, j: int) -> tuple:
        """Endpoints of element ``j`` (1-based)."""
        self._check_index(j)
        return float(self.breakpoints[j - 1]), float(self.breakpoints[j])

    def _check_index(self, j):
        if not 1 <= j <= self.n_elements:
            raise IndexError(f"element index {j} out of range 1..{self.n_elements}")

    def __eq__(self, other):
        return isinstance(other, Mesh) and np.array_equal(self.breakpoints, other.breakpoints)

    def __hash__(self):
        return hash(self.breakpoints.tobytes())


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    provenance: str

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1)
        wts = np.array(self.weights, dtype=float).reshape(-1)
        if pts.shape != wts.shape:
            raise ValueError("points and weights differ in length")
        if np.any(wts <= 0):
            raise ValueError("quadrature weights must be positive")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)

    def __len__(self):
        return self.points.size


def _gauss_reference(order):
    if not 1 <= order <= MAX_GAUSS_ORDER:
        raise ValueError(f"Gauss order must be in 1..{MAX_GAUSS_ORDER}")
    return np.polynomial.legendre.leggauss(order)


def gauss_rule(mesh: Mesh, order: int = 3) -> QuadratureRule:
    """Gauss-Legendre rule with ``order`` points per element."""
    xi, wi = _gauss_reference(order)
    left, h = mesh.breakpoints[:-1], mesh.widths
    pts = (left[:, None] + 0.5 * h[:, None] * (xi + 1.0)).ravel()
    wts = (0.5 * h[:, None] * wi).ravel()
    return QuadratureRule(pts, wts, f"gauss(order={order},elements={mesh.n_elements})")


def midpoint_rule(a: float, b: float, N: int) -> QuadratureRule:
    """x_j = a + delta (j - 1/2), weights delta = (b - a) / N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    delta = (b - a) / N
    pts = a + delta * (np.arange(1, N + 1) - 0.5)
    return QuadratureRule(pts, np.full(N, delta), f"midpoint(N={N})")


def monte_carlo_rule(a: float, b: float, n: int, seed: int) -> QuadratureRule:
    """``n`` i.i.d. uniform points in (a, b), each weighted (b - a) / n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(a, b, n)
    # uniform() samples [a, b); keep the rule strictly interior
    pts = np.where(pts <= a, np.nextafter(a, b), pts)
    return QuadratureRule(pts, np.full(n, (b - a) / n), f"montecarlo(n={n},seed={seed})")


def integrate(rule: QuadratureRule, integrand) -> float:
    vals = np.asarray(integrand(rule.points), dtype=float)
    vals = np.broadcast_to(vals, rule.points.shape)
    check_finite(rule.points, vals)
    return float(rule.weights @ vals)


def check_finite(points, vals):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(float(points[i]), float(vals[i]))


def refine_element(mesh: Mesh, j: int) -> Mesh:
    """Bisect element ``j`` (1-based)."""
    a, b = mesh.element(j)
    return Mesh(np.insert(mesh.breakpoints, j, 0.5 * (a + b)))


def global_refine(mesh: Mesh) -> Mesh:
    bp = mesh.breakpoints
    out = np.empty(2 * bp.size - 1)
    out[0::2] = bp
    out[1::2] = 0.5 * (bp[:-1] + bp[1:])
    return Mesh(out)


def graded_mesh(a: float, b: float, levels: int = 200, uniform_elements: int = 10_000, singular_at=None) -> Mesh:
    """Oracle mesh: uniform, plus geometric grading of the element at a singular endpoint."""
    base = np.linspace(a, b, uniform_elements + 1)
    if singular_at is None:
        return Mesh(base)
    h = base[1] - base[0]
    grade = h * 0.5 ** np.arange(1, levels + 1)
    if singular_at == a:
        return Mesh(np.concatenate([[a], a + grade[::-1], base[1:]]))
    if singular_at == b:
        return Mesh(np.concatenate([base[:-1], b - grade, [b]]))
    raise ValueError("singular point must be an endpoint")


def oracle_rule(problem, elements: int = 10_000) -> QuadratureRule:
    """Order-5 Gauss on a fine mesh, graded toward a singular endpoint if any."""
    mesh = graded_mesh(problem.a, problem.b, uniform_elements=elements, singular_at=problem.singular_at)
    return gauss_rule(mesh, 5)


def mc_error_curve(ns, seeds=100, a=0.0, b=10.0, integrand=np.square, exact=1000.0 / 3.0):
    """Mean absolute Monte Carlo error for each sample size, and the log-log slope."""
    ns = np.asarray(ns, dtype=int)
    errs = np.array(
        [np.mean([abs(integrate(monte_carlo_rule(a, b, int(n), s), integrand) - exact) for s in range(seeds)]) for n in ns]
    )
    slope = float(np.polyfit(np.log(ns), np.log(errs), 1)[0])
    return errs, slope
