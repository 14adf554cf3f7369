"""Single-hidden-layer network with a polynomial Dirichlet cutoff.

The trainable part is

    uhat(x) = b1 + sum_i A1[i] * act(A0[i] * x + b0[i])

and the network output is ``u(x) = phi(x) * uhat(x)`` where ``phi`` is the
product of ``(x - x_D)`` over the Dirichlet points.  Spatial derivatives up
to order 3 are closed form; parameter gradients are obtained by pulling a
cotangent on ``u^(n)`` at a set of points back onto the flat parameter
vector ``(A0, b0, A1, b1)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

MAX_ORDER = 3


class ActivationKind(enum.Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"

    def derivatives(self, z, upto=MAX_ORDER + 1):
        """Return ``[act(z), act'(z), ..., act^(upto)(z)]`` (upto <= 4)."""
        z = np.asarray(z, dtype=float)
        if self is ActivationKind.SIGMOID:
            s = 0.5 * (1.0 + np.tanh(0.5 * z))  # overflow-free logistic
            d1 = s * (1.0 - s)
            d2 = d1 * (1.0 - 2.0 * s)
            d3 = d1 * (1.0 - 6.0 * s + 6.0 * s * s)
            d4 = d2 * (1.0 - 12.0 * s + 12.0 * s * s)
            out = [s, d1, d2, d3, d4]
        else:
            t = np.tanh(z)
            q = 1.0 - t * t
            out = [t, q, -2.0 * t * q, q * (6.0 * t * t - 2.0), 8.0 * t * q * (2.0 - 3.0 * t * t)]
        return out[: upto + 1]

    @property
    def sup_norms(self):
        """Sup over the real line of ``|act^(n)|`` for n = 0..3."""
        return _SUP_NORMS[self]


# sigmoid: max |s'(1-2s)| at s = 1/2 -+ sqrt(3)/6 gives sqrt(3)/18
# tanh: max |2t(1-t^2)| at t = 1/sqrt(3) gives 4/(3 sqrt(3))
_SUP_NORMS = {
    ActivationKind.SIGMOID: (1.0, 0.25, np.sqrt(3.0) / 18.0, 0.125),
    ActivationKind.TANH: (1.0, 1.0, 4.0 / (3.0 * np.sqrt(3.0)), 2.0),
}


@dataclass(frozen=True)
class NetworkParams:
    A0: np.ndarray
    b0: np.ndarray
    A1: np.ndarray
    b1: float
    activation: ActivationKind = ActivationKind.SIGMOID

    def __post_init__(self):
        for name in ("A0", "b0", "A1"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "b1", float(self.b1))
        object.__setattr__(self, "activation", ActivationKind(self.activation))
        m = self.A0.size
        if m < 1 or self.b0.size != m or self.A1.size != m:
            raise ValueError(f"inconsistent neuron counts: {self.A0.size}, {self.b0.size}, {self.A1.size}")
        if not np.all(np.isfinite(self.flat())):
            raise ValueError("network parameters must be finite")

    @property
    def M(self) -> int:
        return self.A0.size

    @property
    def size(self) -> int:
        return 3 * self.M + 1

    def flat(self) -> np.ndarray:
        return np.concatenate([self.A0, self.b0, self.A1, [self.b1]])

    def with_flat(self, theta) -> NetworkParams:
        theta = np.asarray(theta, dtype=float)
        m = self.M
        if theta.shape != (3 * m + 1,):
            raise ValueError(f"expected {3 * m + 1} parameters, got shape {theta.shape}")
        return NetworkParams(theta[:m], theta[m : 2 * m], theta[2 * m : 3 * m], theta[3 * m], self.activation)

    @classmethod
    def from_flat(cls, theta, activation=ActivationKind.SIGMOID) -> NetworkParams:
        theta = np.asarray(theta, dtype=float)
        m, rem = divmod(theta.size - 1, 3)
        if rem or m < 1:
            raise ValueError(f"flat parameter vector of length {theta.size} is not 3M+1")
        return cls(theta[:m], theta[m : 2 * m], theta[2 * m : 3 * m], theta[3 * m], activation)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "activation": self.activation.value,
            "A0": self.A0.tolist(),
            "b0": self.b0.tolist(),
            "A1": self.A1.tolist(),
            "b1": self.b1,
        }

    @classmethod
    def from_dict(cls, d: dict) -> NetworkParams:
        p = cls(d["A0"], d["b0"], d["A1"], d["b1"], ActivationKind(d["activation"]))
        if p.M != d.get("M", p.M):
            raise ValueError("M does not match weight lengths")
        return p


def init_params(M: int, activation=ActivationKind.SIGMOID, seed: int = 0) -> NetworkParams:
    """Glorot-uniform weights in [-L, L], L = sqrt(6 / (1 + M)), zero biases."""
    if M < 1:
        raise ValueError("M must be >= 1")
    rng = np.random.default_rng(seed)
    lim = np.sqrt(6.0 / (1.0 + M))
    A0 = rng.uniform(-lim, lim, M)
    A1 = rng.uniform(-lim, lim, M)
    return NetworkParams(A0, np.zeros(M), A1, 0.0, ActivationKind(activation))


@dataclass(frozen=True)
class CutoffPoly:
    """phi(x) = prod (x - x_D) with sup norms of phi^(k) over [a, b], k = 0..4."""

    dirichlet_roots: tuple
    domain: tuple
    coeffs: np.ndarray = field(init=False, repr=False)
    sup_norms: tuple = field(init=False)

    def __post_init__(self):
        roots = tuple(sorted(float(r) for r in self.dirichlet_roots))
        a, b = (float(v) for v in self.domain)
        if not a < b:
            raise ValueError("domain must satisfy a < b")
        object.__setattr__(self, "dirichlet_roots", roots)
        object.__setattr__(self, "domain", (a, b))
        coeffs = P.polyfromroots(roots) if roots else np.array([1.0])
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "sup_norms", tuple(_poly_sup(P.polyder(coeffs, k), a, b) for k in range(5)))

    @classmethod
    def for_problem(cls, problem) -> CutoffPoly:
        return cls(tuple(problem.dirichlet_points), problem.domain)

    def derivatives(self, x, upto=MAX_ORDER):
        x = np.asarray(x, dtype=float)
        # product form keeps phi exactly zero at the roots
        phi = np.prod(x[..., None] - np.array(self.dirichlet_roots), axis=-1)
        return [phi] + [P.polyval(x, P.polyder(self.coeffs, k)) for k in range(1, upto + 1)]


def _poly_sup(c, a, b):
    # max |p| on [a, b] is attained at an endpoint or a critical point
    cand = [a, b]
    if c.size > 2:
        crit = P.polyroots(P.polyder(c))
        crit = crit.real[(np.abs(crit.imag) < 1e-12) & (crit.real > a) & (crit.real < b)]
        cand.extend(crit.tolist())
    # dense grid as a guard against ill-conditioned root finding
    grid = np.linspace(a, b, 10_001)
    return float(max(np.max(np.abs(P.polyval(np.array(cand), c))), np.max(np.abs(P.polyval(grid, c)))))


class NetJet:
    """Network values and derivatives at a fixed set of points.

    Holds everything needed to read ``u^(n)`` and to pull cotangents on
    those values back to the parameters.
    """

    def __init__(self, params: NetworkParams, cutoff: CutoffPoly | None, x, order: int = 1):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in 0..{MAX_ORDER}")
        self.params = params
        self.x = np.atleast_1d(np.asarray(x, dtype=float))
        self.order = order
        z = np.multiply.outer(self.x, params.A0) + params.b0  # (K, M)
        self._act = params.activation.derivatives(z, order + 1)
        self._a0pow = [params.A0**k for k in range(order + 2)]
        self.uhat = []
        for n in range(order + 1):
            v = self._act[n] @ (params.A1 * self._a0pow[n])
            if n == 0:
                v = v + params.b1
            self.uhat.append(v)
        if cutoff is None:
            self.phi = [np.ones_like(self.x)] + [np.zeros_like(self.x)] * order
        else:
            self.phi = cutoff.derivatives(self.x, order)
        self.u = [sum(comb(n, k) * self.uhat[k] * self.phi[n - k] for k in range(n + 1)) for n in range(order + 1)]

    def pullback(self, cot) -> np.ndarray:
        """Gradient of ``sum_n sum_k cot[n][k] * u^(n)(x_k)`` w.r.t. the flat parameters."""
        p = self.params
        m = p.M
        # cotangent on u^(n) -> cotangent on uhat^(k) via Leibniz
        chat = [np.zeros_like(self.x) for _ in range(self.order + 1)]
        for n, c in cot.items():
            if c is None:
                continue
            c = np.broadcast_to(np.asarray(c, dtype=float), self.x.shape)
            for k in range(n + 1):
                chat[k] = chat[k] + comb(n, k) * c * self.phi[n - k]
        g = np.zeros(3 * m + 1)
        gA0, gb0, gA1 = g[:m], g[m : 2 * m], g[2 * m : 3 * m]
        for n, c in enumerate(chat):
            if not np.any(c):
                continue
            s_n = c @ self._act[n]  # (M,)
            s_n1 = c @ self._act[n + 1]
            xs_n1 = (c * self.x) @ self._act[n + 1]
            gA1 += self._a0pow[n] * s_n
            gb0 += p.A1 * self._a0pow[n] * s_n1
            gA0 += p.A1 * self._a0pow[n] * xs_n1
            if n >= 1:
                gA0 += p.A1 * n * self._a0pow[n - 1] * s_n
            else:
                g[3 * m] += c.sum()
        return g


def eval_raw(params: NetworkParams, x, n: int = 0):
    """n-th x-derivative of the network without cutoff."""
    jet = NetJet(params, None, x, n)
    return _scalar_like(x, jet.uhat[n])


def eval_u(params: NetworkParams, cutoff: CutoffPoly, x, n: int = 0):
    """n-th x-derivative of ``phi * uhat``."""
    jet = NetJet(params, cutoff, x, n)
    return _scalar_like(x, jet.u[n])


def grad_theta(scalar_expr, params: NetworkParams) -> np.ndarray:
    """Gradient of a scalar loss with respect to the flat parameter vector.

    ``scalar_expr(params, grad=True)`` must return ``(value, gradient)``;
    every loss in this package follows that convention.
    """
    _, g = scalar_expr(params, grad=True)
    return np.asarray(g, dtype=float)


def _scalar_like(x, arr):
    return float(arr[0]) if np.ndim(x) == 0 else arr
