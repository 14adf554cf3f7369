import numpy as np
import pytest

from varquad.network import ActivationKind, CutoffPoly, NetworkParams
from varquad.problems import ls_example_problem, model_problem_1, model_problem_2


@pytest.fixture
def mp1():
    return model_problem_1()


@pytest.fixture
def mp2():
    return model_problem_2()


@pytest.fixture
def ls0():
    return ls_example_problem()


@pytest.fixture
def cutoff2(mp2):
    return CutoffPoly.for_problem(mp2)


def random_params(rng, M=10, scale=1.0, activation=ActivationKind.TANH):
    theta = rng.uniform(-scale, scale, 3 * M + 1)
    return NetworkParams.from_flat(theta, activation)


def zero_params(M=10, b1=0.0, activation=ActivationKind.SIGMOID):
    return NetworkParams(np.zeros(M), np.zeros(M), np.zeros(M), b1, activation)


def central_fd(fn, theta, h=1e-5):
    out = np.zeros_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (fn(theta + e) - fn(theta - e)) / (2 * h)
    return out
