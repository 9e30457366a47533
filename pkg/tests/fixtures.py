"""Problemas pequenos, construídos à mão, compartilhados pelos testes."""
import numpy as np

from core.config import VerifyOptions
from core.geometry import HPolytope
from core.invariance import LinearSystem
from core.problem import ProblemFile
from core.pwa_nn import Layer, Network, PWAActivation, identity, relu, saturation


def box(lower, upper, open=False) -> HPolytope:
    return HPolytope.from_box(lower, upper, open=open)


def square(bound: float = 1.0) -> HPolytope:
    return box([-bound, -bound], [bound, bound])


def integrator() -> LinearSystem:
    """ẋ = u em R^2."""
    return LinearSystem(np.zeros((2, 2)), np.eye(2))


def linear_network(gain: float, n: int = 2) -> Network:
    """u = gain * x, sem camadas ocultas."""
    return Network((Layer(gain * np.eye(n), np.zeros(n), identity()),))


def integrator_problem(gain: float = -1.0, bound: float = 1.0, prune: bool = True) -> ProblemFile:
    return ProblemFile(integrator(), linear_network(gain), square(bound), [], VerifyOptions(prune=prune))


def zero_network(n_in: int = 2, n_out: int = 2) -> Network:
    return Network((Layer(np.zeros((n_out, n_in)), np.zeros(n_out), identity()),))


def split_network() -> Network:
    """Um neurônio ReLU em x_1: duas regiões separadas pela reta x_1 = 0."""
    return Network((Layer([[1.0, 0.0]], [0.0], relu()),))


def quadrant_network() -> Network:
    """ReLU em cada coordenada: quatro regiões (os quadrantes)."""
    return Network((Layer(np.eye(2), np.zeros(2), relu()), Layer(np.eye(2), np.zeros(2), identity())))


ARRANGEMENT_OFFSETS = [0.11, -0.23, 0.31, -0.17, 0.43]


def arrangement_network(n: int) -> Network:
    """n retas em posição geral dentro de [-2, 2]^2 (ângulos πk/n + 0.1)."""
    angles = np.pi * np.arange(n) / n + 0.1
    W = np.column_stack([np.cos(angles), np.sin(angles)])
    b = np.array(ARRANGEMENT_OFFSETS[:n])
    return Network((Layer(W, b, relu()), Layer(np.ones((1, n)), [0.0], identity())))


def arrangement_count(n: int) -> int:
    return 1 + n + n * (n - 1) // 2


def saturating_network(bound: float = 1.0) -> Network:
    """u = sat(-x) componente a componente."""
    return Network((Layer(-np.eye(2), np.zeros(2), saturation(-bound, bound)),))


def tangential_network() -> Network:
    """u = (0, -x_2): campo paralelo às faces verticais de S."""
    return Network((Layer([[0.0, 0.0], [0.0, -1.0]], [0.0, 0.0], identity()),))


def random_network(rng: np.random.Generator, widths, activation=None, output_scale: float = 1.0) -> Network:
    activation = activation or relu()
    layers = []
    for l in range(1, len(widths)):
        W = rng.standard_normal((widths[l], widths[l - 1])) / np.sqrt(widths[l - 1])
        b = 0.5 * rng.standard_normal(widths[l])
        last = l == len(widths) - 1
        if last:
            W, b = output_scale * W, output_scale * b
        layers.append(Layer(W, b, identity() if last else activation))
    return Network(tuple(layers))


# -------------------------
# Robô móvel com dois obstáculos
# -------------------------
# g é ímpar e contínua, com g(x) = x em [-1, 1].
# Nas faces de S todas as margens valem -1; nas faces dos obstáculos, +0.5.
ROBOT_BREAKPOINTS = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]
ROBOT_SLOPES = [-0.75, 1.0, -1.5, 1.0, -1.5, 1.0, -0.75]
ROBOT_INTERCEPTS = [-2.75, 2.5, -2.5, 0.0, 2.5, -2.5, 2.75]
ROBOT_OUTER_MARGIN = -1.0
ROBOT_OBSTACLE_MARGIN = 0.5
ROBOT_REGIONS = 49
ROBOT_PRUNED_REGIONS = 28


def robot_activation(sign: float = 1.0) -> PWAActivation:
    return PWAActivation(
        ROBOT_BREAKPOINTS,
        [sign * c for c in ROBOT_SLOPES],
        [sign * d for d in ROBOT_INTERCEPTS],
        name="robot",
    )


def robot_network(sign: float = 1.0) -> Network:
    """u_i = sign * g(x_i); sign = -1 inverte o controlador."""
    return Network((Layer(np.eye(2), np.zeros(2), robot_activation(sign)),))


def robot_obstacles():
    return [box([-3.0, -0.5], [-2.0, 0.5], open=True), box([2.0, -0.5], [3.0, 0.5], open=True)]


def robot_problem(sign: float = 1.0, prune: bool = True) -> ProblemFile:
    return ProblemFile(integrator(), robot_network(sign), square(5.0), robot_obstacles(), VerifyOptions(prune=prune))


MINIMAL_PROBLEM_JSON = """{
  "format_version": 1,
  "system": {"A": [[0, 0], [0, 0]], "B": [[1, 0], [0, 1]]},
  "network": {"layers": [
    {"W": [[-1, 0], [0, -1]], "b": [0, 0], "activation": "identity"}
  ]},
  "safe_set": {"C": [[1, 0], [-1, 0], [0, 1], [0, -1]], "d": [1, 1, 1, 1]},
  "obstacles": [],
  "options": {"prune": true, "seed": 0}
}
"""
