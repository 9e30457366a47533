"""
pwa_nn.py - Redes feed-forward com ativações afins por partes (PWA).

Avaliação exata camada a camada, padrões de ativação e os parâmetros ativos
(E^(l), G^(l)) tais que z^(l)(x) = E^(l) x + G^(l) dentro de uma região linear.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.errors import DimensionMismatch, NonContinuousActivation, PatternMismatch, ParseError

logger = logging.getLogger(__name__)

CONTINUITY_TOL = 1e-12

# Por camada, por neurônio: índice do segmento ativo, começando em 1
ActivationPattern = Tuple[Tuple[int, ...], ...]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# -------------------------
# Ativações
# -------------------------
@dataclass(frozen=True, eq=False)
class PWAActivation:
    """
    σ(x) = c_j x + d_j para m_{j-1} < x <= m_j (segmentos abertos à esquerda,
    fechados à direita). Sem breakpoints é uma função afim; a identidade é
    PWAActivation([], [1], [0]).
    """
    breakpoints: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray
    name: str = "pwa"

    def __post_init__(self):
        m = _frozen(self.breakpoints).reshape(-1)
        c = _frozen(self.slopes).reshape(-1)
        d = _frozen(self.intercepts).reshape(-1)
        if c.shape[0] != m.shape[0] + 1 or d.shape[0] != c.shape[0]:
            raise DimensionMismatch(
                f"Ativação '{self.name}': {m.shape[0]} breakpoints exigem {m.shape[0] + 1} "
                f"inclinações e interceptos (recebidos {c.shape[0]} e {d.shape[0]})."
            )
        if np.any(np.diff(m) <= 0):
            raise ValueError(f"Ativação '{self.name}': breakpoints devem ser estritamente crescentes.")
        for j, mj in enumerate(m):
            left = c[j] * mj + d[j]
            right = c[j + 1] * mj + d[j + 1]
            if abs(left - right) > CONTINUITY_TOL * max(1.0, abs(left), abs(right)):
                raise NonContinuousActivation(
                    f"Ativação '{self.name}' descontínua em m_{j + 1} = {mj}: {left} != {right}."
                )
        object.__setattr__(self, "breakpoints", m)
        object.__setattr__(self, "slopes", c)
        object.__setattr__(self, "intercepts", d)

    @property
    def segments(self) -> int:
        return self.slopes.shape[0]

    @property
    def is_affine(self) -> bool:
        return self.breakpoints.shape[0] == 0

    def segment_of(self, z: np.ndarray) -> np.ndarray:
        """Índices de segmento (1..K) de um array de pré-ativações."""
        return np.searchsorted(self.breakpoints, z, side="left") + 1

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        j = self.segment_of(z) - 1
        return self.slopes[j] * z + self.intercepts[j]

    def to_json_value(self) -> Union[str, dict]:
        if self.name in ("identity", "relu") or self.name.startswith(("leaky_relu:", "saturation:")):
            return self.name
        return {
            "breakpoints": self.breakpoints.tolist(),
            "slopes": self.slopes.tolist(),
            "intercepts": self.intercepts.tolist(),
        }


def identity() -> PWAActivation:
    return PWAActivation([], [1.0], [0.0], name="identity")


def relu() -> PWAActivation:
    return PWAActivation([0.0], [0.0, 1.0], [0.0, 0.0], name="relu")


def leaky_relu(alpha: float = 0.01) -> PWAActivation:
    return PWAActivation([0.0], [alpha, 1.0], [0.0, 0.0], name=f"leaky_relu:{alpha:g}")


def saturation(lower: float = -1.0, upper: float = 1.0) -> PWAActivation:
    """clip(x, lower, upper)."""
    return PWAActivation([lower, upper], [0.0, 1.0, 0.0], [lower, 0.0, upper], name=f"saturation:{lower:g}:{upper:g}")


def activation_from_json(value, path: str = "activation") -> PWAActivation:
    """Expande os atalhos ("relu", "leaky_relu:0.01", ...) ou lê a tabela explícita."""
    if isinstance(value, str):
        head, _, rest = value.partition(":")
        try:
            if head == "identity" and not rest:
                return identity()
            if head == "relu" and not rest:
                return relu()
            if head == "leaky_relu":
                return leaky_relu(float(rest) if rest else 0.01)
            if head == "saturation":
                lo, _, hi = rest.partition(":")
                return saturation(float(lo), float(hi)) if rest else saturation()
        except ValueError:
            raise ParseError(f"{path}: parâmetro inválido em '{value}'")
        raise ParseError(f"{path}: ativação desconhecida '{value}'")
    if isinstance(value, dict):
        missing = {"breakpoints", "slopes", "intercepts"} - set(value)
        if missing:
            raise ParseError(f"{path}: faltam as chaves {sorted(missing)}")
        try:
            return PWAActivation(value["breakpoints"], value["slopes"], value["intercepts"], name=value.get("name", "pwa"))
        except NonContinuousActivation as e:
            raise NonContinuousActivation(f"{path}: {e}")
        except (TypeError, ValueError) as e:
            if isinstance(e, DimensionMismatch):
                raise DimensionMismatch(f"{path}: {e}")
            raise ParseError(f"{path}: {e}")
    raise ParseError(f"{path}: esperado texto ou objeto, recebido {type(value).__name__}")


def eval_activation(a: PWAActivation, x: float) -> Tuple[float, int, float, float]:
    """(valor, segmento, inclinação, intercepto) de σ em x."""
    j = int(a.segment_of(float(x)))
    c = float(a.slopes[j - 1])
    d = float(a.intercepts[j - 1])
    return c * float(x) + d, j, c, d


# -------------------------
# Rede
# -------------------------
@dataclass(frozen=True, eq=False)
class Layer:
    W: np.ndarray
    b: np.ndarray
    activation: PWAActivation

    def __post_init__(self):
        W = _frozen(self.W)
        b = _frozen(self.b).reshape(-1)
        if W.ndim != 2:
            raise DimensionMismatch("W deve ser uma matriz.")
        if W.shape[0] != b.shape[0]:
            raise DimensionMismatch(f"W tem {W.shape[0]} linhas mas b tem {b.shape[0]} entradas.")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "b", b)

    @property
    def width(self) -> int:
        return self.W.shape[0]

    @property
    def fan_in(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True, eq=False)
class Network:
    layers: Tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionMismatch("A rede precisa de pelo menos uma camada.")
        for l in range(1, len(layers)):
            if layers[l].fan_in != layers[l - 1].width:
                raise DimensionMismatch(
                    f"Camada {l + 1} espera {layers[l].fan_in} entradas mas a camada {l} tem {layers[l - 1].width} neurônios."
                )
        object.__setattr__(self, "layers", layers)

    @property
    def n_in(self) -> int:
        return self.layers[0].fan_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].width

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def architecture(self) -> List[int]:
        return [self.n_in] + [layer.width for layer in self.layers]

    @property
    def hidden_neurons(self) -> int:
        """#N: neurônios das camadas ocultas."""
        return sum(layer.width for layer in self.layers[:-1])

    @property
    def parameter_count(self) -> int:
        """#θ = Σ n^(l) (n^(l-1) + 1)."""
        return sum(layer.width * (layer.fan_in + 1) for layer in self.layers)

    @property
    def hyperplane_count(self) -> int:
        """Total de hiperplanos de breakpoint, Σ n^(l) (K_l - 1)."""
        return sum(layer.width * (layer.activation.segments - 1) for layer in self.layers)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """N(x) para um lote de pontos (k x n_in), vetorizado."""
        Z = np.atleast_2d(np.asarray(X, dtype=float))
        if Z.shape[1] != self.n_in:
            raise DimensionMismatch(f"Entrada de dimensão {Z.shape[1]}, a rede espera {self.n_in}.")
        for layer in self.layers:
            Z = layer.activation(Z @ layer.W.T + layer.b)
        return Z

    def to_json(self) -> dict:
        return {
            "layers": [
                {"W": layer.W.tolist(), "b": layer.b.tolist(), "activation": layer.activation.to_json_value()}
                for layer in self.layers
            ]
        }

    @classmethod
    def from_json(cls, data: dict, path: str = "network") -> "Network":
        if not isinstance(data, dict) or "layers" not in data:
            raise ParseError(f"{path}: esperado objeto com a chave 'layers'")
        if not isinstance(data["layers"], list):
            raise ParseError(f"{path}.layers: esperado lista de camadas")
        layers = []
        for l, spec in enumerate(data["layers"]):
            where = f"{path}.layers[{l}]"
            if not isinstance(spec, dict):
                raise ParseError(f"{where}: esperado objeto")
            for key in ("W", "b"):
                if key not in spec:
                    raise ParseError(f"{where}: falta a chave '{key}'")
            activation = activation_from_json(spec.get("activation", "identity"), f"{where}.activation")
            try:
                W = np.array(spec["W"], dtype=float)
                b = np.array(spec["b"], dtype=float)
            except (TypeError, ValueError):
                raise ParseError(f"{where}: W e b devem ser listas numéricas")
            if W.ndim != 2:
                raise DimensionMismatch(f"{where}.W: esperada matriz (lista de linhas)")
            if b.ndim != 1 or b.shape[0] != W.shape[0]:
                raise DimensionMismatch(f"{where}: W tem {W.shape[0]} linhas mas b tem {b.size} entradas")
            if layers and W.shape[1] != layers[-1].width:
                raise DimensionMismatch(
                    f"{where}.W: {W.shape[1]} colunas, mas a camada anterior tem {layers[-1].width} neurônios"
                )
            layers.append(Layer(W, b, activation))
        if not layers:
            raise ParseError(f"{path}.layers: lista vazia")
        return cls(tuple(layers))


@dataclass(frozen=True)
class ForwardResult:
    output: np.ndarray
    preactivations: Tuple[np.ndarray, ...]
    pattern: ActivationPattern


def forward(net: Network, x: Sequence[float]) -> ForwardResult:
    z = np.asarray(x, dtype=float)
    if z.shape != (net.n_in,):
        raise DimensionMismatch(f"Entrada de dimensão {z.shape}, a rede espera ({net.n_in},).")
    pre = []
    pattern = []
    for layer in net.layers:
        p = layer.W @ z + layer.b
        seg = layer.activation.segment_of(p)
        z = layer.activation.slopes[seg - 1] * p + layer.activation.intercepts[seg - 1]
        pre.append(p)
        pattern.append(tuple(int(s) for s in seg))
    return ForwardResult(z, tuple(pre), tuple(pattern))


# -------------------------
# Parâmetros ativos
# -------------------------
@dataclass(frozen=True, eq=False)
class ActiveParams:
    """E[l], G[l] para l = 0..depth, com E[0] = I e G[0] = 0."""
    E: Tuple[np.ndarray, ...]
    G: Tuple[np.ndarray, ...]

    @property
    def depth(self) -> int:
        return len(self.E) - 1

    @property
    def final(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.E[-1], self.G[-1]

    def affine_output(self, x: np.ndarray) -> np.ndarray:
        E, G = self.final
        return E @ np.asarray(x, dtype=float) + G


def active_params_from_pattern(net: Network, pattern: ActivationPattern) -> ActiveParams:
    """
    E^(l) = C^(l) W^(l) E^(l-1),  G^(l) = C^(l) (W^(l) G^(l-1) + b^(l)) + d^(l),
    com C^(l), d^(l) as inclinações/interceptos escolhidos pelo padrão.
    Padrões parciais (menos camadas que a rede) dão os parâmetros até aquela camada.
    """
    if len(pattern) > net.depth:
        raise PatternMismatch(f"Padrão com {len(pattern)} camadas para rede com {net.depth}.")
    E = [np.eye(net.n_in)]
    G = [np.zeros(net.n_in)]
    for l, segs in enumerate(pattern):
        layer = net.layers[l]
        segs = np.asarray(segs, dtype=int)
        if segs.shape != (layer.width,):
            raise PatternMismatch(f"Camada {l + 1}: padrão com {segs.size} entradas para {layer.width} neurônios.")
        if np.any(segs < 1) or np.any(segs > layer.activation.segments):
            raise PatternMismatch(f"Camada {l + 1}: índice de segmento fora de 1..{layer.activation.segments}.")
        c = layer.activation.slopes[segs - 1]
        d = layer.activation.intercepts[segs - 1]
        E.append(c[:, None] * (layer.W @ E[-1]))
        G.append(c * (layer.W @ G[-1] + layer.b) + d)
    return ActiveParams(tuple(E), tuple(G))


def active_params_at_point(net: Network, x: Sequence[float]) -> ActiveParams:
    """Jacobiano exato no ponto por seleção de inclinações (sem diferenças finitas)."""
    return active_params_from_pattern(net, forward(net, x).pattern)
