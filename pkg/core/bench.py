"""
bench.py - Benchmarks de escalabilidade (largura, profundidade, dimensão).

Redes aleatórias com semente, pesos N(0, 1)/sqrt(fan_in), verificadas sobre
o robô móvel (integrador 2-D em [-5, 5]^2) ou sobre o sistema massa-mola-
amortecedor com n vagões. A tabela sai no layout Arquitetura | #N | #θ | #R | t_v.
"""
import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from core.config import VerifyOptions
from core.errors import ParseError
from core.geometry import HPolytope
from core.invariance import LinearSystem, verify
from core.problem import polytope_from_json
from core.pwa_nn import Layer, Network, PWAActivation, activation_from_json

logger = logging.getLogger(__name__)

WIDTH = "width"
DEPTH = "depth"
DIMENSION = "dimension"
MODES = (WIDTH, DEPTH, DIMENSION)

# (arquitetura, #N, #θ) de referência
WIDTH_TABLE = [
    ("2x16^2x2", 32, 354),
    ("2x32^2x2", 64, 1218),
    ("2x64^2x2", 128, 4482),
    ("2x128^2x2", 256, 17154),
    ("2x256^2x2", 512, 67074),
]
DEPTH_TABLE = [
    ("2x32^1x2", 32, 162),
    ("2x32^2x2", 64, 1218),
    ("2x32^4x2", 128, 3330),
    ("2x32^6x2", 192, 5442),
    ("2x32^8x2", 256, 7554),
]
DIMENSION_TABLE = [
    ("2x8^2x1", 16, 105),
    ("4x8^2x2", 16, 130),
    ("6x8^2x3", 16, 155),
    ("8x8^2x4", 16, 180),
]
TABLES = {WIDTH: WIDTH_TABLE, DEPTH: DEPTH_TABLE, DIMENSION: DIMENSION_TABLE}

ROBOT_BOUND = 5.0

_COMPACT = re.compile(r"^\s*(\d+)\s*[x×]\s*(\d+)\s*\^\s*\(?\s*(\d+)\s*\)?\s*[x×]\s*(\d+)\s*$")


# -------------------------
# Arquiteturas
# -------------------------
@dataclass(frozen=True)
class Architecture:
    n_in: int
    hidden: Tuple[int, ...]
    n_out: int

    @property
    def widths(self) -> List[int]:
        return [self.n_in, *self.hidden, self.n_out]

    @property
    def hidden_neurons(self) -> int:
        return sum(self.hidden)

    @property
    def parameter_count(self) -> int:
        w = self.widths
        return sum(w[l] * (w[l - 1] + 1) for l in range(1, len(w)))

    @property
    def label(self) -> str:
        if self.hidden and len(set(self.hidden)) == 1:
            return f"{self.n_in}x{self.hidden[0]}^{len(self.hidden)}x{self.n_out}"
        return "x".join(str(w) for w in self.widths)


def parse_architecture(text: str) -> Architecture:
    """Aceita "2x16^2x2", "2×16^(2)×2" ou a lista explícita "2x16x16x2"."""
    match = _COMPACT.match(text)
    if match:
        n_in, width, depth, n_out = (int(g) for g in match.groups())
        return Architecture(n_in, (width,) * depth, n_out)
    parts = re.split(r"\s*[x×]\s*", text.strip())
    try:
        widths = [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"Arquitetura inválida: '{text}'")
    if len(widths) < 2 or min(widths) < 1:
        raise ParseError(f"Arquitetura inválida: '{text}'")
    return Architecture(widths[0], tuple(widths[1:-1]), widths[-1])


def random_network(
    arch: Architecture,
    rng: np.random.Generator,
    hidden_activation: PWAActivation,
    output_activation: PWAActivation,
    bias_scale: float = 1.0,
) -> Network:
    layers = []
    widths = arch.widths
    for l in range(1, len(widths)):
        fan_in = widths[l - 1]
        W = rng.standard_normal((widths[l], fan_in)) / np.sqrt(fan_in)
        b = bias_scale * rng.standard_normal(widths[l])
        activation = output_activation if l == len(widths) - 1 else hidden_activation
        layers.append(Layer(W, b, activation))
    return Network(tuple(layers))


def nested_networks(
    widths: Sequence[int],
    n_in: int,
    n_out: int,
    rng: np.random.Generator,
    hidden_activation: PWAActivation,
    output_activation: PWAActivation,
) -> List[Network]:
    """Redes de uma camada oculta em que cada largura contém os neurônios da anterior."""
    top = max(widths)
    W1 = rng.standard_normal((top, n_in)) / np.sqrt(n_in)
    b1 = rng.standard_normal(top)
    W2 = rng.standard_normal((n_out, top)) / np.sqrt(top)
    b2 = rng.standard_normal(n_out)
    return [
        Network((Layer(W1[:w], b1[:w], hidden_activation), Layer(W2[:, :w], b2, output_activation)))
        for w in widths
    ]


# -------------------------
# Sistemas de referência
# -------------------------
def mobile_robot_system() -> LinearSystem:
    """ẋ = u, x e u em R^2."""
    return LinearSystem(np.zeros((2, 2)), np.eye(2))


def mobile_robot_safe_set(bound: float = ROBOT_BOUND) -> HPolytope:
    return HPolytope.from_box([-bound, -bound], [bound, bound])


def _chain_matrix(values: np.ndarray) -> np.ndarray:
    """Tridiagonal de molas em série: diag (v_i + v_{i+1}), último v_n, fora da diagonal -v_{i+1}."""
    n = values.shape[0]
    K = np.zeros((n, n))
    for i in range(n):
        K[i, i] = values[i] + (values[i + 1] if i + 1 < n else 0.0)
        if i + 1 < n:
            K[i, i + 1] = K[i + 1, i] = -values[i + 1]
    return K


def spring_mass_damper_system(n_wagons: int, k=1.0, c=0.5, m=1.0) -> LinearSystem:
    """
    Estado [z_1..z_n, ż_1..ż_n], uma força por vagão.
    A = [[0, I], [-M⁻¹K, -M⁻¹C]], B = [[0], [M⁻¹]].
    """
    if n_wagons < 1:
        raise ValueError("É necessário pelo menos um vagão.")
    ks = np.broadcast_to(np.asarray(k, dtype=float), (n_wagons,))
    cs = np.broadcast_to(np.asarray(c, dtype=float), (n_wagons,))
    ms = np.broadcast_to(np.asarray(m, dtype=float), (n_wagons,))
    M_inv = np.diag(1.0 / ms)
    A = np.block([
        [np.zeros((n_wagons, n_wagons)), np.eye(n_wagons)],
        [-M_inv @ _chain_matrix(ks), -M_inv @ _chain_matrix(cs)],
    ])
    B = np.vstack([np.zeros((n_wagons, n_wagons)), M_inv])
    return LinearSystem(A, B)


def spring_mass_damper_safe_set(n_wagons: int) -> HPolytope:
    """{0 <= z_i <= 1, |ż_i| <= z_i}."""
    n = n_wagons
    rows, rhs = [], []
    for i in range(n):
        e_z = np.zeros(2 * n)
        e_z[i] = 1.0
        e_v = np.zeros(2 * n)
        e_v[n + i] = 1.0
        rows += [e_z, -e_z, e_v - e_z, -e_v - e_z]
        rhs += [1.0, 0.0, 0.0, 0.0]
    return HPolytope(np.array(rows), np.array(rhs))


# -------------------------
# Execução
# -------------------------
@dataclass
class BenchRow:
    architecture: str
    hidden_neurons: int
    parameters: int
    regions: int
    seconds: float
    safe: bool

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "N": self.hidden_neurons,
            "theta": self.parameters,
            "R": self.regions,
            "t_v": self.seconds,
            "safe": self.safe,
        }


@dataclass
class BenchTable:
    mode: str
    seed: int
    rows: List[BenchRow] = field(default_factory=list)

    def to_markdown(self) -> str:
        titles = {WIDTH: "largura da rede", DEPTH: "profundidade da rede", DIMENSION: "dimensão do sistema"}
        lines = [
            f"Escalabilidade com a {titles[self.mode]} (semente {self.seed})",
            "",
            "| Arquitetura | #N | #θ | #R | t_v (s) |",
            "|---|---|---|---|---|",
        ]
        for r in self.rows:
            lines.append(f"| {r.architecture} | {r.hidden_neurons} | {r.parameters} | {r.regions} | {r.seconds:.2f} |")
        return "\n".join(lines)

    def to_json(self) -> str:
        data = {"mode": self.mode, "seed": self.seed, "rows": [r.to_dict() for r in self.rows]}
        return json.dumps(data, indent=2, ensure_ascii=False)


def _bench_problem(mode: str, arch: Architecture, spec: Dict):
    if mode == DIMENSION:
        if arch.n_in % 2 or arch.n_out != arch.n_in // 2:
            raise ParseError(f"Arquitetura {arch.label}: o modo dimensão pede 2n entradas e n saídas")
        params = spec.get("spring_mass_damper", {})
        n = arch.n_in // 2
        system = spring_mass_damper_system(n, params.get("k", 1.0), params.get("c", 0.5), params.get("m", 1.0))
        return system, spring_mass_damper_safe_set(n), []
    if arch.n_in != 2 or arch.n_out != 2:
        raise ParseError(f"Arquitetura {arch.label}: o robô móvel pede 2 entradas e 2 saídas")
    obstacles = [polytope_from_json(o, f"obstacles[{k}]", open=True) for k, o in enumerate(spec.get("obstacles", []))]
    return mobile_robot_system(), mobile_robot_safe_set(), obstacles


def bench(mode: str, spec: Dict, threads: int = 1) -> BenchTable:
    """Uma linha por arquitetura (as de referência do modo quando `architectures` falta); redes em `networks` substituem as aleatórias."""
    if mode not in MODES:
        raise ParseError(f"Modo '{mode}' inválido (use {', '.join(MODES)})")
    if not isinstance(spec, dict):
        raise ParseError("bench: esperado objeto JSON")
    networks = spec.get("networks", {})
    if not isinstance(networks, dict):
        raise ParseError("networks: esperado objeto (arquitetura -> rede)")
    seed = int(spec.get("seed", 0))
    labels = spec.get("architectures") or [row[0] for row in TABLES[mode]]
    hidden = activation_from_json(spec.get("hidden_activation", "leaky_relu:0.01"), "hidden_activation")
    output = activation_from_json(spec.get("output_activation", "identity"), "output_activation")
    options = VerifyOptions(prune=bool(spec.get("prune", True)), seed=seed, threads=threads)

    table = BenchTable(mode, seed)
    for k, label in enumerate(labels):
        arch = parse_architecture(label)
        system, S, obstacles = _bench_problem(mode, arch, spec)
        supplied = networks.get(label)
        if supplied is not None:
            net = Network.from_json(supplied, f"networks[{label!r}]")
        else:
            # semente derivada por linha
            net = random_network(arch, np.random.default_rng([seed, k]), hidden, output)
        started = time.perf_counter()
        verdict = verify(system, net, S, obstacles, options)
        elapsed = time.perf_counter() - started
        table.rows.append(BenchRow(arch.label, net.hidden_neurons, net.parameter_count,
                                   verdict.stats["regions"], elapsed, verdict.safe))
        logger.info("%s: #R=%d, t_v=%.2f s", arch.label, verdict.stats["regions"], elapsed)
    return table
