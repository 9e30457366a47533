"""
oracle.py - Verdades de referência, lentas e simples de propósito.

- enumerate_regions_bruteforce: enumera padrões de ativação neurônio a neurônio
  e descarta os que não têm interior (referência para a segmentação).
- simulate / falsify: integração RK4 de passo fixo da malha fechada
  ẋ = A x + B N(x), com detecção de saída de S e entrada em obstáculos.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.config import Tolerances
from core.errors import DimensionMismatch, EmptyDomain, NonFinite, ScaleGuard
from core.geometry import (
    HPolytope, chebyshev_radius, faces, intersect_halfspace, remove_redundant,
    sample_convex_combinations, vertices,
)
from core.invariance import LinearSystem, boundary_pieces
from core.pwa_nn import Network, active_params_from_pattern
from core.segmentation import LinearRegion, segment

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-3
EVENT_TOL = 1e-4
DIVERGENCE = 1e12
MAX_ORACLE_HYPERPLANES = 24
BATCH_SIZE = 1024

LEFT_SAFE_SET = "left_safe_set"
ENTERED_OBSTACLE = "entered_obstacle"


# -------------------------
# Tipos
# -------------------------
@dataclass(frozen=True)
class ExitEvent:
    kind: str
    time: float
    face: Optional[int] = None
    obstacle: Optional[int] = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "time": self.time, "face": self.face, "obstacle": self.obstacle}


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    exit_event: Optional[ExitEvent] = None
    sample_index: Optional[int] = field(default=None, compare=False)

    @property
    def escaped(self) -> bool:
        return self.exit_event is not None

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "states": self.states.tolist(),
            "exit_event": None if self.exit_event is None else self.exit_event.to_dict(),
        }


# -------------------------
# Enumeração exaustiva
# -------------------------
def enumerate_regions_bruteforce(
    net: Network,
    S: HPolytope,
    tol: Optional[Tolerances] = None,
    max_hyperplanes: int = MAX_ORACLE_HYPERPLANES,
) -> List[LinearRegion]:
    """Todos os padrões cujo conjunto m_{j-1} < W z + b <= m_j tem interior dentro de S."""
    tol = tol or Tolerances()
    if net.hyperplane_count > max_hyperplanes:
        raise ScaleGuard(
            f"Rede com {net.hyperplane_count} hiperplanos; o oráculo aceita no máximo {max_hyperplanes}."
        )
    if chebyshev_radius(S, tol.lp) <= tol.radius:
        raise EmptyDomain("O domínio S é vazio ou não tem interior.")

    found: List[Tuple[tuple, HPolytope]] = []

    def visit(l: int, neuron: int, prefix: tuple, current: tuple, P: HPolytope):
        if l == net.depth:
            found.append((prefix, P))
            return
        layer = net.layers[l]
        if neuron == layer.width:
            visit(l + 1, 0, prefix + (current,), (), P)
            return
        params = active_params_from_pattern(net, prefix)
        E, G = params.E[l], params.G[l]
        normal = layer.W[neuron] @ E
        base = float(layer.W[neuron] @ G + layer.b[neuron])
        m = layer.activation.breakpoints
        if np.max(np.abs(normal), initial=0.0) < 1e-12:
            j = int(layer.activation.segment_of(base))
            visit(l, neuron + 1, prefix, current + (j,), P)
            return
        for j in range(1, layer.activation.segments + 1):
            Q = P
            if j > 1:
                Q = intersect_halfspace(Q, normal, m[j - 2] - base, ">=")
            if j <= m.shape[0]:
                Q = intersect_halfspace(Q, normal, m[j - 1] - base, "<=")
            if chebyshev_radius(Q, tol.lp) > tol.radius:
                visit(l, neuron + 1, prefix, current + (j,), Q)

    visit(0, 0, (), (), S.closure())
    found.sort(key=lambda item: item[0])
    regions = []
    for k, (pattern, P) in enumerate(found):
        regions.append(LinearRegion(
            polytope=remove_redundant(P, tol.lp),
            params=active_params_from_pattern(net, pattern),
            pattern=pattern,
            depth=net.depth,
            id=k,
        ))
    logger.debug("Oráculo: %d regiões", len(regions))
    return regions


# -------------------------
# Simulação
# -------------------------
def _normalized(P: HPolytope) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(P.C, axis=1)
    norms = np.where(norms > 0, norms, 1.0)
    return P.C / norms[:, None], P.d / norms


class _Monitor:
    """Distâncias assinadas em lote: saída de S (> 0 fora) e profundidade em cada obstáculo (> 0 dentro)."""

    def __init__(self, S: Optional[HPolytope], obstacles: Sequence[HPolytope]):
        self.S = None if S is None else _normalized(S)
        self.obstacles = [_normalized(O) for O in obstacles]

    def outside(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        C, d = self.S
        slack = X @ C.T - d
        return slack.max(axis=1), slack.argmax(axis=1)

    def depth(self, k: int, X: np.ndarray) -> np.ndarray:
        C, d = self.obstacles[k]
        return -(X @ C.T - d).max(axis=1)


def _crossing(t0: float, h: float, g0: np.ndarray, g1: np.ndarray) -> np.ndarray:
    """Instante em que g passa por zero, interpolando linearmente no passo [t0, t0 + h]."""
    span = g1 - g0
    frac = np.where(span > 0, -g0 / np.where(span > 0, span, 1.0), 0.0)
    return t0 + h * np.clip(frac, 0.0, 1.0)


def _integrate(
    sys: LinearSystem,
    net: Network,
    X0: np.ndarray,
    horizon: float,
    step: float,
    S: Optional[HPolytope],
    obstacles: Sequence[HPolytope],
    record: bool = False,
) -> Tuple[List[Optional[ExitEvent]], Optional[np.ndarray], Optional[np.ndarray]]:
    """RK4 de passo fixo para um lote de estados; cada linha para no primeiro evento."""
    if step <= 0:
        raise ValueError("O passo de integração deve ser positivo.")
    if horizon < step:
        raise ValueError("O horizonte deve ser pelo menos um passo.")
    X = np.array(X0, dtype=float, copy=True)
    if X.ndim != 2 or X.shape[1] != sys.n:
        raise DimensionMismatch(f"Estados iniciais devem ter formato (k, {sys.n}).")
    if net.n_in != sys.n or net.n_out != sys.m:
        raise DimensionMismatch("Rede e sistema não encaixam.")

    At = sys.A.T
    Bt = sys.B.T

    def f(Z: np.ndarray) -> np.ndarray:
        return Z @ At + net.evaluate(Z) @ Bt

    monitor = _Monitor(S, obstacles)
    events: List[Optional[ExitEvent]] = [None] * X.shape[0]
    active = np.arange(X.shape[0])
    steps = int(round(horizon / step))
    times = [0.0]
    states = [X.copy()] if record else []

    g_out = monitor.outside(X)[0] if S is not None else None
    g_obs = [monitor.depth(k, X) for k in range(len(obstacles))]

    for i in range(steps):
        if active.size == 0:
            break
        t = i * step
        Z = X[active]
        k1 = f(Z)
        k2 = f(Z + 0.5 * step * k1)
        k3 = f(Z + 0.5 * step * k2)
        k4 = f(Z + step * k3)
        Z = Z + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(Z)) or np.max(np.abs(Z), initial=0.0) > DIVERGENCE:
            raise NonFinite(f"Estado divergiu em t = {t + step:.6g}.")
        X[active] = Z
        times.append(t + step)
        if record:
            states.append(X.copy())

        done = np.zeros(active.size, dtype=bool)
        if S is not None:
            g1, rows = monitor.outside(Z)
            hit = g1 > EVENT_TOL
            if np.any(hit):
                tc = _crossing(t, step, g_out[active], g1)
                for a in np.flatnonzero(hit):
                    events[active[a]] = ExitEvent(LEFT_SAFE_SET, float(tc[a]), face=int(rows[a]))
                done |= hit
            g_out[active] = g1
        for k in range(len(obstacles)):
            g1 = monitor.depth(k, Z)
            hit = (g1 > EVENT_TOL) & ~done
            if np.any(hit):
                tc = _crossing(t, step, g_obs[k][active], g1)
                for a in np.flatnonzero(hit):
                    events[active[a]] = ExitEvent(ENTERED_OBSTACLE, float(tc[a]), obstacle=k)
                done |= hit
            g_obs[k][active] = g1
        active = active[~done]

    if not record:
        return events, None, None
    return events, np.array(times), np.vstack(states)


def simulate(
    sys: LinearSystem,
    net: Network,
    x0: Sequence[float],
    horizon: float,
    step: float = DEFAULT_STEP,
    S: Optional[HPolytope] = None,
    obstacles: Sequence[HPolytope] = (),
) -> Trajectory:
    """Uma trajetória; a integração para no primeiro evento de saída/entrada."""
    x0 = np.asarray(x0, dtype=float).reshape(1, -1)
    events, times, states = _integrate(sys, net, x0, horizon, step, S, obstacles, record=True)
    return Trajectory(times, states, events[0])


# -------------------------
# Falsificação
# -------------------------
def _boundary_samples(
    S: HPolytope,
    obstacles: Sequence[HPolytope],
    regions: Sequence[LinearRegion],
    n_samples: int,
    rng: np.random.Generator,
    tol: Tolerances,
) -> np.ndarray:
    fixed = [vertices(S, tol.face, tol.lp).vertices]
    fixed += [vertices(O.closure(), tol.face, tol.lp).vertices for O in obstacles]
    for piece in boundary_pieces(S, obstacles, regions, tol, coverage_probes=0):
        fixed.append(vertices(piece.geometry, tol.face, tol.lp).vertices)
    X = np.vstack(fixed)

    face_vertices = []
    for P in [S] + [O.closure() for O in obstacles]:
        for face in faces(remove_redundant(P, tol.lp), tol.lp):
            face_vertices.append(vertices(face.geometry, tol.face, tol.lp).vertices)
    missing = n_samples - X.shape[0]
    if missing > 0 and face_vertices:
        per_face = np.full(len(face_vertices), missing // len(face_vertices))
        per_face[: missing % len(face_vertices)] += 1
        extra = [sample_convex_combinations(V, int(c), rng) for V, c in zip(face_vertices, per_face) if c > 0]
        X = np.vstack([X] + extra)
    return X


def falsify(
    sys: LinearSystem,
    net: Network,
    S: HPolytope,
    obstacles: Sequence[HPolytope] = (),
    n_samples: int = 1000,
    horizon: float = 10.0,
    step: float = DEFAULT_STEP,
    seed: int = 0,
    regions: Optional[Sequence[LinearRegion]] = None,
    threads: int = 1,
    tol: Optional[Tolerances] = None,
) -> Optional[Trajectory]:
    """
    Simula a partir de vértices de S, dos obstáculos e das peças de fronteira,
    completando com pontos aleatórios nas faces. Devolve a trajetória da amostra
    de menor índice que escapa, ou None.
    """
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    if regions is None:
        regions = segment(net, S, obstacles, prune=True, tol=tol)
    X = _boundary_samples(S, obstacles, regions, n_samples, rng, tol)
    batches = [X[k:k + BATCH_SIZE] for k in range(0, X.shape[0], BATCH_SIZE)]
    logger.info("Falsificação: %d amostras em %d lotes", X.shape[0], len(batches))

    def run(batch: np.ndarray) -> List[Optional[ExitEvent]]:
        return _integrate(sys, net, batch, horizon, step, S, obstacles)[0]

    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(batch) for batch in batches]

    for b, events in enumerate(results):
        for k, event in enumerate(events):
            if event is None:
                continue
            index = b * BATCH_SIZE + k
            trajectory = simulate(sys, net, X[index], horizon, step, S, obstacles)
            trajectory.sample_index = index
            logger.info("Contraexemplo: amostra %d, %s em t = %.4g", index, event.kind, event.time)
            return trajectory
    return None
