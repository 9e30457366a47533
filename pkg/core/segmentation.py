"""
segmentation.py - Decomposição de um domínio polítopico nas regiões lineares da rede.

Camada por camada: cada região da camada l-1 é cortada pelos hiperplanos
que a camada l induz nela (dependem dos parâmetros ativos da região), e os
filhos ganham parâmetros novos. Com poda, regiões que não tocam a fronteira
do conjunto seguro nem um obstáculo são congeladas e nunca expandidas.
"""
import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import Tolerances
from core.errors import EmptyDomain, EmptyPolytope, PatternMismatch
from core.geometry import (
    HPolytope, chebyshev_radius, faces, intersect, intersect_halfspace, is_empty,
    remove_redundant, bounding_box, sample_uniform, sample_convex_combinations, vertices, volume,
)
from core.pwa_nn import ActivationPattern, ActiveParams, Layer, Network, active_params_from_pattern

logger = logging.getLogger(__name__)

DEGENERATE_NORMAL = 1e-12
FACET_KEY_TOL = 1e-12

PENDING = "pending"
EXPANDED = "expanded"
LEAF = "leaf"
FROZEN = "frozen"


# -------------------------
# Tipos
# -------------------------
@dataclass(frozen=True, eq=False)
class LinearRegion:
    polytope: HPolytope
    params: ActiveParams
    pattern: ActivationPattern
    depth: int
    id: int = -1
    parent: Optional[int] = None


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """{x | normal·x = offset}: fronteira entre segmentos do neurônio `neuron` no breakpoint `breakpoint` (1..K-1)."""
    normal: np.ndarray
    offset: float
    neuron: int
    breakpoint: int
    degenerate: bool


@dataclass
class RegionNode:
    region: LinearRegion
    children: List[int] = field(default_factory=list)
    status: str = PENDING


class RegionTree:
    """Árvore de regiões indexada por id. O índice é a única estrutura sincronizada."""

    def __init__(self, depth: int):
        self.depth = depth
        self.nodes: Dict[int, RegionNode] = {}
        self.stats: Dict[str, object] = {}
        self._lock = threading.Lock()
        self._next_id = 0

    def add(self, region: LinearRegion) -> LinearRegion:
        with self._lock:
            region = replace(region, id=self._next_id)
            self._next_id += 1
            self.nodes[region.id] = RegionNode(region)
            if region.parent is not None:
                self.nodes[region.parent].children.append(region.id)
        return region

    def mark(self, region_id: int, status: str):
        with self._lock:
            self.nodes[region_id].status = status

    @property
    def root(self) -> LinearRegion:
        return self.nodes[0].region

    def leaves_at(self, l: int) -> List[LinearRegion]:
        """Regiões refinadas até a camada l (inclui as congeladas nessa profundidade)."""
        return [node.region for node in self.nodes.values() if node.region.depth == l]

    def frozen(self) -> List[LinearRegion]:
        return [node.region for node in self.nodes.values() if node.status == FROZEN]

    def leaves(self) -> List[LinearRegion]:
        """Regiões completamente refinadas e não podadas, em ordem da árvore."""
        return [node.region for node in self.nodes.values() if node.status == LEAF]

    def __len__(self) -> int:
        return len(self.nodes)


# -------------------------
# Hiperplanos e cortes
# -------------------------
def region_hyperplanes(layer: Layer, l: int, region: LinearRegion) -> List[Hyperplane]:
    """
    Hiperplanos W_n [E^(l-1) x + G^(l-1)] + b_n = m_k da camada l (base 1) dentro
    da região, um por (neurônio, breakpoint), ordenados por neurônio e breakpoint.
    """
    if region.params.depth < l - 1:
        raise PatternMismatch(f"Região refinada até a camada {region.params.depth}, camada {l} pedida.")
    E = region.params.E[l - 1]
    G = region.params.G[l - 1]
    normals = layer.W @ E
    bases = layer.W @ G + layer.b
    out: List[Hyperplane] = []
    for n in range(layer.width):
        degenerate = bool(np.max(np.abs(normals[n]), initial=0.0) < DEGENERATE_NORMAL)
        for k, mk in enumerate(layer.activation.breakpoints, start=1):
            out.append(Hyperplane(normals[n], float(mk - bases[n]), n, k, degenerate))
    return out


def split_region(
    region: LinearRegion,
    hyperplanes: Sequence[Hyperplane],
    net: Network,
    tol: Optional[Tolerances] = None,
) -> List[LinearRegion]:
    """
    Arranjo dos hiperplanos restrito à região, por divisão binária recursiva.
    Células vazias ou degeneradas (raio < tol.radius) são descartadas; quando só
    um lado sobrevive a célula fica como estava, sem a linha nova.
    """
    tol = tol or Tolerances()
    layer = net.layers[region.depth]
    # acima[n] = quantos breakpoints do neurônio n a pré-ativação já ultrapassou
    cells: List[Tuple[HPolytope, np.ndarray]] = [(region.polytope, np.zeros(layer.width, dtype=int))]

    for h in hyperplanes:
        if h.degenerate:
            # pré-ativação constante: acima do breakpoint só se estritamente maior
            if h.offset < 0:
                for _, above in cells:
                    above[h.neuron] += 1
            continue
        next_cells = []
        for poly, above in cells:
            below_poly = intersect_halfspace(poly, h.normal, h.offset, "<=")
            above_poly = intersect_halfspace(poly, h.normal, h.offset, ">=")
            keep_below = chebyshev_radius(below_poly, tol.lp) > tol.radius
            keep_above = chebyshev_radius(above_poly, tol.lp) > tol.radius
            if keep_below and keep_above:
                upper = above.copy()
                upper[h.neuron] += 1
                next_cells.append((below_poly, above.copy()))
                next_cells.append((above_poly, upper))
            elif keep_below:
                next_cells.append((poly, above))
            elif keep_above:
                upper = above.copy()
                upper[h.neuron] += 1
                next_cells.append((poly, upper))
            else:
                logger.debug("Célula degenerada descartada na região %d", region.id)
        cells = next_cells

    children = []
    for poly, above in cells:
        pattern = region.pattern + (tuple(int(a) + 1 for a in above),)
        if poly is not region.polytope:
            poly = remove_redundant(poly, tol.lp)
        children.append(LinearRegion(
            polytope=poly,
            params=active_params_from_pattern(net, pattern),
            pattern=pattern,
            depth=region.depth + 1,
            parent=region.id,
        ))
    return children


# -------------------------
# Poda
# -------------------------
def _row_key(c: np.ndarray, d: float) -> np.ndarray:
    norm = float(np.linalg.norm(c))
    if norm <= DEGENERATE_NORMAL:
        return np.full(c.shape[0] + 1, np.nan)
    return np.append(c, d) / norm


class BoundaryProbe:
    """
    Decide se uma região toca alguma face de S ou o fecho de algum obstáculo.

    As regiões chegam sem linhas redundantes; uma linha de S que sobreviveu na
    região é uma faceta em comum e dispensa o PL.
    """

    def __init__(self, S: HPolytope, obstacles: Sequence[HPolytope], tol: Tolerances):
        self.tol = tol
        reduced = remove_redundant(S, tol.lp)
        outer = faces(reduced, tol.lp)
        self.targets = [f.geometry for f in outer]
        self.targets += [O.closure() for O in obstacles]
        self._facet_keys = np.array([_row_key(reduced.C[f.row_index], reduced.d[f.row_index]) for f in outer])

    def shares_facet(self, P: HPolytope) -> bool:
        if P.m == 0 or self._facet_keys.size == 0:
            return False
        keys = np.array([_row_key(c, d) for c, d in zip(P.C, P.d)])
        diff = np.abs(keys[:, None, :] - self._facet_keys[None, :, :]).max(axis=2)
        return bool(np.any(diff <= FACET_KEY_TOL))

    def touches(self, P: HPolytope) -> bool:
        if self.shares_facet(P):
            return True
        return any(not is_empty(intersect(P, target), self.tol.lp) for target in self.targets)


# -------------------------
# Segmentação
# -------------------------
def _map(fn: Callable, items: Sequence, threads: int) -> List:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def build_region_tree(
    net: Network,
    S: HPolytope,
    obstacles: Sequence[HPolytope] = (),
    prune: bool = False,
    tol: Optional[Tolerances] = None,
    threads: int = 1,
) -> RegionTree:
    """Segmenta S camada por camada: todas as regiões de uma camada antes da próxima."""
    tol = tol or Tolerances()
    if S.n != net.n_in:
        raise PatternMismatch(f"Domínio de dimensão {S.n} para rede com {net.n_in} entradas.")
    try:
        bounding_box(S)
    except EmptyPolytope:
        raise EmptyDomain("O domínio S é vazio.")
    if chebyshev_radius(S, tol.lp) <= tol.radius:
        raise EmptyDomain("O domínio S não tem interior.")

    started = time.perf_counter()
    tree = RegionTree(net.depth)
    probe = BoundaryProbe(S, obstacles, tol) if prune else None
    root = tree.add(LinearRegion(remove_redundant(S, tol.lp), active_params_from_pattern(net, ()), (), 0))
    frontier = [root]
    regions_per_layer = []
    pruned_per_layer = []

    for l, layer in enumerate(net.layers, start=1):
        def expand(region: LinearRegion) -> List[LinearRegion]:
            return split_region(region, region_hyperplanes(layer, l, region), net, tol)

        batches = _map(expand, frontier, threads)
        children: List[LinearRegion] = []
        for parent, batch in zip(frontier, batches):
            tree.mark(parent.id, EXPANDED)
            children.extend(tree.add(child) for child in batch)

        if probe is not None:
            touching = _map(lambda r: probe.touches(r.polytope), children, threads)
        else:
            touching = [True] * len(children)
        frontier = []
        for child, keep in zip(children, touching):
            if keep:
                frontier.append(child)
            else:
                tree.mark(child.id, FROZEN)
        regions_per_layer.append(len(frontier))
        pruned_per_layer.append(len(children) - len(frontier))
        logger.debug("Camada %d: %d regiões, %d podadas", l, len(frontier), pruned_per_layer[-1])

    for region in frontier:
        tree.mark(region.id, LEAF)
    tree.stats = {
        "regions": len(frontier),
        "regions_per_layer": regions_per_layer,
        "pruned_per_layer": pruned_per_layer,
        "nodes": len(tree),
        "seconds": time.perf_counter() - started,
    }
    logger.info("Segmentação: %d regiões em %.3f s", len(frontier), tree.stats["seconds"])
    return tree


def segment(
    net: Network,
    S: HPolytope,
    obstacles: Sequence[HPolytope] = (),
    prune: bool = False,
    tol: Optional[Tolerances] = None,
    threads: int = 1,
) -> List[LinearRegion]:
    return build_region_tree(net, S, obstacles, prune, tol, threads).leaves()


# -------------------------
# Verificação da partição
# -------------------------
@dataclass
class PartitionReport:
    samples: int
    uncovered: int
    multiply_covered: int
    overlapping_pairs: List[Tuple[int, int]]
    shared_facets: int
    continuity_defect: float
    volume_gap: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.uncovered == 0 and self.multiply_covered == 0 and not self.overlapping_pairs


def verify_partition(
    regions: Sequence[LinearRegion],
    S: HPolytope,
    samples: int = 10000,
    facet_points: int = 20,
    seed: int = 0,
    tol: Optional[Tolerances] = None,
) -> PartitionReport:
    """Cobertura Monte-Carlo, sobreposições par a par e continuidade através das facetas compartilhadas."""
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    X = sample_uniform(S, samples, rng)

    covered = np.zeros(X.shape[0], dtype=int)
    strictly = np.zeros(X.shape[0], dtype=int)
    for region in regions:
        covered += region.polytope.contains_points(X, tol=tol.face)
        strictly += region.polytope.contains_points(X, tol=-tol.face)

    boxes = []
    for region in regions:
        V = vertices(region.polytope, tol.face, tol.lp).vertices
        boxes.append((V.min(axis=0), V.max(axis=0)))

    overlaps: List[Tuple[int, int]] = []
    shared = 0
    defect = 0.0
    for a, b in combinations(range(len(regions)), 2):
        (lo_a, hi_a), (lo_b, hi_b) = boxes[a], boxes[b]
        if np.any(lo_a > hi_b + tol.face) or np.any(lo_b > hi_a + tol.face):
            continue
        common = intersect(regions[a].polytope, regions[b].polytope)
        if is_empty(common, tol.lp):
            continue
        if chebyshev_radius(common, tol.lp) > tol.radius:
            overlaps.append((regions[a].id, regions[b].id))
            continue
        V = vertices(common, tol.face, tol.lp).vertices
        if V.shape[0] < S.n:
            continue  # só se tocam num ponto ou aresta de dimensão menor
        shared += 1
        P = np.vstack([V, sample_convex_combinations(V, facet_points, rng)])
        Ea, Ga = regions[a].params.final
        Eb, Gb = regions[b].params.final
        gap = np.abs(P @ (Ea - Eb).T + (Ga - Gb))
        defect = max(defect, float(gap.max(initial=0.0)))

    gap = None
    if S.n <= 4:
        total = volume(S)
        if total > 0:
            gap = abs(sum(volume(r.polytope) for r in regions) - total) / total

    return PartitionReport(
        samples=int(X.shape[0]),
        uncovered=int(np.sum(covered == 0)),
        multiply_covered=int(np.sum(strictly >= 2)),
        overlapping_pairs=overlaps,
        shared_facets=shared,
        continuity_defect=defect,
        volume_gap=gap,
    )
