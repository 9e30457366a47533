"""
invariance.py - Condição de Nagumo nos vértices da fronteira.

Para cada face F_i de S (e de cada obstáculo) e cada região linear R_j,
D_ij = F_i ∩ R_j. Em todo vértice v de D_ij a dinâmica afim da região deve
apontar para dentro de S (C_i (A_j v + b_j) <= 0) ou para fora do
obstáculo (C_i (A_j v + b_j) >= 0).
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import Tolerances, VerifyOptions, TOL_MARGIN
from core.errors import (
    CoverageGap, DimensionMismatch, InputDimensionMismatch, ObstacleOutsideSafeSet,
    ParseError, UnboundedPiece, UnboundedPolytope,
)
from core.geometry import (
    HPolytope, faces, intersect, is_empty, is_subset, irredundant_rows,
    sample_convex_combinations, vertices,
)
from core.pwa_nn import Network
from core.segmentation import LinearRegion, RegionTree, build_region_tree

logger = logging.getLogger(__name__)

OUTER = "outer"
OBSTACLE = "obstacle"
SENSE_LE = "<=0"
SENSE_GE = ">=0"

OK = "ok"
MARGINAL = "marginal"
VIOLATION = "violation"


# -------------------------
# Tipos
# -------------------------
@dataclass(frozen=True, eq=False)
class LinearSystem:
    """ẋ = A x + B u."""
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        B = np.array(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A deve ser quadrada, recebido formato {A.shape}.")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"B deve ter {A.shape[0]} linhas, recebido formato {B.shape}.")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, data: dict, path: str = "system") -> "LinearSystem":
        if not isinstance(data, dict) or "A" not in data or "B" not in data:
            raise ParseError(f"{path}: esperado objeto com as chaves 'A' e 'B'")
        try:
            return cls(np.array(data["A"], dtype=float), np.array(data["B"], dtype=float))
        except DimensionMismatch as e:
            raise DimensionMismatch(f"{path}: {e}")
        except (TypeError, ValueError):
            raise ParseError(f"{path}: A e B devem ser matrizes numéricas")


@dataclass(frozen=True, eq=False)
class ClosedLoopPiece:
    """f(x) = A_j x + b_j na região j."""
    A: np.ndarray
    b: np.ndarray
    region: int

    def field(self, x: np.ndarray) -> np.ndarray:
        return self.A @ x + self.b


@dataclass(frozen=True, eq=False)
class BoundaryPiece:
    kind: str
    face_row: int
    region: int
    geometry: HPolytope
    normal: np.ndarray
    sense: str
    obstacle: Optional[int] = None

    @property
    def label(self) -> str:
        owner = "S" if self.kind == OUTER else f"O{self.obstacle + 1}"
        return f"{owner}[{self.face_row}]∩R{self.region}"


@dataclass(frozen=True, eq=False)
class Violation:
    piece: BoundaryPiece
    vertex: np.ndarray
    margin: float

    def to_dict(self) -> dict:
        return {
            "kind": self.piece.kind,
            "obstacle": self.piece.obstacle,
            "face_row": self.piece.face_row,
            "region": self.piece.region,
            "normal": self.piece.normal.tolist(),
            "sense": self.piece.sense,
            "vertex": [float(v) for v in self.vertex],
            "margin": float(self.margin),
        }


@dataclass
class Verdict:
    violations: List[Violation]
    marginal: List[Violation] = field(default_factory=list)
    stats: Dict[str, object] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    regions: List[LinearRegion] = field(default_factory=list, repr=False)
    tree: Optional[RegionTree] = field(default=None, repr=False)

    @property
    def safe(self) -> bool:
        return not self.violations


# -------------------------
# Operações
# -------------------------
def closed_loop_piece(sys: LinearSystem, region: LinearRegion) -> ClosedLoopPiece:
    E, G = region.params.final
    if E.shape[0] != sys.m or E.shape[1] != sys.n:
        raise DimensionMismatch(
            f"Região {region.id}: E de formato {E.shape}, o sistema pede ({sys.m}, {sys.n})."
        )
    return ClosedLoopPiece(sys.A + sys.B @ E, sys.B @ G, region.id)


def classify_margin(sense: str, margin: float, tol: float = TOL_MARGIN) -> str:
    """Fora da faixa ±tol decide o sinal; dentro dela o vértice é aceito como tangencial."""
    if abs(margin) <= tol:
        return MARGINAL
    if sense == SENSE_LE:
        return VIOLATION if margin > 0 else OK
    return VIOLATION if margin < 0 else OK


def _check_coverage(face_list, regions, owner: str, probes: int, rng, tol: Tolerances):
    for face in face_list:
        V = vertices(face.geometry, tol.face, tol.lp).vertices
        points = np.vstack([V, sample_convex_combinations(V, probes, rng)]) if probes > 0 else V
        hit = np.zeros(points.shape[0], dtype=bool)
        for region in regions:
            hit |= region.polytope.contains_points(points, tol=tol.face)
            if hit.all():
                break
        if not hit.all():
            point = points[np.argmin(hit)]
            raise CoverageGap(
                f"Ponto {np.round(point, 6).tolist()} da face {owner}[{face.row_index}] não pertence a nenhuma região.",
                point=point, face=f"{owner}[{face.row_index}]",
            )


def boundary_pieces(
    S: HPolytope,
    obstacles: Sequence[HPolytope],
    regions: Sequence[LinearRegion],
    tol: Optional[Tolerances] = None,
    coverage_probes: int = 32,
    seed: int = 0,
) -> List[BoundaryPiece]:
    """Peças D_ij não vazias: faces de S primeiro (sentido <= 0), depois as dos obstáculos (>= 0)."""
    tol = tol or Tolerances()
    rng = np.random.default_rng(seed)
    owners = [(OUTER, None, S.closure(), SENSE_LE)]
    owners += [(OBSTACLE, k, O.closure(), SENSE_GE) for k, O in enumerate(obstacles)]

    pieces: List[BoundaryPiece] = []
    for kind, k, P, sense in owners:
        rows = irredundant_rows(P, tol.lp)
        minimal = HPolytope(P.C[rows], P.d[rows])
        face_list = faces(minimal, tol.lp)
        owner = "S" if kind == OUTER else f"O{k + 1}"
        _check_coverage(face_list, regions, owner, coverage_probes, rng, tol)
        for face in face_list:
            row = rows[face.row_index]
            for region in regions:
                D = intersect(face.geometry, region.polytope)
                if is_empty(D, tol.lp):
                    continue
                pieces.append(BoundaryPiece(kind, row, region.id, D, P.C[row], sense, k))
    logger.debug("%d peças de fronteira", len(pieces))
    return pieces


def check_piece(
    piece: BoundaryPiece, dynamics: ClosedLoopPiece, tol: Optional[Tolerances] = None
) -> List[Tuple[np.ndarray, float]]:
    """margin(v) = C_i (A_j v + b_j) em cada vértice da peça."""
    tol = tol or Tolerances()
    if piece.region != dynamics.region:
        raise ValueError(f"Peça da região {piece.region} com dinâmica da região {dynamics.region}.")
    try:
        V = vertices(piece.geometry, tol.face, tol.lp).vertices
    except UnboundedPolytope as e:
        raise UnboundedPiece(f"Peça {piece.label} ilimitada: {e}")
    margins = (V @ dynamics.A.T + dynamics.b) @ piece.normal
    return [(V[i], float(margins[i])) for i in range(V.shape[0])]


def verify(
    sys: LinearSystem,
    net: Network,
    S: HPolytope,
    obstacles: Sequence[HPolytope] = (),
    options: Optional[VerifyOptions] = None,
) -> Verdict:
    """Algoritmo completo: segmentação (com poda), peças de fronteira e checagem dos vértices."""
    options = options or VerifyOptions()
    tol = options.tolerances
    if net.n_in != sys.n:
        raise InputDimensionMismatch(f"A rede tem {net.n_in} entradas, o sistema tem {sys.n} estados.")
    if net.n_out != sys.m:
        raise InputDimensionMismatch(f"A rede tem {net.n_out} saídas, o sistema tem {sys.m} entradas.")
    if S.n != sys.n:
        raise InputDimensionMismatch(f"S tem dimensão {S.n}, o sistema tem {sys.n} estados.")
    for k, O in enumerate(obstacles):
        if O.n != sys.n:
            raise InputDimensionMismatch(f"Obstáculo {k + 1} tem dimensão {O.n}.")
        if not is_subset(O, S, tol.face):
            raise ObstacleOutsideSafeSet(f"Obstáculo {k + 1} não está contido em S.")

    t0 = time.perf_counter()
    tree = build_region_tree(net, S, obstacles, options.prune, tol, options.threads)
    regions = tree.leaves()
    t1 = time.perf_counter()
    pieces = boundary_pieces(S, obstacles, regions, tol, options.coverage_probes, options.seed)
    t2 = time.perf_counter()

    dynamics = {region.id: closed_loop_piece(sys, region) for region in regions}

    def run(piece: BoundaryPiece):
        return check_piece(piece, dynamics[piece.region], tol)

    violations: List[Violation] = []
    marginal: List[Violation] = []
    checked = 0
    vertex_count = 0
    if options.early_exit or options.threads <= 1:
        results = (run(piece) for piece in pieces)
    else:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            results = list(pool.map(run, pieces))
    for piece, result in zip(pieces, results):
        checked += 1
        vertex_count += len(result)
        for v, margin in result:
            status = classify_margin(piece.sense, margin, tol.margin)
            if status == VIOLATION:
                violations.append(Violation(piece, v, margin))
            elif status == MARGINAL:
                marginal.append(Violation(piece, v, margin))
        if options.early_exit and violations:
            logger.info("Parando na primeira violação (early exit).")
            break
    t3 = time.perf_counter()

    verdict = Verdict(
        violations=violations,
        marginal=marginal,
        stats={
            "regions": len(regions),
            "regions_per_layer": tree.stats["regions_per_layer"],
            "pruned_per_layer": tree.stats["pruned_per_layer"],
            "pieces": len(pieces),
            "pieces_checked": checked,
            "vertices": vertex_count,
            "marginal": len(marginal),
            "violations": len(violations),
        },
        timings={"segmentation": t1 - t0, "pieces": t2 - t1, "checks": t3 - t2, "total": t3 - t0},
        regions=regions,
        tree=tree,
    )
    logger.info(
        "Veredito: %s (%d regiões, %d peças, %d vértices, %d violações)",
        "seguro" if verdict.safe else "inseguro", len(regions), len(pieces), vertex_count, len(violations),
    )
    return verdict
