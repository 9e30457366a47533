"""
geometry.py - Polítopos convexos em representação H, {x | Cx <= d}.

Tudo o que o verificador faz passa por aqui: interseções, faces, centro de
Chebyshev, vazio/não-vazio e enumeração de vértices. Os PLs usam o HiGHS
através de `scipy.optimize.linprog`.

Os valores são imutáveis depois de construídos; todas as funções são puras.
"""
import itertools
import logging
from dataclasses import dataclass
from math import comb
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection

try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.11
    from scipy.spatial.qhull import QhullError

from core.config import TOL_LP, TOL_FACE, TOL_RADIUS
from core.errors import DimensionMismatch, EmptyPolytope, UnboundedPolytope, LPFailure

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Acima destes limites a enumeração por conjuntos ativos dá lugar ao qhull
ACTIVE_SET_MAX_DIM = 4
ACTIVE_SET_MAX_COMBINATIONS = 20000

_ZERO_ROW = 1e-14


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _row_norms(C: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(C, axis=1)
    return np.where(norms > _ZERO_ROW, norms, 1.0)


# -------------------------
# Tipos
# -------------------------
@dataclass(frozen=True, eq=False)
class HPolytope:
    """Poliedro {x | Cx <= d}. `open` marca obstáculos (o interior é o conjunto proibido)."""
    C: np.ndarray
    d: np.ndarray
    open: bool = False

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        d = np.array(self.d, dtype=float).reshape(-1)
        if C.ndim != 2:
            raise DimensionMismatch(f"C deve ser uma matriz, recebido array com {C.ndim} dimensões.")
        if C.shape[0] != d.shape[0]:
            raise DimensionMismatch(f"C tem {C.shape[0]} linhas mas d tem {d.shape[0]} entradas.")
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "d", _frozen(d))

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @classmethod
    def universe(cls, n: int) -> "HPolytope":
        return cls(np.zeros((0, n)), np.zeros(0))

    @classmethod
    def from_box(cls, lower: Sequence[float], upper: Sequence[float], open: bool = False) -> "HPolytope":
        """Caixa lower <= x <= upper, linhas na ordem (x_1 <= u_1, -x_1 <= -l_1, ...)."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape:
            raise DimensionMismatch("Limites inferior e superior com tamanhos diferentes.")
        n = lower.shape[0]
        C = np.zeros((2 * n, n))
        d = np.zeros(2 * n)
        for k in range(n):
            C[2 * k, k] = 1.0
            d[2 * k] = upper[k]
            C[2 * k + 1, k] = -1.0
            d[2 * k + 1] = -lower[k]
        return cls(C, d, open=open)

    def closure(self) -> "HPolytope":
        if not self.open:
            return self
        return HPolytope(self.C, self.d)

    def contains(self, x: Sequence[float], tol: float = TOL_FACE) -> bool:
        """Pertinência ao fecho, com folga normalizada por linha."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"Ponto de dimensão {x.shape} em polítopo de dimensão {self.n}.")
        return bool(np.all(self.C @ x - self.d <= tol * _row_norms(self.C)))

    def contains_points(self, X: np.ndarray, tol: float = TOL_FACE) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.m == 0:
            return np.ones(X.shape[0], dtype=bool)
        return np.all(X @ self.C.T - self.d <= tol * _row_norms(self.C), axis=1)

    def to_dict(self) -> dict:
        return {"C": self.C.tolist(), "d": self.d.tolist()}

    def __repr__(self) -> str:
        kind = "aberto" if self.open else "fechado"
        return f"HPolytope(n={self.n}, m={self.m}, {kind})"


@dataclass(frozen=True, eq=False)
class VPolytope:
    vertices: np.ndarray

    def __post_init__(self):
        V = np.array(self.vertices, dtype=float)
        if V.ndim != 2:
            raise DimensionMismatch("Vértices devem formar uma matriz (k x n).")
        object.__setattr__(self, "vertices", _frozen(V))

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def __iter__(self):
        return iter(self.vertices)


@dataclass(frozen=True, eq=False)
class Face:
    """F_i = {x em P | C_i x = d_i}."""
    parent: HPolytope
    row_index: int
    geometry: HPolytope

    @property
    def normal(self) -> np.ndarray:
        return self.parent.C[self.row_index]

    @property
    def offset(self) -> float:
        return float(self.parent.d[self.row_index])


@dataclass(frozen=True, eq=False)
class LPResult:
    status: str
    point: Optional[np.ndarray] = None
    objective: float = float("nan")

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


# -------------------------
# Programação linear
# -------------------------
def _linprog(c: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float, bounds=None):
    n = c.shape[0]
    if bounds is None:
        bounds = [(None, None)] * n
    has_rows = A.shape[0] > 0
    tol = max(tol, 1e-10)  # piso aceito pelo HiGHS
    return linprog(
        c,
        A_ub=A if has_rows else None,
        b_ub=b if has_rows else None,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": tol, "dual_feasibility_tolerance": tol},
    )


def is_empty(P: HPolytope, tol: float = TOL_LP) -> bool:
    res = _linprog(np.zeros(P.n), P.C, P.d, tol)
    if res.status == 0:
        return False
    if res.status == 2:
        return True
    raise LPFailure(f"Teste de vazio falhou (status {res.status}: {res.message})")


def solve_lp(objective: Sequence[float], P: HPolytope, sense: str = "min", tol: float = TOL_LP) -> LPResult:
    """Otimiza objective·x sobre P. `objective` do resultado é sempre objective·x."""
    c = np.asarray(objective, dtype=float).reshape(-1)
    if c.shape[0] != P.n:
        raise DimensionMismatch(f"Objetivo de tamanho {c.shape[0]} para polítopo de dimensão {P.n}.")
    if sense not in ("min", "max"):
        raise ValueError(f"Sentido '{sense}' inválido (use 'min' ou 'max').")
    sign = 1.0 if sense == "min" else -1.0
    res = _linprog(sign * c, P.C, P.d, tol)
    if res.status == 0:
        point = np.asarray(res.x, dtype=float)
        return LPResult(OPTIMAL, point, float(c @ point))
    if res.status == 3:
        return LPResult(UNBOUNDED)
    if res.status == 2:
        # o HiGHS às vezes só sabe dizer "inviável ou ilimitado"
        if np.any(c) and not is_empty(P, tol):
            return LPResult(UNBOUNDED)
        return LPResult(INFEASIBLE)
    raise LPFailure(f"PL terminou com status {res.status}: {res.message}")


def chebyshev_center(P: HPolytope, tol: float = TOL_LP) -> Tuple[np.ndarray, float]:
    """Centro e raio da maior bola contida em P (um PL em (x, r))."""
    norms = np.linalg.norm(P.C, axis=1)
    A = np.hstack([P.C, norms[:, None]])
    c = np.zeros(P.n + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * P.n + [(0.0, None)]
    res = _linprog(c, A, P.d, tol, bounds)
    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return x[:-1], max(0.0, float(x[-1]))
    if res.status == 3:
        raise UnboundedPolytope("Raio de Chebyshev ilimitado.")
    if res.status == 2:
        if is_empty(P, tol):
            raise EmptyPolytope("Centro de Chebyshev de um polítopo vazio.")
        raise UnboundedPolytope("Raio de Chebyshev ilimitado.")
    raise LPFailure(f"PL de Chebyshev terminou com status {res.status}: {res.message}")


def chebyshev_radius(P: HPolytope, tol: float = TOL_LP) -> float:
    """Como chebyshev_center, mas devolve -1 para vazio em vez de levantar."""
    try:
        return chebyshev_center(P, tol)[1]
    except EmptyPolytope:
        return -1.0


def is_fulldim(P: HPolytope, tol_radius: float = TOL_RADIUS) -> bool:
    return chebyshev_radius(P) > tol_radius


# -------------------------
# Construção
# -------------------------
def intersect(P: HPolytope, Q: HPolytope) -> HPolytope:
    if P.n != Q.n:
        raise DimensionMismatch(f"Interseção entre dimensões {P.n} e {Q.n}.")
    return HPolytope(np.vstack([P.C, Q.C]), np.concatenate([P.d, Q.d]))


def intersect_halfspace(P: HPolytope, a: Sequence[float], b: float, side: str = "<=") -> HPolytope:
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape[0] != P.n:
        raise DimensionMismatch(f"Semiespaço de dimensão {a.shape[0]} em polítopo de dimensão {P.n}.")
    if side == "<=":
        row, rhs = a, float(b)
    elif side == ">=":
        row, rhs = -a, -float(b)
    else:
        raise ValueError(f"Lado '{side}' inválido (use '<=' ou '>=').")
    return HPolytope(np.vstack([P.C, row]), np.append(P.d, rhs), open=P.open)


def irredundant_rows(P: HPolytope, tol: float = TOL_LP) -> List[int]:
    """Índices das linhas que não são implicadas pelas demais (um PL por linha)."""
    if P.m == 0:
        return []
    norms = np.linalg.norm(P.C, axis=1)
    zero = norms <= _ZERO_ROW
    if np.any(zero & (P.d < -tol)) or is_empty(P, tol):
        return list(range(P.m))  # vazio, nada a reduzir

    # duplicatas exatas (após normalização) saem sem PL
    kept: List[int] = []
    seen: List[np.ndarray] = []
    for i in range(P.m):
        if zero[i]:
            continue
        key = np.append(P.C[i], P.d[i]) / norms[i]
        if any(np.allclose(key, other, atol=1e-12, rtol=0.0) for other in seen):
            continue
        seen.append(key)
        kept.append(i)

    for i in list(kept):
        others = [j for j in kept if j != i]
        if not others:
            continue
        Q = HPolytope(P.C[others], P.d[others])
        res = solve_lp(P.C[i], Q, "max", tol)
        if res.status != OPTIMAL:
            continue
        if res.objective - P.d[i] <= tol * norms[i]:
            kept.remove(i)
    return kept


def remove_redundant(P: HPolytope, tol: float = TOL_LP) -> HPolytope:
    """Mesmo conjunto, sem as linhas redundantes."""
    kept = irredundant_rows(P, tol)
    if len(kept) == P.m:
        return P
    logger.debug("remove_redundant: %d -> %d linhas", P.m, len(kept))
    return HPolytope(P.C[kept], P.d[kept], open=P.open)


def faces(P: HPolytope, tol: float = TOL_LP) -> List[Face]:
    """Uma face por linha de P (use remove_redundant antes); faces vazias são descartadas."""
    closed = P.closure()
    out: List[Face] = []
    for i in range(P.m):
        geometry = intersect_halfspace(closed, closed.C[i], closed.d[i], ">=")
        if is_empty(geometry, tol):
            continue
        out.append(Face(P, i, geometry))
    return out


# -------------------------
# Vértices
# -------------------------
def _opposite_pairs(P: HPolytope, tol: float) -> List[int]:
    """Linhas que aparecem com a oposta (C_i = -C_j, d_i = -d_j): igualdades explícitas."""
    norms = _row_norms(P.C)
    Cn = P.C / norms[:, None]
    dn = P.d / norms
    rows = set()
    for i in range(P.m):
        for j in range(i + 1, P.m):
            if np.allclose(Cn[i], -Cn[j], atol=1e-12) and abs(dn[i] + dn[j]) <= tol:
                rows.update((i, j))
    return sorted(rows)


def _implicit_equalities(P: HPolytope, tol: float, tol_lp: float) -> List[int]:
    norms = _row_norms(P.C)
    rows = []
    for i in range(P.m):
        res = solve_lp(P.C[i], P, "min", tol_lp)
        if res.status == OPTIMAL and P.d[i] - res.objective <= tol * norms[i]:
            rows.append(i)
    return rows


def _affine_parametrization(C_eq: np.ndarray, d_eq: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """x = x0 + N y descreve {x | C_eq x = d_eq}."""
    if C_eq.shape[0] == 0:
        return np.zeros(n), np.eye(n)
    x0 = np.linalg.lstsq(C_eq, d_eq, rcond=None)[0]
    _, s, Vt = np.linalg.svd(C_eq)
    rank = int(np.sum(s > 1e-9 * max(1.0, s[0])))
    return x0, Vt[rank:].T


def _active_set_vertices(A: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    m, k = A.shape
    if m < k:
        return np.zeros((0, k))
    combos = np.array(list(itertools.combinations(range(m), k)), dtype=int)
    M = A[combos]
    rhs = b[combos]
    dets = np.linalg.det(M)
    hadamard = np.prod(np.linalg.norm(M, axis=2), axis=1)
    ok = np.abs(dets) > 1e-10 * np.maximum(hadamard, _ZERO_ROW)
    if not np.any(ok):
        return np.zeros((0, k))
    Y = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
    slack = (Y @ A.T - b) / _row_norms(A)
    return Y[np.all(slack <= tol, axis=1)]


def _qhull_vertices(A: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    center, radius = chebyshev_center(HPolytope(A, b))
    if radius <= TOL_RADIUS:
        return _active_set_vertices(A, b, tol)
    halfspaces = np.hstack([A, -b[:, None]])
    try:
        return HalfspaceIntersection(halfspaces, center).intersections
    except QhullError as e:
        logger.warning("Aviso: qhull falhou (%s); usando conjuntos ativos.", e)
        return _active_set_vertices(A, b, tol)


def _unique_rows(X: np.ndarray, tol: float) -> np.ndarray:
    out: List[np.ndarray] = []
    for x in X:
        scale = max(1.0, float(np.max(np.abs(x))))
        if not any(np.max(np.abs(x - y)) <= tol * scale for y in out):
            out.append(x)
    if not out:
        return np.zeros((0, X.shape[1]))
    U = np.array(out)
    order = np.lexsort(np.round(U, 9).T[::-1])
    return U[order]


def vertices(P: HPolytope, tol: float = TOL_FACE, tol_lp: float = TOL_LP) -> VPolytope:
    """Conjunto exato de vértices de um polítopo limitado (inclusive de dimensão menor, como faces)."""
    n = P.n
    if P.m == 0:
        raise UnboundedPolytope("Polítopo sem restrições é ilimitado.")
    closed = P.closure()
    # limitação: basta olhar as direções coordenadas
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        for sense in ("min", "max"):
            res = solve_lp(e, closed, sense, tol_lp)
            if res.status == INFEASIBLE:
                return VPolytope(np.zeros((0, n)))
            if res.status == UNBOUNDED:
                raise UnboundedPolytope(f"Direção de recessão encontrada ao longo de x_{k + 1}.")

    eq = _opposite_pairs(closed, tol)
    x0, N = _affine_parametrization(closed.C[eq], closed.d[eq], n)
    rest = [i for i in range(closed.m) if i not in set(eq)]
    if N.shape[1] > 0:
        reduced = HPolytope(closed.C[rest] @ N, closed.d[rest] - closed.C[rest] @ x0)
        if chebyshev_radius(reduced, tol_lp) <= TOL_RADIUS:
            eq = _implicit_equalities(closed, tol, tol_lp)
            x0, N = _affine_parametrization(closed.C[eq], closed.d[eq], n)
            rest = [i for i in range(closed.m) if i not in set(eq)]

    k = N.shape[1]
    if k == 0:
        Y = np.zeros((1, 0))
    else:
        A = closed.C[rest] @ N
        b = closed.d[rest] - closed.C[rest] @ x0
        # linhas paralelas ao casco afim não restringem y
        live = np.linalg.norm(A, axis=1) > 1e-12
        A, b = A[live], b[live]
        if k == 1:
            a = A[:, 0]
            lo = np.max(b[a < 0] / a[a < 0]) if np.any(a < 0) else -np.inf
            hi = np.min(b[a > 0] / a[a > 0]) if np.any(a > 0) else np.inf
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise UnboundedPolytope("Segmento ilimitado.")
            Y = np.array([[lo], [hi]]) if hi > lo else np.array([[0.5 * (lo + hi)]])
        elif k <= ACTIVE_SET_MAX_DIM and comb(A.shape[0], k) <= ACTIVE_SET_MAX_COMBINATIONS:
            Y = _active_set_vertices(A, b, tol)
        else:
            Y = _qhull_vertices(A, b, tol)

    X = x0 + Y @ N.T if k > 0 else x0[None, :]
    X = X[closed.contains_points(X, tol=10 * tol)]
    return VPolytope(_unique_rows(X, tol))


# -------------------------
# Auxiliares
# -------------------------
def is_subset(P: HPolytope, Q: HPolytope, tol: float = TOL_FACE) -> bool:
    """P ⊆ Q (fechos), um PL por linha de Q."""
    if P.n != Q.n:
        raise DimensionMismatch(f"Inclusão entre dimensões {P.n} e {Q.n}.")
    Pc = P.closure()
    if is_empty(Pc):
        return True
    norms = _row_norms(Q.C)
    for i in range(Q.m):
        res = solve_lp(Q.C[i], Pc, "max")
        if res.status == UNBOUNDED:
            return False
        if res.status == OPTIMAL and res.objective - Q.d[i] > tol * norms[i]:
            return False
    return True


def same_set(P: HPolytope, Q: HPolytope, tol: float = TOL_FACE) -> bool:
    return is_subset(P, Q, tol) and is_subset(Q, P, tol)


def bounding_box(P: HPolytope) -> Tuple[np.ndarray, np.ndarray]:
    lower = np.empty(P.n)
    upper = np.empty(P.n)
    for k in range(P.n):
        e = np.zeros(P.n)
        e[k] = 1.0
        lo = solve_lp(e, P, "min")
        hi = solve_lp(e, P, "max")
        if INFEASIBLE in (lo.status, hi.status):
            raise EmptyPolytope("Caixa envolvente de um polítopo vazio.")
        if UNBOUNDED in (lo.status, hi.status):
            raise UnboundedPolytope(f"Polítopo ilimitado ao longo de x_{k + 1}.")
        lower[k], upper[k] = lo.objective, hi.objective
    return lower, upper


def volume(P: HPolytope) -> float:
    """Volume n-dimensional (0 para polítopos degenerados)."""
    V = vertices(P).vertices
    if V.shape[0] == 0:
        return 0.0
    if P.n == 1:
        return float(V.max() - V.min())
    if V.shape[0] <= P.n:
        return 0.0
    try:
        return float(ConvexHull(V).volume)
    except QhullError:
        return 0.0


def order_polygon(V: np.ndarray) -> np.ndarray:
    """Ordena vértices 2-D no sentido anti-horário em torno do centróide."""
    V = np.asarray(V, dtype=float)
    if V.shape[0] < 3:
        return V
    center = V.mean(axis=0)
    angles = np.arctan2(V[:, 1] - center[1], V[:, 0] - center[0])
    return V[np.argsort(angles)]


def sample_uniform(P: HPolytope, count: int, rng: np.random.Generator, max_rounds: int = 1000) -> np.ndarray:
    """Amostragem por rejeição a partir da caixa envolvente."""
    lower, upper = bounding_box(P)
    out = []
    got = 0
    for _ in range(max_rounds):
        X = rng.uniform(lower, upper, size=(max(count, 16), P.n))
        X = X[P.contains_points(X, tol=0.0)]
        out.append(X)
        got += X.shape[0]
        if got >= count:
            break
    if got == 0:
        return np.zeros((0, P.n))
    return np.vstack(out)[:count]


def sample_convex_combinations(V: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Pontos aleatórios no casco convexo de V (pesos de Dirichlet)."""
    V = np.asarray(V, dtype=float)
    if V.shape[0] == 0:
        return np.zeros((0, V.shape[1]))
    weights = rng.dirichlet(np.ones(V.shape[0]), size=count)
    return weights @ V
