"""
problem.py - Arquivo de problema (JSON, format_version 1).

Um problema junta o sistema ẋ = Ax + Bu, a rede controladora, o conjunto
seguro S = {x | Cx <= d}, os obstáculos e as opções de verificação. Toda a
validação é feita no carregamento: erros de sintaxe trazem linha e coluna,
erros de conteúdo trazem o caminho JSON (ex.: network.layers[1].b).
"""
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from core.config import VerifyOptions
from core.errors import (
    DimensionMismatch, InputDimensionMismatch, ObstacleOutsideSafeSet, ParseError, UnboundedPolytope,
)
from core.geometry import HPolytope, bounding_box, is_subset
from core.invariance import LinearSystem
from core.pwa_nn import Network

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def polytope_from_json(data, path: str, open: bool = False) -> HPolytope:
    """{"C": [[...]], "d": [...]} ou a forma de caixa {"lower": [...], "upper": [...]}."""
    if not isinstance(data, dict):
        raise ParseError(f"{path}: esperado objeto")
    box = "lower" in data or "upper" in data
    needed = ("lower", "upper") if box else ("C", "d")
    for key in needed:
        if key not in data:
            raise ParseError(f"{path}: falta a chave '{key}'")
    try:
        if box:
            return HPolytope.from_box(data["lower"], data["upper"], open=open)
        C = np.array(data["C"], dtype=float)
        d = np.array(data["d"], dtype=float)
    except DimensionMismatch as e:
        raise DimensionMismatch(f"{path}: {e}")
    except (TypeError, ValueError):
        raise ParseError(f"{path}: valores numéricos inválidos")
    if C.ndim != 2 or d.ndim != 1:
        raise DimensionMismatch(f"{path}: C deve ser matriz e d vetor")
    if C.shape[0] != d.shape[0]:
        raise DimensionMismatch(f"{path}: C tem {C.shape[0]} linhas mas d tem {d.shape[0]} entradas")
    return HPolytope(C, d, open=open)


@dataclass
class ProblemFile:
    system: LinearSystem
    network: Network
    safe_set: HPolytope
    obstacles: List[HPolytope] = field(default_factory=list)
    options: VerifyOptions = field(default_factory=VerifyOptions)
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def m(self) -> int:
        return self.system.m

    def validate(self):
        """Checa o encadeamento de dimensões, a limitação de S e O_k ⊂ S."""
        if self.network.n_in != self.n:
            raise InputDimensionMismatch(f"network: {self.network.n_in} entradas, o sistema tem {self.n} estados")
        if self.network.n_out != self.m:
            raise InputDimensionMismatch(f"network: {self.network.n_out} saídas, o sistema tem {self.m} entradas")
        if self.safe_set.n != self.n:
            raise DimensionMismatch(f"safe_set: dimensão {self.safe_set.n}, o sistema tem {self.n} estados")
        try:
            bounding_box(self.safe_set)
        except UnboundedPolytope as e:
            raise UnboundedPolytope(f"safe_set: {e}")
        tol = self.options.tolerances.face
        for k, O in enumerate(self.obstacles):
            if O.n != self.n:
                raise DimensionMismatch(f"obstacles[{k}]: dimensão {O.n}, o sistema tem {self.n} estados")
            if not is_subset(O, self.safe_set, tol):
                raise ObstacleOutsideSafeSet(f"obstacles[{k}]: o obstáculo não está contido em safe_set")
        if not self.obstacles:
            logger.debug("Problema sem obstáculos")

    def to_json(self) -> str:
        data = {
            "format_version": FORMAT_VERSION,
            "system": self.system.to_json(),
            "network": self.network.to_json(),
            "safe_set": self.safe_set.to_dict(),
            "obstacles": [O.to_dict() for O in self.obstacles],
            "options": self.options.to_dict(),
        }
        return json.dumps(data, indent=2, ensure_ascii=False)

    @classmethod
    def from_json(cls, json_str: str, source: Optional[str] = None) -> "ProblemFile":
        try:
            data = json.loads(json_str)
        except json.JSONDecodeError as e:
            raise ParseError(f"JSON inválido: {e.msg}", line=e.lineno, column=e.colno)
        if not isinstance(data, dict):
            raise ParseError("O problema deve ser um objeto JSON")

        version = data.get("format_version")
        if version is None:
            logger.warning("Aviso: 'format_version' ausente, assumindo %d.", FORMAT_VERSION)
        elif version != FORMAT_VERSION:
            raise ParseError(f"format_version: versão {version!r} não suportada (esperado {FORMAT_VERSION})")
        for key in ("system", "network", "safe_set"):
            if key not in data:
                raise ParseError(f"Falta a seção obrigatória '{key}'")
        known = {"format_version", "system", "network", "safe_set", "obstacles", "options"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"Seções desconhecidas: {sorted(unknown)}")

        obstacles_data = data.get("obstacles", [])
        if not isinstance(obstacles_data, list):
            raise ParseError("obstacles: esperado lista")
        problem = cls(
            system=LinearSystem.from_json(data["system"], "system"),
            network=Network.from_json(data["network"], "network"),
            safe_set=polytope_from_json(data["safe_set"], "safe_set"),
            obstacles=[polytope_from_json(o, f"obstacles[{k}]", open=True) for k, o in enumerate(obstacles_data)],
            options=VerifyOptions.from_dict(data.get("options"), "options"),
            source=source,
        )
        problem.validate()
        return problem


def load_problem(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    problem = ProblemFile.from_json(text, source=path)
    logger.info("Problema %s: n=%d, m=%d, %d camadas, %d obstáculos",
                path, problem.n, problem.m, problem.network.depth, len(problem.obstacles))
    return problem
