"""Opções de verificação: a família de tolerâncias e as flags de execução."""
from dataclasses import dataclass, field, asdict, replace
from typing import Any, Dict, Optional

from core.errors import ParseError

TOL_LP = 1e-9
TOL_FACE = 1e-7
TOL_RADIUS = 1e-8
TOL_MARGIN = 1e-9


@dataclass(frozen=True)
class Tolerances:
    lp: float = TOL_LP
    face: float = TOL_FACE
    radius: float = TOL_RADIUS
    margin: float = TOL_MARGIN

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], path: str = "options.tolerances") -> "Tolerances":
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ParseError(f"{path}: esperado objeto, recebido {type(data).__name__}")
        unknown = set(data) - {"lp", "face", "radius", "margin"}
        if unknown:
            raise ParseError(f"{path}: chaves desconhecidas {sorted(unknown)}")
        values = {}
        for key, value in data.items():
            try:
                values[key] = float(value)
            except (TypeError, ValueError):
                raise ParseError(f"{path}.{key}: esperado número, recebido {value!r}")
            if values[key] < 0:
                raise ParseError(f"{path}.{key}: tolerância negativa")
        return cls(**values)


@dataclass(frozen=True)
class VerifyOptions:
    tolerances: Tolerances = field(default_factory=Tolerances)
    prune: bool = True
    early_exit: bool = False
    seed: int = 0
    threads: int = 1
    # Amostras Monte-Carlo por face para detectar buracos de cobertura
    coverage_probes: int = 32

    def with_overrides(self, **kwargs) -> "VerifyOptions":
        """Aplica apenas os valores que não são None (flags da CLI)."""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["tolerances"] = self.tolerances.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]], path: str = "options") -> "VerifyOptions":
        if data is None:
            return cls()
        if not isinstance(data, dict):
            raise ParseError(f"{path}: esperado objeto, recebido {type(data).__name__}")
        known = {"tolerances", "prune", "early_exit", "seed", "threads", "coverage_probes"}
        unknown = set(data) - known
        if unknown:
            raise ParseError(f"{path}: chaves desconhecidas {sorted(unknown)}")
        kwargs: Dict[str, Any] = {"tolerances": Tolerances.from_dict(data.get("tolerances"), f"{path}.tolerances")}
        for key in ("prune", "early_exit"):
            if key in data:
                if not isinstance(data[key], bool):
                    raise ParseError(f"{path}.{key}: esperado booleano")
                kwargs[key] = data[key]
        for key in ("seed", "threads", "coverage_probes"):
            if key in data:
                if isinstance(data[key], bool) or not isinstance(data[key], int):
                    raise ParseError(f"{path}.{key}: esperado inteiro")
                kwargs[key] = data[key]
        if kwargs.get("threads", 1) < 1:
            raise ParseError(f"{path}.threads: deve ser >= 1")
        return cls(**kwargs)
