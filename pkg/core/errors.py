"""Exceções do verificador.

Todas herdam de `VerifierError`; as que descrevem entrada inválida também
herdam de `ValueError`, como as validações de `core/` sempre fizeram.
"""
from typing import Optional, Sequence


class VerifierError(Exception):
    """Raiz de todos os erros do verificador."""


class DimensionMismatch(VerifierError, ValueError):
    pass


class InputDimensionMismatch(DimensionMismatch):
    """Sistema e rede não encaixam (n_in != n ou n_out != m)."""


class PatternMismatch(DimensionMismatch):
    pass


class EmptyPolytope(VerifierError, ValueError):
    pass


class EmptyDomain(EmptyPolytope):
    pass


class UnboundedPolytope(VerifierError, ValueError):
    pass


class UnboundedPiece(UnboundedPolytope):
    pass


class LPFailure(VerifierError):
    """O solver de PL terminou sem status utilizável (limite de iterações, dificuldade numérica)."""


class NonContinuousActivation(VerifierError, ValueError):
    pass


class ScaleGuard(VerifierError, ValueError):
    pass


class NonFinite(VerifierError, ArithmeticError):
    pass


class ObstacleOutsideSafeSet(VerifierError, ValueError):
    pass


class NotPlottable(VerifierError, ValueError):
    pass


class CoverageGap(VerifierError):
    """Um ponto da fronteira não pertence a nenhuma região linear."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None, face: Optional[str] = None):
        super().__init__(message)
        self.point = None if point is None else [float(v) for v in point]
        self.face = face


class ParseError(VerifierError, ValueError):
    """Arquivo de problema malformado; guarda linha/coluna quando o JSON é inválido."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        if line is not None:
            message = f"{message} (linha {line}, coluna {column})"
        super().__init__(message)
        self.line = line
        self.column = column
