"""
report.py - Relatório de verificação: documento JSON estável e resumo em texto.

Com a mesma entrada e a mesma semente o documento é idêntico byte a byte,
exceto pelo bloco "timings" (que pode ser omitido).
"""
import json
import logging
from dataclasses import dataclass
from typing import List, Optional

from core.config import VerifyOptions
from core.invariance import Verdict, verify
from core.problem import ProblemFile

logger = logging.getLogger(__name__)

TOOL = "pwa-invariance"
VERSION = "1.0.0"
REPORT_FORMAT_VERSION = 1

EXIT_SAFE = 0
EXIT_UNSAFE = 1
EXIT_ERROR = 2


@dataclass
class Report:
    verdict: Verdict
    options: VerifyOptions
    source: Optional[str] = None

    @property
    def region_count(self) -> int:
        return self.verdict.stats["regions"]

    @property
    def piece_count(self) -> int:
        return self.verdict.stats["pieces"]

    @property
    def vertex_count(self) -> int:
        return self.verdict.stats["vertices"]

    @property
    def exit_code(self) -> int:
        return EXIT_SAFE if self.verdict.safe else EXIT_UNSAFE

    def summary_lines(self) -> List[str]:
        v = self.verdict
        lines = [
            f"Veredito: {'SEGURO' if v.safe else 'INSEGURO'}",
            f"Regiões: {self.region_count} (por camada: {v.stats['regions_per_layer']})",
            f"Peças de fronteira: {self.piece_count} ({v.stats['pieces_checked']} checadas)",
            f"Vértices checados: {self.vertex_count}",
            f"Vértices marginais: {len(v.marginal)}",
        ]
        if v.violations:
            lines.append(f"Violações: {len(v.violations)}")
            for viol in v.violations[:10]:
                vertex = ", ".join(f"{x:.6g}" for x in viol.vertex)
                lines.append(f"  {viol.piece.label} v=({vertex}) margem={viol.margin:.6g}")
            if len(v.violations) > 10:
                lines.append(f"  ... e mais {len(v.violations) - 10}")
        if v.timings:
            lines.append(f"Tempo total: {v.timings['total']:.3f} s")
        return lines

    def to_dict(self, include_timings: bool = True) -> dict:
        v = self.verdict
        data = {
            "format_version": REPORT_FORMAT_VERSION,
            "tool": TOOL,
            "version": VERSION,
            "source": self.source,
            "seed": self.options.seed,
            "options": self.options.to_dict(),
            "safe": v.safe,
            "counts": {
                "regions": self.region_count,
                "regions_per_layer": list(v.stats["regions_per_layer"]),
                "pruned_per_layer": list(v.stats["pruned_per_layer"]),
                "pieces": self.piece_count,
                "pieces_checked": v.stats["pieces_checked"],
                "vertices": self.vertex_count,
                "marginal": len(v.marginal),
                "violations": len(v.violations),
            },
            "violations": [viol.to_dict() for viol in v.violations],
            "marginal": [viol.to_dict() for viol in v.marginal],
        }
        # resumo sem a linha de tempo
        data["summary"] = [line for line in self.summary_lines() if not line.startswith("Tempo")]
        if include_timings:
            data["timings"] = dict(v.timings)
        return data

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, ensure_ascii=False)


def run_verify(
    problem: ProblemFile,
    prune: Optional[bool] = None,
    early_exit: Optional[bool] = None,
    threads: Optional[int] = None,
    seed: Optional[int] = None,
) -> Report:
    """Opções do arquivo, sobrescritas pelas flags que não forem None."""
    options = problem.options.with_overrides(prune=prune, early_exit=early_exit, threads=threads, seed=seed)
    logger.info("Verificando %s (prune=%s, threads=%d)", problem.source or "<memória>", options.prune, options.threads)
    verdict = verify(problem.system, problem.network, problem.safe_set, problem.obstacles, options)
    return Report(verdict, options, problem.source)
