"""
svg_regions.py - Desenho 2-D da segmentação em SVG (e PNG via cairosvg).

Cada região é um polígono colorido pela hash do seu padrão de ativação; S
aparece contornado em preto, as regiões podadas em cinza, os obstáculos em
vermelho e os vértices que violam a condição de invariância com um marcador.
"""
import colorsys
import hashlib
import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core.errors import NotPlottable
from core.geometry import HPolytope, bounding_box, order_polygon, vertices
from core.invariance import Verdict
from core.problem import ProblemFile
from core.segmentation import LinearRegion

logger = logging.getLogger(__name__)

CANVAS_SIZE = 800
MARGIN = 40
MARKER_RADIUS = 5
OBSTACLE_COLOR = "#dc2626"
VIOLATION_COLOR = "#111827"
MARGINAL_COLOR = "#f59e0b"
PRUNED_COLOR = "#e5e7eb"


def pattern_color(pattern) -> str:
    """Cor estável por padrão: matiz tirada do md5 da representação do padrão."""
    digest = hashlib.md5(repr(tuple(tuple(layer) for layer in pattern)).encode("utf-8")).digest()
    hue = digest[0] / 255.0
    light = 0.55 + 0.25 * digest[1] / 255.0
    r, g, b = colorsys.hls_to_rgb(hue, light, 0.65)
    return "#{:02x}{:02x}{:02x}".format(int(r * 255), int(g * 255), int(b * 255))


class _Frame:
    """Converte coordenadas do estado para pixels (eixo y para cima)."""

    def __init__(self, lower: np.ndarray, upper: np.ndarray):
        span = np.maximum(upper - lower, 1e-12)
        self.lower = lower
        self.scale = (CANVAS_SIZE - 2 * MARGIN) / float(span.max())
        self.width = int(round(2 * MARGIN + span[0] * self.scale))
        self.height = int(round(2 * MARGIN + span[1] * self.scale))

    def __call__(self, x: float, y: float) -> Tuple[float, float]:
        px = MARGIN + (x - self.lower[0]) * self.scale
        py = self.height - MARGIN - (y - self.lower[1]) * self.scale
        return round(px, 3), round(py, 3)

    def points(self, V: np.ndarray) -> str:
        return " ".join("{},{}".format(*self(x, y)) for x, y in order_polygon(V))


def _polygon(P: HPolytope) -> np.ndarray:
    return vertices(P.closure()).vertices


def generate_svg_text(
    S: HPolytope,
    regions: Sequence[LinearRegion],
    obstacles: Sequence[HPolytope] = (),
    verdict: Optional[Verdict] = None,
    pruned: Sequence[LinearRegion] = (),
) -> str:
    if S.n != 2:
        raise NotPlottable(f"Só é possível desenhar domínios 2-D (n = {S.n}).")
    frame = _Frame(*bounding_box(S))
    w, h = frame.width, frame.height

    svg = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    svg.append(f'<rect x="0" y="0" width="{w}" height="{h}" fill="white" />')

    svg.append('<g id="regions">')
    for region in regions:
        V = _polygon(region.polytope)
        if V.shape[0] < 3:
            continue
        svg.append(
            f'<polygon class="region" data-id="{region.id}" points="{frame.points(V)}" '
            f'fill="{pattern_color(region.pattern)}" stroke="#475569" stroke-width="0.5" />'
        )
    svg.append('</g>')

    # regiões podadas em cinza, sem refinar além da camada em que pararam
    svg.append('<g id="pruned">')
    for region in pruned:
        V = _polygon(region.polytope)
        if V.shape[0] < 3:
            continue
        svg.append(
            f'<polygon class="pruned" data-id="{region.id}" points="{frame.points(V)}" '
            f'fill="{PRUNED_COLOR}" stroke="#94a3b8" stroke-width="0.5" />'
        )
    svg.append('</g>')

    svg.append('<g id="obstacles">')
    for O in obstacles:
        svg.append(
            f'<polygon class="obstacle" points="{frame.points(_polygon(O))}" '
            f'fill="{OBSTACLE_COLOR}" fill-opacity="0.6" stroke="{OBSTACLE_COLOR}" stroke-width="2" />'
        )
    svg.append('</g>')

    svg.append(f'<polygon id="safe-set" points="{frame.points(_polygon(S))}" fill="none" stroke="black" stroke-width="2" />')

    if verdict is not None:
        # um marcador por vértice, mesmo quando ele viola várias faces
        for cls, color, items in (("marginal", MARGINAL_COLOR, verdict.marginal),
                                  ("violation", VIOLATION_COLOR, verdict.violations)):
            seen: Dict[Tuple[float, float], None] = {}
            for item in items:
                seen.setdefault((round(float(item.vertex[0]), 9), round(float(item.vertex[1]), 9)), None)
            svg.append(f'<g id="{cls}">')
            for x, y in seen:
                cx, cy = frame(x, y)
                svg.append(
                    f'<circle class="{cls}" data-x="{x!r}" data-y="{y!r}" cx="{cx}" cy="{cy}" '
                    f'r="{MARKER_RADIUS}" fill="{color}" stroke="white" stroke-width="1" />'
                )
            svg.append('</g>')

    svg.append('</svg>')
    return '\n'.join(svg)


def plot_regions(
    problem: ProblemFile,
    regions: Sequence[LinearRegion],
    verdict: Optional[Verdict],
    out_path: str,
    pruned: Sequence[LinearRegion] = (),
) -> str:
    """Grava SVG, ou PNG quando out_path termina em .png. Devolve o texto SVG."""
    svg_text = generate_svg_text(problem.safe_set, regions, problem.obstacles, verdict, pruned)
    if out_path.lower().endswith(".png"):
        try:
            import cairosvg
        except ImportError:
            fallback = out_path[:-4] + ".svg"
            logger.warning("Aviso: a biblioteca 'cairosvg' não está instalada; gravando SVG em %s.", fallback)
            out_path = fallback
        else:
            cairosvg.svg2png(bytestring=svg_text.encode("utf-8"), write_to=out_path)
            logger.info("PNG salvo em %s", out_path)
            return svg_text
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(svg_text)
    logger.info("SVG salvo em %s", out_path)
    return svg_text
