import importlib.util
import os
import re
import tempfile
import unittest

from core.errors import NotPlottable
from core.invariance import verify
from core.segmentation import segment
from export.svg_regions import generate_svg_text, pattern_color, plot_regions
from tests.fixtures import (
    ROBOT_PRUNED_REGIONS, ROBOT_REGIONS, box, integrator, integrator_problem, linear_network,
    quadrant_network, robot_obstacles, robot_problem, square,
)

HAS_CAIROSVG = importlib.util.find_spec("cairosvg") is not None


def markers(svg: str, cls: str):
    found = re.findall(rf'<circle class="{cls}" data-x="([^"]+)" data-y="([^"]+)"', svg)
    return sorted((float(x), float(y)) for x, y in found)


class TestSvg(unittest.TestCase):

    def test_single_region(self):
        svg = generate_svg_text(square(), segment(linear_network(-1.0), square()))
        self.assertTrue(svg.startswith("<svg"))
        self.assertEqual(svg.count('class="region"'), 1)
        self.assertEqual(svg.count('id="safe-set"'), 1)
        self.assertNotIn("<circle", svg)

    def test_quadrants(self):
        svg = generate_svg_text(square(), segment(quadrant_network(), square()))
        self.assertEqual(svg.count('class="region"'), 4)

    def test_violations_marked_once_per_corner(self):
        verdict = verify(integrator(), linear_network(1.0), square())
        svg = generate_svg_text(square(), verdict.regions, verdict=verdict)
        self.assertEqual(markers(svg, "violation"), [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)])
        self.assertEqual(markers(svg, "marginal"), [])

    def test_obstacles(self):
        problem = robot_problem()
        svg = generate_svg_text(problem.safe_set, segment(problem.network, problem.safe_set), problem.obstacles)
        self.assertEqual(svg.count('class="obstacle"'), len(robot_obstacles()))

    def test_pruned_regions_fill_the_gaps(self):
        problem = robot_problem()
        verdict = verify(problem.system, problem.network, problem.safe_set, problem.obstacles, problem.options)
        pruned = verdict.tree.frozen()
        svg = generate_svg_text(problem.safe_set, verdict.regions, problem.obstacles, verdict, pruned)
        self.assertEqual(svg.count('class="region"'), ROBOT_PRUNED_REGIONS)
        self.assertEqual(svg.count('class="pruned"'), ROBOT_REGIONS - ROBOT_PRUNED_REGIONS)

    def test_three_dimensions_not_plottable(self):
        cube = box([-1, -1, -1], [1, 1, 1])
        with self.assertRaises(NotPlottable):
            generate_svg_text(cube, [])

    def test_deterministic(self):
        regions = segment(quadrant_network(), square())
        self.assertEqual(generate_svg_text(square(), regions), generate_svg_text(square(), regions))
        self.assertEqual(pattern_color(((1, 2),)), pattern_color(((1, 2),)))
        self.assertRegex(pattern_color(((2, 2),)), r"^#[0-9a-f]{6}$")

    def test_plot_svg_file(self):
        problem = integrator_problem(1.0)
        verdict = verify(problem.system, problem.network, problem.safe_set)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "regioes.svg")
            text = plot_regions(problem, verdict.regions, verdict, path)
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read(), text)

    @unittest.skipUnless(HAS_CAIROSVG, "cairosvg não instalado")
    def test_plot_png_file(self):
        problem = integrator_problem(-1.0)
        verdict = verify(problem.system, problem.network, problem.safe_set)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "regioes.png")
            plot_regions(problem, verdict.regions, verdict, path)
            with open(path, "rb") as f:
                self.assertEqual(f.read(8), b"\x89PNG\r\n\x1a\n")


if __name__ == "__main__":
    unittest.main()
