import io
import json
import os
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout

from main import main
from tests.fixtures import (
    MINIMAL_PROBLEM_JSON, ROBOT_PRUNED_REGIONS, ROBOT_REGIONS, integrator_problem, robot_problem,
)


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.tmp, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def run_main(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_verify_safe(self):
        problem = self.write("seguro.json", MINIMAL_PROBLEM_JSON)
        report = os.path.join(self.tmp, "relatorio.json")
        code, out, _ = self.run_main("verify", problem, "--report", report)
        self.assertEqual(code, 0)
        self.assertIn("Veredito: SEGURO", out)
        with open(report, encoding="utf-8") as f:
            data = json.load(f)
        self.assertTrue(data["safe"])
        self.assertEqual(data["source"], problem)

    def test_verify_unsafe(self):
        problem = self.write("inseguro.json", integrator_problem(1.0).to_json())
        plot = os.path.join(self.tmp, "regioes.svg")
        code, out, _ = self.run_main("verify", problem, "--no-prune", "--early-exit", "--plot", plot)
        self.assertEqual(code, 1)
        self.assertIn("Veredito: INSEGURO", out)
        self.assertTrue(os.path.exists(plot))

    def test_plot_includes_pruned_regions(self):
        problem = self.write("robo.json", robot_problem().to_json())
        plot = os.path.join(self.tmp, "regioes.svg")
        code, _, _ = self.run_main("verify", problem, "--plot", plot)
        self.assertEqual(code, 0)
        with open(plot, encoding="utf-8") as f:
            svg = f.read()
        self.assertEqual(svg.count('class="region"'), ROBOT_PRUNED_REGIONS)
        self.assertEqual(svg.count('class="pruned"'), ROBOT_REGIONS - ROBOT_PRUNED_REGIONS)

    def test_verify_errors(self):
        broken = self.write("quebrado.json", "{\"system\": ")
        code, _, err = self.run_main("verify", broken)
        self.assertEqual(code, 2)
        self.assertTrue(err.startswith("Erro:"))
        code, _, _ = self.run_main("verify", os.path.join(self.tmp, "nao_existe.json"))
        self.assertEqual(code, 2)

    def test_verify_wrong_section_types(self):
        base = json.loads(MINIMAL_PROBLEM_JSON)
        cases = {
            "camadas.json": ("network", {"layers": 5}, "network.layers"),
            "tolerancias.json": ("options", {"tolerances": ["lp"]}, "options.tolerances"),
            "opcoes.json": ("options", [1, 2], "options"),
        }
        for name, (key, value, path) in cases.items():
            with self.subTest(file=name):
                data = dict(base, **{key: value})
                code, _, err = self.run_main("verify", self.write(name, json.dumps(data)))
                self.assertEqual(code, 2)
                self.assertIn(path, err)

    def test_bench(self):
        spec = self.write("bench.json", json.dumps({"architectures": ["2x4^1x2"], "seed": 0}))
        output = os.path.join(self.tmp, "tabela.json")
        code, out, _ = self.run_main("bench", "--mode", "width", "--spec", spec, "--output", output)
        self.assertEqual(code, 0)
        self.assertIn("| 2x4^1x2 | 4 | 22 |", out)
        with open(output, encoding="utf-8") as f:
            self.assertEqual(json.load(f)["mode"], "width")

    def test_simulate(self):
        problem = self.write("inseguro.json", integrator_problem(1.0).to_json())
        output = os.path.join(self.tmp, "trajetoria.json")
        code, out, _ = self.run_main("simulate", problem, "--x0", "0.5", "0.5", "--horizon", "2", "--output", output)
        self.assertEqual(code, 1)
        self.assertIn("Evento: left_safe_set", out)
        with open(output, encoding="utf-8") as f:
            self.assertIsNotNone(json.load(f)["exit_event"])

        safe = self.write("seguro.json", MINIMAL_PROBLEM_JSON)
        code, _, _ = self.run_main("simulate", safe, "--x0", "0.5", "0.5", "--horizon", "1")
        self.assertEqual(code, 0)
        code, _, err = self.run_main("simulate", safe, "--x0", "0.5")
        self.assertEqual(code, 2)
        self.assertIn("--x0", err)


if __name__ == "__main__":
    unittest.main()
