#!/usr/bin/env python3
"""
main.py - Linha de comando do verificador de invariância.

    python main.py verify problema.json [--no-prune] [--early-exit] [--plot regioes.svg] [--report relatorio.json]
    python main.py bench --mode width --spec bench.json [--output tabela.md]
    python main.py simulate problema.json --x0 4.9 0 --horizon 10 [--output trajetoria.json]

Códigos de saída: 0 seguro / sem escape, 1 inseguro / escape encontrado, 2 erro.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from core.bench import MODES, bench
from core.errors import VerifierError
from core.oracle import DEFAULT_STEP, simulate
from core.problem import load_problem
from core.report import EXIT_ERROR, EXIT_SAFE, EXIT_UNSAFE, run_verify
from export.svg_regions import plot_regions

logger = logging.getLogger("main")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Verificação de invariância de sistemas lineares com controladores PWA (redes neurais)."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v para INFO, -vv para DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="verifica um arquivo de problema")
    p.add_argument("problem")
    prune = p.add_mutually_exclusive_group()
    prune.add_argument("--prune", dest="prune", action="store_true", default=None)
    prune.add_argument("--no-prune", dest="prune", action="store_false")
    p.add_argument("--early-exit", action="store_true", default=None, help="para na primeira violação")
    p.add_argument("--plot", help="grava a segmentação (.svg ou .png; apenas 2-D)")
    p.add_argument("--report", help="grava o relatório JSON")
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)

    b = sub.add_parser("bench", help="tabela de escalabilidade")
    b.add_argument("--mode", choices=MODES, required=True)
    b.add_argument("--spec", required=True, help="arquivo JSON com seed, architectures, ...")
    b.add_argument("--output", help="grava a tabela (.md) ou o JSON (.json)")
    b.add_argument("--threads", type=int, default=1)

    s = sub.add_parser("simulate", help="simula uma trajetória da malha fechada")
    s.add_argument("problem")
    s.add_argument("--x0", type=float, nargs="+", required=True)
    s.add_argument("--horizon", type=float, default=10.0)
    s.add_argument("--step", type=float, default=DEFAULT_STEP)
    s.add_argument("--output", help="grava a trajetória em JSON")
    return parser


def cmd_verify(args) -> int:
    problem = load_problem(args.problem)
    report = run_verify(problem, prune=args.prune, early_exit=args.early_exit, threads=args.threads, seed=args.seed)
    for line in report.summary_lines():
        print(line)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(report.to_json())
        logger.info("Relatório salvo em %s", args.report)
    if args.plot:
        verdict = report.verdict
        pruned = verdict.tree.frozen() if verdict.tree is not None else []
        plot_regions(problem, verdict.regions, verdict, args.plot, pruned)
    return report.exit_code


def cmd_bench(args) -> int:
    with open(args.spec, "r", encoding="utf-8") as f:
        try:
            spec = json.load(f)
        except json.JSONDecodeError as e:
            raise VerifierError(f"{args.spec}: JSON inválido ({e.msg}, linha {e.lineno}, coluna {e.colno})")
    table = bench(args.mode, spec, threads=args.threads)
    text = table.to_markdown()
    print(text)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(table.to_json() if args.output.endswith(".json") else text + "\n")
    return EXIT_SAFE


def cmd_simulate(args) -> int:
    problem = load_problem(args.problem)
    if len(args.x0) != problem.n:
        raise VerifierError(f"--x0 tem {len(args.x0)} valores, o sistema tem {problem.n} estados.")
    trajectory = simulate(problem.system, problem.network, args.x0, args.horizon, args.step,
                          problem.safe_set, problem.obstacles)
    final = ", ".join(f"{v:.6g}" for v in trajectory.states[-1])
    print(f"Estado final em t = {trajectory.times[-1]:.6g}: ({final})")
    if trajectory.exit_event is not None:
        event = trajectory.exit_event
        where = f"face {event.face}" if event.face is not None else f"obstáculo {event.obstacle + 1}"
        print(f"Evento: {event.kind} em t = {event.time:.6g} ({where})")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            json.dump(trajectory.to_json(), f, indent=2, ensure_ascii=False)
    return EXIT_UNSAFE if trajectory.escaped else EXIT_SAFE


COMMANDS = {"verify": cmd_verify, "bench": cmd_bench, "simulate": cmd_simulate}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (VerifierError, ValueError, OSError) as e:
        print(f"Erro: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
