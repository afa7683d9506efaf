"""Command-line front end: ``srtlab run | fixtures | analyze``.

Exit codes: 0 success, 1 invalid input or config, 2 runtime failure,
3 fixture failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, cascade, fixtures
from .config import POLICIES, ConfigError, RunManifest, load_config
from .domain import read_matrix_csv
from .sim import run_scenario, write_outputs

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_FIXTURE = 0, 1, 2, 3

log = logging.getLogger("srtlab")


def _override(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="srtlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario under one or more policies")
    run.add_argument("--config", type=Path, help="key=value scenario file")
    run.add_argument("--seed", type=int)
    run.add_argument("--policy", choices=[*POLICIES, "all"])
    run.add_argument("--out", type=Path, default=Path("runs"))
    run.add_argument("--set", dest="overrides", type=_override, action="append", default=[],
                     metavar="KEY=VALUE", help="override a config key (repeatable)")
    run.add_argument("--json", action="store_true", help="print the manifest as JSON")

    fx = sub.add_parser("fixtures", help="verify the worked reference examples")
    fx.add_argument("--json", action="store_true")

    an = sub.add_parser("analyze", help="systemic impact and ESL of an exposure matrix")
    an.add_argument("exposure", type=Path, help="CSV net exposure matrix")
    an.add_argument("equity", type=Path, help="CSV equities (one row or one column)")
    an.add_argument("--rho", type=float, default=None,
                    help="uniform first-failure probability (default 1/n)")
    an.add_argument("--json", action="store_true")
    return p


def cmd_run(args) -> int:
    overrides = dict(args.overrides)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.policy is not None:
        overrides["policies"] = args.policy
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        outputs, diagnostics = [], {}
        for policy in cfg.policies:
            result = run_scenario(cfg, policy)
            outputs += write_outputs(result, args.out)
            diagnostics["esl_conditional_factor"] = result.esl_conditional_factor
            diagnostics[f"{policy}_mean_esl"] = float(result.esl.mean())
            diagnostics[f"{policy}_final_cum_volume"] = int(result.cum_volume[-1])
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"error: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = RunManifest(
        None if args.config is None else str(args.config), cfg, str(args.out), __version__,
        cfg.seed, _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        tuple(outputs), diagnostics)
    (Path(args.out) / "manifest.json").write_text(manifest.render())
    if args.json:
        print(manifest.render(), end="")
    else:
        for name in outputs:
            print(Path(args.out) / name)
    return EXIT_OK


def cmd_fixtures(args) -> int:
    results = fixtures.run_all()
    if args.json:
        print(json.dumps([r._asdict() for r in results], indent=2))
    else:
        for r in results:
            print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FIXTURE


def cmd_analyze(args) -> int:
    try:
        A = cascade.check_antisymmetric(read_matrix_csv(args.exposure))
        E = read_matrix_csv(args.equity).ravel()
        if E.shape != (A.shape[0],):
            raise ValueError(f"{A.shape[0]} banks but {E.size} equities")
        n = A.shape[0]
        rho = np.full(n, 1.0 / n if args.rho is None else args.rho)
        si = cascade.systemic_impacts(A, E)
        esl = float(rho @ si)
        banks = list(range(n))
        table = cascade.delta_esl_table(banks, banks, A, E, rho)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    edges = [(i, j, float(table[i, j])) for i in range(n) for j in range(n) if i != j]
    if args.json:
        print(json.dumps({"systemic_impact": si.tolist(), "esl": esl,
                          "delta_esl": [list(e) for e in edges]}, indent=2))
        return EXIT_OK
    print("bank,systemic_impact")
    for i, v in enumerate(si):
        print(f"{i},{v:.17g}")
    print(f"esl,{esl:.17g}")
    print("lender,borrower,delta_esl")
    for i, j, d in edges:
        print(f"{i},{j},{d:.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": cmd_run, "fixtures": cmd_fixtures, "analyze": cmd_analyze}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
