"""Command-line front end: ``tpmcheck {verify,sample,search,sweep} SCENARIO``.

Exit codes: 0 success, 1 malformed input or arguments, 2 numerical
validation failure, 3 an observable undefined at a sampled outcome.
Elapsed wall-clock time goes to stderr only, so stdout/--out are byte-stable.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import report
from .errors import NumericalValidationError, ScenarioError, UndefinedObservableAtSample
from .protosearch import SearchBudget, search
from .sampler import OBSERVABLES, RngState, estimate
from .scenario import Scenario, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_UNDEFINED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _verify(args, scenario: Scenario) -> int:
    rep = report.verify_report(scenario)
    _emit(report.dumps(rep) if args.format == "json" else report.key_value_csv(rep), args.out)
    failed = [k for k, v in rep["checks"].items() if v is False]
    if failed:
        print(f"identity checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _sample(args, scenario: Scenario) -> int:
    if args.shots < 1:
        raise ScenarioError("--shots", "must be >= 1")
    t = scenario.tpm()
    names = OBSERVABLES if args.observable == "all" else (args.observable,)
    results = [estimate(t, name, args.shots, RngState(args.seed)) for name in names]
    if args.format == "json":
        text = report.dumps(report.sample_report(scenario, results, args.seed))
    else:
        text = report.to_csv(report.ESTIMATOR_COLUMNS, (report.estimator_row(r, args.seed) for r in results))
    _emit(text, args.out)
    return EXIT_OK


def _search(args, scenario: Scenario) -> int:
    if args.starts < 1:
        raise ScenarioError("--starts", "must be >= 1")
    if args.max_iter < 100:
        raise ScenarioError("--max-iter", "must be >= 100")
    hi, _, hf = scenario.realize()
    result = search(
        hi,
        scenario.beta,
        hf,
        scenario.conventions,
        scenario.thermalized,
        SearchBudget(args.starts, args.max_iter),
        seed=args.seed,
    )
    rep = report.search_report(scenario, result, args.seed, args.max_iter)
    _emit(report.dumps(rep) if args.format == "json" else report.key_value_csv(rep), args.out)
    return EXIT_OK


def _sweep(args, scenario: Scenario) -> int:
    if args.param != "beta":
        raise ScenarioError("--param", "only 'beta' can be swept")
    if args.steps < 2:
        raise ScenarioError("--steps", "must be >= 2")
    if not (0 < args.start < args.stop):
        raise ScenarioError("--from/--to", "need 0 < from < to")
    # Validate once before the grid so numerical failures surface immediately.
    scenario.realize()
    rows = [report.sweep_row(scenario.with_beta(float(b))) for b in np.linspace(args.start, args.stop, args.steps)]
    if args.format == "csv":
        text = report.to_csv(report.SWEEP_COLUMNS, rows)
    else:
        rep = {
            "tool": {"name": report.TOOL_NAME, "version": report.__version__},
            "scenario": scenario.to_json(),
            "rows": [dict(zip(report.SWEEP_COLUMNS, r)) for r in rows],
        }
        text = report.dumps(rep)
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tpmcheck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, default_format="json"):
        p.add_argument("scenario", type=Path, help="scenario JSON file")
        p.add_argument("--format", choices=("json", "csv"), default=default_format)
        p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")

    p = sub.add_parser("verify", help="compute TPM statistics and check the identities")
    common(p)
    p.set_defaults(handler=_verify)

    p = sub.add_parser("sample", help="finite-shot Monte Carlo estimates")
    common(p)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--observable", choices=OBSERVABLES + ("all",), default="all")
    p.set_defaults(handler=_sample)

    p = sub.add_parser("search", help="minimize the pointwise information gap over unitaries")
    common(p)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_search)

    p = sub.add_parser("sweep", help="evaluate identities on a linear parameter grid")
    common(p, default_format="csv")
    p.add_argument("--param", default="beta")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(handler=_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        report.precision()
        if not 0 <= getattr(args, "seed", 0) < 2**64:
            raise ScenarioError("--seed", "expected a 64-bit unsigned integer")
        scenario = load_scenario(args.scenario)
        code = args.handler(args, scenario)
    except ScenarioError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalValidationError as exc:
        print(f"numerical validation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except UndefinedObservableAtSample as exc:
        print(f"sampling failed: {exc}", file=sys.stderr)
        return EXIT_UNDEFINED
    print(f"elapsed {time.perf_counter() - started:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
