"""
Locally private bandit experiments, regret bounds and mechanism checks.

Subcommands: ``run``, ``bounds``, ``verify-ldp``, ``preset``.

Exit codes: 0 success, 1 invalid arguments or config, 2 LDP verification
failure, 3 degenerate environment (zero minimum gap) for bound commands.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bounds import DegenerateEnvironmentError, ts_bound, ucb_bound
from .harness import ENGINES, ExperimentConfig, fig2_config, run_experiment
from .mechanisms import DomainError, Mechanism, max_quadratic_b, parse_epsilon, verify_ldp_conditions, worst_case_ratio

EXIT_OK, EXIT_USAGE, EXIT_LDP_VIOLATION, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _epsilon_arg(text: str) -> float:
    try:
        return parse_epsilon(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _checkpoints_arg(text: str):
    if text in ("default", "geometric"):
        return None
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"checkpoints must be comma-separated integers, got {text!r}") from None


def _add_cell_flags(p: argparse.ArgumentParser, multi: bool = False) -> None:
    nargs = "+" if multi else None
    p.add_argument("--config", type=Path, help="experiment config file (JSON)")
    p.add_argument("--mechanism", nargs=nargs, choices=["linear", "quadratic", "exponential"])
    p.add_argument("--epsilon", nargs=nargs, type=_epsilon_arg, help="privacy budget (a positive number or 'inf')")
    p.add_argument("--b", type=float, help="quadratic shape parameter in [0, 2(e^eps - 1)]")
    p.add_argument("--agent", nargs=nargs, choices=["ts", "ucb"])
    p.add_argument("--horizon", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--checkpoints", type=_checkpoints_arg, help="comma-separated rounds, or 'default'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ldpbandit", description=__doc__.split("\n\n")[0].strip())
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate one or more experiment cells and write CSV + manifest")
    _add_cell_flags(run, multi=True)
    run.add_argument("--preset", choices=["fig2"], help="use a built-in environment instead of --config")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--jobs", type=int, default=None, help="worker processes (default: available CPUs)")
    run.add_argument("--engine", choices=ENGINES, default="numba")

    bounds = sub.add_parser("bounds", help="evaluate regret upper bounds for a config")
    _add_cell_flags(bounds)
    bounds.add_argument("--preset", choices=["fig2"])
    bounds.add_argument("--gamma", type=float, default=0.1)
    bounds.add_argument("--c0", type=float, default=1.0, help="constant used for the big-O remainder")
    bounds.add_argument("--form", choices=["linear", "nonlinear"], help="force the TS bound form")
    bounds.add_argument("--csv", type=Path, help="also write the report as CSV")

    verify = sub.add_parser("verify-ldp", help="check the LDP conditions and worst-case ratio of a mechanism")
    verify.add_argument("--mechanism", required=True, choices=["linear", "quadratic", "exponential"])
    verify.add_argument("--epsilon", required=True, type=_epsilon_arg)
    verify.add_argument("--b", type=float, default=0.0)
    verify.add_argument("--grid-points", type=int, default=1001)
    verify.add_argument("--json", action="store_true", help="print machine-readable records instead of text")

    preset = sub.add_parser("preset", help="write a built-in experiment config")
    preset.add_argument("name", choices=["fig2"])
    preset.add_argument("--out", type=Path, required=True)
    _add_cell_flags(preset)
    return parser


def _base_config(args) -> ExperimentConfig:
    if getattr(args, "config", None) is not None and getattr(args, "preset", None) is not None:
        raise UsageError("use either --config or --preset, not both")
    if getattr(args, "config", None) is not None:
        try:
            return ExperimentConfig.load(args.config)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from None
    if getattr(args, "preset", None) == "fig2" or getattr(args, "name", None) == "fig2":
        return fig2_config()
    raise UsageError("an environment is required: pass --config FILE or --preset fig2")


def _validate_b(cfg: ExperimentConfig) -> None:
    if cfg.mechanism == "quadratic" and math.isfinite(cfg.epsilon) and not 0 <= cfg.b <= max_quadratic_b(cfg.epsilon):
        raise UsageError(f"--b must lie in [0, {max_quadratic_b(cfg.epsilon):g}] at epsilon={cfg.epsilon:g}, got {cfg.b:g}")


def _single_overrides(args) -> dict:
    return dict(
        mechanism=args.mechanism,
        epsilon=args.epsilon,
        b=args.b,
        agent=args.agent,
        horizon=args.horizon,
        trials=args.trials,
        seed=args.seed,
        checkpoints=args.checkpoints,
    )


def _cmd_run(args, out) -> int:
    base = _base_config(args)
    mechanisms = args.mechanism or [base.mechanism]
    epsilons = args.epsilon or [base.epsilon]
    agents = args.agent or [base.agent]
    cells = []
    for mech, eps, agent in itertools.product(mechanisms, epsilons, agents):
        cfg = base.with_overrides(
            mechanism=mech, epsilon=eps, agent=agent, b=args.b, horizon=args.horizon,
            trials=args.trials, seed=args.seed, checkpoints=args.checkpoints,
        )
        _validate_b(cfg)
        cells.append(cfg)
    for cfg in cells:
        result = run_experiment(cfg, jobs=args.jobs, engine=args.engine)
        csv_path, manifest_path = result.write(args.out)
        print(
            f"{cfg.cell_name()}\ttrials={result.n_trials}\tT={cfg.horizon}\t"
            f"final_mean={result.final_mean:.6f}\tfinal_std={float(result.std[-1]):.6f}\t"
            f"csv={csv_path}\tmanifest={manifest_path}",
            file=out,
        )
    return EXIT_OK


def _cmd_bounds(args, out) -> int:
    cfg = _base_config(args).with_overrides(**_single_overrides(args))
    _validate_b(cfg)
    mech = cfg.mechanism_obj()
    env = cfg.environment()
    if cfg.agent == "ts":
        report = ts_bound(mech, env, cfg.horizon, gamma=args.gamma, c0=args.c0, form=args.form)
    else:
        report = ucb_bound(mech, env, cfg.horizon)
    print(report.to_text(), file=out)
    if args.csv is not None:
        args.csv.parent.mkdir(parents=True, exist_ok=True)
        args.csv.write_text(report.to_csv())
        print(f"csv: {args.csv}", file=out)
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    if args.grid_points < 2:
        raise UsageError("--grid-points must be at least 2")
    mech = Mechanism(args.mechanism, args.epsilon, args.b)
    report = verify_ldp_conditions(mech, args.grid_points)
    if mech.private:
        ratio = worst_case_ratio(mech, args.grid_points)
        ratio_ok = ratio <= math.exp(mech.epsilon) + 1e-9
    else:
        ratio, ratio_ok = math.inf, False
    ok = report.passed and ratio_ok
    if args.json:
        payload = {
            "mechanism": str(mech),
            "conditions": report.to_records(),
            "worst_case_ratio": None if math.isinf(ratio) else ratio,
            "ratio_bound": None if not mech.private else math.exp(mech.epsilon),
            "passed": ok,
        }
        print(json.dumps(payload, indent=2), file=out)
    else:
        print(report.to_text(), file=out)
        if mech.private:
            print(
                f"worst_case_ratio {'PASS' if ratio_ok else 'FAIL'}  value={ratio:.12g}  "
                f"bound=e^eps={math.exp(mech.epsilon):.12g}",
                file=out,
            )
        else:
            print("worst_case_ratio FAIL  value=inf  (epsilon=inf is not a finite privacy budget)", file=out)
        print(f"ldp: {'PASS' if ok else 'FAIL'}", file=out)
    return EXIT_OK if ok else EXIT_LDP_VIOLATION


def _cmd_preset(args, out) -> int:
    cfg = fig2_config().with_overrides(**_single_overrides(args))
    _validate_b(cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    cfg.save(args.out)
    print(f"wrote {args.out}", file=out)
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "bounds": _cmd_bounds, "verify-ldp": _cmd_verify, "preset": _cmd_preset}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"ldpbandit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateEnvironmentError as exc:
        print(f"ldpbandit: degenerate environment: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DomainError, ValueError, TypeError) as exc:
        print(f"ldpbandit: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
