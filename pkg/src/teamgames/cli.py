"""Command-line entry point: ``teamgames {run,sweep,stability,presets}``.

Exit codes: 0 on success (non-convergence is a finding, not a failure),
2 for configuration errors, 3 for internal numeric errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import NumericError, TeamGameError
from .experiments import PRESETS, ConfigError, cmd_run, cmd_stability, cmd_sweep, preset

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teamgames", description="Two-team zero-sum game dynamics experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="JSON experiment config")
        src.add_argument("--preset", help="name of a compiled preset (see 'presets')")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", type=Path, default=Path(out_default), help="output directory")

    common(sub.add_parser("run", help="simulate the configured methods"), "out/run")
    sweep = sub.add_parser("sweep", help="run one method on many random games")
    common(sweep, "out/sweep")
    sweep.add_argument("--jobs", type=int, default=1, help="parallel games")
    sweep.add_argument("--n-games", type=int, help="override the number of games")
    common(sub.add_parser("stability", help="spectral stability report at a point"), "out/stability")
    sub.add_parser("presets", help="list compiled presets")
    return parser


def _load(args) -> tuple[dict, Path | None]:
    if args.preset is not None:
        return preset(args.preset), None
    if not args.config.exists():
        raise ConfigError(f"config file {args.config} does not exist")
    try:
        doc = json.loads(args.config.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return doc, args.config.parent


def _print_run(doc: dict) -> None:
    for m in doc["methods"]:
        if m["status"] == "diverged":
            print(f"{m['method']:>5}  diverged at step {m['diverged_at']}  converged=False")
            continue
        extra = f"  param_err={m['parameter_error']:.3e}" if "parameter_error" in m else ""
        gap = m["final_ne_gap"]
        gap_txt = "n/a" if gap is None else f"{gap:.3e}"
        avg = m["final_avg_ne_gap"]
        avg_txt = "n/a" if avg is None else f"{avg:.3e}"
        print(
            f"{m['method']:>5}  {m['reason']:<22} steps={m['n_steps']:<7} ne_gap={gap_txt}"
            f"  avg_ne_gap={avg_txt}{extra}  converged={m['converged']}"
        )


def _print_stability(doc: dict) -> None:
    rep = doc["report"]
    print("H eigenvalues:", ", ".join(f"{re:+.6g}{im:+.6g}j" for re, im in rep["eigenvalues"]))
    for method, info in rep["jacobian_spectra"].items():
        print(f"  rho(J_{method}) = {info['spectral_radius']:.6f} at eta={info['eta']}")
    if "kpv" in doc:
        k = doc["kpv"]
        print(f"  rho(J_KPV) = {k['spectral_radius']:.6f} at eta={k['eta']}, k={k['k']}, p={k['p']}")
    print(f"alpha={rep['alpha']} beta={rep['beta']} condition_holds={rep['condition_holds']}"
          f" k_interval={rep['k_interval']} E_empty={rep['e_empty']}")
    if rep["search"] is not None:
        s = rep["search"]
        print(f"certified ({rep['chart']} chart): eta={s['eta']:.4g} k={s['k']:.4g} p={s['p']:.4g}"
              f" rho={s['spectral_radius']:.6f}")
    ws = doc.get("weakly_stable")
    if ws is not None:
        print(f"weakly stable: {ws['stable']}  witness={ws['witness']}")
    for w in doc.get("warnings", []):
        print("warning:", w)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name, cfg in PRESETS.items():
                print(f"{name:<12} {cfg.get('description', '')}")
            return EXIT_OK
        config, base_dir = _load(args)
        if args.seed is not None:
            config["seed"] = args.seed
        if args.command == "run":
            doc = cmd_run(config, args.out, base_dir)
            _print_run(doc)
        elif args.command == "sweep":
            if args.n_games is not None:
                config["n_games"] = args.n_games
            stats = cmd_sweep(config, args.out, jobs=args.jobs)
            frac = stats["fraction_converged"]
            print(f"games={stats['n_games']} fraction_converged={frac} "
                  f"median_final_ne_gap={stats['median_final_ne_gap']} wall_clock={stats['wall_clock']:.1f}s")
        else:
            doc = cmd_stability(config, args.out, base_dir)
            _print_stability(doc)
        print(f"outputs written to {args.out}")
        return EXIT_OK
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TeamGameError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
