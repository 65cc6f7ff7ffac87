"""Experiment configs, compiled presets and the run/sweep/stability drivers.

Configs are plain JSON-compatible dicts. A ``game`` entry is either a family
spec (``{"family": "gmp", "omega": 0.5}``), a random spec
(``{"family": "random", "n": 2, "m": 2, "strategy_counts": 2, "seed": 0}``),
an inline game document, or ``{"file": "game.json"}``.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .dynamics import DynamicsConfig, Trajectory, run
from .errors import DivergenceError, DomainError, TeamGameError
from .games import (
    PolynomialGame,
    TeamGame,
    congestion_to_team_game,
    game_from_dict,
    load_game,
    make_gmp,
    make_matching_pennies,
    make_modified_gmp,
    make_multiplayer_matching_pennies,
    make_team_wgan,
    random_team_game,
)
from .games.congestion import CongestionGame
from .metrics import classify, ne_gap
from .stability import check_sufficient, dynamics_jacobian, is_weakly_stable, spectral_radius

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PRESETS",
    "preset",
    "build_game",
    "initial_point",
    "cmd_run",
    "cmd_sweep",
    "cmd_stability",
]

CONVERGED_TOL = 1e-2


class ConfigError(TeamGameError, ValueError):
    """The experiment configuration is malformed."""


# -- presets -------------------------------------------------------------------

_GMP_METHODS = [
    {"method": "GDA", "eta": 0.2},
    {"method": "OGDA", "eta": 0.1},
    {"method": "EG", "eta": 0.2},
    {"method": "OMWU", "eta": 0.2},
]

PRESETS: dict[str, dict[str, Any]] = {
    "gmp-figure": {
        "description": "GMP(1/2): four baselines drift away from the mixed equilibrium, KPV converges",
        "game": {"family": "gmp", "omega": 0.5},
        "methods": _GMP_METHODS + [{"method": "KPV", "eta": 0.05, "k": -1.1, "p": 0.3}],
        "init": {"type": "perturb", "radius": 0.1},
        "reference": "equilibrium",
        "max_iters": 100_000,
        "stride": 100,
        "seed": 0,
    },
    "wgan-figure": {
        "description": "Team-WGAN: GDA diverges, OGDA/EG/KPV recover the generator parameters",
        "game": {"family": "team_wgan", "mu": [1.0, -0.5], "pi1": 0.7},
        "methods": [
            {"method": "GDA", "eta": 0.05},
            {"method": "OGDA", "eta": 0.05},
            {"method": "EG", "eta": 0.05},
            {"method": "KPV", "eta": 0.05, "k": -0.5, "p": 0.1},
        ],
        "init": {"type": "perturb", "radius": 0.5},
        "reference": "equilibrium",
        "max_iters": 100_000,
        "stride": 100,
        "seed": 0,
    },
    "avg-iterate": {
        "description": "Modified GMP: the running average of every baseline misses the equilibrium",
        "game": {"family": "modified_gmp"},
        "methods": copy.deepcopy(_GMP_METHODS),
        "init": {"type": "random"},
        "max_iters": 100_000,
        "stride": 100,
        "seed": 0,
    },
    "sweep-2v2": {
        "description": "KPV on 100 random 2v2 games with two strategies per player",
        "n_games": 100,
        "shape": {"n": 2, "m": 2, "strategy_counts": 2},
        "method": {"method": "KPV", "eta": 0.05, "k": -1.2, "p": 0.02},
        "max_iters": 200_000,
        "seed": 0,
    },
}


def preset(name: str) -> dict[str, Any]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return copy.deepcopy(PRESETS[name])


# -- config parsing ------------------------------------------------------------


def build_game(spec: dict[str, Any], base_dir: Path | None = None):
    """Construct a game from a config ``game`` entry."""
    if not isinstance(spec, dict):
        raise ConfigError("game spec must be an object")
    try:
        if "file" in spec:
            path = Path(spec["file"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigError(f"game file {path} does not exist")
            game = load_game(path)
        elif "type" in spec:
            game = game_from_dict(spec)
        else:
            family = spec.get("family")
            if family == "gmp":
                game = make_gmp(float(spec.get("omega", 0.5)))
            elif family == "modified_gmp":
                game = make_modified_gmp()
            elif family == "multiplayer_matching_pennies":
                game = make_multiplayer_matching_pennies()
            elif family == "matching_pennies":
                game = make_matching_pennies()
            elif family == "team_wgan":
                game = make_team_wgan(spec["mu"], float(spec["pi1"]))
            elif family == "random":
                game = random_team_game(
                    int(spec.get("n", 2)), int(spec.get("m", 2)), spec.get("strategy_counts", 2), int(spec.get("seed", 0))
                )
            else:
                raise ConfigError(f"unknown game family {family!r}")
    except KeyError as exc:
        raise ConfigError(f"game spec is missing {exc.args[0]!r}") from exc
    except (DomainError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid game spec: {exc}") from exc
    if isinstance(game, CongestionGame):
        game = congestion_to_team_game(game)
    return game


def default_equilibrium(game) -> np.ndarray:
    """Reference point used by ``"equilibrium"``: uniform play, or the first WGAN branch."""
    if isinstance(game, PolynomialGame):
        return game.equilibria()[0]
    return game.domain.uniform()


def _resolve_point(game, spec) -> np.ndarray:
    if spec in (None, "equilibrium"):
        return default_equilibrium(game)
    if spec == "uniform":
        return game.domain.uniform()
    z = np.asarray(spec, dtype=np.float64)
    if z.shape != (game.dim,):
        raise ConfigError(f"point needs {game.dim} coordinates, got {z.size}")
    if game.domain.constrained and not game.domain.contains(z):
        raise ConfigError("point is not a feasible profile")
    return z


def initial_point(game, init: dict[str, Any], seed: int) -> np.ndarray | None:
    """Starting point for a run; ``None`` means "sample inside :func:`run`"."""
    kind = init.get("type", "random")
    if kind == "random":
        return None
    if kind == "point":
        return _resolve_point(game, init.get("z"))
    if kind == "perturb":
        radius = float(init.get("radius", 0.1))
        if not radius > 0:
            raise ConfigError("perturbation radius must be positive")
        center = _resolve_point(game, init.get("center", "equilibrium"))
        rng = np.random.default_rng(seed)
        return perturb(game, center, radius, rng)
    raise ConfigError(f"unknown init type {kind!r}")


def perturb(game, center: np.ndarray, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Random feasible point with ``||z - center||_inf < radius``.

    On simplices the displacement is kept sum-zero per player and shrunk
    until the point is feasible.
    """
    dom = game.domain
    delta = rng.uniform(-1.0, 1.0, dom.dim)
    if dom.constrained:
        for blk in dom.blocks(delta):
            blk -= blk.mean()
    peak = np.abs(delta).max()
    if peak > 0:
        delta *= radius * rng.uniform(0.1, 1.0) / peak
    z = center + delta
    while dom.constrained and z.min() < 0:
        delta *= 0.5
        z = center + delta
    return z


@dataclass
class ExperimentConfig:
    game: dict[str, Any]
    methods: list[dict[str, Any]]
    init: dict[str, Any] = field(default_factory=lambda: {"type": "random"})
    reference: Any = None
    max_iters: int = 10_000
    stride: int = 100
    tol: float = 1e-10
    patience: int = 100
    seed: int = 0
    description: str = ""

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if "game" not in doc:
            raise ConfigError("config needs a 'game' entry")
        methods = doc.get("methods")
        if not methods:
            raise ConfigError("config needs at least one entry in 'methods'")
        cfg = cls(
            game=doc["game"],
            methods=list(methods),
            init=dict(doc.get("init", {"type": "random"})),
            reference=doc.get("reference"),
            max_iters=int(doc.get("max_iters", 10_000)),
            stride=int(doc.get("stride", 100)),
            tol=float(doc.get("tol", 1e-10)),
            patience=int(doc.get("patience", 100)),
            seed=int(doc.get("seed", 0)),
            description=str(doc.get("description", "")),
        )
        if cfg.max_iters <= 0 or cfg.stride <= 0:
            raise ConfigError("max_iters and stride must be positive")
        return cfg

    def dynamics_config(self, entry: dict[str, Any], reference) -> DynamicsConfig:
        if "method" not in entry or "eta" not in entry:
            raise ConfigError("each method entry needs 'method' and 'eta'")
        try:
            return DynamicsConfig(
                method=entry["method"],
                eta=float(entry["eta"]),
                k=float(entry.get("k", 0.0)),
                p=float(entry.get("p", 0.0)),
                max_iters=int(entry.get("max_iters", self.max_iters)),
                tol=self.tol,
                patience=self.patience,
                stride=int(entry.get("stride", self.stride)),
                reference=reference,
            )
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc


# -- run -----------------------------------------------------------------------


def _converged(game, traj_final: np.ndarray, final_gap: float) -> bool:
    if isinstance(game, PolynomialGame):
        return game.parameter_error(traj_final) < CONVERGED_TOL
    return classify(final_gap, CONVERGED_TOL) == "converged"


def _finite_or_none(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


def run_method(game, cfg: ExperimentConfig, entry: dict[str, Any], z0, reference):
    """Run one method entry; returns ``(trajectory or None, summary dict)``."""
    dcfg = cfg.dynamics_config(entry, reference)
    start = time.perf_counter()
    summary: dict[str, Any] = {"method": dcfg.method, "eta": dcfg.eta}
    if dcfg.method == "KPV":
        summary.update(k=dcfg.k, p=dcfg.p)
    try:
        traj = run(game, None, dcfg, initial=z0, seed=cfg.seed)
    except DivergenceError as exc:
        summary.update(
            status="diverged", reason=str(exc), diverged_at=exc.step, converged=False,
            wall_clock=time.perf_counter() - start,
        )
        return None, summary
    final_gap = float(traj.ne_gap[-1])
    summary.update(
        status="ok",
        reason=traj.reason,
        n_steps=traj.n_steps,
        final_ne_gap=_finite_or_none(final_gap),
        final_avg_ne_gap=_finite_or_none(float(traj.avg_ne_gap[-1])),
        final_dist_ref=_finite_or_none(float(traj.dist_ref[-1])),
        converged=bool(_converged(game, traj.final, final_gap)),
        final_point=traj.final.tolist(),
        wall_clock=time.perf_counter() - start,
    )
    if isinstance(game, PolynomialGame):
        summary["parameter_error"] = game.parameter_error(traj.final)
    return traj, summary


def cmd_run(config: dict[str, Any], out_dir, base_dir: Path | None = None) -> dict[str, Any]:
    """Run every configured method; writes ``<method>.csv`` files and ``summary.json``."""
    cfg = ExperimentConfig.from_dict(config)
    game = build_game(cfg.game, base_dir)
    z0 = initial_point(game, cfg.init, cfg.seed)
    reference = None if cfg.reference is None else _resolve_point(game, cfg.reference)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for idx, entry in enumerate(cfg.methods):
        traj, summary = run_method(game, cfg, entry, z0, reference)
        if traj is not None:
            name = f"{idx:02d}_{summary['method'].lower()}.csv"
            traj.to_csv(out / name)
            summary["csv"] = name
        results.append(summary)
    doc = {
        "description": cfg.description,
        "game": cfg.game,
        "seed": cfg.seed,
        "initial_point": None if z0 is None else z0.tolist(),
        "methods": results,
    }
    (out / "summary.json").write_text(json.dumps(doc, indent=2))
    return doc


# -- sweep ---------------------------------------------------------------------


SWEEP_COLUMNS = ["game_index", "seed", "converged", "final_ne_gap", "iters"]


def _sweep_one(index: int, seed: int, shape: dict[str, Any], dcfg: DynamicsConfig) -> list:
    game_seed = seed + index
    game = random_team_game(int(shape.get("n", 2)), int(shape.get("m", 2)), shape.get("strategy_counts", 2), game_seed)
    try:
        traj = run(game, None, dcfg, seed=game_seed)
    except DivergenceError as exc:
        return [index, game_seed, False, math.inf, exc.step]
    gap = float(traj.ne_gap[-1])
    return [index, game_seed, gap < CONVERGED_TOL, gap, traj.n_steps]


def cmd_sweep(config: dict[str, Any], out_dir, jobs: int = 1) -> dict[str, Any]:
    """Run one method on ``n_games`` random games (game ``i`` uses seed ``seed + i``)."""
    try:
        n_games = int(config.get("n_games", 100))
        shape = dict(config.get("shape", {"n": 2, "m": 2, "strategy_counts": 2}))
        entry = dict(config["method"])
        seed = int(config.get("seed", 0))
        max_iters = int(config.get("max_iters", 200_000))
    except KeyError as exc:
        raise ConfigError(f"sweep config is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sweep config: {exc}") from exc
    if n_games < 0 or max_iters <= 0 or jobs < 1:
        raise ConfigError("n_games must be >= 0, max_iters and jobs positive")
    try:
        dcfg = DynamicsConfig(
            method=entry["method"], eta=float(entry["eta"]), k=float(entry.get("k", 0.0)),
            p=float(entry.get("p", 0.0)), max_iters=max_iters, stride=max_iters,
        )
    except (KeyError, DomainError) as exc:
        raise ConfigError(f"invalid sweep method: {exc}") from exc
    if n_games:
        try:
            random_team_game(int(shape.get("n", 2)), int(shape.get("m", 2)), shape.get("strategy_counts", 2), seed)
        except DomainError as exc:
            raise ConfigError(f"invalid sweep shape: {exc}") from exc

    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        rows = list(pool.map(lambda i: _sweep_one(i, seed, shape, dcfg), range(n_games)))
    elapsed = time.perf_counter() - start

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([r[0], r[1], int(r[2]), repr(r[3]), r[4]])
    gaps = np.array([r[3] for r in rows])
    stats = {
        "n_games": n_games,
        "shape": shape,
        "method": entry,
        "max_iters": max_iters,
        "seed": seed,
        "fraction_converged": float(np.mean([r[2] for r in rows])) if rows else None,
        "median_final_ne_gap": float(np.median(gaps)) if rows else None,
        "wall_clock": elapsed,
        "jobs": jobs,
    }
    (out / "sweep_summary.json").write_text(json.dumps(stats, indent=2))
    return stats


# -- stability -----------------------------------------------------------------


def cmd_stability(config: dict[str, Any], out_dir=None, base_dir: Path | None = None) -> dict[str, Any]:
    """Spectral report at a point: ``H`` spectrum, per-method radii, sufficient condition, weak stability."""
    if "game" not in config:
        raise ConfigError("stability config needs a 'game' entry")
    game = build_game(config["game"], base_dir)
    point = _resolve_point(game, config.get("point", "equilibrium"))
    chart = config.get("chart", "simplex")
    step_sizes = config.get("step_sizes")
    if step_sizes is None:
        step_sizes = {m["method"].upper(): float(m["eta"]) for m in config.get("methods", []) if m["method"].upper() != "KPV"}
        step_sizes = step_sizes or None
    try:
        report = check_sufficient(game, point, step_sizes=step_sizes, chart=chart)
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc
    doc: dict[str, Any] = {"game": config["game"], "point": point.tolist(), "report": report.to_dict(), "warnings": []}

    kpv = next((m for m in config.get("methods", []) if m["method"].upper() == "KPV"), None)
    if kpv is not None:
        eta, k, p = float(kpv["eta"]), float(kpv.get("k", 0.0)), float(kpv.get("p", 0.0))
        doc["kpv"] = {
            "eta": eta, "k": k, "p": p,
            "spectral_radius": spectral_radius(dynamics_jacobian("KPV", game, point, eta, k, p, chart=chart)),
        }

    if isinstance(game, TeamGame):
        gap = ne_gap(game, point)
        doc["ne_gap"] = gap
        if gap < 1e-8:
            verdict = is_weakly_stable(game, point)
            doc["weakly_stable"] = {"stable": verdict.stable, "witness": verdict.witness}
        else:
            doc["weakly_stable"] = None
            doc["warnings"].append(f"point is not a Nash equilibrium (NE-gap {gap:.3e}); weak-stability test skipped")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stability.json").write_text(json.dumps(doc, indent=2))
    return doc
