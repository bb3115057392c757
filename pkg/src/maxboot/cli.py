"""Command-line front end: config-driven experiments with reproducible artifacts.

Every run reads one JSON or TOML config file, writes its artifacts into
--out, and finishes with a manifest.json recording the command, the config
echo, the seed, the thread count, the package version, and the wall time.
The manifest is written last: a directory without one holds a partial run.

Worker processes are owned here and nowhere else; the experiment runners
take a map function and split work into fixed task lists with per-simulation
derived seeds, so artifacts are byte-identical for any --threads value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._ioutil import dump_json
from .fda import FdaExperimentConfig, run_fda_experiment
from .maxstat import bootstrap_draws
from .model import CovarianceModel, NotPsdError, SampleMatrix, decay_diagnostics, generate_sample
from .multinomial import (
    MultinomialExperimentConfig,
    MultinomialModel,
    run_multinomial_experiment,
    sample_counts,
)
from .rates import RateStudyConfig, run_rate_study
from .sci import build_sci, select_tau

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

COMMANDS = ("gen-data", "sci", "fda-experiment", "multinomial-experiment",
            "rate-study", "diagnostics")

# diagnostics is pure computation on its inputs; everything else draws
_STOCHASTIC = tuple(c for c in COMMANDS if c != "diagnostics")


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; our contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(
        prog="maxboot",
        description="Bootstrap max-statistic inference: data generation, SCIs, "
                    "simulation experiments, rate studies, and model diagnostics.",
        epilog="Commands: " + " | ".join(COMMANDS)
               + ". Config schemas are documented in the package README.",
    )
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--config", required=True, help="path to a JSON or TOML config file")
    p.add_argument("--out", required=True, help="output directory for artifacts")
    p.add_argument("--seed", type=int, default=None,
                   help="64-bit master seed (required for every stochastic command)")
    p.add_argument("--threads", default="1",
                   help="worker process count, or 'auto' for the CPU count (default 1)")
    return p


def _load_config(path: Path) -> dict:
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    data = path.read_bytes()
    if path.suffix.lower() == ".toml":
        cfg = tomllib.loads(data.decode("utf-8"))
    elif path.suffix.lower() == ".json":
        cfg = json.loads(data)
    else:
        raise ValueError(f"config must be a .json or .toml file, got {path.name!r}")
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a table/object")
    return cfg


def _resolve_threads(spec: str) -> int:
    if spec == "auto":
        return os.cpu_count() or 1
    try:
        threads = int(spec)
    except ValueError:
        raise ValueError(f"--threads must be an integer or 'auto', got {spec!r}") from None
    if threads < 1:
        raise ValueError("--threads must be >= 1")
    return threads


def _check_u64(seed: int) -> int:
    if not 0 <= seed < 2 ** 64:
        raise ValueError(f"--seed must fit in an unsigned 64-bit integer, got {seed}")
    return seed


def _data_path(cfg: dict, key: str, config_path: Path) -> Path:
    raw = cfg.get(key)
    if not isinstance(raw, str) or not raw:
        raise ValueError(f"config field {key!r} must be a file path")
    path = Path(raw)
    return path if path.is_absolute() else config_path.parent / path


def _cmd_gen_data(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    kind = cfg.get("kind")
    if kind == "gaussian":
        model = CovarianceModel.from_dict(cfg["model"])
        mu = np.asarray(cfg.get("mu", 0.0), dtype=np.float64)
        X = generate_sample(mu, model, int(cfg["n"]), noise=cfg.get("noise", "gaussian"),
                            seed=seed)
        X.to_csv(out / "data.csv")
    elif kind == "multinomial":
        model = MultinomialModel.from_dict(cfg["model"])
        counts = sample_counts(model, int(cfg["n"]), seed)
        counts.to_csv(out / "counts.csv")
    else:
        raise ValueError(f"gen-data kind must be 'gaussian' or 'multinomial', got {kind!r}")


def _cmd_sci(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    X = SampleMatrix.from_csv(_data_path(cfg, "data", config_path))
    B = int(cfg["B"])
    rho = float(cfg["rho"])
    if "tau_grid" in cfg:
        tau_star, sci = select_tau(X, cfg["tau_grid"], B, rho, seed)
        extra = {"selected_tau": float(tau_star)}
    else:
        sci = build_sci(X, float(cfg["tau"]), B, rho, seed)
        extra = {}
    sci.to_csv(out / "intervals.csv")
    report = sci.report()
    report.update(extra)
    if "mu0" in cfg:
        mu0 = np.broadcast_to(np.asarray(cfg["mu0"], dtype=np.float64), sci.lo.shape)
        offending = np.flatnonzero(~sci.contains(mu0))
        report["reject"] = bool(offending.size > 0)
        report["offending"] = [int(j) + 1 for j in offending]
    if cfg.get("save_draws"):
        bootstrap_draws(X, sci.tau, B, seed).to_csv(out / "draws.csv")
    dump_json(out / "report.json", report)


def _cmd_fda(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    cfg = dict(cfg)
    cfg["seed"] = seed
    run_fda_experiment(FdaExperimentConfig.from_dict(cfg), map_fn=map_fn).write(out)


def _cmd_multinomial(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    cfg = dict(cfg)
    cfg["seed"] = seed
    run_multinomial_experiment(MultinomialExperimentConfig.from_dict(cfg), map_fn=map_fn).write(out)


def _cmd_rate_study(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    cfg = dict(cfg)
    cfg["seed"] = seed
    run_rate_study(RateStudyConfig.from_dict(cfg), map_fn=map_fn).write(out)


def _cmd_diagnostics(cfg: dict, out: Path, seed: int, config_path: Path, map_fn) -> None:
    kwargs = {}
    for key in ("ell_choice", "n"):
        if cfg.get(key) is not None:
            kwargs[key] = int(cfg[key])
    if cfg.get("a") is not None:
        kwargs["a"] = float(cfg["a"])
    if "data" in cfg:
        target = SampleMatrix.from_csv(_data_path(cfg, "data", config_path))
    elif "model" in cfg:
        target = CovarianceModel.from_dict(cfg["model"])
    else:
        raise ValueError("diagnostics config needs a 'data' CSV path or a 'model' table")
    dump_json(out / "diagnostics.json", decay_diagnostics(target, **kwargs).to_dict())


_HANDLERS = {
    "gen-data": _cmd_gen_data,
    "sci": _cmd_sci,
    "fda-experiment": _cmd_fda,
    "multinomial-experiment": _cmd_multinomial,
    "rate-study": _cmd_rate_study,
    "diagnostics": _cmd_diagnostics,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command not in COMMANDS:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"maxboot: error: unknown command {args.command!r}; "
                         f"expected one of: {', '.join(COMMANDS)}\n")
        return 1

    started_at = datetime.now(timezone.utc).isoformat()
    t0 = time.monotonic()
    try:
        threads = _resolve_threads(args.threads)
        seed = args.seed
        if args.command in _STOCHASTIC:
            if seed is None:
                raise ValueError(f"--seed is required for the {args.command} command")
            seed = _check_u64(seed)
        config_path = Path(args.config)
        cfg = _load_config(config_path)
        if "seed" in cfg:
            raise ValueError("the config file must not set 'seed'; pass --seed instead")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        handler = _HANDLERS[args.command]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                handler(cfg, out, seed, config_path, pool.map)
        else:
            handler(cfg, out, seed, config_path, map)
    except (NotPsdError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"maxboot: numerical failure: {exc}\n")
        return 2
    except (ValueError, KeyError, TypeError, OSError) as exc:
        sys.stderr.write(f"maxboot: invalid input: {exc}\n")
        return 1

    dump_json(out / "manifest.json", {
        "command": args.command,
        "config": cfg,
        "seed": seed,
        "threads": threads,
        "version": __version__,
        "started_at": started_at,
        "duration_s": round(time.monotonic() - t0, 3),
    })
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
