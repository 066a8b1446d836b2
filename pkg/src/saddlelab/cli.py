"""Command-line experiment runner.

Usage:
    saddlelab --experiment fig1 --out results/
    saddlelab --experiment fig3 --set mu=1e-2 --set nlambda=51 --jobs 4
    saddlelab --validate results/

Overrides are passed as repeatable ``--set key=value`` flags and are checked
against each experiment's preconditions before anything runs.  Outputs are
one CSV plus one metadata JSON per experiment; reruns with identical
configuration produce byte-identical files.  The default output directory is
``$SADDLELAB_OUT`` or the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import experiments
from .errors import ConfigError, SaddleLabError, ValidationFailure

EXPERIMENTS = ("fig1", "fig2", "fig3", "fig4", "hhd", "random_suite")

# allowed override keys and their parsers, per experiment
_FLOAT = float
_INT = int


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(";") if tok)


_OVERRIDE_SCHEMA: dict[str, dict] = {
    "fig1": {"a": _FLOAT, "b": _FLOAT, "g": _FLOAT, "npoints": _INT},
    "fig2": {"a": _FLOAT, "b": _FLOAT, "g": _FLOAT, "npoints": _INT},
    "fig3": {"mu": _FLOAT, "level": _INT, "nlambda": _INT,
             "uniform_refinements": _INT},
    "fig4": {"mu": _FLOAT, "dt": _FLOAT, "T": _FLOAT, "level": _INT,
             "uniform_refinements": _INT, "picard_tol": _FLOAT},
    "hhd": {"levels": _int_list},
    "random_suite": {"count": _INT, "n_max": _INT, "m_max": _INT},
}


@dataclass
class ExperimentConfig:
    experiment: str
    output_dir: Path
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    jobs: int = 1


def parse_overrides(experiment: str, pairs: list[str]) -> dict:
    schema = _OVERRIDE_SCHEMA[experiment]
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, _, raw = pair.partition("=")
        if key not in schema:
            raise ConfigError(
                f"unknown override {key!r} for {experiment}; "
                f"allowed: {sorted(schema)}"
            )
        try:
            out[key] = schema[key](raw)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {pair!r}: {exc}") from exc
    return out


def check_preconditions(cfg: ExperimentConfig) -> None:
    ov = cfg.overrides
    positive = {"a", "b", "mu", "dt", "T", "picard_tol"}
    for key in positive & set(ov):
        if not ov[key] > 0:
            raise ConfigError(f"{key} must be positive, got {ov[key]}")
    for key in {"npoints", "nlambda"} & set(ov):
        if ov[key] < 2:
            raise ConfigError(f"{key} must be at least 2, got {ov[key]}")
    for key in {"level", "count", "n_max", "m_max"} & set(ov):
        if ov[key] < 1:
            raise ConfigError(f"{key} must be at least 1, got {ov[key]}")
    if "uniform_refinements" in ov and ov["uniform_refinements"] < 0:
        raise ConfigError("uniform_refinements must be nonnegative")
    if cfg.experiment == "fig4":
        dt = ov.get("dt", 0.01)
        T = ov.get("T", 1.0)
        if abs(round(T / dt) * dt - T) > 1e-12 * max(1.0, T):
            raise ConfigError(f"T={T} is not an integer multiple of dt={dt}")
    if "levels" in ov and (not ov["levels"] or min(ov["levels"]) < 1):
        raise ConfigError("levels must be a nonempty list of positive integers")
    if cfg.jobs < 1:
        raise ConfigError("jobs must be at least 1")


def run_experiment(cfg: ExperimentConfig) -> list[Path]:
    """Dispatch one experiment and write its CSV + metadata files."""
    check_preconditions(cfg)
    ov = dict(cfg.overrides)
    if cfg.experiment == "fig1":
        header, rows, meta = experiments.run_fig1(**ov)
    elif cfg.experiment == "fig2":
        header, rows, meta = experiments.run_fig2(**ov)
    elif cfg.experiment == "fig3":
        header, rows, meta = experiments.run_fig3(jobs=cfg.jobs, **ov)
    elif cfg.experiment == "fig4":
        header, rows, meta = experiments.run_fig4(**ov)
    elif cfg.experiment == "hhd":
        header, rows, meta = experiments.run_hhd(**ov)
    elif cfg.experiment == "random_suite":
        header, rows, meta = experiments.run_random_suite(seed=cfg.seed, **ov)
    else:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    meta["seed"] = cfg.seed
    return experiments.emit(cfg.output_dir, cfg.experiment, header, rows, meta)


# ---------------------------------------------------------------------------
# output validation (re-checks emitted CSVs without re-solving)
# ---------------------------------------------------------------------------

def _read_csv(path: Path) -> tuple[list[str], list[list[float]]]:
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, rows


def _check(cond: bool, violations: list, path: Path, row: int, message: str):
    if not cond:
        violations.append(f"{path.name} row {row}: {message}")


def _validate_fig1(path: Path, violations: list, rtol: float = 1e-9) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    for i, r in enumerate(rows):
        scale = 1.0 + abs(r[col["u_norm"]]) + abs(r[col["p_norm"]])
        _check(r[col["u_norm"]] <= r[col["theta_u_r"]] + rtol * scale,
               violations, path, i, "u norm exceeds refined bound")
        _check(r[col["theta_u_r"]] <= r[col["theta_u_c"]] + rtol * scale,
               violations, path, i, "refined u bound exceeds classical")
        _check(r[col["p_norm"]] <= r[col["theta_p_r"]] + rtol * scale,
               violations, path, i, "p norm exceeds refined bound")
        _check(r[col["p_norm"]] <= r[col["theta_p_c"]] + rtol * scale,
               violations, path, i, "p norm exceeds classical bound")


def _validate_fig2(path: Path, violations: list, rtol: float = 1e-9) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    for i, r in enumerate(rows):
        scale = 1.0 + abs(r[col["u_norm"]]) + abs(r[col["p_norm"]])
        _check(r[col["u_norm"]] <= r[col["theta_u_r"]] + rtol * scale,
               violations, path, i, "u norm exceeds refined bound")
        _check(r[col["p_norm"]] <= r[col["theta_p_r"]] + rtol * scale,
               violations, path, i, "p norm exceeds refined bound")
        _check(r[col["p_norm"]] <= r[col["theta_p_r2"]] + rtol * scale,
               violations, path, i, "p norm exceeds sharper refined bound")
        _check(r[col["theta_p_r2"]] <= r[col["theta_p_r"]] + rtol * scale,
               violations, path, i, "sharper p bound exceeds the seminorm bound")


def _validate_fig3(path: Path, violations: list) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    lam0 = None
    for i, r in enumerate(rows):
        _check(r[col["div_u_SV"]] <= 1e-9 * max(r[col["u_norm_SV"]], 1e-300),
               violations, path, i, "SV velocity is not divergence free")
        _check(r[col["u_norm_SV"]] <= r[col["theta_u_r"]] + 1e-6,
               violations, path, i, "SV velocity exceeds refined bound")
        _check(r[col["u_norm_TH"]] <= r[col["theta_u_c"]] * (1 + 1e-9) + 1e-12,
               violations, path, i, "TH velocity exceeds classical bound")
        if r[col["lam"]] == 0.0:
            lam0 = (i, r)
    if lam0 is not None:
        i, r = lam0
        _check(r[col["u_norm_SV"]] < 1e-6 * max(r[col["u_norm_TH"]], 1e-300),
               violations, path, i, "SV velocity at lambda=0 is not negligible")


def _validate_fig4(path: Path, violations: list) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    for i, r in enumerate(rows):
        _check(r[col["err_SV"]] <= 1e-8, violations, path, i,
               "SV error is not negligible")
    after = [(i, r) for i, r in enumerate(rows) if r[col["t"]] >= 0.1 - 1e-12]
    for (i_prev, prev), (i, cur) in zip(after, after[1:]):
        _check(cur[col["err_TH"]] >= prev[col["err_TH"]] - 1e-15,
               violations, path, i, "TH error decreased after t=0.1")
    if rows:
        last = rows[-1]
        _check(last[col["err_TH"]] >= 1e3 * max(last[col["err_SV"]], 1e-300),
               violations, path, len(rows) - 1,
               "TH error does not dominate SV error at final time")


def _validate_hhd(path: Path, violations: list) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    for i, r in enumerate(rows):
        _check(r[col["orthogonality"]] <= 1e-11, violations, path, i,
               "decomposition is not discretely orthogonal")
    for code in (0, 1):
        vals = [(i, r[col["residual_l2"]]) for i, r in enumerate(rows)
                if r[col["variant_code"]] == code]
        for (i_prev, prev), (i, cur) in zip(vals, vals[1:]):
            _check(cur < prev, violations, path, i,
                   "decomposition residual did not decrease under refinement")


def _validate_random_suite(path: Path, violations: list) -> None:
    header, rows = _read_csv(path)
    col = {name: k for k, name in enumerate(header)}
    for i, r in enumerate(rows):
        _check(r[col["u_slack"]] >= -1e-9, violations, path, i,
               "refined u bound violated")
        _check(r[col["p_slack"]] >= -1e-9, violations, path, i,
               "refined p bound violated")


_VALIDATORS = {
    "fig1": _validate_fig1,
    "fig2": _validate_fig2,
    "fig3": _validate_fig3,
    "fig4": _validate_fig4,
    "hhd": _validate_hhd,
    "random_suite": _validate_random_suite,
}


def validate_outputs(directory: str | Path) -> dict:
    """Re-check the emitted CSVs; raises ValidationFailure on any violation."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"{directory} is not a directory")
    checked = {}
    violations: list[str] = []
    for name, validator in _VALIDATORS.items():
        path = directory / f"{name}.csv"
        if path.exists():
            before = len(violations)
            try:
                validator(path, violations)
            except (ValueError, KeyError, StopIteration) as exc:
                violations.append(f"{path.name}: unreadable ({exc})")
            checked[name] = "pass" if len(violations) == before else "fail"
    if not checked:
        raise ConfigError(f"no experiment outputs found in {directory}")
    report = {"directory": str(directory), "checked": checked,
              "violations": violations}
    if violations:
        raise ValidationFailure(json.dumps(report, indent=2))
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saddlelab",
        description="Saddle-point stability experiments (CSV-driven figures)")
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--experiment", choices=EXPERIMENTS,
                      help="experiment to run")
    mode.add_argument("--validate", metavar="DIR",
                      help="re-check invariants of emitted CSVs in DIR")
    parser.add_argument("--out", default=None,
                        help="output directory (default: $SADDLELAB_OUT or cwd)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a default parameter")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for per-point experiments")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.validate is not None:
            report = validate_outputs(args.validate)
            print(json.dumps(report, indent=2))
            return 0
        out_dir = Path(args.out or os.environ.get("SADDLELAB_OUT", "."))
        cfg = ExperimentConfig(
            experiment=args.experiment,
            output_dir=out_dir,
            overrides=parse_overrides(args.experiment, args.overrides),
            seed=args.seed,
            jobs=args.jobs,
        )
        paths = run_experiment(cfg)
        for path in paths:
            print(path)
        return 0
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(json.dumps({"error": "ValidationFailure", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except SaddleLabError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
