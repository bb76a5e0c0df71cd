"""Command-line front end for reproducible experiment runs.

A run is described by a JSON config file, command-line flags, or both
(flags win). Every run validates its configuration strictly (unknown keys
are errors), then writes artifacts named by command and configuration
fingerprint into the output directory: a CSV table with a provenance
header, a JSON echo of the resolved configuration, and, for report-style
commands, rendered figures next to the CSV (suppress with --no-figures).

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, report
from .asymptotics import (
    HEATMAP_MODES,
    finite_n_nmm_power,
    oracle_q_star,
    power_adaptive,
    power_heatmap,
    power_iid,
    q_from_q1,
    sweep_epsilon_t,
    uniform_weights,
)
from .conjoint import (
    conjoint_adaptive_policy,
    ingest_replay_dataset,
    make_statistic,
    replay_power,
    simulate_conjoint_power,
)
from .core import ExperimentRecord, SeedPlan, config_fingerprint, derive_seed
from .engine import art_p_value
from .policies import REWEIGHT_FNS, TwoStageConfig, iid_policy, two_stage_policy
from .stats import MaxArmMean

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Param:
    kind: str  # int | float | str | path | bool | int_list | float_list | json
    default: Any = None
    help: str = ""
    required: bool = False
    choices: tuple | None = None
    check: Callable[[Any], str | None] | None = None  # returns an error string


def _coerce(name: str, spec: Param, value):
    try:
        if spec.kind == "int":
            out = int(value)
            if isinstance(value, float) and value != out:
                raise ValueError("not an integer")
        elif spec.kind == "float":
            out = float(value)
        elif spec.kind in ("str", "path"):
            out = str(value)
        elif spec.kind == "bool":
            out = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
        elif spec.kind == "int_list":
            items = value.split(",") if isinstance(value, str) else list(value)
            out = [int(v) for v in items]
        elif spec.kind == "float_list":
            items = value.split(",") if isinstance(value, str) else list(value)
            out = [float(v) for v in items]
        elif spec.kind == "json":
            out = json.loads(value) if isinstance(value, str) else value
        else:
            raise AssertionError(spec.kind)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: cannot read {value!r} as {spec.kind} ({exc})") from exc
    if spec.choices is not None and out not in spec.choices:
        raise ConfigError(f"{name}: {out!r} is not one of {list(spec.choices)}")
    if spec.check is not None:
        msg = spec.check(out)
        if msg:
            raise ConfigError(f"{name}: {msg}")
    return out


def _fraction(v):
    return None if 0.0 < v < 1.0 else "must lie strictly inside (0, 1)"


def _positive(v):
    return None if v > 0 else "must be positive"


def _nonneg(v):
    return None if v >= 0 else "must be non-negative"


def _all_positive(vs):
    return None if all(v > 0 for v in vs) else "every entry must be positive"


def _all_nonneg(vs):
    return None if all(v >= 0 for v in vs) else "every entry must be non-negative"


_ALPHA = Param("float", 0.05, "test level", check=_fraction)
_SEED_DEFAULT = 20_000_101


COMMANDS: dict[str, dict[str, Param]] = {
    "pvalue": {
        "data": Param("path", required=True,
                      help="CSV with columns x[,z],y holding one collected experiment"),
        "policy": Param("json", required=True,
                        help="policy description, e.g. "
                             '\'{"kind":"two-stage","n":200,"epsilon":0.5,"p":15,"t_scale":0.1}\''),
        "stat": Param("str", "max_arm_mean", "test statistic",
                      choices=("max_arm_mean", "lasso_logistic", "f_stat")),
        "b": Param("int", 300, "number of resamples", check=_positive),
    },
    "nmm-sim": {
        "n": Param("int", required=True, help="samples per replication", check=_positive),
        "p": Param("int", required=True, help="number of arms", check=_positive),
        "h0": Param("float", 0.0, "signal strength on the sqrt(n) scale", check=_nonneg),
        "policy": Param("str", "two-stage", "sampling procedure",
                        choices=("iid", "two-stage")),
        "q1": Param("float", None, "signal arm weight (default uniform)"),
        "eps": Param("float", 0.5, "exploration fraction", check=_fraction),
        "t0": Param("float", math.log(2.0), "reweighting scale per unit signal",
                    check=_nonneg),
        "reweight": Param("str", "exp", "reweighting function", choices=REWEIGHT_FNS),
        "b": Param("int", 199, "number of resamples", check=_positive),
        "reps": Param("int", 2000, "Monte Carlo replications", check=_positive),
        "alpha": _ALPHA,
    },
    "nmm-power-iid": {
        "p": Param("int", required=True, help="number of arms", check=_positive),
        "h0": Param("float", required=True, help="signal strength", check=_nonneg),
        "q1": Param("float", None, "signal arm weight (default uniform)"),
        "alpha": _ALPHA,
        "n_mc": Param("int", 200_000, "Monte Carlo draws per phase", check=_positive),
    },
    "nmm-power-adaptive": {
        "p": Param("int", required=True, help="number of arms", check=_positive),
        "h0": Param("float", required=True, help="signal strength", check=_nonneg),
        "eps": Param("float", 0.5, "exploration fraction", check=_fraction),
        "t0": Param("float", math.log(2.0), "reweighting scale per unit signal",
                    check=_nonneg),
        "f": Param("str", "exp", "reweighting function", choices=REWEIGHT_FNS),
        "alpha": _ALPHA,
        "n_outer": Param("int", 20_000, "outer Monte Carlo draws", check=_positive),
        "n_inner": Param("int", 1_000, "inner draws per quantile", check=_positive),
    },
    "nmm-oracle": {
        "p": Param("int", required=True, help="number of arms", check=_positive),
        "h0": Param("float", required=True, help="signal strength", check=_nonneg),
        "alpha": _ALPHA,
        "resolution": Param("int", 41, "grid points over the signal arm weight",
                            check=lambda v: None if v >= 11 else "needs at least 11 points"),
        "n_mc": Param("int", 200_000, "Monte Carlo draws per phase", check=_positive),
    },
    "nmm-heatmap": {
        "mode": Param("str", "adaptive_vs_uniform", "comparison mode", choices=HEATMAP_MODES),
        "h0_grid": Param("float_list", [2, 4, 6, 8, 10, 12, 14], "signal grid",
                         check=_all_nonneg),
        "p_grid": Param("int_list", [5, 10, 15, 20, 30, 40, 50], "arm count grid",
                        check=_all_positive),
        "eps": Param("float", 0.5, "exploration fraction", check=_fraction),
        "t0": Param("float", math.log(2.0), "reweighting scale per unit signal",
                    check=_nonneg),
        "f": Param("str", "exp", "reweighting function", choices=REWEIGHT_FNS),
        "alpha": _ALPHA,
        "n_mc": Param("int", 200_000, "iid evaluator draws", check=_positive),
        "n_outer": Param("int", 20_000, "two-stage outer draws", check=_positive),
        "n_inner": Param("int", 1_000, "two-stage inner draws", check=_positive),
        "oracle_resolution": Param("int", 41, "oracle grid points",
                                   check=lambda v: None if v >= 11 else "needs at least 11"),
    },
    "nmm-sweep": {
        "p": Param("int", required=True, help="number of arms", check=_positive),
        "h0_grid": Param("float_list", [6, 10, 14], "signal grid", check=_all_nonneg),
        "eps_grid": Param("float_list", [0.1, 0.25, 0.5, 0.75, 0.9], "exploration grid",
                          check=lambda vs: None if all(0 < v < 1 for v in vs)
                          else "entries must lie inside (0, 1)"),
        "t0_grid": Param("float_list", [0.0, 0.35, math.log(2.0), 1.04],
                         "reweighting scale grid", check=_all_nonneg),
        "alpha": _ALPHA,
        "n_mc": Param("int", 20_000, "two-stage outer draws", check=_positive),
    },
    "conjoint-sim": {
        "n_grid": Param("int_list", [1000], "sample sizes", check=_all_positive),
        "k": Param("int", 4, "levels of the factor of interest", check=_positive),
        "l": Param("int", 4, "levels of the control factor", check=_positive),
        "beta_x": Param("float", 0.0, "main effect of X"),
        "beta_z": Param("float", 0.0, "main effect of Z"),
        "beta_xz": Param("float", 0.0, "interaction effect"),
        "eps_grid": Param("float_list", [0.5], "exploration fractions for adaptive arms",
                          check=lambda vs: None if all(0 < v < 1 for v in vs)
                          else "entries must lie inside (0, 1)"),
        "stat": Param("str", "lasso_logistic", "test statistic",
                      choices=("lasso_logistic", "f_stat")),
        "b": Param("int", 300, "number of resamples", check=_positive),
        "reps": Param("int", 1000, "Monte Carlo replications", check=_positive),
        "alpha": _ALPHA,
    },
    "conjoint-replay": {
        "dataset": Param("path", required=True, help="delimited response file"),
        "schema": Param("path", required=True, help="JSON column/level mapping"),
        "n_grid": Param("int_list", required=True, help="budgets to replay",
                        check=_all_positive),
        "eps": Param("float", 0.5, "exploration fraction", check=_fraction),
        "stat": Param("str", "lasso_logistic", "test statistic",
                      choices=("lasso_logistic", "f_stat")),
        "b": Param("int", 300, "number of resamples", check=_positive),
        "reps": Param("int", 1000, "Monte Carlo replications", check=_positive),
        "alpha": Param("float", 0.1, "test level", check=_fraction),
    },
}

COMMON_KEYS = ("command", "seed", "workers", "output_dir", "figures")


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: dict
    master_seed: int
    workers: int
    output_dir: Path
    figures: bool

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(
            {"command": self.command, "seed": self.master_seed, "params": self.params}
        )


def resolve_config(command: str, file_values: dict, flag_values: dict) -> RunConfig:
    """Merge defaults, config file, and flags (flags win); validate strictly."""
    spec = COMMANDS[command]
    errors = []
    unknown = [k for k in file_values if k not in spec and k not in COMMON_KEYS]
    errors.extend(f"unknown config key {k!r}" for k in sorted(unknown))
    if "command" in file_values and file_values["command"] != command:
        errors.append(
            f"config file is for {file_values['command']!r}, invoked as {command!r}"
        )

    params = {}
    for name, p in spec.items():
        raw = flag_values.get(name)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            if p.required:
                errors.append(f"missing required parameter {name!r}")
                continue
            params[name] = p.default
            continue
        try:
            params[name] = _coerce(name, p, raw)
        except ConfigError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigError("; ".join(errors))

    def common(name, default):
        v = flag_values.get(name)
        if v is None:
            v = file_values.get(name, default)
        return v

    seed = int(common("seed", _SEED_DEFAULT))
    workers = common("workers", None)
    if workers is None:
        workers = os.environ.get("ART_KIT_WORKERS") or (os.cpu_count() or 1)
    figures = bool(common("figures", True)) and not flag_values.get("no_figures", False)
    return RunConfig(
        command=command,
        params=params,
        master_seed=seed,
        workers=max(1, int(workers)),
        output_dir=Path(common("output_dir", ".")),
        figures=figures,
    )


# --- runners ------------------------------------------------------------


def _artifact(cfg: RunConfig, suffix: str) -> Path:
    return cfg.output_dir / f"{cfg.command}-{cfg.fingerprint[:12]}{suffix}"


def _provenance(cfg: RunConfig) -> dict:
    return {
        "tool": f"artkit {__version__}",
        "command": cfg.command,
        "config_hash": cfg.fingerprint,
        "master_seed": cfg.master_seed,
    }


def _echo_config(cfg: RunConfig) -> Path:
    return report.write_json(
        _artifact(cfg, "-config.json"),
        {
            "tool_version": __version__,
            "command": cfg.command,
            "seed": cfg.master_seed,
            "params": cfg.params,
            "fingerprint": cfg.fingerprint,
        },
    )


def _estimate_row(est, **front):
    front.update(
        power=est.power, se=est.se, n_mc=est.n_mc, alpha=est.alpha,
        n_failed=est.n_failed,
    )
    return front


def _build_pvalue_policy(desc: dict):
    kind = desc.get("kind")
    if kind == "iid":
        if "q" in desc:
            q = np.asarray(desc["q"], dtype=np.float64)
        else:
            q = uniform_weights(int(desc["p"]))
        return iid_policy(q, z_weights=desc.get("z_weights"))
    if kind == "two-stage":
        p = int(desc["p"])
        q = np.asarray(desc["q"], np.float64) if "q" in desc else uniform_weights(p)
        return two_stage_policy(TwoStageConfig(
            n=int(desc["n"]), epsilon=float(desc["epsilon"]), q=q,
            t_scale=float(desc.get("t_scale", 0.0)),
            reweight_fn=desc.get("reweight_fn", "exp"),
        ))
    if kind == "conjoint-adaptive":
        return conjoint_adaptive_policy(
            float(desc["epsilon"]), int(desc.get("K", 4)), int(desc.get("L", 4)),
            int(desc["n"]),
        )
    raise ConfigError(f"policy kind {kind!r} is not one of "
                      "iid, two-stage, conjoint-adaptive")


def run_pvalue(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    try:
        body = np.genfromtxt(prm["data"], delimiter=",", names=True, dtype=np.float64)
    except OSError as exc:
        raise ConfigError(f"cannot read data file: {exc}") from exc
    names = body.dtype.names or ()
    if "x" not in names or "y" not in names:
        raise ConfigError(f"data file needs x and y columns, found {list(names)}")
    x = body["x"].astype(np.int64)
    y = body["y"]
    z = body["z"].astype(np.int64) if "z" in names else None
    policy = _build_pvalue_policy(prm["policy"])
    plan = SeedPlan(cfg.master_seed)
    record = ExperimentRecord(
        x=x, z=z, y=y, n=len(x), policy_id=policy.policy_id,
        seed=derive_seed(plan, "record"),
    )
    if prm["stat"] == "max_arm_mean":
        stat = MaxArmMean(policy.n_x_arms)
    else:
        K = int(round(math.sqrt(policy.n_x_arms)))
        L = int(round(math.sqrt(policy.n_z_arms or 1)))
        stat = make_statistic(prm["stat"], K, L)
    pv = art_p_value(record, policy, stat, prm["b"], plan)
    csv_path = report.write_csv(
        _artifact(cfg, ".csv"),
        [{"p": pv.p, "b_used": pv.b_used, "t_obs": pv.t_obs, "tie_count": pv.tie_count}],
        _provenance(cfg),
    )
    return [csv_path, _echo_config(cfg)]


def run_nmm_sim(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    p, h0 = prm["p"], prm["h0"]
    q = q_from_q1(prm["q1"], p) if prm["q1"] is not None else uniform_weights(p)
    if prm["policy"] == "iid":
        policy = iid_policy(q)
    else:
        t_scale = prm["t0"] / h0 if h0 > 0 else 0.0
        policy = two_stage_policy(TwoStageConfig(
            n=prm["n"], epsilon=prm["eps"], q=q, t_scale=t_scale,
            reweight_fn=prm["reweight"],
        ))
    est = finite_n_nmm_power(
        prm["n"], p, h0, policy, B=prm["b"], n_mc=prm["reps"], alpha=prm["alpha"],
        plan=SeedPlan(cfg.master_seed), workers=cfg.workers,
    )
    row = _estimate_row(est, n=prm["n"], p=p, h0=h0, policy=prm["policy"], b=prm["b"])
    csv_path = report.write_csv(_artifact(cfg, ".csv"), [row], _provenance(cfg))
    return [csv_path, _echo_config(cfg)]


def run_power_iid(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    q = (q_from_q1(prm["q1"], prm["p"]) if prm["q1"] is not None
         else uniform_weights(prm["p"]))
    est = power_iid(q, prm["h0"], prm["alpha"], prm["n_mc"], SeedPlan(cfg.master_seed))
    row = _estimate_row(
        est, p=prm["p"], h0=prm["h0"],
        q1=prm["q1"] if prm["q1"] is not None else 1.0 / prm["p"],
    )
    csv_path = report.write_csv(_artifact(cfg, ".csv"), [row], _provenance(cfg))
    return [csv_path, _echo_config(cfg)]


def run_power_adaptive(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    t = prm["t0"] / prm["h0"] if prm["h0"] > 0 else 0.0
    est = power_adaptive(
        prm["eps"], t, prm["f"], uniform_weights(prm["p"]), prm["h0"],
        prm["alpha"], prm["n_outer"], prm["n_inner"], SeedPlan(cfg.master_seed),
    )
    row = _estimate_row(est, p=prm["p"], h0=prm["h0"], eps=prm["eps"], t0=prm["t0"])
    csv_path = report.write_csv(_artifact(cfg, ".csv"), [row], _provenance(cfg))
    return [csv_path, _echo_config(cfg)]


def run_oracle(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    result = oracle_q_star(
        prm["p"], prm["h0"], prm["alpha"], prm["resolution"], prm["n_mc"],
        SeedPlan(cfg.master_seed),
    )
    rows = [
        {"q1": q1, "power": pw, "se": se, "is_star": q1 == result.q1_star}
        for q1, pw, se in zip(result.q1_grid, result.power_grid, result.se_grid)
    ]
    out = [report.write_csv(_artifact(cfg, ".csv"), rows, _provenance(cfg))]
    if cfg.figures:
        out.append(report.fig_oracle(result, _artifact(cfg, ".png")))
    out.append(report.write_json(
        _artifact(cfg, "-summary.json"),
        {"q1_star": result.q1_star, "power_star": result.power_star,
         "flat": result.flat, "fingerprint": cfg.fingerprint},
    ))
    out.append(_echo_config(cfg))
    return out


def run_heatmap(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    grid = power_heatmap(
        prm["h0_grid"], prm["p_grid"], prm["mode"],
        {k: prm[k] for k in
         ("alpha", "eps", "t0", "f", "n_mc", "n_outer", "n_inner", "oracle_resolution")},
        SeedPlan(cfg.master_seed),
    )
    out = [report.write_csv(_artifact(cfg, ".csv"), list(grid.rows()), _provenance(cfg))]
    if cfg.figures:
        value = "q1_star" if prm["mode"] == "oracle_q1" else "diff"
        out.append(report.fig_heatmap(grid, _artifact(cfg, ".png"), value=value))
    out.append(_echo_config(cfg))
    return out


def run_sweep(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    rows = sweep_epsilon_t(
        prm["p"], prm["h0_grid"], prm["eps_grid"], prm["t0_grid"],
        prm["alpha"], prm["n_mc"], SeedPlan(cfg.master_seed),
    )
    out = [report.write_csv(_artifact(cfg, ".csv"), rows, _provenance(cfg))]
    if cfg.figures:
        out.append(report.fig_curves(
            rows, x="eps", y="power", group=["h0", "t0"], path=_artifact(cfg, ".png"),
        ))
    out.append(_echo_config(cfg))
    return out


def run_conjoint_sim(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    plan = SeedPlan(cfg.master_seed)
    rows = []
    for n in prm["n_grid"]:
        base = {
            "n": n, "K": prm["k"], "L": prm["l"],
            "beta_x": prm["beta_x"], "beta_z": prm["beta_z"], "beta_xz": prm["beta_xz"],
            "stat": prm["stat"], "B": prm["b"], "n_mc": prm["reps"], "alpha": prm["alpha"],
        }
        est = simulate_conjoint_power(base | {"sampler": "iid"}, plan, cfg.workers)
        rows.append(_estimate_row(est, n=n, sampler="iid", eps=""))
        for eps in prm["eps_grid"]:
            est = simulate_conjoint_power(
                base | {"sampler": "adaptive", "epsilon": eps}, plan, cfg.workers
            )
            rows.append(_estimate_row(est, n=n, sampler="adaptive", eps=eps))
    out = [report.write_csv(_artifact(cfg, ".csv"), rows, _provenance(cfg))]
    if cfg.figures:
        out.append(report.fig_curves(
            rows, x="n", y="power", group=["sampler", "eps"], path=_artifact(cfg, ".png"),
        ))
    out.append(_echo_config(cfg))
    return out


def run_conjoint_replay(cfg: RunConfig) -> list[Path]:
    prm = cfg.params
    try:
        dataset = ingest_replay_dataset(prm["dataset"], prm["schema"])
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    plan = SeedPlan(cfg.master_seed)
    rows = []
    for n in prm["n_grid"]:
        for sampler in ("iid", "adaptive"):
            est = replay_power(
                dataset, n, sampler, plan, epsilon=prm["eps"], stat_name=prm["stat"],
                B=prm["b"], n_mc=prm["reps"], alpha=prm["alpha"], workers=cfg.workers,
            )
            rows.append(_estimate_row(
                est, n=n, sampler=sampler,
                eps=prm["eps"] if sampler == "adaptive" else "",
            ))
    out = [report.write_csv(_artifact(cfg, ".csv"), rows, _provenance(cfg))]
    if cfg.figures:
        out.append(report.fig_curves(
            rows, x="n", y="power", group=["sampler"], path=_artifact(cfg, ".png"),
        ))
    out.append(_echo_config(cfg))
    return out


RUNNERS = {
    "pvalue": run_pvalue,
    "nmm-sim": run_nmm_sim,
    "nmm-power-iid": run_power_iid,
    "nmm-power-adaptive": run_power_adaptive,
    "nmm-oracle": run_oracle,
    "nmm-heatmap": run_heatmap,
    "nmm-sweep": run_sweep,
    "conjoint-sim": run_conjoint_sim,
    "conjoint-replay": run_conjoint_replay,
}


# --- argument parsing -----------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="artkit",
        description="Randomization tests for adaptively collected experiments",
    )
    parser.add_argument("--version", action="version", version=f"artkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    vp = sub.add_parser("validate", help="check a config file without running it")
    vp.add_argument("--config", required=True, help="JSON config file to validate")

    for command, spec in COMMANDS.items():
        cp = sub.add_parser(command)
        cp.add_argument("--config", help="JSON config file")
        cp.add_argument("--seed", type=int, help="master seed")
        cp.add_argument("--workers", type=int, help="worker processes")
        cp.add_argument("--output-dir", help="artifact directory")
        cp.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
        for name, p in spec.items():
            flag = "--" + name.replace("_", "-")
            if name == "reps":
                cp.add_argument(flag, "--n-mc", dest=name, help=p.help)
            elif name == "n_mc":
                cp.add_argument(flag, "--reps", dest=name, help=p.help)
            else:
                cp.add_argument(flag, help=p.help)
    return parser


def _load_config_file(path) -> dict:
    try:
        values = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(values, dict):
        raise ConfigError("config file must hold a JSON object")
    return values


def _validate_only(path) -> int:
    values = _load_config_file(path)
    command = values.get("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"config must name a command out of {sorted(COMMANDS)}, got {command!r}"
        )
    cfg = resolve_config(command, values, {})
    print(f"ok: {command}")
    for name in sorted(cfg.params):
        print(f"  {name} = {cfg.params[name]!r}")
    print(f"  seed = {cfg.master_seed}")
    print(f"  workers = {cfg.workers}")
    print(f"  output_dir = {cfg.output_dir}")
    print(f"  fingerprint = {cfg.fingerprint}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("ART_KIT_LOGLEVEL", "INFO"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        if command == "validate":
            return _validate_only(args["config"])
        file_values = _load_config_file(args["config"]) if args.get("config") else {}
        flag_values = {k: v for k, v in args.items() if v is not None and k != "config"}
        cfg = resolve_config(command, file_values, flag_values)
    except ConfigError as exc:
        json.dump({"error": "config", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    try:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        artifacts = RUNNERS[command](cfg)
    except ConfigError as exc:
        json.dump({"error": "config", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - boundary: report and signal failure
        log.exception("%s failed", command)
        json.dump(
            {"error": type(exc).__name__, "message": str(exc), "command": command},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 3
    for path in artifacts:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
