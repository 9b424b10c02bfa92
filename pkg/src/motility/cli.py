"""Command-line driver: stationary states, sweeps, bifurcation, waves, spectra.

Subcommands: stationary | sweep-e | bifurcate | tw | branch | spectrum.
Configuration comes from a flat TOML file (--config) with per-flag overrides;
every numerical control has a default.  Exit codes: 0 success, 1 usage or
configuration error, 2 numerical failure (diagnostics on standard error).

All floating-point output is formatted at 17 significant digits, so repeated
runs with the same inputs are byte-identical.  MOTILITY_THREADS caps the
parallelism of sweeps and branch spectra.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import bifurcation as bf
from . import stationary_spectrum as ss
from . import tw_spectrum as sp
from .model import ModelParams, check_hypotheses, radial_state
from .numerics import NumericsError
from .traveling_wave import (
    continue_branch,
    solve_tw,
    write_branch_csv,
    write_myosin_csv,
    write_shape_csv,
)


class ConfigError(Exception):
    pass


# every recognized config key with its default (None = required when used)
CONFIG_DEFAULTS = {
    # model (calibrated route: zeta, gamma, k_e, m0, r; raw route: p_h, area_ref)
    "zeta": None,
    "gamma": None,
    "k_e": None,
    "m0": None,
    "r": None,
    "p_h": None,
    "area_ref": None,
    # numerical controls
    "n_radial": 28,
    "n_modes": 19,
    "newton_tol": 1e-10,
    "max_iter": 40,
    "fd_step": 1e-3,
    "subspace": "even",
    # sweep / branch ranges
    "r_min": None,
    "r_max": None,
    "n_sweep": 20,
    "bracket_lo": None,
    "bracket_hi": None,
    "v": None,
    "v_max": None,
    "steps": 16,
    # output paths
    "out": None,
    "out_shape": None,
    "out_myosin": None,
}


@dataclass
class RunConfig:
    values: dict

    def __getattr__(self, key):
        try:
            return self.values[key]
        except KeyError:
            raise AttributeError(key)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = dict(CONFIG_DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}")
        for key, val in data.items():
            if key not in CONFIG_DEFAULTS:
                raise ConfigError(f"unknown config key: {key}")
            values[key] = val
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return RunConfig(values)


def build_params(cfg: RunConfig) -> ModelParams:
    for key in ("zeta", "gamma", "k_e"):
        if cfg.values[key] is None:
            raise ConfigError(f"missing model parameter: {key}")
    try:
        if cfg.p_h is not None:
            if cfg.area_ref is None:
                raise ConfigError("raw parameters need both p_h and area_ref")
            return ModelParams(zeta=cfg.zeta, gamma=cfg.gamma, k_e=cfg.k_e,
                               p_h=cfg.p_h, area_ref=cfg.area_ref)
        if cfg.m0 is None or cfg.r is None:
            raise ConfigError("calibrated parameters need m0 and r "
                              "(or raw p_h and area_ref)")
        return ModelParams.calibrated(cfg.zeta, cfg.gamma, cfg.k_e, cfg.m0, cfg.r)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _radius(cfg: RunConfig) -> float:
    if cfg.r is None:
        raise ConfigError("missing radius r")
    return float(cfg.r)


def _bracket(cfg: RunConfig):
    if cfg.bracket_lo is None or cfg.bracket_hi is None:
        return None
    return (float(cfg.bracket_lo), float(cfg.bracket_hi))


def _fmt(x) -> str | bool | int:
    if isinstance(x, bool):
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    return f"{float(x):.17g}"


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_stationary(cfg: RunConfig) -> int:
    params = build_params(cfg)
    R = _radius(cfg)
    state = radial_state(params, R)
    hyp = check_hypotheses(params, R)
    payload = {
        "radial_state": {k: _fmt(v) for k, v in asdict(state).items()},
        "hypotheses": {k: _fmt(v) for k, v in asdict(hyp).items()},
        "all_hold": hyp.all_hold,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=False), cfg.out)
    return 0


def cmd_sweep_e(cfg: RunConfig) -> int:
    params = build_params(cfg)
    if cfg.r_min is None or cfg.r_max is None:
        raise ConfigError("sweep-e needs r_min and r_max")
    if cfg.out is None:
        raise ConfigError("sweep-e needs an output path (out)")
    R_values = np.linspace(float(cfg.r_min), float(cfg.r_max), int(cfg.n_sweep))
    rows = sp._parallel_map(
        lambda R: ss.sweep_E(params, [R], n_radial=max(int(cfg.n_radial), 48))[0],
        R_values,
    )
    rows.sort(key=lambda row: row["R"])
    ss.write_sweep_csv(cfg.out, rows)
    return 0


def cmd_bifurcate(cfg: RunConfig) -> int:
    params = build_params(cfg)
    report = bf.bifurcation_report(params, bracket=_bracket(cfg))
    _emit(bf.report_to_json(report), cfg.out)
    return 0


def _solve_branch(cfg: RunConfig, params: ModelParams, V_top: float):
    R0 = bf.find_R0(params, bracket=_bracket(cfg))
    return continue_branch(
        params,
        R0,
        V_top,
        steps=int(cfg.steps),
        n_radial=int(cfg.n_radial),
        n_modes=int(cfg.n_modes),
        newton_tol=float(cfg.newton_tol),
    )


def cmd_tw(cfg: RunConfig) -> int:
    params = build_params(cfg)
    if cfg.v is None:
        raise ConfigError("tw needs a velocity v")
    V = float(cfg.v)
    if V == 0.0:
        R0 = bf.find_R0(params, bracket=_bracket(cfg))
        wave = solve_tw(params, R0, 0.0, n_radial=int(cfg.n_radial),
                        n_modes=int(cfg.n_modes), newton_tol=float(cfg.newton_tol))
    else:
        wave = _solve_branch(cfg, params, V).waves[-1]
    if cfg.out_shape:
        write_shape_csv(wave, cfg.out_shape)
    if cfg.out_myosin:
        write_myosin_csv(wave, cfg.out_myosin)
    if not cfg.out_shape and not cfg.out_myosin:
        payload = {
            "V": _fmt(wave.V),
            "Lambda": _fmt(wave.Lambda),
            "M": _fmt(wave.M),
            "area": _fmt(wave.area),
            "residual_norm": _fmt(wave.residual_norm),
        }
        _emit(json.dumps(payload, indent=2), cfg.out)
    return 0


def cmd_branch(cfg: RunConfig) -> int:
    params = build_params(cfg)
    if cfg.v_max is None:
        raise ConfigError("branch needs v_max")
    if cfg.out is None:
        raise ConfigError("branch needs an output path (out)")
    branch = _solve_branch(cfg, params, float(cfg.v_max))
    write_branch_csv(branch, cfg.out)
    return 0


def cmd_spectrum(cfg: RunConfig) -> int:
    params = build_params(cfg)
    if cfg.subspace not in ("even", "full"):
        raise ConfigError(f"unknown subspace: {cfg.subspace}")
    if cfg.v is not None:
        V = float(cfg.v)
        if V <= 0:
            raise ConfigError("spectrum needs v > 0 (or v_max for a branch run)")
        R0 = bf.find_R0(params, bracket=_bracket(cfg))
        targets = np.linspace(0.0, V, max(int(cfg.steps), 6) + 1)[1:]
        branch = continue_branch(params, R0, V, steps=int(cfg.steps),
                                 n_radial=int(cfg.n_radial), n_modes=int(cfg.n_modes),
                                 newton_tol=float(cfg.newton_tol), targets=targets)
        reports = sp.lambda_of_V(branch, cfg.subspace, fd_step=float(cfg.fd_step),
                                 with_adjoint=True)
        _emit(sp.report_to_json(reports[-1]), cfg.out)
        return 0
    if cfg.v_max is None:
        raise ConfigError("spectrum needs v or v_max")
    branch = _solve_branch(cfg, params, float(cfg.v_max))
    reports = sp.lambda_of_V(branch, cfg.subspace, fd_step=float(cfg.fd_step))
    if cfg.out:
        sp.write_spectrum_csv(reports, cfg.out)
    else:
        print("[" + ",\n".join(sp.report_to_json(r) for r in reports) + "]")
    return 0


COMMANDS = {
    "stationary": cmd_stationary,
    "sweep-e": cmd_sweep_e,
    "bifurcate": cmd_bifurcate,
    "tw": cmd_tw,
    "branch": cmd_branch,
    "spectrum": cmd_spectrum,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file (flat key/value)")
    p.add_argument("--zeta", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--k-e", dest="k_e", type=float)
    p.add_argument("--m0", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--p-h", dest="p_h", type=float)
    p.add_argument("--area-ref", dest="area_ref", type=float)
    p.add_argument("--n-radial", dest="n_radial", type=int)
    p.add_argument("--n-modes", dest="n_modes", type=int)
    p.add_argument("--newton-tol", dest="newton_tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--bracket-lo", dest="bracket_lo", type=float)
    p.add_argument("--bracket-hi", dest="bracket_hi", type=float)
    p.add_argument("--out", help="output file (default: standard output)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motility",
        description="Radial states, stability spectra, and traveling waves "
        "of a free-boundary cell-motility model",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stationary", help="radial state and hypothesis report")
    _add_common(p)

    p = sub.add_parser("sweep-e", help="movability-eigenvalue R-sweep CSV")
    _add_common(p)
    p.add_argument("--r-min", dest="r_min", type=float)
    p.add_argument("--r-max", dest="r_max", type=float)
    p.add_argument("--n-sweep", dest="n_sweep", type=int)

    p = sub.add_parser("bifurcate", help="critical-radius report JSON")
    _add_common(p)

    p = sub.add_parser("tw", help="one traveling wave; shape and myosin CSVs")
    _add_common(p)
    p.add_argument("--v", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--out-shape", dest="out_shape")
    p.add_argument("--out-myosin", dest="out_myosin")

    p = sub.add_parser("branch", help="small-velocity branch CSV")
    _add_common(p)
    p.add_argument("--v-max", dest="v_max", type=float)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("spectrum", help="stability spectrum around waves")
    _add_common(p)
    p.add_argument("--v", type=float)
    p.add_argument("--v-max", dest="v_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--subspace", choices=("even", "full"))
    p.add_argument("--fd-step", dest="fd_step", type=float)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config")}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"motility: {exc}", file=sys.stderr)
        return 1
    except (NumericsError, ValueError) as exc:
        print(f"motility: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
