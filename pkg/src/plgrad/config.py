"""Experiment configuration: presets, strict config files, builders.

Config files are flat key = value text with bracketed section headers
([experiment], [problem], [noise]); only documented keys are accepted, and
unknown keys are hard errors so that runs stay reproducible.  Named presets
provide complete defaults which a config file and command-line flags may
override, in that order.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .noise import FAMILIES, NoiseModel
from .problems import (
    OnlineProblem,
    load_demand_response_traces,
    make_demand_response,
    make_logistic,
    make_lti_tracking,
    make_timevarying_ls,
    synth_demand_response_traces,
)
from .prox import Regularizer


class ConfigError(ValueError):
    """Raised for malformed, unknown, or inconsistent configuration."""


_SCHEMA = {
    "experiment": {
        "preset",
        "solver",
        "horizon",
        "trials",
        "seed",
        "deltas",
        "out",
        "bound_inputs",
        "psi_bar",
        "burn_in",
        "x0",
        "step_override",
    },
    "problem": {
        "kind",
        "n",
        "d",
        "m",
        "n_der",
        "mu",
        "l",
        "drift_std",
        "obs_noise_std",
        "spacing",
        "bounds_lo",
        "bounds_hi",
        "regularizer",
        "l1_weight",
        "traces",
    },
    "noise": {
        "family",
        "scale",
        "weibull_shape",
        "bias",
        "envelope_k_scale",
        "per_time_scale",
    },
}

PROBLEM_KINDS = ("timevarying_ls", "logistic", "lti_tracking", "demand_response")


@dataclass
class ExperimentConfig:
    """Resolved, typed experiment description."""

    solver: str = "ogd"
    horizon: int = 500
    trials: int = 100
    seed: int = 42
    deltas: tuple[float, ...] = (0.1, 0.05)
    out_dir: str | None = None
    bound_inputs: str = "empirical"
    psi_bar: float | None = None
    burn_in: int | None = None
    x0: str = "zero"
    step_override: float | None = None
    preset: str | None = None
    problem: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.solver not in ("ogd", "opgm"):
            raise ConfigError(f"solver must be ogd or opgm, got {self.solver!r}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if not self.deltas:
            raise ConfigError("at least one delta is required")
        for d in self.deltas:
            if not 0.0 < d < 1.0:
                raise ConfigError(f"delta must lie in (0, 1), got {d}")
        if self.bound_inputs not in ("empirical", "analytic"):
            raise ConfigError(
                f"bound_inputs must be empirical or analytic, got {self.bound_inputs!r}"
            )
        if self.psi_bar is not None and self.psi_bar < 0:
            raise ConfigError("psi_bar must be nonnegative")
        if self.burn_in is not None and self.burn_in >= self.horizon:
            raise ConfigError("burn_in must be smaller than the horizon")
        kind = self.problem.get("kind")
        if kind not in PROBLEM_KINDS:
            raise ConfigError(f"problem kind must be one of {PROBLEM_KINDS}, got {kind!r}")
        family = self.noise.get("family", "zero")
        if family not in FAMILIES:
            raise ConfigError(f"noise family must be one of {FAMILIES}, got {family!r}")


PRESETS: dict[str, dict] = {
    # drifting least squares with Gaussian gradient noise of variance 1e-3
    "fig1-ls": {
        "experiment": {
            "solver": "ogd",
            "horizon": 500,
            "trials": 100,
            "seed": 42,
            "deltas": (0.1, 0.05),
        },
        "problem": {
            "kind": "timevarying_ls",
            "n": 10,
            "d": 20,
            "mu": 0.1,
            "l": 1.0,
            "drift_std": math.sqrt(0.1),
            "obs_noise_std": math.sqrt(1e-3),
        },
        "noise": {"family": "gaussian_iid", "scale": math.sqrt(1e-3)},
    },
    # same geometry, frozen in time (sigma_t = phi_t = 0)
    "static-ls": {
        "experiment": {
            "solver": "ogd",
            "horizon": 500,
            "trials": 100,
            "seed": 42,
            "deltas": (0.1, 0.05),
        },
        "problem": {
            "kind": "timevarying_ls",
            "n": 10,
            "d": 20,
            "mu": 0.1,
            "l": 1.0,
            "drift_std": 0.0,
            "obs_noise_std": 0.0,
        },
        "noise": {"family": "gaussian_iid", "scale": math.sqrt(1e-3)},
    },
    # box-constrained power tracking from noisy scalar measurements,
    # desk-scale device count (pass n_der = 500 for the full-size run)
    "fig3-demand-response": {
        "experiment": {
            "solver": "opgm",
            "horizon": 600,
            "trials": 50,
            "seed": 42,
            "deltas": (0.1, 0.05),
        },
        "problem": {"kind": "demand_response", "n_der": 20},
        "noise": {"family": "gaussian_iid", "scale": 10.0},
    },
    "logistic": {
        "experiment": {
            "solver": "ogd",
            "horizon": 50,
            "trials": 20,
            "seed": 42,
            "deltas": (0.1,),
        },
        "problem": {"kind": "logistic", "n": 10, "d": 40, "drift_std": 0.01},
        "noise": {"family": "gaussian_iid", "scale": 0.05},
    },
    "lti": {
        "experiment": {
            "solver": "ogd",
            "horizon": 300,
            "trials": 50,
            "seed": 42,
            "deltas": (0.1, 0.05),
        },
        "problem": {"kind": "lti_tracking", "n": 8, "m": 12},
        "noise": {"family": "gaussian_iid", "scale": 0.05},
    },
}


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    return tuple(float(p) for p in parts)


_EXPERIMENT_PARSERS = {
    "preset": str,
    "solver": str,
    "horizon": int,
    "trials": int,
    "seed": int,
    "deltas": _parse_float_list,
    "out": str,
    "bound_inputs": str,
    "psi_bar": float,
    "burn_in": int,
    "x0": str,
    "step_override": float,
}

_PROBLEM_PARSERS = {
    "kind": str,
    "n": int,
    "d": int,
    "m": int,
    "n_der": int,
    "mu": float,
    "l": float,
    "drift_std": float,
    "obs_noise_std": float,
    "spacing": str,
    "bounds_lo": _parse_float_list,
    "bounds_hi": _parse_float_list,
    "regularizer": str,
    "l1_weight": float,
    "traces": str,
}

_NOISE_PARSERS = {
    "family": str,
    "scale": float,
    "weibull_shape": float,
    "bias": float,
    "envelope_k_scale": float,
    "per_time_scale": _parse_float_list,
}

_PARSERS = {
    "experiment": _EXPERIMENT_PARSERS,
    "problem": _PROBLEM_PARSERS,
    "noise": _NOISE_PARSERS,
}


def load_config_file(path) -> dict[str, dict]:
    """Parse and type-check a config file; unknown keys are errors."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                out[section][key] = _PARSERS[section][key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {section}.{key}: {raw!r}") from exc
    return out


def make_config(
    file_sections: dict | None = None, overrides: dict | None = None
) -> ExperimentConfig:
    """Layer preset defaults, config-file values, and CLI overrides."""
    file_sections = file_sections or {}
    overrides = overrides or {}

    preset_name = overrides.get("preset") or file_sections.get("experiment", {}).get("preset")
    layered: dict[str, dict] = {"experiment": {}, "problem": {}, "noise": {}}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(
                f"unknown preset {preset_name!r}; available: {sorted(PRESETS)}"
            )
        for section, values in PRESETS[preset_name].items():
            layered[section].update(values)
    for section in ("experiment", "problem", "noise"):
        layered[section].update(file_sections.get(section, {}))
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "preset":
            continue
        layered["experiment"][key] = value

    exp = layered["experiment"]
    exp.pop("preset", None)
    cfg = ExperimentConfig(
        solver=exp.get("solver", "ogd"),
        horizon=exp.get("horizon", 500),
        trials=exp.get("trials", 100),
        seed=exp.get("seed", 42),
        deltas=tuple(exp.get("deltas", (0.1, 0.05))),
        out_dir=exp.get("out"),
        bound_inputs=exp.get("bound_inputs", "empirical"),
        psi_bar=exp.get("psi_bar"),
        burn_in=exp.get("burn_in"),
        x0=exp.get("x0", "zero"),
        step_override=exp.get("step_override"),
        preset=preset_name,
        problem=dict(layered["problem"]),
        noise=dict(layered["noise"]),
    )
    cfg.validate()
    return cfg


def build_noise(cfg: ExperimentConfig) -> NoiseModel:
    spec = dict(cfg.noise)
    family = spec.pop("family", "zero")
    per_time = spec.pop("per_time_scale", None)
    model = NoiseModel(
        family=family,
        scale=spec.pop("scale", 0.0),
        weibull_shape=spec.pop("weibull_shape", 1.0),
        bias=spec.pop("bias", 0.0),
        per_time_scale=tuple(per_time) if per_time is not None else None,
        envelope_k_scale=spec.pop("envelope_k_scale", 1.0),
    )
    if spec:
        raise ConfigError(f"unused noise settings: {sorted(spec)}")
    if model.per_time_scale is not None and len(model.per_time_scale) < cfg.horizon:
        raise ConfigError("per_time_scale must cover the horizon")
    return model


def _demand_response_bounds(n_der: int, spec: dict) -> tuple[np.ndarray, np.ndarray]:
    lo_raw = spec.pop("bounds_lo", None)
    hi_raw = spec.pop("bounds_hi", None)
    if lo_raw is None and hi_raw is None:
        # half storage in [-50, 50] kW, half solar in [0, 50] kW
        n_storage = (n_der + 1) // 2
        lo = np.concatenate([np.full(n_storage, -50.0), np.zeros(n_der - n_storage)])
        hi = np.full(n_der, 50.0)
        return lo, hi
    if lo_raw is None or hi_raw is None:
        raise ConfigError("bounds_lo and bounds_hi must be given together")

    def expand(raw, name):
        arr = np.asarray(raw, dtype=float)
        if arr.size == 1:
            return np.full(n_der, float(arr))
        if arr.size != n_der:
            raise ConfigError(f"{name} must have 1 or {n_der} entries, got {arr.size}")
        return arr

    return expand(lo_raw, "bounds_lo"), expand(hi_raw, "bounds_hi")


def build_problem(cfg: ExperimentConfig) -> OnlineProblem:
    spec = dict(cfg.problem)
    kind = spec.pop("kind")
    reg_override = spec.pop("regularizer", None)
    l1_weight = spec.pop("l1_weight", 0.0)

    if kind == "timevarying_ls":
        problem = make_timevarying_ls(
            n=spec.pop("n", 10),
            d=spec.pop("d", 20),
            mu=spec.pop("mu", 0.1),
            l=spec.pop("l", 1.0),
            drift_std=spec.pop("drift_std", 0.0),
            obs_noise_std=spec.pop("obs_noise_std", 0.0),
            seed=cfg.seed,
            horizon=cfg.horizon,
            spacing=spec.pop("spacing", "eigenvalues"),
        )
    elif kind == "logistic":
        problem = make_logistic(
            n=spec.pop("n", 10),
            d=spec.pop("d", 40),
            seed=cfg.seed,
            horizon=cfg.horizon,
            drift_std=spec.pop("drift_std", 0.0),
        )
    elif kind == "lti_tracking":
        problem = make_lti_tracking(
            n=spec.pop("n", 8),
            m=spec.pop("m", 12),
            seed=cfg.seed,
            horizon=cfg.horizon,
        )
    else:
        n_der = spec.pop("n_der", 20)
        lo, hi = _demand_response_bounds(n_der, spec)
        traces_path = spec.pop("traces", None)
        if traces_path is not None:
            w_trace, p_ref = load_demand_response_traces(traces_path)
        else:
            w_trace, p_ref = synth_demand_response_traces(cfg.horizon, cfg.seed)
        problem = make_demand_response(
            n_der=n_der,
            seed=cfg.seed,
            horizon=cfg.horizon,
            p_ref_trace=p_ref,
            w_trace=w_trace,
            bounds_lo=lo,
            bounds_hi=hi,
        )
    if spec:
        raise ConfigError(f"settings not applicable to {kind}: {sorted(spec)}")

    if reg_override is not None:
        if problem.regularizer is not None:
            raise ConfigError(f"{kind} already defines its regularizer")
        if reg_override == "none":
            problem.regularizer = Regularizer.none()
        elif reg_override == "l1":
            problem.regularizer = Regularizer.l1(l1_weight)
        else:
            raise ConfigError(f"regularizer override must be none or l1, got {reg_override!r}")

    if cfg.solver == "ogd" and not problem.smooth_only():
        raise ConfigError("ogd forbids a regularizer; use solver = opgm")
    if cfg.solver == "opgm" and problem.regularizer is None:
        raise ConfigError(
            "opgm requires a prox handle; set problem regularizer = none explicitly "
            "to run it on a smooth cost"
        )
    return problem


def initial_point(cfg: ExperimentConfig, problem: OnlineProblem) -> np.ndarray:
    if cfg.x0 == "zero":
        return np.zeros(problem.n)
    if cfg.x0 == "ones":
        return np.ones(problem.n)
    values = _parse_float_list(cfg.x0)
    if len(values) != problem.n:
        raise ConfigError(f"x0 must be 'zero', 'ones', or {problem.n} comma-separated values")
    return np.asarray(values)
