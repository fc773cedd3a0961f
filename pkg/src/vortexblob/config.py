"""Flat, typed run configuration: `section.key = value` lines.

One option per line, `#` comment lines, no nesting -- diff-friendly and
trivially portable.  Parsing is schema-driven so every error message can
name the offending line and key.  The canonical serialization (fixed key
order, 17-digit floats) is what gets hashed and persisted next to outputs;
re-running a persisted config reproduces outputs bit-identically.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

from .discretization import (CustomGrid, GaussianDipole, InitialVorticity, Patch,
                             PowerSpike, ScheduleMode)
from .dynamics import EvaluatorMethod
from .kernels import Profile


class ConfigError(ValueError):
    """Malformed configuration; message carries line/key diagnostics."""


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_float(s: str) -> float:
    v = float(s)
    if math.isnan(v):
        raise ValueError("nan is not a valid value")
    return v


def _parse_float_list(s: str) -> tuple[float, ...]:
    items = [tok.strip() for tok in s.split(",") if tok.strip()]
    return tuple(float(tok) for tok in items)


def _parse_str_list(s: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in s.split(",") if tok.strip())


_INITIAL_PARAMS = {
    "patch": ("amplitude", "radius"),
    "gaussian_dipole": ("amplitude", "separation", "core_width", "cut_radius"),
    "power_spike": ("q", "radius", "amplitude"),
    "custom_grid": ("path",),
}

# key -> (converter, default); None default means "unset is allowed"
_RUN_SCHEMA: dict = {
    "initial.kind": (str, "patch"),
    "run.epsilon": (_parse_float, 0.2),
    "run.profile": (str, "poly6"),
    "run.rng_seed": (int, 0),
    "schedule.mode": (str, "practical"),
    "schedule.delta": (_parse_float, None),
    "schedule.h": (_parse_float, None),
    "schedule.sigma": (_parse_float, 0.2),
    "schedule.c0": (_parse_float, 1.0),
    "schedule.c1": (_parse_float, 1.0),
    "integrator.dt": (_parse_float, None),
    "integrator.t_end": (_parse_float, 1.0),
    "evaluator.method": (str, "direct"),
    "evaluator.theta": (_parse_float, 0.5),
    "observe.every": (int, 1),
    "diagnostics.norms": (_parse_float_list, (1.0, 2.0, float("inf"))),
    "diagnostics.grid_spacing": (_parse_float, None),
    "diagnostics.energy_ball_radius": (_parse_float, None),
    "diagnostics.energy_spacing": (_parse_float, None),
    "diagnostics.f_eps": (_parse_bool, False),
    "diagnostics.equi_radii": (_parse_float_list, ()),
    "diagnostics.tracer_pitch": (_parse_float, None),
    "diagnostics.gap_p": (_parse_float, 1.0),
    "diagnostics.serfati": (_parse_bool, False),
    "diagnostics.serfati_cutoff": (_parse_float, 1.0),
    "diagnostics.velocity_bound": (_parse_bool, False),
    "output.dir": (str, "out"),
}

_STUDY_SCHEMA: dict = {
    "study.epsilons": (_parse_float_list, ()),
    "study.quantities": (_parse_str_list, ("f_eps_l1",)),
    "study.energy_drift_threshold": (_parse_float, 1e-3),
}

_FIXED_QUANTITIES = ("f_eps_l1", "f_eps_l2", "energy_drift")


def _valid_quantity(name: str) -> bool:
    """f_eps_l1 | f_eps_l2 | energy_drift | lagrangian_gap_<p> | lp_norm_<p>."""
    if name in _FIXED_QUANTITIES:
        return True
    for prefix in ("lagrangian_gap_", "lp_norm_"):
        if name.startswith(prefix):
            suffix = name[len(prefix):]
            if suffix == "inf":
                return True
            try:
                return float(suffix) >= 1.0
            except ValueError:
                return False
    return False


@dataclass(frozen=True)
class RunConfig:
    initial_kind: str = "patch"
    initial_params: dict = field(default_factory=dict)
    epsilon: float = 0.2
    profile: Profile = Profile.POLY6
    rng_seed: int = 0
    schedule_mode: ScheduleMode = ScheduleMode.PRACTICAL
    delta_override: float | None = None
    h_override: float | None = None
    sigma: float = 0.2
    c0: float = 1.0
    c1: float = 1.0
    dt: float | None = None
    t_end: float = 1.0
    method: EvaluatorMethod = EvaluatorMethod.DIRECT
    theta: float = 0.5
    observe_every: int = 1
    norms: tuple = (1.0, 2.0, float("inf"))
    grid_spacing: float | None = None
    energy_ball_radius: float | None = None
    energy_spacing: float | None = None
    f_eps: bool = False
    equi_radii: tuple = ()
    tracer_pitch: float | None = None
    gap_p: float = 1.0
    serfati: bool = False
    serfati_cutoff: float = 1.0
    velocity_bound: bool = False
    out_dir: str = "out"

    def __post_init__(self) -> None:
        if self.initial_kind not in _INITIAL_PARAMS:
            raise ConfigError(f"initial.kind: unknown kind {self.initial_kind!r} "
                              f"(choose from {sorted(_INITIAL_PARAMS)})")
        allowed = _INITIAL_PARAMS[self.initial_kind]
        for k in self.initial_params:
            if k not in allowed:
                raise ConfigError(f"initial.{k}: not a parameter of "
                                  f"{self.initial_kind} (allowed: {allowed})")
        if not (0.0 < self.epsilon < 1.0):
            raise ConfigError(f"run.epsilon: must lie in (0, 1), got {self.epsilon}")
        if self.t_end < 0.0:
            raise ConfigError(f"integrator.t_end: must be >= 0, got {self.t_end}")
        if self.dt is not None and self.dt <= 0.0:
            raise ConfigError(f"integrator.dt: must be positive, got {self.dt}")
        if self.observe_every < 1:
            raise ConfigError(f"observe.every: must be >= 1, got {self.observe_every}")

    def build_initial(self) -> InitialVorticity:
        p = self.initial_params
        if self.initial_kind == "patch":
            return Patch(**p)
        if self.initial_kind == "gaussian_dipole":
            return GaussianDipole(**p)
        if self.initial_kind == "power_spike":
            return PowerSpike(**p)
        from .snapshots import read_grid_field
        if "path" not in p:
            raise ConfigError("initial.path: required for custom_grid")
        f = read_grid_field(p["path"])
        return CustomGrid(f.values, f.spec.origin, f.spec.spacing)

    def with_epsilon(self, epsilon: float) -> "RunConfig":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class ConvergenceStudy:
    base: RunConfig
    epsilons: tuple
    quantities: tuple = ("f_eps_l1",)
    energy_drift_threshold: float = 1e-3

    def __post_init__(self) -> None:
        eps = self.epsilons
        if any(not (0.0 < e < 1.0) for e in eps):
            raise ConfigError(f"study.epsilons: every value must lie in (0, 1), got {eps}")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError(f"study.epsilons: must be strictly decreasing, got {eps}")
        for q in self.quantities:
            if not _valid_quantity(q):
                raise ConfigError(
                    f"study.quantities: unknown quantity {q!r} (choose from "
                    f"{_FIXED_QUANTITIES} or lagrangian_gap_<p> / lp_norm_<p>)")


def _parse_lines(text: str) -> dict[str, tuple[str, int]]:
    """Raw `key -> (value, line_no)` map with duplicate/format diagnostics."""
    out: dict[str, tuple[str, int]] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected 'section.key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {no}: empty key")
        if key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r} "
                              f"(first set on line {out[key][1]})")
        out[key] = (val, no)
    return out


def _convert(raw: dict, schema: dict, prefix_ok) -> dict:
    values = {}
    for key, (val, no) in raw.items():
        if key in schema:
            conv, _default = schema[key]
            try:
                values[key] = conv(val)
            except ValueError as exc:
                raise ConfigError(f"line {no}: {key}: {exc}") from exc
        elif not prefix_ok(key):
            raise ConfigError(f"line {no}: unknown key {key!r}")
    return values


def parse_run_config(text: str, allow_study_keys: bool = False) -> RunConfig:
    raw = _parse_lines(text)

    def prefix_ok(key: str) -> bool:
        if key.startswith("initial.") and key != "initial.kind":
            return True
        return allow_study_keys and key in _STUDY_SCHEMA

    values = _convert(raw, _RUN_SCHEMA, prefix_ok)
    kind = values.get("initial.kind", "patch")
    params: dict = {}
    for key, (val, no) in raw.items():
        if key.startswith("initial.") and key != "initial.kind":
            name = key[len("initial."):]
            if kind == "custom_grid" and name == "path":
                params[name] = val
            else:
                try:
                    params[name] = _parse_float(val)
                except ValueError as exc:
                    raise ConfigError(f"line {no}: {key}: {exc}") from exc

    def get(key):
        return values.get(key, _RUN_SCHEMA[key][1])

    try:
        profile = Profile.parse(get("run.profile"))
    except ValueError as exc:
        raise ConfigError(f"run.profile: {exc}") from exc
    try:
        mode = ScheduleMode.parse(get("schedule.mode"))
    except ValueError as exc:
        raise ConfigError(f"schedule.mode: {exc}") from exc
    try:
        method = EvaluatorMethod.parse(get("evaluator.method"))
    except ValueError as exc:
        raise ConfigError(f"evaluator.method: {exc}") from exc

    return RunConfig(
        initial_kind=kind, initial_params=params,
        epsilon=get("run.epsilon"), profile=profile, rng_seed=get("run.rng_seed"),
        schedule_mode=mode, delta_override=get("schedule.delta"),
        h_override=get("schedule.h"), sigma=get("schedule.sigma"),
        c0=get("schedule.c0"), c1=get("schedule.c1"),
        dt=get("integrator.dt"), t_end=get("integrator.t_end"),
        method=method, theta=get("evaluator.theta"),
        observe_every=get("observe.every"), norms=get("diagnostics.norms"),
        grid_spacing=get("diagnostics.grid_spacing"),
        energy_ball_radius=get("diagnostics.energy_ball_radius"),
        energy_spacing=get("diagnostics.energy_spacing"),
        f_eps=get("diagnostics.f_eps"), equi_radii=get("diagnostics.equi_radii"),
        tracer_pitch=get("diagnostics.tracer_pitch"), gap_p=get("diagnostics.gap_p"),
        serfati=get("diagnostics.serfati"),
        serfati_cutoff=get("diagnostics.serfati_cutoff"),
        velocity_bound=get("diagnostics.velocity_bound"),
        out_dir=get("output.dir"))


def parse_study_config(text: str) -> ConvergenceStudy:
    raw = _parse_lines(text)
    if "study.epsilons" not in raw:
        raise ConfigError("study.epsilons: required for a convergence study")
    base = parse_run_config(text, allow_study_keys=True)
    values = _convert(raw, _STUDY_SCHEMA,
                      lambda key: key in _RUN_SCHEMA or key.startswith("initial."))

    def get(key):
        return values.get(key, _STUDY_SCHEMA[key][1])

    return ConvergenceStudy(base=base, epsilons=get("study.epsilons"),
                            quantities=get("study.quantities"),
                            energy_drift_threshold=get("study.energy_drift_threshold"))


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


def run_config_text(cfg: RunConfig) -> str:
    """Canonical serialization: fixed key order, defaults included."""
    pairs = [("initial.kind", cfg.initial_kind)]
    pairs += [(f"initial.{k}", cfg.initial_params[k]) for k in sorted(cfg.initial_params)]
    pairs += [
        ("run.epsilon", cfg.epsilon), ("run.profile", cfg.profile.value),
        ("run.rng_seed", cfg.rng_seed), ("schedule.mode", cfg.schedule_mode.value),
        ("schedule.delta", cfg.delta_override), ("schedule.h", cfg.h_override),
        ("schedule.sigma", cfg.sigma), ("schedule.c0", cfg.c0), ("schedule.c1", cfg.c1),
        ("integrator.dt", cfg.dt), ("integrator.t_end", cfg.t_end),
        ("evaluator.method", cfg.method.value), ("evaluator.theta", cfg.theta),
        ("observe.every", cfg.observe_every), ("diagnostics.norms", cfg.norms),
        ("diagnostics.grid_spacing", cfg.grid_spacing),
        ("diagnostics.energy_ball_radius", cfg.energy_ball_radius),
        ("diagnostics.energy_spacing", cfg.energy_spacing),
        ("diagnostics.f_eps", cfg.f_eps), ("diagnostics.equi_radii", cfg.equi_radii),
        ("diagnostics.tracer_pitch", cfg.tracer_pitch),
        ("diagnostics.gap_p", cfg.gap_p), ("diagnostics.serfati", cfg.serfati),
        ("diagnostics.serfati_cutoff", cfg.serfati_cutoff),
        ("diagnostics.velocity_bound", cfg.velocity_bound),
        ("output.dir", cfg.out_dir),
    ]
    lines = [f"{k} = {_fmt_value(v)}" for k, v in pairs if v is not None]
    return "\n".join(lines) + "\n"


def study_config_text(study: ConvergenceStudy) -> str:
    lines = run_config_text(study.base).rstrip("\n").splitlines()
    lines.append(f"study.epsilons = {_fmt_value(study.epsilons)}")
    lines.append(f"study.quantities = {_fmt_value(study.quantities)}")
    lines.append(f"study.energy_drift_threshold = {_fmt_value(study.energy_drift_threshold)}")
    return "\n".join(lines) + "\n"


def config_hash(text: str) -> str:
    """Hash of the canonical serialization (first 16 hex digits of SHA-256)."""
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def run_config_hash(cfg: RunConfig) -> str:
    return config_hash(run_config_text(cfg))
