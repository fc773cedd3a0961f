"""Run pipeline and the convergence-study driver.

execute_run turns one RunConfig into (ensemble evolution + diagnostics
rows); run_study sweeps a decreasing epsilon list with the same base
configuration and grades the requested quantities: strictly decreasing
across the sequence, except energy_drift which must stay below its
threshold.  Verdicts are deliberately monotonicity checks, not rate fits:
the provable rates ride on spacing schedules too small to execute, so the
only honest machine-checkable statement is the trend itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, ConvergenceStudy, RunConfig
from .diagnostics import grid_for_ensemble, make_observer
from .discretization import (DegenerateInputError, Ensemble, MollifiedField,
                             initial_lp_norm, mollify_initial, schedule_parameters,
                             tile_and_weight)
from .dynamics import BlowUpError, Integrator, VelocityEvaluator, default_dt, run
from .serfati import serfati_residual
from .transport import TracerCloud, lagrangian_gap, seed_tracers


@dataclass
class RunResult:
    config: RunConfig
    initial: Ensemble
    final: Ensemble
    rows: list
    w0eps: MollifiedField
    delta: float
    h: float
    dt: float
    tracers: TracerCloud | None = None
    summary: dict = field(default_factory=dict)


def prepare_ensemble(cfg: RunConfig) -> tuple[Ensemble, MollifiedField, dict]:
    """Initial data -> mollified datum -> tiled t=0 ensemble (plus summary)."""
    w0 = cfg.build_initial()
    norm_l1 = initial_lp_norm(w0, 1.0)
    horizon = cfg.t_end if cfg.t_end > 0.0 else 1.0
    sched = schedule_parameters(cfg.epsilon, cfg.schedule_mode, horizon=horizon,
                                norm_l1=norm_l1, c0=cfg.c0, c1=cfg.c1, sigma=cfg.sigma)
    delta = cfg.delta_override if cfg.delta_override is not None else sched.delta
    h = cfg.h_override if cfg.h_override is not None else sched.h
    if cfg.h_override is None and sched.h_underflowed:
        raise DegenerateInputError(
            f"schedule {cfg.schedule_mode.value} at eps = {cfg.epsilon} yields "
            f"h = {sched.h:.3e}, below executable double precision; override "
            "schedule.h to run at this radius")
    w0eps = mollify_initial(w0, delta, cfg.profile)
    e0 = tile_and_weight(w0eps, h, cfg.epsilon)
    if float(np.abs(e0.circulations).sum()) == 0.0:
        raise DegenerateInputError("zero field: every cell circulation vanishes")
    summary = {
        "n_blobs": e0.n_blobs,
        "total_circulation": float(e0.circulations.sum()),
        "initial_l1": norm_l1,
        "initial_l2": initial_lp_norm(w0, 2.0),
        "delta": delta,
        "h": h,
    }
    return e0, w0eps, summary


def _serfati_samples(series: list[Ensemble], cutoff: float) -> np.ndarray:
    g = np.abs(series[0].circulations)
    c = (series[0].positions.T @ g) / g.sum() if g.sum() > 0 else np.zeros(2)
    off = 0.5 * cutoff
    return np.array([c, c + (off, 0.0), c - (off, 0.0),
                     c + (0.0, off), c - (0.0, off)])


def _serfati_grid(series: list[Ensemble], cutoff: float):
    lo = np.min([e.positions.min(axis=0) for e in series], axis=0)
    hi = np.max([e.positions.max(axis=0) for e in series], axis=0)
    e0 = series[0]
    margin = max(2.0 * e0.epsilon, 6.0 * cutoff)
    spacing = e0.epsilon / 4.0
    from .diagnostics import GridSpec
    nx = int(np.ceil((hi[0] - lo[0] + 2 * margin) / spacing)) + 1
    ny = int(np.ceil((hi[1] - lo[1] + 2 * margin) / spacing)) + 1
    return GridSpec((float(lo[0] - margin), float(lo[1] - margin)), spacing, nx, ny)


def execute_run(cfg: RunConfig) -> RunResult:
    """One complete configured run; diagnostics rows in observation order.

    When tracers or the velocity-identity residual are configured, the
    extra columns are appended to the matching rows after the sweep (the
    residual is a whole-interval quantity and lands on the final row).
    """
    e0, w0eps, summary = prepare_ensemble(cfg)
    norm_l1 = summary["initial_l1"]
    dt = cfg.dt if cfg.dt is not None else default_dt(cfg.epsilon, max(norm_l1, 1e-12))
    itg = Integrator(dt, cfg.t_end)
    ve = VelocityEvaluator(cfg.method, cfg.theta)
    observer = make_observer(norms=cfg.norms,
                             energy_ball_radius=cfg.energy_ball_radius,
                             energy_spacing=cfg.energy_spacing,
                             f_eps=cfg.f_eps, equi_radii=cfg.equi_radii,
                             velocity_bound=cfg.velocity_bound,
                             grid_spacing=cfg.grid_spacing)

    tc0 = seed_tracers(w0eps, cfg.epsilon, cfg.tracer_pitch) \
        if cfg.tracer_pitch is not None else None
    gap_log: list[float] = []
    series: list[Ensemble] = []

    def on_observe(state: Ensemble, tracer_pos) -> None:
        if cfg.serfati:
            series.append(state)
        if tc0 is not None and tracer_pos is not None:
            tc = tc0.with_positions(tracer_pos, state.time)
            gap_log.append(lagrangian_gap(state, tc, cfg.gap_p))

    final, rows, tracer_pos = run(
        e0, itg, ve, observers=(observer,), observe_every=cfg.observe_every,
        tracers=tc0.positions.copy() if tc0 is not None else None,
        on_observe=on_observe)

    p_key = "inf" if np.isinf(cfg.gap_p) else ("%g" % cfg.gap_p)
    for row, gap in zip(rows, gap_log):
        row[f"lagrangian_gap_{p_key}"] = gap
    if cfg.serfati:
        residual = serfati_residual(series, cfg.serfati_cutoff,
                                    _serfati_grid(series, cfg.serfati_cutoff),
                                    _serfati_samples(series, cfg.serfati_cutoff), ve)
        rows[-1]["serfati_residual"] = residual

    tc_final = tc0.with_positions(tracer_pos, final.time) if tc0 is not None else None
    return RunResult(cfg, e0, final, rows, w0eps, summary["delta"], summary["h"],
                     dt, tc_final, summary)


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------


@dataclass
class StudyResult:
    table: list            # one dict row per epsilon
    verdicts: dict         # quantity -> "PASS" / "FAIL"
    failed_epsilon: float | None = None
    error: Exception | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(v == "PASS" for v in self.verdicts.values())


def _column_for(quantity: str) -> str:
    if quantity.startswith("lp_norm_"):
        return "lp_" + quantity[len("lp_norm_"):]
    return quantity


def _member_config(study: ConvergenceStudy, epsilon: float) -> RunConfig:
    cfg = replace(study.base, epsilon=epsilon)
    wants = set(study.quantities)
    if {"f_eps_l1", "f_eps_l2"} & wants and not cfg.f_eps:
        cfg = replace(cfg, f_eps=True)
    if any(q.startswith("lagrangian_gap_") for q in wants):
        p_txt = next(q for q in wants if q.startswith("lagrangian_gap_"))[len("lagrangian_gap_"):]
        p = float("inf") if p_txt == "inf" else float(p_txt)
        pitch = epsilon / 2.0 if cfg.tracer_pitch is None else min(cfg.tracer_pitch,
                                                                   epsilon / 2.0)
        cfg = replace(cfg, tracer_pitch=pitch, gap_p=p)
    if "energy_drift" in wants and cfg.energy_ball_radius is None:
        raise ConfigError("study.quantities includes energy_drift but "
                          "diagnostics.energy_ball_radius is not set")
    needed_p = [q[len("lp_norm_"):] for q in wants if q.startswith("lp_norm_")]
    extra = tuple(float("inf") if s == "inf" else float(s) for s in needed_p)
    missing = tuple(p for p in extra if p not in cfg.norms)
    if missing:
        cfg = replace(cfg, norms=cfg.norms + missing)
    return cfg


def _energy_drift(rows: list) -> float:
    core = [row["energy_core"] for row in rows if "energy_core" in row]
    if not core:
        raise ConfigError("energy_drift requested but no energy column present")
    base = abs(core[0])
    scale = base if base > 0.0 else 1.0
    return max(abs(c - core[0]) for c in core) / scale


def run_study(study: ConvergenceStudy, on_member=None) -> StudyResult:
    """Sweep the epsilon list; grade each requested quantity.

    on_member, if given, is called with (epsilon, RunResult) after each
    member completes -- the CLI uses it to persist per-member outputs.
    """
    if len(study.epsilons) < 3:
        raise ConfigError(f"a convergence study needs at least 3 epsilons, "
                          f"got {len(study.epsilons)}")
    table: list[dict] = []
    for eps in study.epsilons:
        cfg = _member_config(study, eps)
        try:
            result = execute_run(cfg)
        except (BlowUpError, DegenerateInputError, ValueError) as exc:
            return StudyResult(table, {q: "FAIL" for q in study.quantities},
                               failed_epsilon=eps, error=exc)
        row: dict = {"epsilon": eps, "n_blobs": result.initial.n_blobs}
        for q in study.quantities:
            if q == "energy_drift":
                row[q] = _energy_drift(result.rows)
            else:
                col = _column_for(q)
                val = result.rows[-1].get(col)
                if val is None:
                    return StudyResult(table, {x: "FAIL" for x in study.quantities},
                                       failed_epsilon=eps,
                                       error=ConfigError(f"quantity {q}: column {col} "
                                                         "missing from the member run"))
                row[q] = float(val)
        table.append(row)
        if on_member is not None:
            on_member(eps, result)

    verdicts = {}
    for q in study.quantities:
        vals = [row[q] for row in table]
        if q == "energy_drift":
            ok = all(v <= study.energy_drift_threshold for v in vals)
        else:
            ok = all(b < a for a, b in zip(vals, vals[1:]))
        verdicts[q] = "PASS" if ok else "FAIL"
    return StudyResult(table, verdicts)
