"""Blob dynamics: regularized Biot-Savart sums and the RK4 ensemble ODE.

The blobs move in the velocity field they generate,

    dX_i/dt = sum_j Gamma_j K_eps(X_i - X_j),

integrated by classical fixed-step RK4 applied to all positions as one
coupled system (every stage re-evaluates all velocities at the stage
positions).  Passive tracers, when present, ride the same RK4 stages
against the concurrent blob stage positions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _fast
from .discretization import Ensemble


class BlowUpError(RuntimeError):
    """A position became non-finite; the method is provably global, so this
    means a bug or a wildly large dt."""

    def __init__(self, blob_index: int, step: int, time: float, records=None, tracer: bool = False):
        what = "tracer" if tracer else "blob"
        super().__init__(f"blow-up detected: non-finite position of {what} {blob_index} "
                         f"at step {step} (t = {time:.6g})")
        self.blob_index = blob_index
        self.step = step
        self.time = time
        self.records = records if records is not None else []


class EvaluatorMethod(enum.Enum):
    DIRECT = "direct"
    TREE = "tree"

    @classmethod
    def parse(cls, name: str) -> "EvaluatorMethod":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown evaluator {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class VelocityEvaluator:
    """DIRECT O(N^2) summation or Barnes-Hut TREE with opening angle theta."""

    method: EvaluatorMethod = EvaluatorMethod.DIRECT
    theta: float = 0.5

    def __post_init__(self) -> None:
        if self.method is EvaluatorMethod.TREE and not 0.0 < self.theta <= 1.0:
            raise ValueError("tree opening angle must lie in (0, 1]")

    def self_velocities(self, positions: np.ndarray, circulations: np.ndarray,
                        epsilon: float, profile_id: int) -> np.ndarray:
        n = positions.shape[0]
        if n == 0:
            return np.zeros((0, 2))
        px = np.ascontiguousarray(positions[:, 0])
        py = np.ascontiguousarray(positions[:, 1])
        if self.method is EvaluatorMethod.TREE and n > 1:
            tree = _fast.Quadtree(px, py, circulations)
            vx, vy = tree.velocity_self(epsilon, profile_id, self.theta)
        else:
            vx, vy = _fast.velocity_direct(px, py, px, py, circulations,
                                           epsilon, profile_id)
        return np.column_stack([vx, vy])

    def target_velocities(self, targets: np.ndarray, positions: np.ndarray,
                          circulations: np.ndarray, epsilon: float,
                          profile_id: int) -> np.ndarray:
        if positions.shape[0] == 0 or targets.shape[0] == 0:
            return np.zeros((targets.shape[0], 2))
        tx = np.ascontiguousarray(targets[:, 0])
        ty = np.ascontiguousarray(targets[:, 1])
        px = np.ascontiguousarray(positions[:, 0])
        py = np.ascontiguousarray(positions[:, 1])
        if self.method is EvaluatorMethod.TREE and positions.shape[0] > 1:
            tree = _fast.Quadtree(px, py, circulations)
            vx, vy = tree.velocity_targets(tx, ty, epsilon, profile_id, self.theta)
        else:
            vx, vy = _fast.velocity_direct(tx, ty, px, py, circulations,
                                           epsilon, profile_id)
        return np.column_stack([vx, vy])


DIRECT = VelocityEvaluator(EvaluatorMethod.DIRECT)


@dataclass(frozen=True)
class Integrator:
    """Classical RK4 with fixed dt; the last step is shortened to land on t_end."""

    dt: float
    t_end: float

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    def n_steps(self, t_start: float = 0.0) -> int:
        span = self.t_end - t_start
        if span <= 0.0:
            return 0
        return max(1, int(math.ceil(span / self.dt - 1e-12)))


def default_dt(epsilon: float, norm_l1: float) -> float:
    """min(1e-2, 0.1 eps^2 / ||omega_0||_L1): keeps dt * Lip(v_eps) small,
    using the O(1/eps^2) gradient scale of the regularized field."""
    if norm_l1 <= 0.0:
        return 1e-2
    return min(1e-2, 0.1 * epsilon**2 / norm_l1)


def velocity_at(e: Ensemble, x: np.ndarray,
                evaluator: VelocityEvaluator = DIRECT) -> np.ndarray:
    """v_eps(t, x) = sum_i Gamma_i K_eps(x - X_i); x is one point or (M, 2)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    out = evaluator.target_velocities(pts, e.positions, e.circulations,
                                      e.epsilon, e.kernel_profile_id())
    if np.ndim(x) == 1:
        return out[0]
    return out


def tree_velocity_all(e: Ensemble, theta: float) -> np.ndarray:
    """Barnes-Hut velocities at every blob (monopole far field, direct near field)."""
    ve = VelocityEvaluator(EvaluatorMethod.TREE, theta)
    return ve.self_velocities(e.positions, e.circulations, e.epsilon,
                              e.kernel_profile_id())


def _rk4_stage_rates(positions, circulations, epsilon, profile_id, evaluator,
                     tracers):
    vb = evaluator.self_velocities(positions, circulations, epsilon, profile_id)
    vt = None
    if tracers is not None:
        vt = evaluator.target_velocities(tracers, positions, circulations,
                                         epsilon, profile_id)
    return vb, vt


def rk4_step(e: Ensemble, dt: float, evaluator: VelocityEvaluator = DIRECT,
             tracers: np.ndarray | None = None):
    """One RK4 step of the coupled blob(+tracer) system.

    Returns (new_ensemble, new_tracers); new_tracers is None when tracers is.
    Tracers are passive: they never feed back into the blob velocities.
    """
    pos = e.positions
    gam = e.circulations
    eps = e.epsilon
    pid = e.kernel_profile_id()

    k1b, k1t = _rk4_stage_rates(pos, gam, eps, pid, evaluator, tracers)
    p2 = pos + (0.5 * dt) * k1b
    t2 = None if tracers is None else tracers + (0.5 * dt) * k1t
    k2b, k2t = _rk4_stage_rates(p2, gam, eps, pid, evaluator, t2)
    p3 = pos + (0.5 * dt) * k2b
    t3 = None if tracers is None else tracers + (0.5 * dt) * k2t
    k3b, k3t = _rk4_stage_rates(p3, gam, eps, pid, evaluator, t3)
    p4 = pos + dt * k3b
    t4 = None if tracers is None else tracers + dt * k3t
    k4b, k4t = _rk4_stage_rates(p4, gam, eps, pid, evaluator, t4)

    new_pos = pos + (dt / 6.0) * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    new_tr = None
    if tracers is not None:
        new_tr = tracers + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t)
    return e.with_positions(new_pos, e.time + dt), new_tr


def _check_finite(positions: np.ndarray, step_no: int, time: float, records,
                  tracer: bool = False):
    finite = np.isfinite(positions)
    if not finite.all():
        bad = int(np.argwhere(~finite.all(axis=1)).ravel()[0])
        raise BlowUpError(bad, step_no, time, records, tracer)


def step(e: Ensemble, itg: Integrator, ve: VelocityEvaluator = DIRECT,
         dt: float | None = None) -> Ensemble:
    """Advance one RK4 step of size itg.dt (or an explicit dt override)."""
    use_dt = itg.dt if dt is None else dt
    new_e, _ = rk4_step(e, use_dt, ve)
    _check_finite(new_e.positions, 1, new_e.time, [])
    return new_e


Observer = Callable[[Ensemble], Mapping[str, float]]


def run(e0: Ensemble, itg: Integrator, ve: VelocityEvaluator = DIRECT,
        observers: Sequence[Observer] = (), observe_every: int = 1,
        tracers: np.ndarray | None = None,
        on_observe: Callable[[Ensemble, np.ndarray | None], None] | None = None):
    """Advance e0 to itg.t_end, observing at t=0, every observe_every steps,
    and at t_end.

    Returns (final_ensemble, records, final_tracers); records is a list of
    dict rows ('time' plus whatever the observers report, merged in order).
    On blow-up the partial records ride on the raised BlowUpError.
    """
    if observe_every < 1:
        raise ValueError("observe_every must be >= 1")
    records: list[dict] = []

    def observe(state: Ensemble, tr):
        row: dict = {"time": state.time}
        for obs in observers:
            row.update(obs(state))
        records.append(row)
        if on_observe is not None:
            on_observe(state, tr)

    e = e0
    tr = tracers
    observe(e, tr)
    n = itg.n_steps(e0.time)
    for k in range(n):
        remaining = itg.t_end - e.time
        dt = min(itg.dt, remaining)
        e, tr = rk4_step(e, dt, ve, tr)
        if not np.isfinite(e.positions).all():
            _check_finite(e.positions, k + 1, e.time, records)
        if tr is not None and not np.isfinite(tr).all():
            _check_finite(tr, k + 1, e.time, records, tracer=True)
        last = k == n - 1
        if (k + 1) % observe_every == 0 and not last:
            observe(e, tr)
        elif last:
            observe(e, tr)
    return e, records, tr
