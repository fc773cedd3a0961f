"""Pure-transport comparison: passive markers carrying their initial
vorticity values along the regularized flow.

The exact solution of the transport equation with the blob velocity is
omega0_delta composed with the inverse flow; sampling it on markers seeded
at lattice nodes and re-mollifying gives a field directly comparable to the
blob reconstruction.  The gap between the two is the Lagrangian distance
this library measures.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fast
from .diagnostics import GridField, GridSpec, _check_resolution, grid_for_ensemble, \
    lp_norm, reconstruct_vorticity
from .discretization import Ensemble, MollifiedField
from .dynamics import DIRECT, Integrator, VelocityEvaluator, run


@dataclass(frozen=True)
class TracerCloud:
    """Markers advected by the blob velocity, each carrying a frozen value.

    positions move; seeds, values and the common quadrature weight
    (pitch squared) never change after seeding.
    """

    seeds: np.ndarray       # (m, 2) initial marker positions
    positions: np.ndarray   # (m, 2) current marker positions
    values: np.ndarray      # (m,) carried samples of the mollified datum
    pitch: float
    time: float = 0.0

    def __post_init__(self) -> None:
        for name in ("seeds", "positions", "values"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_markers(self) -> int:
        return self.seeds.shape[0]

    @property
    def weight(self) -> float:
        return self.pitch * self.pitch

    def with_positions(self, positions: np.ndarray, time: float) -> "TracerCloud":
        return TracerCloud(self.seeds, positions, self.values, self.pitch, time)


def seed_tracers(w0eps: MollifiedField, epsilon: float, pitch: float) -> TracerCloud:
    """Markers at pitch*(j1, j2) covering the datum support plus one pitch.

    pitch must not exceed eps/2: coarser marker spacing under-resolves the
    re-mollified transport field and the comparison would measure seeding
    noise, not the method.
    """
    if pitch <= 0.0:
        raise ValueError(f"pitch must be positive, got {pitch}")
    if pitch > epsilon / 2.0 + 1e-12:
        raise ValueError(
            f"pitch {pitch} > eps/2 = {epsilon / 2.0}: marker spacing this coarse "
            "under-resolves the transported field; refine the seeding")
    radius = w0eps.support_radius + pitch
    n = int(np.floor(radius / pitch)) + 1
    idx = np.arange(-n, n + 1)
    jj1, jj2 = np.meshgrid(idx, idx, indexing="ij")
    pts = pitch * np.column_stack([jj1.ravel(), jj2.ravel()]).astype(np.float64)
    keep = np.hypot(pts[:, 0], pts[:, 1]) <= radius
    pts = pts[keep]
    vals = w0eps.evaluate(pts)
    return TracerCloud(pts, pts.copy(), vals, pitch)


def advect_tracers(tc: TracerCloud, e0: Ensemble, itg: Integrator,
                   evaluator: VelocityEvaluator = DIRECT) -> tuple[TracerCloud, Ensemble]:
    """Advance markers to itg.t_end alongside the blob ensemble.

    Marker stages are evaluated against the concurrent blob stage positions
    inside one joint RK4 step, so the marker time grid coincides with the
    blob step times by construction.  Returns (markers, blobs) at t_end.
    """
    if abs(tc.time - e0.time) > 1e-12:
        raise ValueError(f"tracer time {tc.time} != ensemble time {e0.time}")
    final, _, tracer_pos = run(e0, itg, evaluator, tracers=tc.positions.copy())
    return tc.with_positions(tracer_pos, final.time), final


def transport_field(tc: TracerCloud, epsilon: float, grid: GridSpec,
                    profile_id: int) -> GridField:
    """Re-mollified transport solution on the grid:
    sum_j w phi_eps(x - Y_j) omega0_delta(y_j)."""
    _check_resolution(grid.spacing, epsilon)
    vals = _fast.scatter_blob_sums(
        np.ascontiguousarray(tc.positions[:, 0]),
        np.ascontiguousarray(tc.positions[:, 1]),
        np.ascontiguousarray(tc.values * tc.weight),
        epsilon, profile_id, grid.origin, grid.spacing, grid.nx, grid.ny)
    return GridField(grid, vals)


def transport_field_at(tc: TracerCloud, epsilon: float, points: np.ndarray,
                       profile, chunk: int = 8192) -> np.ndarray:
    """Same sum at arbitrary points (chunked dense evaluation)."""
    from .kernels import Mollifier
    moll = Mollifier(profile, epsilon)
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    w = tc.values * tc.weight
    out = np.empty(pts.shape[0])
    for lo in range(0, pts.shape[0], chunk):
        block = pts[lo:lo + chunk]
        dx = block[:, None, 0] - tc.positions[None, :, 0]
        dy = block[:, None, 1] - tc.positions[None, :, 1]
        out[lo:lo + chunk] = moll.value_radial(np.hypot(dx, dy)) @ w
    return out


def lagrangian_gap(e: Ensemble, tc: TracerCloud, p: float,
                   grid: GridSpec | None = None) -> float:
    """L^p distance between the blob reconstruction and the transport field.

    Both fields are sampled on one shared grid, which must cover both
    supports (mollifier footprint included) -- otherwise mass parked
    outside the window would silently shrink the gap.
    """
    if abs(e.time - tc.time) > 1e-12:
        raise ValueError(f"ensemble time {e.time} != tracer time {tc.time}")
    margin = max(2.0 * e.epsilon, 0.0)
    if grid is None:
        lo = np.minimum(e.positions.min(axis=0), tc.positions.min(axis=0)) if tc.n_markers \
            else e.positions.min(axis=0)
        hi = np.maximum(e.positions.max(axis=0), tc.positions.max(axis=0)) if tc.n_markers \
            else e.positions.max(axis=0)
        spacing = e.epsilon / 4.0
        nx = int(np.ceil((hi[0] - lo[0] + 2 * margin) / spacing)) + 1
        ny = int(np.ceil((hi[1] - lo[1] + 2 * margin) / spacing)) + 1
        grid = GridSpec((float(lo[0] - margin), float(lo[1] - margin)), spacing, nx, ny)
    else:
        for pts, label in ((e.positions, "blob"), (tc.positions, "marker")):
            if pts.size == 0:
                continue
            if (pts[:, 0].min() - margin < grid.origin[0]
                    or pts[:, 0].max() + margin > grid.x_max
                    or pts[:, 1].min() - margin < grid.origin[1]
                    or pts[:, 1].max() + margin > grid.y_max):
                raise ValueError(f"grid does not cover the {label} support "
                                 "(including the mollifier footprint)")
    blob = reconstruct_vorticity(e, grid)
    trans = transport_field(tc, e.epsilon, grid, e.kernel_profile_id())
    return lp_norm(GridField(grid, blob.values - trans.values), p)


def marker_value_range(tc: TracerCloud) -> tuple[float, float]:
    """(min, max) of the carried values -- constant in time by construction,
    the discrete maximum-principle invariant."""
    if tc.n_markers == 0:
        return 0.0, 0.0
    return float(tc.values.min()), float(tc.values.max())
