"""Initial data library, mollification, lattice tiling, parameter schedules.

The discrete datum is built in three steps: mollify the initial vorticity
omega_0 by j_delta, tile the (grown) support with a lattice of squares of
side h centered at alpha_i = h*i, and assign each cell the circulation
Gamma_i = integral of the mollified datum over its cell.  Blobs start at
the cell centers.
"""
from __future__ import annotations

import enum
import math
import sys
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .kernels import Mollifier, Profile
from .quadrature import disc_quadrature, gauss_legendre


class DegenerateInputError(ValueError):
    """Initial data whose support produces no lattice cells."""


# ---------------------------------------------------------------------------
# Initial vorticities
# ---------------------------------------------------------------------------


def _quintic_ramp(t: np.ndarray) -> np.ndarray:
    """C^2 monotone ramp: 0 at t<=0, 1 at t>=1 (10t^3 - 15t^4 + 6t^5)."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass(frozen=True)
class Patch:
    """Indicator patch: amplitude on the disc of the given radius."""

    amplitude: float = 1.0
    radius: float = 1.0

    kind = "patch"

    @property
    def support_radius(self) -> float:
        return self.radius

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        return np.where(r <= self.radius, self.amplitude, 0.0)

    def lp_norm(self, p: float) -> float:
        area = math.pi * self.radius**2
        if np.isinf(p):
            return abs(self.amplitude)
        return abs(self.amplitude) * area ** (1.0 / p)

    def integral(self) -> float:
        return self.amplitude * math.pi * self.radius**2


@dataclass(frozen=True)
class GaussianDipole:
    """Two opposite-sign Gaussian lumps at (+-separation/2, 0), smoothly cut.

    Each lump is exp(-rho^2/core_width^2) tapered to zero over the last 20%
    of cut_radius by a quintic ramp, so the datum is C^2 and compactly
    supported.  The mirror antisymmetry x1 -> -x1 makes the mean exactly
    zero, which is what the kinetic-energy diagnostics require.
    """

    amplitude: float = 1.0
    separation: float = 1.0
    core_width: float = 0.25
    cut_radius: float = 0.6

    kind = "gaussian_dipole"

    @property
    def support_radius(self) -> float:
        return 0.5 * self.separation + self.cut_radius

    def _lump(self, pts: np.ndarray, cx: float) -> np.ndarray:
        r = np.hypot(pts[:, 0] - cx, pts[:, 1])
        taper = 1.0 - _quintic_ramp((r - 0.8 * self.cut_radius) / (0.2 * self.cut_radius))
        return np.exp(-((r / self.core_width) ** 2)) * taper

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        half = 0.5 * self.separation
        return self.amplitude * (self._lump(pts, half) - self._lump(pts, -half))

    def lp_norm(self, p: float) -> float:
        return _grid_lp_norm(self, p)

    def integral(self) -> float:
        return 0.0  # exact by antisymmetry


@dataclass(frozen=True)
class PowerSpike:
    """omega_0(x) = amplitude * |x|^(-2/q) on a ball: in L^p exactly for p < q."""

    q: float = 3.0
    radius: float = 1.0
    amplitude: float = 1.0

    kind = "power_spike"

    def __post_init__(self) -> None:
        if self.q <= 1.0:
            raise ValueError("power-spike exponent q must exceed 1 (datum must be integrable)")

    @property
    def support_radius(self) -> float:
        return self.radius

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        # the pointwise value at the singular point never enters an integral
        r_eff = np.maximum(r, 1e-12 * self.radius)
        return np.where(r <= self.radius, self.amplitude * r_eff ** (-2.0 / self.q), 0.0)

    def lp_norm(self, p: float) -> float:
        if np.isinf(p) or p >= self.q:
            return math.inf
        expo = 2.0 - 2.0 * p / self.q
        return abs(self.amplitude) * (2.0 * math.pi * self.radius**expo / expo) ** (1.0 / p)

    def integral(self) -> float:
        expo = 2.0 - 2.0 / self.q
        return self.amplitude * 2.0 * math.pi * self.radius**expo / expo


@dataclass(frozen=True)
class CustomGrid:
    """Initial vorticity sampled on a uniform grid, bilinearly interpolated; zero outside."""

    values: np.ndarray  # (ny, nx)
    origin: tuple[float, float]
    spacing: float

    kind = "custom_grid"

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 2:
            raise ValueError("custom grid values must be 2-D (ny, nx)")

    @property
    def support_radius(self) -> float:
        ny, nx = self.values.shape
        x1 = self.origin[0] + (nx - 1) * self.spacing
        y1 = self.origin[1] + (ny - 1) * self.spacing
        corners = [(self.origin[0], self.origin[1]), (x1, self.origin[1]),
                   (self.origin[0], y1), (x1, y1)]
        return max(math.hypot(cx, cy) for cx, cy in corners)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ny, nx = self.values.shape
        gx = (pts[:, 0] - self.origin[0]) / self.spacing
        gy = (pts[:, 1] - self.origin[1]) / self.spacing
        inside = (gx >= 0) & (gx <= nx - 1) & (gy >= 0) & (gy <= ny - 1)
        gx = np.clip(gx, 0, nx - 1 - 1e-12)
        gy = np.clip(gy, 0, ny - 1 - 1e-12)
        i0 = gx.astype(np.int64)
        j0 = gy.astype(np.int64)
        fx = gx - i0
        fy = gy - j0
        v = (self.values[j0, i0] * (1 - fx) * (1 - fy)
             + self.values[j0, i0 + 1] * fx * (1 - fy)
             + self.values[j0 + 1, i0] * (1 - fx) * fy
             + self.values[j0 + 1, i0 + 1] * fx * fy)
        return np.where(inside, v, 0.0)

    def lp_norm(self, p: float) -> float:
        return _grid_lp_norm(self, p)

    def integral(self) -> float:
        xs, wx = gauss_legendre(400, self.origin[0],
                                self.origin[0] + (self.values.shape[1] - 1) * self.spacing)
        ys, wy = gauss_legendre(400, self.origin[1],
                                self.origin[1] + (self.values.shape[0] - 1) * self.spacing)
        xx, yy = np.meshgrid(xs, ys, indexing="ij")
        vals = self.evaluate(np.column_stack([xx.ravel(), yy.ravel()]))
        return float(vals @ np.outer(wx, wy).ravel())


InitialVorticity = Union[Patch, GaussianDipole, PowerSpike, CustomGrid]


def _grid_lp_norm(w0, p: float, n: int = 600) -> float:
    """L^p norm of a bounded initial vorticity by tensor Gauss-Legendre."""
    r = w0.support_radius
    xs, wx = gauss_legendre(n, -r, r)
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    vals = np.abs(w0.evaluate(np.column_stack([xx.ravel(), yy.ravel()])))
    w2 = np.outer(wx, wx).ravel()
    if np.isinf(p):
        return float(vals.max())
    return float((w2 @ vals**p) ** (1.0 / p))


def initial_lp_norm(w0: InitialVorticity, p: float) -> float:
    return w0.lp_norm(p)


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MollifiedField:
    """The convolution omega_0 * j_delta, evaluated by a fixed polar rule.

    The rule integrates the mollifier exactly enough that constants are
    reproduced to better than 1e-10 well inside a patch.
    """

    base: InitialVorticity
    delta: float
    profile: Profile = Profile.POLY6
    _pts: np.ndarray = field(init=False, repr=False, compare=False)
    _wts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise ValueError("mollification radius must be positive")
        moll = Mollifier(self.profile, self.delta)
        rad = moll.effective_support(1e-16)
        pts, wts = disc_quadrature(rad, n_r=16, n_t=24)
        object.__setattr__(self, "_pts", pts)
        object.__setattr__(self, "_wts", wts * moll.value(pts))

    @property
    def mollifier(self) -> Mollifier:
        return Mollifier(self.profile, self.delta)

    @property
    def support_radius(self) -> float:
        return self.base.support_radius + self.mollifier.effective_support(1e-16)

    def evaluate(self, points: np.ndarray, chunk: int = 16384) -> np.ndarray:
        """(omega_0 * j_delta) at each point; chunked to bound memory."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty(pts.shape[0])
        k = self._pts.shape[0]
        for s in range(0, pts.shape[0], chunk):
            block = pts[s:s + chunk]
            shifted = block[:, None, :] - self._pts[None, :, :]
            vals = self.base.evaluate(shifted.reshape(-1, 2)).reshape(block.shape[0], k)
            out[s:s + chunk] = vals @ self._wts
        return out

    def integral(self) -> float:
        return self.base.integral()  # unit-mass mollifier preserves the mean


def mollify_initial(w0: InitialVorticity, delta: float,
                    profile: Profile = Profile.POLY6) -> MollifiedField:
    return MollifiedField(w0, delta, profile)


# ---------------------------------------------------------------------------
# Lattice and ensemble
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lattice:
    """Finite set of lattice cells: squares of side h centered at h*(i1, i2)."""

    spacing: float
    indices: np.ndarray  # (N, 2) int64

    def cell_centers(self) -> np.ndarray:
        return self.spacing * self.indices.astype(float)

    @property
    def n_cells(self) -> int:
        return self.indices.shape[0]


@dataclass(frozen=True)
class Blob:
    position: np.ndarray
    circulation: float
    index: tuple[int, int]


@dataclass(frozen=True)
class Ensemble:
    """Immutable blob ensemble state at one time.

    positions/circulations are read-only arrays; stepping returns a new
    Ensemble, and circulations are never rewritten after initialization.
    """

    positions: np.ndarray      # (N, 2)
    circulations: np.ndarray   # (N,)
    cell_indices: np.ndarray   # (N, 2) lattice indices of the origin cells
    epsilon: float
    delta: float
    h: float
    time: float
    profile: Profile

    def __post_init__(self) -> None:
        pos = np.ascontiguousarray(np.asarray(self.positions, dtype=float))
        circ = np.ascontiguousarray(np.asarray(self.circulations, dtype=float))
        idx = np.ascontiguousarray(np.asarray(self.cell_indices, dtype=np.int64))
        if pos.ndim != 2 or pos.shape[1] != 2 or circ.shape != (pos.shape[0],):
            raise ValueError("ensemble arrays must have shapes (N, 2) and (N,)")
        for arr in (pos, circ, idx):
            arr.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "circulations", circ)
        object.__setattr__(self, "cell_indices", idx)

    @property
    def n_blobs(self) -> int:
        return self.positions.shape[0]

    def blob(self, i: int) -> Blob:
        return Blob(self.positions[i].copy(), float(self.circulations[i]),
                    (int(self.cell_indices[i, 0]), int(self.cell_indices[i, 1])))

    def with_positions(self, positions: np.ndarray, time: float) -> "Ensemble":
        return Ensemble(positions, self.circulations, self.cell_indices,
                        self.epsilon, self.delta, self.h, time, self.profile)

    def kernel_profile_id(self) -> int:
        return 0 if self.profile is Profile.POLY6 else 1


def build_lattice(support_radius: float, h: float) -> Lattice:
    """Cells of the h-lattice that intersect the closed disc of the given radius."""
    if h <= 0.0:
        raise ValueError("lattice spacing must be positive")
    if support_radius <= 0.0:
        raise DegenerateInputError("no cells: support radius is not positive")
    imax = int(math.floor(support_radius / h + 0.5)) + 1
    rng = np.arange(-imax, imax + 1, dtype=np.int64)
    ii, jj = np.meshgrid(rng, rng, indexing="ij")
    cx = h * ii.astype(float)
    cy = h * jj.astype(float)
    # nearest point of each cell to the origin
    dx = np.maximum(np.abs(cx) - 0.5 * h, 0.0)
    dy = np.maximum(np.abs(cy) - 0.5 * h, 0.0)
    keep = dx * dx + dy * dy <= support_radius * support_radius
    indices = np.column_stack([ii[keep], jj[keep]])
    if indices.shape[0] == 0:
        raise DegenerateInputError("no cells: support does not meet the lattice")
    return Lattice(h, indices)


_GL4_NODES, _GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)


def _cell_quadrature(h: float) -> tuple[np.ndarray, np.ndarray]:
    """4x4 tensor Gauss-Legendre rule on a cell of side h centered at 0."""
    x = 0.5 * h * _GL4_NODES
    w = 0.5 * h * _GL4_WEIGHTS
    xx, yy = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()]), np.outer(w, w).ravel()


def tile_and_weight(w0eps: MollifiedField, h: float, epsilon: float,
                    prune_threshold: float = 0.0) -> Ensemble:
    """One blob per lattice cell meeting the mollified support.

    Circulations are 4x4 Gauss-Legendre integrals of the mollified datum
    over each cell.  Zero-circulation blobs are kept unless a positive
    prune_threshold is given, in which case blobs with
    |Gamma_i| < prune_threshold * h^2 are dropped (documented as an
    optimization that perturbs the method).
    """
    if epsilon <= 0.0:
        raise ValueError("blob radius must be positive")
    lattice = build_lattice(w0eps.support_radius, h)
    centers = lattice.cell_centers()
    offs, wts = _cell_quadrature(h)
    pts = (centers[:, None, :] + offs[None, :, :]).reshape(-1, 2)
    vals = w0eps.evaluate(pts).reshape(centers.shape[0], offs.shape[0])
    circulations = vals @ wts
    if prune_threshold > 0.0:
        keep = np.abs(circulations) >= prune_threshold * h * h
        centers = centers[keep]
        circulations = circulations[keep]
        indices = lattice.indices[keep]
    else:
        indices = lattice.indices
    if centers.shape[0] == 0:
        raise DegenerateInputError("no cells: every circulation pruned")
    return Ensemble(centers, circulations, indices, epsilon, w0eps.delta, h,
                    0.0, w0eps.profile)


# ---------------------------------------------------------------------------
# Parameter schedules
# ---------------------------------------------------------------------------


class ScheduleMode(enum.Enum):
    THEORETICAL_L1 = "theoretical_l1"
    THEORETICAL_FE = "theoretical_fe"
    PRACTICAL = "practical"

    @classmethod
    def parse(cls, name: str) -> "ScheduleMode":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown schedule mode {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class Schedule:
    delta: float
    h: float
    h_underflowed: bool


def schedule_parameters(epsilon: float, mode: ScheduleMode, horizon: float = 1.0,
                        norm_l1: float = 1.0, c0: float = 1.0, c1: float = 1.0,
                        sigma: float = 0.2) -> Schedule:
    """(delta, h) for a given blob radius.

    THEORETICAL_L1: h = eps^4 / exp(c1 * eps^-2 * norm_l1 * horizon)
    THEORETICAL_FE: h = c1 * eps^6 * exp(-c0 * eps^-2)
    PRACTICAL:      delta = eps^0.2, h = eps^1.5
    delta = eps^sigma for the theoretical modes (sigma < 1/4 as assumed by
    the consistency estimate).

    The theoretical spacings collapse extremely fast: h_underflowed is set
    when h (or the cell area scale h^2, which weights every circulation)
    leaves the normal double range, at which point the schedule is not
    executable in this arithmetic.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"schedule requires epsilon in (0,1), got {epsilon}")
    if mode is ScheduleMode.PRACTICAL:
        delta = epsilon**0.2
        h = epsilon**1.5
    elif mode is ScheduleMode.THEORETICAL_L1:
        delta = epsilon**sigma
        h = epsilon**4 * math.exp(-c1 * norm_l1 * horizon / epsilon**2)
    else:
        delta = epsilon**sigma
        h = c1 * epsilon**6 * math.exp(-c0 / epsilon**2)
    underflowed = h < sys.float_info.min or h * h < sys.float_info.min
    return Schedule(delta, h, underflowed)
