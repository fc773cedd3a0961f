"""Velocity-increment identity with a near/far kernel split.

For a radial cutoff a (one near the origin, zero far away) and each
velocity component i, the evolution satisfies

    v_i(t, x) = v_i(0, x)
              + (a K_i) * [omega(t) - omega(0)](x)
              - int_0^t (grad perp-grad [(1 - a) K_i]) (**) (v (x) v) ds
              + int_0^t (grad [(1 - a) K_i]) (**) F ds,

where K_i is the i-th Biot-Savart component, (**) contracts matching
components under convolution, and F is the consistency error of the blob
field.  Every convolution here is a plain integral of smooth-or-integrable
functions, so the identity can be checked on a grid: this module evaluates
each term by node sums and trapezoidal time quadrature and reports the
worst mismatch over a set of sample points.

The cutoff is a fixed quintic radial ramp (C^2, which covers the two
kernel derivatives the far-field terms need): a = 1 on the ball of the
cutoff radius c, a = 0 outside 2c.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .diagnostics import GridSpec, _check_resolution, consistency_error_field, \
    reconstruct_vorticity, velocity_grid
from .discretization import Ensemble
from .dynamics import DIRECT, Integrator, VelocityEvaluator, run, velocity_at
from .kernels import TWO_PI

_E = (np.array([0.0, -1.0]), np.array([1.0, 0.0]))  # K_i = (e_i . x) / (2 pi |x|^2)


def cutoff_profile(rho: np.ndarray, cutoff_radius: float):
    """(w, w', w'') for w = 1 - a at radii rho: quintic ramp from 0 at c to 1 at 2c."""
    c = cutoff_radius
    tau = np.clip((rho - c) / c, 0.0, 1.0)
    w = tau**3 * (10.0 + tau * (-15.0 + 6.0 * tau))
    dw = 30.0 * tau**2 * (1.0 - tau) ** 2 / c
    ddw = 60.0 * tau * (1.0 - tau) * (1.0 - 2.0 * tau) / c**2
    return w, dw, ddw


def cutoff_kernel_fields(u: np.ndarray, cutoff_radius: float, component: int):
    """Near kernel a K_i and far-kernel derivatives at offsets u.

    Returns (near, grad, curl_grad):
      near       (n,)     a(|u|) K_i(u), zero at u = 0 (integrable singularity,
                          and the radially-cut odd kernel has zero cell mean);
      grad       (n, 2)   grad[(1 - a) K_i](u);
      curl_grad  (n, 2, 2) entry [j, k] = d_k (perp-grad (1 - a) K_i)_j.
    """
    u = np.asarray(u, dtype=np.float64)
    x1, x2 = u[:, 0], u[:, 1]
    rho2 = x1 * x1 + x2 * x2
    rho = np.sqrt(rho2)
    sing = rho == 0.0
    rho_s = np.where(sing, 1.0, rho)
    rho2_s = rho_s * rho_s
    e = _E[component]
    cu = e[0] * x1 + e[1] * x2  # e_i . u

    w, dw, ddw = cutoff_profile(rho, cutoff_radius)
    k = cu / (TWO_PI * rho2_s)
    near = np.where(sing, 0.0, (1.0 - w) * k)

    # dK[k] = (1/2pi) (e_k rho^-2 - 2 (e.u) u_k rho^-4)
    xk = np.stack([x1, x2], axis=-1)
    dk = (e[None, :] / rho2_s[:, None]
          - 2.0 * cu[:, None] * xk / (rho2_s**2)[:, None]) / TWO_PI
    xhat = xk / rho_s[:, None]
    grad = dw[:, None] * xhat * k[:, None] + w[:, None] * dk
    grad[sing] = 0.0

    # Hessian of f = w K_i by the product rule; dd_k[j,k] from the harmonic
    # kernel, d(xhat_k)/d(u_j) = delta_jk / rho - u_j u_k / rho^3.
    eye = np.eye(2)
    xx = xk[:, :, None] * xk[:, None, :]
    ddk = (-(e[None, None, :] * xk[:, :, None] + e[None, :, None] * xk[:, None, :]
             + cu[:, None, None] * eye[None, :, :]) / (rho2_s**2)[:, None, None]
           + 4.0 * cu[:, None, None] * xx / (rho2_s**3)[:, None, None]) / np.pi
    dxhat = eye[None, :, :] / rho_s[:, None, None] - xx / (rho_s**3)[:, None, None]
    hess = (ddw[:, None, None] * xhat[:, :, None] * xhat[:, None, :] * k[:, None, None]
            + dw[:, None, None] * (dxhat * k[:, None, None]
                                   + xhat[:, :, None] * dk[:, None, :]
                                   + xhat[:, None, :] * dk[:, :, None])
            + w[:, None, None] * ddk)
    hess[sing] = 0.0

    # (perp-grad f)_1 = -d2 f, (perp-grad f)_2 = d1 f, then one more gradient:
    curl_grad = np.empty_like(hess)
    curl_grad[:, 0, :] = -hess[:, 1, :]
    curl_grad[:, 1, :] = hess[:, 0, :]
    return near, grad, curl_grad


def collect_series(e0: Ensemble, itg: Integrator,
                   evaluator: VelocityEvaluator = DIRECT,
                   every: int = 1) -> list[Ensemble]:
    """Ensemble snapshots along the run (always includes first and last step)."""
    series: list[Ensemble] = []
    run(e0, itg, evaluator, observers=(), observe_every=every,
        on_observe=lambda e, _tr: series.append(e))
    return series


def serfati_residual(series: Sequence[Ensemble], cutoff_radius: float,
                     grid: GridSpec, sample_points: np.ndarray,
                     evaluator: VelocityEvaluator = DIRECT) -> float:
    """Worst absolute mismatch of the identity over samples and components.

    series: ensembles at increasing times covering the interval (the first
    entry is the identity's time origin); the trapezoid rule runs on the
    series times, and all convolutions are node sums on the given grid.
    """
    if len(series) == 0:
        raise ValueError("empty ensemble series")
    if cutoff_radius <= 0.0:
        raise ValueError("cutoff radius must be positive")
    e0, et = series[0], series[-1]
    times = np.array([e.time for e in series])
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("series times must be strictly increasing")
    _check_resolution(grid.spacing, e0.epsilon)
    samples = np.atleast_2d(np.asarray(sample_points, dtype=np.float64))
    n_s = samples.shape[0]
    if e0.n_blobs == 0:
        return 0.0

    nodes = grid.nodes()
    cell = grid.spacing**2
    v_end = velocity_at(et, samples, evaluator)
    v_start = velocity_at(e0, samples, evaluator)

    # time-independent kernel fields, one set per sample point
    kf = [[cutoff_kernel_fields(samples[s] - nodes, cutoff_radius, i)
           for i in (0, 1)] for s in range(n_s)]

    d_omega = (reconstruct_vorticity(et, grid).values
               - reconstruct_vorticity(e0, grid).values).ravel()
    near_term = np.empty((n_s, 2))
    for s in range(n_s):
        for i in (0, 1):
            near_term[s, i] = cell * (kf[s][i][0] @ d_omega)

    flux_rate = np.empty((len(series), n_s, 2))   # (grad perp-grad ..) ** (v x v)
    force_rate = np.empty((len(series), n_s, 2))  # (grad ..) ** F
    for k_t, e in enumerate(series):
        v = velocity_grid(e, grid, evaluator).values.reshape(-1, 2)
        f = consistency_error_field(e, grid, evaluator).values.reshape(-1, 2)
        p11 = v[:, 0] * v[:, 0]
        p12 = v[:, 0] * v[:, 1]
        p22 = v[:, 1] * v[:, 1]
        for s in range(n_s):
            for i in (0, 1):
                _, grad, mgrid = kf[s][i]
                flux_rate[k_t, s, i] = cell * (mgrid[:, 0, 0] @ p11
                                               + (mgrid[:, 0, 1] + mgrid[:, 1, 0]) @ p12
                                               + mgrid[:, 1, 1] @ p22)
                force_rate[k_t, s, i] = cell * (grad[:, 0] @ f[:, 0]
                                                + grad[:, 1] @ f[:, 1])

    flux_int = np.trapezoid(flux_rate, times, axis=0) if len(series) > 1 else 0.0
    force_int = np.trapezoid(force_rate, times, axis=0) if len(series) > 1 else 0.0
    rhs = v_start + near_term - flux_int + force_int
    return float(np.abs(v_end - rhs).max())
