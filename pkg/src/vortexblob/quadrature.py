"""Small fixed-order quadrature helpers shared by tests and diagnostics."""
from __future__ import annotations

import numpy as np


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights rescaled to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def periodic_angles(n_t: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform midpoint angles on [0, 2pi) with equal weights.

    The angular integrand of a polar rule is 2pi-periodic, where the
    uniform rule converges spectrally; half-step offsets keep the node
    set exactly symmetric under both axis reflections for even n_t.
    """
    step = 2.0 * np.pi / n_t
    return (np.arange(n_t) + 0.5) * step, np.full(n_t, step)


def disc_quadrature(
    radius: float,
    n_r: int = 64,
    n_t: int = 128,
    center: tuple[float, float] = (0.0, 0.0),
    singular_power: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor polar rule on a disc: points (M, 2) and area weights (M,).

    ``singular_power`` = s prepares the rule for integrands that blow up
    like rho**-s at the center (0 <= s < 2): the radial variable is
    substituted rho = R * tau**kappa with kappa = 1/(2 - s), which makes
    the transformed radial integrand bounded.
    """
    if not 0.0 <= singular_power < 2.0:
        raise ValueError("singular_power must lie in [0, 2)")
    kappa = 1.0 / (2.0 - singular_power)
    tau, w_tau = gauss_legendre(n_r, 0.0, 1.0)
    rho = radius * tau**kappa
    # rho * drho/dtau, the polar area factor after substitution
    w_rho = rho * radius * kappa * tau ** (kappa - 1.0) * w_tau
    theta, w_theta = periodic_angles(n_t)
    pts = np.empty((n_r * n_t, 2))
    pts[:, 0] = center[0] + np.outer(rho, np.cos(theta)).ravel()
    pts[:, 1] = center[1] + np.outer(rho, np.sin(theta)).ravel()
    return pts, np.outer(w_rho, w_theta).ravel()


def annulus_quadrature(
    r_inner: float,
    r_outer: float,
    n_r: int = 64,
    n_t: int = 128,
    center: tuple[float, float] = (0.0, 0.0),
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor polar rule on an annulus r_inner <= rho <= r_outer."""
    rho, w_rho = gauss_legendre(n_r, r_inner, r_outer)
    theta, w_theta = periodic_angles(n_t)
    pts = np.empty((n_r * n_t, 2))
    pts[:, 0] = center[0] + np.outer(rho, np.cos(theta)).ravel()
    pts[:, 1] = center[1] + np.outer(rho, np.sin(theta)).ravel()
    return pts, np.outer(rho * w_rho, w_theta).ravel()


def square_quadrature(
    lo: tuple[float, float],
    hi: tuple[float, float],
    n: int = 64,
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Legendre rule on an axis-aligned rectangle."""
    x, wx = gauss_legendre(n, lo[0], hi[0])
    y, wy = gauss_legendre(n, lo[1], hi[1])
    xx, yy = np.meshgrid(x, y, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()]), np.outer(wx, wy).ravel()
