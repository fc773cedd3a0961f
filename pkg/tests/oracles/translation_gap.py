"""Independent oracle: L^r norm of the shifted-kernel difference by region
quadrature, never using the library's closed form.

Target: J(alpha, r) = integral over the plane of |K(x - a) - K(x)|^r dx
with a = (alpha, 0) and K the 2D incompressibility kernel.  The integrand
has rho^-r poles at 0 and a; it decays like rho^(-2r) far away, so for
1 < r < 2 the far field converges slowly and is handled by an exact
change of variables rather than truncation.  Decomposition (s = alpha/4):

  core discs  disc(0, s/8), disc(a, s/8)   polar rule with the rho^-r
                                           radial substitution;
  core rings  rho in (s/8, s) about 0, a   plain polar Gauss-Legendre
                                           (integrand smooth, no pole);
  ring A: rho in (s, 3s) about 0           full circles, smooth;
  ring B: rho in (3s, 5s) about 0          circles minus the arc inside
                                           disc(a, s); adaptive in both
                                           variables (the arc limit has
                                           sqrt corners adaptivity absorbs);
  ring C: rho in (5s, 10 alpha)            full circles, smooth decay;
  far:    rho in (10 alpha, infinity)      rho = 10 alpha tau^(-1/(2r-2))
                                           maps the tail onto tau in (0,1]
                                           with a bounded integrand --
                                           nothing is truncated.

A finite-difference check of |grad K|(u) = 1/(2 pi |u|^2) (used nowhere
above, but relied on by tests elsewhere) is included for completeness.
Run as a script to print the values frozen into tests/test_kernels.py.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from vortexblob.kernels import TWO_PI, biot_savart
from vortexblob.quadrature import annulus_quadrature, disc_quadrature


def gap_integrand(pts: np.ndarray, alpha: float, r: float) -> np.ndarray:
    """|K(x - a) - K(x)|^r componentwise -- no closed-form shortcuts."""
    shifted = pts.copy()
    shifted[:, 0] -= alpha
    diff = biot_savart(shifted) - biot_savart(pts)
    return np.hypot(diff[:, 0], diff[:, 1]) ** r


def _gap_integrand_local(u: np.ndarray, alpha: float, r: float) -> np.ndarray:
    """Same integrand written in coordinates centered on the pole at a:
    with x = a + u, |K(x - a) - K(x)| = |K(u) - K(a + u)|.  Building u
    directly (instead of subtracting alpha from x) keeps offsets far below
    one ulp of alpha representable, which the singular rule requires."""
    xa = u.copy()
    xa[:, 0] += alpha
    diff = biot_savart(u) - biot_savart(xa)
    return np.hypot(diff[:, 0], diff[:, 1]) ** r


def _pole_patch(alpha: float, r: float, n: int, at_shift: bool) -> float:
    """Disc of radius s = alpha/4 about a pole: singular core + smooth ring."""
    s = alpha / 4.0
    f = (lambda pts: _gap_integrand_local(pts, alpha, r)) if at_shift \
        else (lambda pts: gap_integrand(pts, alpha, r))
    pts, wts = disc_quadrature(s / 8.0, n, 2 * n, singular_power=r)
    core = float(wts @ f(pts))
    pts, wts = annulus_quadrature(s / 8.0, s, 2 * n, 4 * n)
    return core + float(wts @ f(pts))


def _circle_integral(rho: float, alpha: float, r: float, theta_lo: float,
                     theta_hi: float) -> float:
    def f(theta: float) -> float:
        pt = np.array([[rho * np.cos(theta), rho * np.sin(theta)]])
        return gap_integrand(pt, alpha, r)[0]

    val, _ = quad(f, theta_lo, theta_hi, limit=200, epsabs=1e-13, epsrel=1e-11)
    return val


def _ring_full(lo: float, hi: float, alpha: float, r: float) -> float:
    def radial(rho: float) -> float:
        return rho * _circle_integral(rho, alpha, r, 0.0, 2.0 * np.pi)

    val, _ = quad(radial, lo, hi, limit=200, epsabs=1e-12, epsrel=1e-10)
    return val


def _ring_holed(alpha: float, r: float) -> float:
    """rho in (3s, 5s): exclude the arc lying inside disc(a, s)."""
    s = alpha / 4.0

    def radial(rho: float) -> float:
        cos_c = (rho * rho + alpha * alpha - s * s) / (2.0 * rho * alpha)
        theta_c = np.arccos(np.clip(cos_c, -1.0, 1.0))
        return rho * _circle_integral(rho, alpha, r, theta_c, 2.0 * np.pi - theta_c)

    val, _ = quad(radial, 3.0 * s, 5.0 * s, limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def _far_exact(r_split: float, alpha: float, r: float) -> float:
    """rho in (r_split, infinity) via rho = r_split * tau^(-1/(2r-2)).

    The radial integrand 2 pi rho mean_theta(f) scales like rho^(1-2r), so
    in tau the transformed integrand is bounded and continuous on (0, 1]:
    adaptive quadrature covers the whole tail with no truncation error.
    """
    expo = 1.0 / (2.0 * r - 2.0)

    def g(tau: float) -> float:
        rho = r_split * tau ** (-expo)
        drho = r_split * expo * tau ** (-expo - 1.0)
        return rho * _circle_integral(rho, alpha, r, 0.0, 2.0 * np.pi) * drho

    val, _ = quad(g, 0.0, 1.0, limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def gap_integral(alpha: float, r: float, n_disc: int = 120) -> float:
    s = alpha / 4.0
    return (_pole_patch(alpha, r, n_disc, at_shift=False)
            + _pole_patch(alpha, r, n_disc, at_shift=True)
            + _ring_full(s, 3.0 * s, alpha, r)
            + _ring_holed(alpha, r)
            + _ring_full(5.0 * s, 10.0 * alpha, alpha, r)
            + _far_exact(10.0 * alpha, alpha, r))


def gradient_opnorm_fd_check() -> float:
    """Worst relative error of |grad K|(u) = 1/(2 pi |u|^2) against central
    finite differences over a spread of points and directions."""
    rng = np.random.default_rng(20240811)
    worst = 0.0
    for _ in range(50):
        u = rng.normal(size=2) * rng.uniform(0.3, 3.0)
        t = 1e-6 * np.linalg.norm(u)
        for ang in np.linspace(0.0, np.pi, 7):
            d = np.array([np.cos(ang), np.sin(ang)])
            diff = (biot_savart((u + t * d)[None, :])
                    - biot_savart((u - t * d)[None, :]))[0] / (2.0 * t)
            claimed = 1.0 / (TWO_PI * (u @ u))
            worst = max(worst, abs(np.linalg.norm(diff) - claimed) / claimed)
    return worst


def main() -> None:
    print(f"# grad-K operator norm FD check: rel err {gradient_opnorm_fd_check():.2e}")
    for alpha, r in ((1.0, 1.5), (0.5, 1.5), (1.0, 1.25), (1.0, 1.75)):
        coarse = gap_integral(alpha, r, n_disc=70)
        fine = gap_integral(alpha, r)
        norm = fine ** (1.0 / r)
        print(f"alpha={alpha:4.2f} r={r:4.2f}: J={fine:.12e} "
              f"norm={norm:.12e} [rule drift {abs(fine - coarse):.1e}]")
    j1 = gap_integral(1.0, 1.5)
    j2 = gap_integral(0.5, 1.5)
    slope = np.log((j1 ** (1 / 1.5)) / (j2 ** (1 / 1.5))) / np.log(2.0)
    print(f"norm slope in alpha at r=1.5: {slope:.9f} (target 2/r-1 = {2/1.5-1:.9f})")


if __name__ == "__main__":
    main()
