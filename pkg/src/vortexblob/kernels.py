"""Biot-Savart kernel, radial mollifiers, and regularized velocity kernels.

The velocity kernel of 2-D incompressible flow is the perpendicular
gradient of the free-space Green's function,

    K(x) = (1/2pi) (-x2, x1) / |x|^2 .

Convolving K with a radial unit-mass mollifier phi_eps gives a bounded
kernel, and for radial profiles the convolution collapses to a scalar
factor:

    K_eps(x) = (K * phi_eps)(x) = K(x) * m_eps(|x|),

where m_eps(rho) is the phi_eps-mass of the disc of radius rho.  This is
the 2-D analogue of Newton's shell theorem: a radially symmetric vorticity
patch induces, at radius rho, the velocity of a point vortex carrying the
circulation contained inside rho.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma

TWO_PI = 2.0 * math.pi
INV_TWO_PI = 1.0 / TWO_PI


class Profile(enum.Enum):
    """Mollifier profile family."""

    POLY6 = "poly6"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, name: str) -> "Profile":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown mollifier profile {name!r} (expected one of: {valid})") from None


def biot_savart(points: np.ndarray) -> np.ndarray:
    """Singular kernel K at an (N, 2) array of points; rows at the origin map to 0.

    K is odd, divergence-free away from 0, perpendicular to its argument,
    and homogeneous of degree -1.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    out = np.empty_like(pts)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[:, 0] = -INV_TWO_PI * pts[:, 1] / r2
        out[:, 1] = INV_TWO_PI * pts[:, 0] / r2
    out[r2 == 0.0] = 0.0
    return out


@dataclass(frozen=True)
class Mollifier:
    """Radial approximate identity phi_eps(x) = eps^-2 phi(x / eps), unit mass.

    POLY6: phi(x) = (4/pi) (1 - |x|^2)^3 on the unit disc, zero outside.
        Compactly supported, C^2 at the rim, peak 4/pi.
    GAUSSIAN: phi(x) = (1/pi) exp(-|x|^2).
        Positive everywhere; the mass outside radius r decays like
        exp(-r^2/eps^2), so an effective support radius is used wherever
        a compact support is structurally required.
    """

    profile: Profile
    epsilon: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise ValueError(f"mollifier scale must be positive and finite, got {self.epsilon}")

    @property
    def peak_value(self) -> float:
        """phi_eps(0)."""
        if self.profile is Profile.POLY6:
            return (4.0 / math.pi) / self.epsilon**2
        return (1.0 / math.pi) / self.epsilon**2

    def value_radial(self, radii: np.ndarray | float) -> np.ndarray:
        """phi_eps at the given radii (vectorized)."""
        rho = np.asarray(radii, dtype=float)
        u = (rho / self.epsilon) ** 2
        if self.profile is Profile.POLY6:
            core = np.clip(1.0 - u, 0.0, None)
            return (4.0 / math.pi) / self.epsilon**2 * core**3
        return (1.0 / math.pi) / self.epsilon**2 * np.exp(-u)

    def value(self, points: np.ndarray) -> np.ndarray:
        """phi_eps at an (N, 2) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.value_radial(np.hypot(pts[:, 0], pts[:, 1]))

    def cumulative_mass(self, radii: np.ndarray | float) -> np.ndarray:
        """m_eps(rho): phi_eps-mass of the disc of radius rho.

        Nondecreasing from 0 to 1; closed forms:
            POLY6:    1 - (1 - rho^2/eps^2)^4   for rho <= eps, else 1
            GAUSSIAN: 1 - exp(-rho^2/eps^2)
        """
        rho = np.asarray(radii, dtype=float)
        u = (rho / self.epsilon) ** 2
        if self.profile is Profile.POLY6:
            core = np.clip(1.0 - u, 0.0, None)
            return 1.0 - core**4
        return -np.expm1(-u)

    def effective_support(self, tail_mass: float = 2e-16) -> float:
        """Radius outside which the profile mass is at most ``tail_mass``.

        Exactly eps for POLY6; eps * sqrt(log(1/tail_mass)) for GAUSSIAN.
        """
        if self.profile is Profile.POLY6:
            return self.epsilon
        if not 0.0 < tail_mass < 1.0:
            raise ValueError("tail_mass must lie in (0, 1)")
        return self.epsilon * math.sqrt(math.log(1.0 / tail_mass))


@dataclass(frozen=True)
class RegularizedKernel:
    """Bounded velocity kernel K_eps = K * phi_eps for a radial mollifier.

    K_eps(x) = K(x) m_eps(|x|); in particular K_eps(0) = 0, K_eps is odd
    and perpendicular to its argument, |K_eps| <= |K| pointwise, and
    K_eps = K outside the support of phi_eps.
    """

    profile: Profile
    epsilon: float

    @property
    def mollifier(self) -> Mollifier:
        return Mollifier(self.profile, self.epsilon)

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        m = self.mollifier.cumulative_mass(np.sqrt(r2))
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = INV_TWO_PI * m / r2
        factor = np.where(r2 == 0.0, 0.0, factor)
        out = np.empty_like(pts)
        out[:, 0] = -pts[:, 1] * factor
        out[:, 1] = pts[:, 0] * factor
        return out


def translation_gap_constant(r: float) -> float:
    """C(r) in ||K(. - a) - K||_{L^r} = C(r) |a|^(2/r - 1), for 1 < r < 2.

    Writing K as the complex map z -> i / (2 pi conj(z)) gives the exact
    pointwise identity

        |K(x - a) - K(x)| = |a| / (2 pi |x| |x - a|),

    so the L^r integral is a two-point Riesz composition, which has the
    closed form (unit translation, then scaling restores |a|):

        I(r) = (2 pi)^-r * pi * G((2-r)/2)^2 G(r-1) / (G(r/2)^2 G(2-r)),

    with G the gamma function, and C(r) = I(r)^(1/r).
    """
    if not 1.0 < r < 2.0:
        raise ValueError(f"translation gap is finite only for 1 < r < 2, got r={r}")
    i_r = (
        TWO_PI ** (-r)
        * math.pi
        * gamma((2.0 - r) / 2.0) ** 2
        * gamma(r - 1.0)
        / (gamma(r / 2.0) ** 2 * gamma(2.0 - r))
    )
    return i_r ** (1.0 / r)


def kernel_translation_gap(a: np.ndarray, r: float) -> float:
    """L^r norm of K(. - a) - K over the plane, for 1 < r < 2 and a != 0.

    Scales exactly like |a|^(2/r - 1): the near-singular mismatch around
    the two poles dominates for r close to 2, the slow far-field decay
    for r close to 1.
    """
    shift = np.asarray(a, dtype=float).reshape(2)
    length = math.hypot(shift[0], shift[1])
    if length == 0.0:
        return 0.0
    return length ** (2.0 / r - 1.0) * translation_gap_constant(r)
