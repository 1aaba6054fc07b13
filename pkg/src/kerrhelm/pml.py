"""Circular PML medium profile and its Cartesian coefficient fields.

The complex radial stretching r -> r(1 + i*delta(r)) with stretching
derivative alpha(r) = 1 + i*sigma(r) turns the Helmholtz operator into
-div(A grad u) - B k^2 u, where A is a 2x2 complex-symmetric matrix field
(radial/tangential eigenvalues beta/alpha and alpha/beta) and B = alpha*beta.
Inside r <= R the medium is untouched: A = I, B = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PmlProfile:
    """Absorbing-layer description: strength sigma0 on R < r < r_hat."""

    sigma0: float
    R: float
    r_hat: float

    def __post_init__(self):
        if self.sigma0 <= 0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0!r}")
        if not (0 < self.R < self.r_hat):
            raise ValueError(f"need 0 < R < r_hat, got R={self.R!r}, r_hat={self.r_hat!r}")

    @property
    def thickness(self) -> float:
        return self.r_hat - self.R


@dataclass(frozen=True)
class PmlCoefficients:
    """Pointwise coefficient values: A (2x2 complex symmetric) and scalar B."""

    A: np.ndarray
    B: complex


def sigma_delta(profile: PmlProfile, r):
    """Medium functions (sigma(r), delta(r)); zero inside r <= R.

    delta(r) = sigma0 (r - R)/r is the mean of sigma along the ray, which
    is what the stretched coordinate r*(1 + i*delta) accumulates.
    """
    r = np.asarray(r, dtype=float)
    outside = r > profile.R
    sigma = np.where(outside, profile.sigma0, 0.0)
    delta = np.where(outside, profile.sigma0 * (r - profile.R) / np.where(outside, r, 1.0), 0.0)
    if sigma.ndim == 0:
        return float(sigma), float(delta)
    return sigma, delta


def stretching_factors(profile: PmlProfile, r):
    """(alpha, beta) = (1 + i*sigma, 1 + i*delta) at radius r."""
    sigma, delta = sigma_delta(profile, r)
    return 1.0 + 1j * np.asarray(sigma), 1.0 + 1j * np.asarray(delta)


def coefficient_fields(profile: PmlProfile, points: np.ndarray):
    """Vectorized (A, B) at an (n, 2) array of points.

    Returns A with shape (n, 2, 2) and B with shape (n,).  A is assembled
    as the rotation of diag(beta/alpha, alpha/beta) by the polar angle, so
    A[.,0,1] and A[.,1,0] hold the identical value.
    """
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, 2)
    r = np.sqrt((flat * flat).sum(axis=1))
    alpha, beta = stretching_factors(profile, r)
    d1 = beta / alpha
    d2 = alpha / beta
    safe = np.where(r > 0, r, 1.0)
    c = np.where(r > 0, flat[:, 0] / safe, 1.0)   # theta = 0 at the origin
    s = np.where(r > 0, flat[:, 1] / safe, 0.0)
    A = np.empty((flat.shape[0], 2, 2), dtype=complex)
    off = c * s * (d1 - d2)
    A[:, 0, 0] = c * c * d1 + s * s * d2
    A[:, 1, 1] = s * s * d1 + c * c * d2
    A[:, 0, 1] = off
    A[:, 1, 0] = off
    B = alpha * beta
    return A.reshape(points.shape[:-1] + (2, 2)), B.reshape(points.shape[:-1])


def coefficients_at(profile: PmlProfile, x) -> PmlCoefficients:
    """Coefficient matrix A and scalar B at a single point."""
    A, B = coefficient_fields(profile, np.asarray(x, dtype=float).reshape(1, 2))
    return PmlCoefficients(A=A[0], B=complex(B[0]))


@dataclass(frozen=True)
class ParameterCheck:
    name: str
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class ParameterReport:
    checks: tuple[ParameterCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.satisfied for c in self.checks)

    def __str__(self) -> str:
        lines = [("PASS" if c.satisfied else "FAIL") + f"  {c.name}  (margin {c.margin:+.4g})"
                 for c in self.checks]
        return "\n".join(lines)


def validate_params(k: float, profile: PmlProfile) -> ParameterReport:
    """Diagnostic check of the layer-strength regime the analysis assumes.

    The sufficient conditions are kR >= 1 and
    k*sigma0*L >= max(2kR + sqrt(3) kL, 10).  Each check carries its
    numeric margin; the report never raises, since the conditions are
    sufficient rather than necessary.
    """
    L = profile.thickness
    ksl = k * profile.sigma0 * L
    checks = (
        ParameterCheck("kR >= 1", k * profile.R >= 1.0, k * profile.R - 1.0),
        ParameterCheck("k*sigma0*L >= 2kR + sqrt(3)*kL",
                       ksl >= 2 * k * profile.R + math.sqrt(3.0) * k * L,
                       ksl - (2 * k * profile.R + math.sqrt(3.0) * k * L)),
        ParameterCheck("k*sigma0*L >= 10", ksl >= 10.0, ksl - 10.0),
    )
    return ParameterReport(checks)
