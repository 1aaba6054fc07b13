"""Closed-form incident waves, the radial reference scattered field, and
its matching source term.

The reference field solves the homogeneous Helmholtz equation piecewise:
a J0 standing wave plus the constant -1/k^2 inside the unit disk, and an
outgoing H0 wave outside.  The two branches and their radial derivatives
match at r = 1 through the Wronskian of the Bessel pair, and the constant
branch turns (-Laplace - k^2) into the constant source 1 on the unit
disk.  The cubic term the solver carries is folded into the source on the
core region so the reference field stays an exact solution of the full
nonlinear equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun


@dataclass(frozen=True)
class IncidentWave:
    """Incident field: a radial Bessel beam or a plane wave I*exp(i*k0*x)."""

    kind: str                    # "bessel" | "plane"
    k: float = 0.0               # wave number of the bessel beam
    amplitude: float = 1.0       # plane-wave amplitude I
    k0: float = 0.0              # plane-wave wave number

    def __post_init__(self):
        if self.kind not in ("bessel", "plane"):
            raise ValueError(f"unknown incident wave kind {self.kind!r}")
        if self.kind == "bessel" and not (math.isfinite(self.k) and self.k > 0):
            raise ValueError("bessel incident wave needs k > 0")
        if self.kind == "plane":
            if not (math.isfinite(self.k0) and self.k0 > 0):
                raise ValueError("plane incident wave needs k0 > 0")
            if not math.isfinite(self.amplitude):
                raise ValueError("plane-wave amplitude must be finite")

    @staticmethod
    def bessel(k: float) -> "IncidentWave":
        return IncidentWave(kind="bessel", k=k)

    @staticmethod
    def plane(amplitude: float, k0: float) -> "IncidentWave":
        return IncidentWave(kind="plane", amplitude=amplitude, k0=k0)

    def scaled(self, factor: float) -> "IncidentWave":
        if self.kind != "plane":
            raise ValueError("only plane waves support amplitude scaling")
        return IncidentWave(kind="plane", amplitude=self.amplitude * factor, k0=self.k0)


def _as_points(points) -> tuple[np.ndarray, bool]:
    pts = np.asarray(points, dtype=float)
    scalar = pts.ndim == 1
    return pts.reshape(-1, 2), scalar


def incident_value(wave: IncidentWave, points):
    """u_inc at one point or an (..., 2) array of points."""
    pts, scalar = _as_points(points)
    if wave.kind == "plane":
        out = wave.amplitude * np.exp(1j * wave.k0 * pts[:, 0])
    else:
        r = np.sqrt((pts * pts).sum(axis=1))
        j0, _ = specfun.j0_j1(wave.k * r)
        out = (j0 / wave.k ** 1.5).astype(complex)
    return out[0] if scalar else out


def incident_gradient(wave: IncidentWave, points):
    """Gradient of u_inc; shape (..., 2) complex."""
    pts, scalar = _as_points(points)
    out = np.zeros((pts.shape[0], 2), dtype=complex)
    if wave.kind == "plane":
        out[:, 0] = 1j * wave.k0 * wave.amplitude * np.exp(1j * wave.k0 * pts[:, 0])
    else:
        r = np.sqrt((pts * pts).sum(axis=1))
        _, j1 = specfun.j0_j1(wave.k * r)
        radial = -j1 / math.sqrt(wave.k)          # d/dr of J0(kr)/k^1.5
        safe = np.where(r > 0, r, 1.0)
        out[:, 0] = radial * pts[:, 0] / safe
        out[:, 1] = radial * pts[:, 1] / safe
        out[r == 0] = 0.0
    return out[0] if scalar else out


def _branch_constants(k: float) -> tuple[complex, complex]:
    half_pi_over_k = 1j * math.pi / (2.0 * k)
    inner = half_pi_over_k * specfun.hankel1(1, k)   # multiplies J0(kr)
    outer = half_pi_over_k * specfun.bessel_j(1, k)  # multiplies H0(kr)
    return inner, outer


def exact_scattered(k: float, points):
    """The radial reference scattered field at one or many points."""
    pts, scalar = _as_points(points)
    r = np.sqrt((pts * pts).sum(axis=1))
    c_in, c_out = _branch_constants(k)
    out = np.empty(pts.shape[0], dtype=complex)
    inner = r <= 1.0
    if np.any(inner):
        j0, _ = specfun.j0_j1(k * r[inner])
        out[inner] = c_in * j0 - 1.0 / k ** 2
    outs = ~inner
    if np.any(outs):
        j0, _ = specfun.j0_j1(k * r[outs])
        y0, _ = specfun.y0_y1(k * r[outs])
        out[outs] = c_out * (j0 + 1j * y0)
    return out[0] if scalar else out


def exact_gradient(k: float, points):
    """Gradient of the reference scattered field; (..., 2) complex."""
    pts, scalar = _as_points(points)
    r = np.sqrt((pts * pts).sum(axis=1))
    c_in, c_out = _branch_constants(k)
    radial = np.empty(pts.shape[0], dtype=complex)
    inner = r <= 1.0
    if np.any(inner):
        _, j1 = specfun.j0_j1(k * r[inner])
        radial[inner] = -k * c_in * j1
    outs = ~inner
    if np.any(outs):
        _, j1 = specfun.j0_j1(k * r[outs])
        _, y1 = specfun.y0_y1(k * r[outs])
        radial[outs] = -k * c_out * (j1 + 1j * y1)
    safe = np.where(r > 0, r, 1.0)
    grad = radial[:, None] * (pts / safe[:, None])
    grad[r == 0] = 0.0
    return grad[0] if scalar else grad


def manufactured_load(k: float, epsilon: float, points, u_inc: IncidentWave):
    """Source for which the reference field solves the nonlinear problem.

    (-Laplace - k^2) applied to the reference field leaves 1 on the unit
    disk and 0 outside, so the source is 1 there minus the cubic term on
    the core |x| <= 1/2 evaluated from the closed forms.
    """
    pts, scalar = _as_points(points)
    r = np.sqrt((pts * pts).sum(axis=1))
    out = np.where(r <= 1.0, 1.0 + 0.0j, 0.0j)
    core = r <= 0.5
    if np.any(core) and epsilon != 0.0:
        total = exact_scattered(k, pts[core]) + incident_value(u_inc, pts[core])
        out[core] -= k * k * epsilon * np.abs(total) ** 2 * total
    return out[0] if scalar else out
