"""Error norms over subdomains, the energy norm, and convergence orders.

Relative errors are reported over the physical region |x| <= R by
default; the layer only exists to absorb.  The energy norm is
(Re a(v,v) + 2 (k^2 v, v))^(1/2), evaluated either through the assembled
matrices (nodal vectors) or by direct elementwise quadrature (arbitrary
fields, region restrictions, errors against closed forms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic, pml
from .assembly import NlhProblem, load_values, region_mask


@dataclass(frozen=True)
class ErrorReport:
    region: str
    rel_l2: float
    rel_h1: float
    rel_energy: float
    dofs: int
    h_max: float


def _region_ids(problem: NlhProblem, region: str) -> np.ndarray:
    ids = np.nonzero(region_mask(problem.mesh, region))[0]
    if ids.size == 0:
        raise ValueError(f"region {region!r} contains no elements")
    return ids


def _field_integrals(problem: NlhProblem, values_q, grads_q, ids):
    """(L2^2, H1-semi^2, energy^2) of a field given at quadrature points.

    values_q: (m, nq) complex, grads_q: (m, nq, 2) complex on elements ids.
    """
    d = problem.discretization
    w = 2.0 * d.areas[ids][:, None] * d.rule.weights[None, :]
    k2 = d.k_tri[ids] ** 2
    a_q, b_q = pml.coefficient_fields(problem.pml, d.quad_points[ids])
    l2 = float(np.sum(w * np.abs(values_q) ** 2))
    h1 = float(np.sum(w * (np.abs(grads_q) ** 2).sum(axis=2)))
    # Re a(v,v) + 2 k^2 ||v||^2 = int Re(A grad v . conj grad v) + k^2 (2 - Re B) |v|^2
    quad_grad = np.real(np.einsum("tqa,tqab,tqb->tq", grads_q, a_q, np.conj(grads_q)))
    energy = float(np.sum(w * quad_grad)
                   + np.sum(w * (2.0 - b_q.real) * k2[:, None] * np.abs(values_q) ** 2))
    return l2, h1, max(energy, 0.0)


def _nodal_at_quadrature(problem: NlhProblem, full_values: np.ndarray, ids):
    d = problem.discretization
    tri = problem.mesh.triangles[ids]
    vals = np.einsum("ti,qi->tq", full_values[tri], d.phi)
    grads = np.einsum("ti,tia->ta", full_values[tri], d.grads[ids])
    grads = np.broadcast_to(grads[:, None, :], vals.shape + (2,))
    return vals, grads


def _exact_at_quadrature(problem: NlhProblem, exact_value, exact_gradient, ids):
    d = problem.discretization
    pts = d.quad_points[ids].reshape(-1, 2)
    shape = d.quad_points[ids].shape[:2]
    vals = np.asarray(exact_value(pts), dtype=complex).reshape(shape)
    grads = np.asarray(exact_gradient(pts), dtype=complex).reshape(shape + (2,))
    return vals, grads


def error_against_exact(problem: NlhProblem, solution: np.ndarray,
                        exact_value, exact_gradient, region: str = "omega") -> ErrorReport:
    """Relative L2, full-H1 and energy errors of a reduced solution vector."""
    d = problem.discretization
    ids = _region_ids(problem, region)
    full = d.expand(np.asarray(solution, dtype=complex))
    uh, guh = _nodal_at_quadrature(problem, full, ids)
    ue, gue = _exact_at_quadrature(problem, exact_value, exact_gradient, ids)
    e_l2, e_h1, e_en = _field_integrals(problem, uh - ue, guh - gue, ids)
    n_l2, n_h1, n_en = _field_integrals(problem, ue, gue, ids)
    return ErrorReport(
        region=region,
        rel_l2=math.sqrt(e_l2 / n_l2),
        rel_h1=math.sqrt((e_l2 + e_h1) / (n_l2 + n_h1)),
        rel_energy=math.sqrt(e_en / n_en) if n_en > 0 else math.inf,
        dofs=d.n,
        h_max=problem.mesh.h_max,
    )


def interpolation_error(problem: NlhProblem, exact_value, exact_gradient,
                        region: str = "omega") -> ErrorReport:
    """Errors of the nodal interpolant of the exact field (no boundary zeroing)."""
    d = problem.discretization
    ids = _region_ids(problem, region)
    nodal = np.asarray(exact_value(problem.mesh.vertices), dtype=complex)
    uh, guh = _nodal_at_quadrature(problem, nodal, ids)
    ue, gue = _exact_at_quadrature(problem, exact_value, exact_gradient, ids)
    e_l2, e_h1, e_en = _field_integrals(problem, uh - ue, guh - gue, ids)
    n_l2, n_h1, n_en = _field_integrals(problem, ue, gue, ids)
    return ErrorReport(
        region=region,
        rel_l2=math.sqrt(e_l2 / n_l2),
        rel_h1=math.sqrt((e_l2 + e_h1) / (n_l2 + n_h1)),
        rel_energy=math.sqrt(e_en / n_en) if n_en > 0 else math.inf,
        dofs=d.n,
        h_max=problem.mesh.h_max,
    )


def energy_norm(problem: NlhProblem, v_reduced: np.ndarray, region: str = "d") -> float:
    """Energy norm of a reduced nodal vector via the assembled forms."""
    m_a, w_k = problem.discretization.energy_matrices(region)
    v = np.asarray(v_reduced, dtype=complex)
    quad = np.vdot(v, m_a @ v).real + 2.0 * np.vdot(v, w_k @ v).real
    return math.sqrt(max(quad, 0.0))


def energy_norm_quadrature(problem: NlhProblem, v_reduced: np.ndarray,
                           region: str = "d") -> float:
    """Same norm by direct elementwise quadrature (cross-check path)."""
    ids = _region_ids(problem, region)
    full = problem.discretization.expand(np.asarray(v_reduced, dtype=complex))
    vals, grads = _nodal_at_quadrature(problem, full, ids)
    _, _, energy = _field_integrals(problem, vals, grads, ids)
    return math.sqrt(energy)


def seminorm_h1(problem: NlhProblem, v_reduced: np.ndarray, region: str = "d") -> float:
    ids = _region_ids(problem, region)
    full = problem.discretization.expand(np.asarray(v_reduced, dtype=complex))
    vals, grads = _nodal_at_quadrature(problem, full, ids)
    _, h1, _ = _field_integrals(problem, vals, grads, ids)
    return math.sqrt(h1)


def norm_l2(problem: NlhProblem, v_reduced: np.ndarray, region: str = "d") -> float:
    ids = _region_ids(problem, region)
    full = problem.discretization.expand(np.asarray(v_reduced, dtype=complex))
    vals, grads = _nodal_at_quadrature(problem, full, ids)
    l2, _, _ = _field_integrals(problem, vals, grads, ids)
    return math.sqrt(l2)


def compute_mf(problem: NlhProblem) -> float:
    """Data functional: ||f|| over the physical region plus
    k^2 eps ||u_inc||^3 in L6 over the core, by the module quadrature rule."""
    d = problem.discretization
    ids = _region_ids(problem, "omega")
    pts = d.quad_points[ids].reshape(-1, 2)
    f_q = load_values(problem, pts).reshape(ids.size, -1)
    w = 2.0 * d.areas[ids][:, None] * d.rule.weights[None, :]
    norm_f = math.sqrt(float(np.sum(w * np.abs(f_q) ** 2)))

    term = 0.0
    if problem.kerr_epsilon > 0 and problem.incident is not None:
        core = _region_ids(problem, "kerr")
        pts = d.quad_points[core].reshape(-1, 2)
        uinc = analytic.incident_value(problem.incident, pts).reshape(core.size, -1)
        w = 2.0 * d.areas[core][:, None] * d.rule.weights[None, :]
        l6 = float(np.sum(w * np.abs(uinc) ** 6))
        k = problem.wavenumber.background
        term = k * k * problem.kerr_epsilon * math.sqrt(l6)
    return norm_f + term


@dataclass(frozen=True)
class OrderFit:
    """Per-interval orders by the successive-ratio formula and a log-log slope."""
    intervals: tuple
    slope: float


def order_fit(pairs, initial_error: float | None = None) -> OrderFit:
    """Convergence orders for a list of (x, error) pairs.

    The interval order between points j and j+1 is
    (log e_{j+1} - log e_j) / (log e_j - log e_{j-1}); the first interval
    uses ``initial_error`` as e_{-1} when given (e.g. 1.0 for an iteration
    started from zero) and is None otherwise.  The slope is the
    least-squares fit of log(error) against log(x).
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise ValueError("need at least two (x, error) pairs")
    xs = np.array([float(p[0]) for p in pairs])
    es = np.array([float(p[1]) for p in pairs])
    if np.any(es <= 0):
        raise ValueError("errors must be positive")
    if np.any(xs <= 0):
        raise ValueError("x values must be positive")
    log_e = np.log(es)
    intervals: list[float | None] = []
    for j in range(len(pairs) - 1):
        if j == 0:
            if initial_error is None:
                intervals.append(None)
                continue
            den = log_e[0] - math.log(initial_error)
        else:
            den = log_e[j] - log_e[j - 1]
        num = log_e[j + 1] - log_e[j]
        intervals.append(num / den if den != 0.0 else math.nan)
    log_x = np.log(xs)
    lx = log_x - log_x.mean()
    slope = float((lx * (log_e - log_e.mean())).sum() / (lx * lx).sum())
    return OrderFit(intervals=tuple(intervals), slope=slope)
