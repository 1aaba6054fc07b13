"""Iteration schemes for the discrete nonlinear problem and the amplitude
continuation used by the bistability study.

Three schemes solve the same fixed discrete problem: the lagged
("frozen") cubic term, the full Newton linearization (complex-linear plus
antilinear part, solved as a doubled real system), and the modified
Newton variant that lags only the conjugate term and so stays
complex-linear.  Iterations stop when the energy-norm relative update
drops below the tolerance.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import assembly, linsolve, metrics
from .analytic import IncidentWave
from .assembly import NlhProblem

SCHEMES = ("frozen", "newton", "modified")
_DEFAULT_MAX_ITER = {"newton": 50, "modified": 300, "frozen": 300}
_DIVERGENCE_GUARD = 1e3


@dataclass
class IterationTrace:
    """Per-step record of one nonlinear solve."""

    scheme: str
    updates: list = field(default_factory=list)       # energy-norm relative updates
    residuals: list = field(default_factory=list)     # Euclidean residual norms
    converged: bool = False
    diverged: bool = False

    @property
    def steps(self) -> int:
        return len(self.updates)


@dataclass(frozen=True)
class BranchPoint:
    """One converged (or failed) amplitude of a continuation sweep."""

    amplitude: float
    energy_omega: float
    steps: int
    converged: bool
    direction: str


@dataclass(frozen=True)
class SweepSummary:
    up_jump: float | None
    down_jump: float | None
    hysteresis: bool


class NlhSolver:
    """Binds one problem's assembled operators; runs the iteration schemes."""

    def __init__(self, problem: NlhProblem):
        self.problem = problem
        self.disc = problem.discretization
        self.system = self.disc.system_matrix
        self._energy = self.disc.energy_matrices("d")

    def _energy_norm(self, v: np.ndarray) -> float:
        m_a, w_k = self._energy
        quad = np.vdot(v, m_a @ v).real + 2.0 * np.vdot(v, w_k @ v).real
        return math.sqrt(max(quad, 0.0))

    def _step(self, scheme: str, w: np.ndarray, f: np.ndarray,
              incident: IncidentWave | None) -> np.ndarray:
        if scheme == "newton":
            lin, anti, rhs = assembly.assemble_kerr_newton(self.problem, w, incident)
            x, report = linsolve.solve_antilinear(self.system + lin, anti, f + rhs)
        elif scheme == "modified":
            mat, rhs = assembly.assemble_kerr_modified_newton(self.problem, w, incident)
            x, report = linsolve.solve(self.system + mat, f + rhs)
        elif scheme == "frozen":
            mat, rhs = assembly.assemble_kerr_frozen(self.problem, w, incident)
            x, report = linsolve.solve(self.system + mat, f + rhs)
        else:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        if not report.success:
            raise RuntimeError(
                f"linear solve failed ({report.message}, residual {report.relative_residual:.2e})")
        return x

    def solve(self, scheme: str = "newton", initial: np.ndarray | None = None,
              tol: float = 1e-6, max_iter: int | None = None,
              incident: IncidentWave | None = None,
              record_residuals: bool = True):
        """Iterate until the relative energy-norm update drops below tol.

        Returns (solution, trace).  Non-convergence within max_iter is
        reported through the trace, not raised; a linear-solve failure
        raises with the step index attached.
        """
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        max_iter = max_iter if max_iter is not None else _DEFAULT_MAX_ITER[scheme]
        if max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        f = (self.disc.load_vector if incident is None
             else assembly.assemble_load(self.problem, incident))
        w = np.zeros(self.disc.n, dtype=complex) if initial is None \
            else np.asarray(initial, dtype=complex).copy()
        trace = IterationTrace(scheme=scheme)
        u = w
        for step in range(1, max_iter + 1):
            try:
                u = self._step(scheme, w, f, incident)
            except RuntimeError as exc:
                raise RuntimeError(f"iteration {step}: {exc}") from exc
            norm_u = self._energy_norm(u)
            diff = self._energy_norm(u - w)
            update = 0.0 if (norm_u == 0.0 and diff == 0.0) else \
                (math.inf if norm_u == 0.0 else diff / norm_u)
            trace.updates.append(update)
            if record_residuals:
                trace.residuals.append(float(np.linalg.norm(
                    assembly.nonlinear_residual(self.problem, u, incident))))
            if update < tol:
                trace.converged = True
                break
            if update > _DIVERGENCE_GUARD:
                trace.diverged = True
                break
            w = u
        return u, trace


def solve_nlh(problem: NlhProblem, scheme: str = "newton",
              initial: np.ndarray | None = None, tol: float = 1e-6,
              max_iter: int | None = None):
    """One nonlinear solve; see NlhSolver.solve."""
    return NlhSolver(problem).solve(scheme=scheme, initial=initial, tol=tol,
                                    max_iter=max_iter)


@dataclass(frozen=True)
class SchemeErrors:
    """Relative errors against the reference solution, per iteration step."""

    scheme: str
    errors: tuple
    orders: tuple


def newton_order_table(problem: NlhProblem, reference_tol: float = 1e-13,
                       max_steps: dict | None = None,
                       floor: float = 1e-12) -> dict:
    """Errors and orders per step for all three schemes from zero starts.

    The reference is the Newton solution at ``reference_tol``.  Each
    scheme is iterated from zero until its error falls below ``floor``
    (near the reference's own accuracy) or its step budget runs out.
    The interval orders use e_0 = 1, the relative error of the zero
    initial guess.
    """
    solver = NlhSolver(problem)
    reference, ref_trace = solver.solve("newton", tol=reference_tol, max_iter=80,
                                        record_residuals=False)
    if not ref_trace.converged:
        # the update criterion can stall just above a tolerance this tight;
        # a stalled iterate at a few ulps of update is still a valid reference
        if min(ref_trace.updates) > 1e4 * reference_tol:
            raise RuntimeError("reference Newton solve did not converge")
    ref_norm = solver._energy_norm(reference)
    budgets = {"newton": 12, "modified": 140, "frozen": 140}
    if max_steps:
        budgets.update(max_steps)
    f = solver.disc.load_vector
    out = {}
    for scheme in SCHEMES:
        w = np.zeros(solver.disc.n, dtype=complex)
        errors = []
        for _ in range(budgets[scheme]):
            w = solver._step(scheme, w, f, None)
            err = solver._energy_norm(w - reference) / ref_norm
            if err <= 0.0:
                break
            errors.append(err)
            if err < floor:
                break
        fit = metrics.order_fit(list(enumerate(errors, start=1)), initial_error=1.0)
        out[scheme] = SchemeErrors(scheme=scheme, errors=tuple(errors),
                                   orders=(None,) + fit.intervals)
    return out


def _detect_jump(points: list, factor: float = 1.3) -> float | None:
    """Midpoint amplitude of the largest consecutive energy ratio above factor."""
    best: tuple[float, float] | None = None
    prev = None
    for p in points:
        if not p.converged or p.energy_omega <= 0:
            prev = None
            continue
        if prev is not None:
            ratio = max(p.energy_omega, prev.energy_omega) / min(p.energy_omega, prev.energy_omega)
            if ratio > factor and (best is None or ratio > best[0]):
                best = (ratio, 0.5 * (p.amplitude + prev.amplitude))
        prev = p
    return None if best is None else best[1]


def bistability_sweep(problem: NlhProblem, amplitudes, scheme: str = "newton",
                      tol: float = 1e-6, max_iter: int | None = None,
                      fallback: str | None = "modified"):
    """Warm-started continuation over incident amplitudes, up then down.

    Returns (up_points, down_points, summary).  The rising pass feeds each
    converged solution to the next amplitude; the falling pass continues
    from the rising pass's final state, the way a physical sweep would.
    Where the primary scheme fails (right at a fold the warm start sits on
    a branch that no longer exists), the slower but guess-robust fallback
    scheme finishes that amplitude; a still-unconverged amplitude is
    recorded as such and the next one restarts from zero.  A jump is
    declared where the physical-region energy norm changes by more than
    1.3x between consecutive amplitudes (the measured branch gap at the
    rising fold is ~1.4x, below the nominal 1.5), and its threshold reported as the
    midpoint of that pair.
    """
    amplitudes = [float(a) for a in amplitudes]
    if sorted(amplitudes) != amplitudes:
        raise ValueError("amplitudes must be sorted ascending")
    if problem.incident is None or problem.incident.kind != "plane":
        raise ValueError("the amplitude sweep needs a plane incident wave")
    solver = NlhSolver(problem)
    m_a, w_k = solver.disc.energy_matrices("omega")

    def omega_energy(v):
        return math.sqrt(max(np.vdot(v, m_a @ v).real + 2.0 * np.vdot(v, w_k @ v).real, 0.0))

    def attempt(wave, guess, use_scheme, iters):
        try:
            return solver.solve(scheme=use_scheme, initial=guess, tol=tol,
                                max_iter=iters, incident=wave,
                                record_residuals=False)
        except RuntimeError:            # dead linear solve: give up on this start
            return None, IterationTrace(scheme=use_scheme)

    def run(direction: str, amps, first_guess):
        points = []
        guess = first_guess
        for amp in amps:
            wave = dataclasses.replace(problem.incident, amplitude=amp)
            u, trace = attempt(wave, guess, scheme, max_iter)
            steps = trace.steps
            if not trace.converged and fallback and fallback != scheme:
                u2, trace2 = attempt(wave, guess, fallback, None)
                if trace2.converged:
                    u, trace = u2, trace2
                steps += trace2.steps
            ok = trace.converged and u is not None
            points.append(BranchPoint(
                amplitude=amp, energy_omega=omega_energy(u) if ok else math.nan,
                steps=steps, converged=ok, direction=direction))
            guess = u.copy() if ok else None
        return points, guess

    up, last_state = run("up", amplitudes, None)
    down, _ = run("down", list(reversed(amplitudes)), last_state)
    up_jump = _detect_jump(up)
    down_jump = _detect_jump(down)
    hysteresis = (up_jump is not None and down_jump is not None
                  and up_jump > down_jump)
    return up, down, SweepSummary(up_jump=up_jump, down_jump=down_jump,
                                  hysteresis=hysteresis)
