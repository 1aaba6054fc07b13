"""Sparse direct solves for the complex-symmetric systems.

Complex n x n systems go through a sparse LU factorization with
fill-reducing column ordering.  The full linearization of the cubic term
couples the unknown with its conjugate, which is only real-linear; those
steps are solved as the equivalent 2n x 2n real block system for the real
and imaginary parts.  Every solve recomputes its residual independently
of the factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import ComplexSparseMatrix

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LinearSolveReport:
    relative_residual: float
    success: bool
    n: int
    nnz: int
    message: str = ""


class LinearSolveError(RuntimeError):
    """Factorization failed outright (singular or structurally broken matrix)."""

    def __init__(self, report: LinearSolveReport):
        super().__init__(report.message or "linear solve failed")
        self.report = report


def _as_csc(matrix) -> sp.csc_matrix:
    if isinstance(matrix, ComplexSparseMatrix):
        return matrix.to_scipy().tocsc()
    return sp.csc_matrix(matrix)


def _relative_residual(residual_norm: float, rhs_norm: float) -> float:
    if rhs_norm == 0.0:
        return 0.0 if residual_norm == 0.0 else np.inf
    return residual_norm / rhs_norm


class Factorization:
    """Reusable LU factors of one complex sparse matrix."""

    def __init__(self, matrix):
        csc = _as_csc(matrix)
        if csc.shape[0] != csc.shape[1]:
            raise ValueError(f"matrix must be square, got shape {csc.shape}")
        self._csc = csc
        self.n = csc.shape[0]
        self.nnz = csc.nnz
        try:
            self._lu = spla.splu(csc)
        except RuntimeError as exc:
            raise LinearSolveError(LinearSolveReport(
                relative_residual=np.inf, success=False, n=self.n, nnz=self.nnz,
                message=f"factorization failed: {exc}")) from exc

    def solve(self, b: np.ndarray) -> tuple[np.ndarray, LinearSolveReport]:
        b = np.asarray(b)
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side has shape {b.shape}, expected ({self.n},)")
        b = b.astype(self._csc.dtype, copy=False)
        x = self._lu.solve(b)
        rhs_norm = np.linalg.norm(b)
        res = _relative_residual(np.linalg.norm(self._csc @ x - b), rhs_norm)
        for _ in range(2):              # iterative refinement for ill-conditioned steps
            if res <= _RESIDUAL_TOL:
                break
            x = x + self._lu.solve(b - self._csc @ x)
            res = _relative_residual(np.linalg.norm(self._csc @ x - b), rhs_norm)
        ok = bool(res <= _RESIDUAL_TOL)
        return x, LinearSolveReport(relative_residual=float(res), success=ok,
                                    n=self.n, nnz=self.nnz,
                                    message="" if ok else "residual above tolerance")


def solve(matrix, b: np.ndarray) -> tuple[np.ndarray, LinearSolveReport]:
    """Direct solve of M x = b with an independently recomputed residual."""
    return Factorization(matrix).solve(np.asarray(b, dtype=complex))


def solve_antilinear(linear, antilinear, b: np.ndarray) -> tuple[np.ndarray, LinearSolveReport]:
    """Solve L x + Q conj(x) = b through the 2n x 2n real block system.

    With x = xr + i xi the block form is
        [[Lr + Qr, -Li + Qi], [Li + Qi, Lr - Qr]] (xr; xi) = (br; bi).
    """
    lin = _as_csc(linear)
    anti = _as_csc(antilinear)
    if lin.shape != anti.shape:
        raise ValueError(f"operator shapes differ: {lin.shape} vs {anti.shape}")
    n = lin.shape[0]
    b = np.asarray(b, dtype=complex)
    if b.shape != (n,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n},)")
    lr, li = lin.real, lin.imag
    qr, qi = anti.real, anti.imag
    big = sp.bmat([[lr + qr, -li + qi], [li + qi, lr - qr]], format="csc")
    try:
        lu = spla.splu(big)
    except RuntimeError as exc:
        raise LinearSolveError(LinearSolveReport(
            relative_residual=np.inf, success=False, n=n, nnz=lin.nnz + anti.nnz,
            message=f"factorization failed: {exc}")) from exc
    rhs = np.concatenate([b.real, b.imag])
    xy = lu.solve(rhs)
    x = xy[:n] + 1j * xy[n:]
    rhs_norm = np.linalg.norm(b)

    def residual_of(xc):
        return lin @ xc + anti @ np.conj(xc) - b

    res = _relative_residual(np.linalg.norm(residual_of(x)), rhs_norm)
    for _ in range(2):
        if res <= _RESIDUAL_TOL:
            break
        r = residual_of(x)
        dxy = lu.solve(np.concatenate([(-r).real, (-r).imag]))
        x = x + (dxy[:n] + 1j * dxy[n:])
        res = _relative_residual(np.linalg.norm(residual_of(x)), rhs_norm)
    ok = bool(res <= _RESIDUAL_TOL)
    return x, LinearSolveReport(relative_residual=float(res), success=ok,
                                n=n, nnz=lin.nnz + anti.nnz,
                                message="" if ok else "residual above tolerance")
