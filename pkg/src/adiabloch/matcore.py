"""Dense complex-matrix kernel used by every other module.

Thin, contract-enforcing fronts over LAPACK-backed numpy/scipy routines:
unitarily invariant norms, the matrix exponential (scaling-and-squaring with
order-13 Pade), the principal matrix square root (Schur method), linear and
Sylvester solves.  All functions are pure: inputs are never mutated, outputs
are freshly allocated ``complex128`` arrays, and every public operation
guarantees finite entries on return.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (
    BranchCutError,
    NonFiniteError,
    SingularMatrixError,
    SpectralOverlapError,
)

# Residual tolerance for direct solves; rank cutoff is relative to the
# largest singular value.
TOL_SOLVE = 1e-12
TOL_RANK = 1e-9


def as_cmatrix(a) -> np.ndarray:
    """Return ``a`` as a 2-d complex128 array, rejecting non-finite input."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {m.shape}")
    _ensure_finite(m, "input")
    return m


def _ensure_finite(m: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise NonFiniteError(f"{what} contains NaN or Inf entries")
    return m


def _require_square(m: np.ndarray, op: str) -> None:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{op} requires a square matrix, got shape {m.shape}")


def op_norm(a, kind: str = "spectral") -> float:
    """Unitarily invariant matrix norm.

    ``spectral``: largest singular value; ``trace``: sum of singular values;
    ``frobenius``: root-sum-square of moduli.
    """
    m = as_cmatrix(a)
    if kind == "frobenius":
        return float(np.linalg.norm(m))
    if m.size == 0:
        return 0.0
    s = sla.svdvals(m)
    if kind == "spectral":
        return float(s[0]) if s.size else 0.0
    if kind == "trace":
        return float(s.sum())
    raise ValueError(f"unknown norm kind {kind!r}")


def expm(a) -> np.ndarray:
    """Matrix exponential e^A (scaling-and-squaring, order-13 Pade)."""
    m = as_cmatrix(a)
    _require_square(m, "expm")
    out = sla.expm(m)
    return _ensure_finite(np.asarray(out, dtype=np.complex128), "expm result")


def principal_sqrt(a, axis_tol: float = 1e-13) -> np.ndarray:
    """Principal matrix square root: X with X^2 = A, spectrum(X) in Re > 0.

    Raises :class:`BranchCutError` when an eigenvalue of ``A`` lies within
    ``axis_tol`` (relative) of the closed negative real axis, where the
    principal branch is ambiguous.
    """
    m = as_cmatrix(a)
    _require_square(m, "principal_sqrt")
    if m.size == 0:
        return m.copy()
    scale = max(op_norm(m, "spectral"), 1.0)
    eigs = np.linalg.eigvals(m)
    for lam in eigs:
        if abs(lam) <= axis_tol * scale or (
            lam.real < 0.0 and abs(lam.imag) <= axis_tol * scale
        ):
            raise BranchCutError(
                f"eigenvalue {lam} lies on or near the closed negative real "
                "axis; principal square root is ill-defined"
            )
    x = sla.sqrtm(m)
    return _ensure_finite(np.asarray(x, dtype=np.complex128), "principal_sqrt result")


def solve_linear(a, y) -> np.ndarray:
    """Solve A X = Y for X, rejecting A singular within tolerance.

    The reciprocal condition number is estimated from the LU factors
    (LAPACK gecon); rcond below machine-epsilon scale raises
    :class:`SingularMatrixError` carrying the condition estimate.
    """
    m = as_cmatrix(a)
    _require_square(m, "solve_linear")
    rhs = np.asarray(y, dtype=np.complex128)
    _ensure_finite(rhs, "right-hand side")
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(
            f"incompatible shapes {m.shape} and {rhs.shape} in solve_linear"
        )
    try:
        with warnings.catch_warnings():
            # exactly singular input is detected via rcond below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(m)
    except (ValueError, np.linalg.LinAlgError) as exc:  # pragma: no cover
        raise SingularMatrixError(f"LU factorization failed: {exc}") from exc
    anorm = np.linalg.norm(m, 1)
    rcond, info = sla.lapack.zgecon(lu, anorm)
    if info != 0 or not np.isfinite(rcond) or rcond < 10 * np.finfo(float).eps**1.5:
        cond = np.inf if rcond == 0 else 1.0 / max(rcond, np.finfo(float).tiny)
        raise SingularMatrixError(
            f"matrix singular to working precision (cond ~ {cond:.3e})",
            cond=cond,
        )
    x = sla.lu_solve((lu, piv), rhs)
    return _ensure_finite(np.asarray(x, dtype=np.complex128), "solve result")


def inv(a) -> np.ndarray:
    """Matrix inverse via :func:`solve_linear` against the identity."""
    m = as_cmatrix(a)
    _require_square(m, "inv")
    return solve_linear(m, np.eye(m.shape[0], dtype=np.complex128))


def solve_sylvester(a, b, y, sep_tol: float = 1e-10) -> np.ndarray:
    """Solve A X - X B = Y, requiring spectra of A and B to be disjoint.

    The measured spectral separation min |eig(A) - eig(B)| is checked
    against ``sep_tol`` times the problem scale and reported in the
    :class:`SpectralOverlapError` when too small.
    """
    ma = as_cmatrix(a)
    mb = as_cmatrix(b)
    my = np.asarray(y, dtype=np.complex128)
    _require_square(ma, "solve_sylvester")
    _require_square(mb, "solve_sylvester")
    _ensure_finite(my, "right-hand side")
    ea = np.linalg.eigvals(ma)
    eb = np.linalg.eigvals(mb)
    sep = np.abs(ea[:, None] - eb[None, :]).min()
    scale = max(op_norm(ma, "spectral"), op_norm(mb, "spectral"), 1.0)
    if sep <= sep_tol * scale:
        raise SpectralOverlapError(
            f"spectra of the Sylvester operands overlap (separation "
            f"{sep:.3e}, scale {scale:.3e})",
            separation=float(sep),
        )
    # scipy solves A X + X B = Q
    x = sla.solve_sylvester(ma, -mb, my)
    return _ensure_finite(np.asarray(x, dtype=np.complex128), "sylvester result")


def numerical_rank(a, tol: float | None = None) -> int:
    """Rank from singular values above ``tol`` (default TOL_RANK * sigma_max)."""
    m = as_cmatrix(a)
    if m.size == 0:
        return 0
    s = sla.svdvals(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    cutoff = (TOL_RANK * s[0]) if tol is None else tol
    return int(np.count_nonzero(s > cutoff))
