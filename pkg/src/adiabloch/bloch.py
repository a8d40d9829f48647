"""Solvers for the adiabatic Bloch equations and their perturbative series.

For each eigenspace of the strong generator (projection P, nilpotent N of
index n, reduced resolvent S) and weak perturbation C, the central objects
are solutions of the quadratic matrix equations

    (1/g) S X^2 - (1 + (1/g) C S) X + S X N + C P = 0,    X (1 - P) = 0,

for the generator amplitude ``omega`` (the block generator is D = P omega),
its order-reversed conjugate, and the equivalent wave-operator equations

    U - S U N + (1/g) S (C U - U C U) - P = 0,            U (1 - P) = 0,

related by U = P - S omega / g.  Solutions are found either by plain
fixed-point iteration of the natural map or by Newton iteration, whose
convergence is certified by computable Newton-Kantorovich constants
(:func:`kantorovich_report`).  The same data feed the perturbative
coefficient recursions and the symmetrized (Schrieffer-Wolff) series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import BranchEscapeError, ConvergenceError, PreconditionError
from .spectral import EigenspaceData, SpectralDecomposition

DEFAULT_TOL = 1e-12


def bracket(block: EigenspaceData, a, orientation: str = "right") -> np.ndarray:
    """Nilpotent-weighted bracket of an operator on one eigenspace.

    ``right``: sum_{m < n} S^m A N^m;  ``left``: sum_{m < n} N^m A S^m.
    With no nilpotent (n = 1) this is the identity map.
    """
    mat = matcore.as_cmatrix(a)
    s, nil = block.resolvent, block.nilpotent
    out = mat.copy()
    left_fac = np.eye(mat.shape[0], dtype=np.complex128)
    right_fac = np.eye(mat.shape[0], dtype=np.complex128)
    for _m in range(1, block.index):
        if orientation == "right":
            left_fac = left_fac @ s
            right_fac = right_fac @ nil
        elif orientation == "left":
            left_fac = left_fac @ nil
            right_fac = right_fac @ s
        else:
            raise ValueError(f"unknown orientation {orientation!r}")
        out = out + left_fac @ mat @ right_fac
    return out


@dataclass(frozen=True)
class KantorovichReport:
    """Computable constants certifying solvability of the wave equation.

    ``solvable`` means h <= 1/2, equivalently gamma >= gamma_min; the
    solution then exists within ||X - P|| <= theta and is unique within
    ||X - P|| < xi, with quadratic Newton convergence when h < 1/2.
    """

    ell: int
    mu: float
    beta: float
    nu: float
    lipschitz: float
    h: float
    theta: float
    xi: float
    gamma_min: float
    solvable: bool
    quadratic: bool
    norm_kind: str = "spectral"


def block_gamma_min(block: EigenspaceData, c, norm_kind: str = "spectral") -> float:
    """Coupling threshold 4 mu ||S|| ||C|| ||P|| of one eigenspace."""
    s_norm = matcore.op_norm(block.resolvent, norm_kind)
    n_norm = matcore.op_norm(block.nilpotent, norm_kind)
    p_norm = matcore.op_norm(block.projection, norm_kind)
    c_norm = matcore.op_norm(c, norm_kind)
    mu = _geometric_factor(s_norm * n_norm, block.index)
    return 4.0 * mu * s_norm * c_norm * p_norm


def _geometric_factor(sn: float, index: int) -> float:
    if abs(1.0 - sn) < 1e-12:
        return float(index)
    return (1.0 - sn**index) / (1.0 - sn)


def kantorovich_report(
    dec: SpectralDecomposition,
    c,
    gamma: float,
    ell: int,
    norm_kind: str = "spectral",
) -> KantorovichReport:
    blk = dec.blocks[ell]
    s_norm = matcore.op_norm(blk.resolvent, norm_kind)
    n_norm = matcore.op_norm(blk.nilpotent, norm_kind)
    p_norm = matcore.op_norm(blk.projection, norm_kind)
    c_norm = matcore.op_norm(c, norm_kind)
    mu = _geometric_factor(s_norm * n_norm, blk.index)
    scp = s_norm * c_norm * p_norm
    gamma_min = 4.0 * mu * scp
    lipschitz = 2.0 * scp / gamma

    a = 2.0 * mu * scp / gamma
    if a >= 1.0:
        # beta undefined: derivative-inverse bound diverges
        return KantorovichReport(
            ell, mu, math.inf, math.inf, lipschitz, math.inf,
            math.nan, math.nan, gamma_min, False, False, norm_kind,
        )
    beta = mu / (1.0 - a)
    nu = (mu * scp / gamma) / (1.0 - a)
    h = beta * lipschitz * nu
    solvable = h <= 0.5
    quadratic = h < 0.5
    if solvable:
        root = math.sqrt(max(0.0, 1.0 - gamma_min / gamma))
        theta = (1.0 - root) / (1.0 + root)
        xi = math.inf if theta == 0.0 else 1.0 / theta
    else:
        theta = math.nan
        xi = math.nan
    return KantorovichReport(
        ell, mu, beta, nu, lipschitz, h, theta, xi,
        gamma_min, solvable, quadratic, norm_kind,
    )


# ---------------------------------------------------------------------------
# the four quadratic equations: residuals, natural maps, Frechet derivatives


def omega_residual(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return (s @ x @ x) / gamma - x - (c @ s @ x) / gamma + s @ x @ nil + c @ p


def omega_conj_residual(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return (x @ x @ s) / gamma - x - (x @ s @ c) / gamma + nil @ x @ s + p @ c


def wave_residual(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return x - s @ x @ nil + (s @ (c @ x - x @ c @ x)) / gamma - p


def wave_conj_residual(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return x - nil @ x @ s + ((x @ c - x @ c @ x) @ s) / gamma - p


def _omega_map(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return c @ p + s @ x @ nil - (c @ s @ x) / gamma + (s @ x @ x) / gamma


def _omega_conj_map(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return p @ c + nil @ x @ s - (x @ s @ c) / gamma + (x @ x @ s) / gamma


def _wave_map(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return p + s @ x @ nil - (s @ (c @ x - x @ c @ x)) / gamma


def _wave_conj_map(blk, c, gamma, x):
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    return p + nil @ x @ s - ((x @ c - x @ c @ x) @ s) / gamma


def _omega_jacobian(blk, c, gamma, x, eye2):
    s, nil = blk.resolvent, blk.nilpotent
    n = s.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return (
        (np.kron(x.T, s) + np.kron(eye, s @ x)) / gamma
        - eye2
        - np.kron(eye, c @ s) / gamma
        + np.kron(nil.T, s)
    )


def _omega_conj_jacobian(blk, c, gamma, x, eye2):
    s, nil = blk.resolvent, blk.nilpotent
    n = s.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return (
        (np.kron((x @ s).T, eye) + np.kron(s.T, x)) / gamma
        - eye2
        - np.kron((s @ c).T, eye) / gamma
        + np.kron(s.T, nil)
    )


def _wave_jacobian(blk, c, gamma, x, eye2):
    s, nil = blk.resolvent, blk.nilpotent
    n = s.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return (
        eye2
        - np.kron(nil.T, s)
        + (np.kron(eye, s @ c) - np.kron((c @ x).T, s) - np.kron(eye, s @ x @ c))
        / gamma
    )


def _wave_conj_jacobian(blk, c, gamma, x, eye2):
    s, nil = blk.resolvent, blk.nilpotent
    n = s.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return (
        eye2
        - np.kron(s.T, nil)
        + (np.kron((c @ s).T, eye) - np.kron((c @ x @ s).T, eye) - np.kron(s.T, x @ c))
        / gamma
    )


_EQUATIONS = {
    "omega": (omega_residual, _omega_map, _omega_jacobian),
    "omega_conj": (omega_conj_residual, _omega_conj_map, _omega_conj_jacobian),
    "wave": (wave_residual, _wave_map, _wave_jacobian),
    "wave_conj": (wave_conj_residual, _wave_conj_map, _wave_conj_jacobian),
}


def initial_guess(blk: EigenspaceData, c, which: str) -> np.ndarray:
    """Zeroth-order perturbative solution used to select the branch."""
    p = blk.projection
    if which == "omega":
        return bracket(blk, c @ p, "right")
    if which == "omega_conj":
        return bracket(blk, p @ c, "left")
    if which in ("wave", "wave_conj"):
        return p.copy()
    raise ValueError(f"unknown equation {which!r}")


def _ball_radius(blk, gamma, which, x, x0):
    """Distance of the iterate from the certified center, in wave variables."""
    if which == "omega":
        return matcore.op_norm(blk.resolvent @ (x - x0), "spectral") / gamma
    if which == "omega_conj":
        return matcore.op_norm((x - x0) @ blk.resolvent, "spectral") / gamma
    return matcore.op_norm(x - x0, "spectral")


def solve_equation(
    dec: SpectralDecomposition,
    c,
    gamma: float,
    ell: int,
    which: str,
    method: str = "newton",
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
    relaxation: float = 1.0,
    report: KantorovichReport | None = None,
):
    """Solve one of the four block equations; returns (solution, info dict).

    Newton steps solve the exact Frechet-derivative system; the iteration
    aborts with :class:`BranchEscapeError` if an iterate leaves the
    certified uniqueness ball (when one exists), so the returned solution
    is always the branch selected by the perturbative initial guess.
    """
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    residual_fn, map_fn, jac_fn = _EQUATIONS[which]
    if report is None:
        report = kantorovich_report(dec, cm, gamma, ell)
    x0 = initial_guess(blk, cm, which)
    # the certified ball is centered on the wave-equation initial guess
    center = blk.projection if which.startswith("wave") else np.zeros_like(x0)
    xi = report.xi if report.solvable else math.inf

    x = x0.copy()
    history = []
    n = x.shape[0]
    eye2 = np.eye(n * n, dtype=np.complex128) if method == "newton" else None
    res0 = None
    for it in range(max_iter):
        r = residual_fn(blk, cm, gamma, x)
        res = matcore.op_norm(r, "spectral")
        history.append(res)
        if res0 is None:
            res0 = res
        if res <= tol:
            info = {
                "iterations": it,
                "residual": res,
                "history": history,
                "method": method,
                "certified": report.solvable,
            }
            return x, info
        if not np.isfinite(res) or res > 1e6 * (1.0 + res0):
            raise ConvergenceError(
                f"{which} {method} iteration diverged on block {ell} "
                f"(residual {res:.3e})",
                residual=float(res),
                iterations=it,
            )
        if method == "newton":
            jac = jac_fn(blk, cm, gamma, x, eye2)
            step = matcore.solve_linear(jac, -r.reshape(-1, order="F"))
            x = x + step.reshape((n, n), order="F")
        elif method == "fixed_point":
            x = (1.0 - relaxation) * x + relaxation * map_fn(blk, cm, gamma, x)
        else:
            raise ValueError(f"unknown method {method!r}")
        if math.isfinite(xi) and _ball_radius(blk, gamma, which, x, center) >= xi:
            raise BranchEscapeError(
                f"{which} iterate on block {ell} left the uniqueness ball "
                f"(radius {xi:.3e}); target branch lost"
            )
    raise ConvergenceError(
        f"{which} {method} iteration did not reach tol {tol:.1e} on block "
        f"{ell} after {max_iter} iterations (residual {history[-1]:.3e})",
        residual=float(history[-1]),
        iterations=max_iter,
    )


def solve_omega(dec, c, gamma, ell, **kwargs):
    """Solve the adiabatic Bloch equation for the generator amplitude."""
    return solve_equation(dec, c, gamma, ell, "omega", **kwargs)


def solve_omega_conjugate(dec, c, gamma, ell, **kwargs):
    """Solve the order-reversed adiabatic Bloch equation."""
    return solve_equation(dec, c, gamma, ell, "omega_conj", **kwargs)


def solve_wave(dec, c, gamma, ell, **kwargs):
    """Solve the wave-operator equation directly (X0 = P)."""
    return solve_equation(dec, c, gamma, ell, "wave", **kwargs)


def solve_wave_conjugate(dec, c, gamma, ell, **kwargs):
    """Solve the order-reversed wave-operator equation directly."""
    return solve_equation(dec, c, gamma, ell, "wave_conj", **kwargs)


def wave_from_omega(blk: EigenspaceData, omega, gamma: float) -> np.ndarray:
    return blk.projection - (blk.resolvent @ omega) / gamma


def wave_conj_from_omega_conj(blk: EigenspaceData, omega_conj, gamma: float) -> np.ndarray:
    return blk.projection - (omega_conj @ blk.resolvent) / gamma


def omega_from_wave(blk: EigenspaceData, wave, c, gamma: float) -> np.ndarray:
    p, nil = blk.projection, blk.nilpotent
    cm = matcore.as_cmatrix(c)
    comp = np.eye(p.shape[0], dtype=np.complex128) - p
    return cm @ wave - comp @ wave @ (cm @ wave + gamma * nil)


def omega_conj_from_wave_conj(blk: EigenspaceData, wave_conj, c, gamma: float) -> np.ndarray:
    p, nil = blk.projection, blk.nilpotent
    cm = matcore.as_cmatrix(c)
    comp = np.eye(p.shape[0], dtype=np.complex128) - p
    return wave_conj @ cm - (wave_conj @ cm + gamma * nil) @ wave_conj @ comp


@dataclass(frozen=True)
class BlochSolution:
    """Converged per-block solutions and their certification data."""

    ell: int
    omega: np.ndarray
    omega_conj: np.ndarray
    wave: np.ndarray
    wave_conj: np.ndarray
    residuals: dict
    iterations: dict
    method: str
    report: KantorovichReport
    certified: bool


def solve_block(
    dec: SpectralDecomposition,
    c,
    gamma: float,
    ell: int,
    method: str = "newton",
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
) -> BlochSolution:
    """Solve both adiabatic Bloch equations on one block and certify."""
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    report = kantorovich_report(dec, cm, gamma, ell)
    omega, info_o = solve_equation(
        dec, cm, gamma, ell, "omega", method, tol, max_iter, report=report
    )
    omega_conj, info_oc = solve_equation(
        dec, cm, gamma, ell, "omega_conj", method, tol, max_iter, report=report
    )
    wave = wave_from_omega(blk, omega, gamma)
    wave_conj = wave_conj_from_omega_conj(blk, omega_conj, gamma)

    comp = np.eye(dec.dim, dtype=np.complex128) - blk.projection
    residuals = {
        "omega_eq": info_o["residual"],
        "omega_support": matcore.op_norm(omega @ comp, "spectral"),
        "omega_conj_eq": info_oc["residual"],
        "omega_conj_support": matcore.op_norm(comp @ omega_conj, "spectral"),
        "wave_eq": matcore.op_norm(
            wave_residual(blk, cm, gamma, wave), "spectral"
        ),
        "wave_support": matcore.op_norm(wave @ comp, "spectral"),
        "wave_conj_eq": matcore.op_norm(
            wave_conj_residual(blk, cm, gamma, wave_conj), "spectral"
        ),
        "wave_conj_support": matcore.op_norm(comp @ wave_conj, "spectral"),
        # deformation sizes: the adiabatic branch satisfies ||U - P|| <= theta
        "wave_deformation": matcore.op_norm(wave - blk.projection, "spectral"),
        "wave_conj_deformation": matcore.op_norm(
            wave_conj - blk.projection, "spectral"
        ),
    }
    return BlochSolution(
        ell=ell,
        omega=omega,
        omega_conj=omega_conj,
        wave=wave,
        wave_conj=wave_conj,
        residuals=residuals,
        iterations={"omega": info_o["iterations"], "omega_conj": info_oc["iterations"]},
        method=method,
        report=report,
        certified=bool(report.solvable),
    )


def solve_blocks(
    dec: SpectralDecomposition,
    c,
    gamma: float,
    method: str = "newton",
    tol: float = DEFAULT_TOL,
    max_iter: int = 200,
) -> list[BlochSolution]:
    """Independent per-block solves, in block order."""
    from ._concurrency import parallel_map

    return parallel_map(
        lambda ell: solve_block(dec, c, gamma, ell, method, tol, max_iter),
        range(len(dec.blocks)),
    )


# ---------------------------------------------------------------------------
# perturbative series


@dataclass(frozen=True)
class SeriesCoefficients:
    """Coefficients of an expansion in inverse powers of the coupling."""

    ell: int
    kind: str
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def truncated_sum(self, gamma: float, order: int | None = None) -> np.ndarray:
        j_max = self.order if order is None else min(order, self.order)
        out = np.zeros_like(self.coeffs[0])
        for j in range(j_max + 1):
            out = out + self.coeffs[j] / gamma**j
        return out


def _block_inverse_apply(blk: EigenspaceData, rhs: np.ndarray) -> np.ndarray:
    """Inverse of X -> X - S X N applied to rhs (finite Neumann sum)."""
    return bracket(blk, rhs, "right")


def _block_inverse_apply_conj(blk: EigenspaceData, rhs: np.ndarray) -> np.ndarray:
    return bracket(blk, rhs, "left")


def omega_series(dec: SpectralDecomposition, c, ell: int, order: int) -> SeriesCoefficients:
    """Coefficients of omega from the order-by-order recursion."""
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    s = blk.resolvent
    coeffs = [_block_inverse_apply(blk, cm @ blk.projection)]
    for j in range(1, order + 1):
        quad = sum(coeffs[j - 1 - i] @ coeffs[i] for i in range(j))
        rhs = -cm @ s @ coeffs[j - 1] + s @ quad
        coeffs.append(_block_inverse_apply(blk, rhs))
    return SeriesCoefficients(ell, "Omega_series", tuple(coeffs))


def omega_conj_series(
    dec: SpectralDecomposition, c, ell: int, order: int
) -> SeriesCoefficients:
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    s = blk.resolvent
    coeffs = [_block_inverse_apply_conj(blk, blk.projection @ cm)]
    for j in range(1, order + 1):
        quad = sum(coeffs[j - 1 - i] @ coeffs[i] for i in range(j))
        rhs = -coeffs[j - 1] @ s @ cm + quad @ s
        coeffs.append(_block_inverse_apply_conj(blk, rhs))
    return SeriesCoefficients(ell, "Omega_conj_series", tuple(coeffs))


def generator_series(
    dec: SpectralDecomposition,
    c,
    ell: int,
    order: int,
    method: str = "recursion",
) -> SeriesCoefficients:
    """Block-generator coefficients D^(j) = P omega^(j).

    ``recursion`` builds them from the omega recursion for any order;
    ``closed`` evaluates the explicit bracket formulas (order <= 3), which
    the recursion must reproduce.
    """
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    if method == "recursion":
        om = omega_series(dec, c, ell, order)
        coeffs = tuple(blk.projection @ o for o in om.coeffs)
        return SeriesCoefficients(ell, "D_series", coeffs)
    if method == "closed":
        if order > 3:
            raise ValueError("closed-form generator coefficients stop at order 3")
        return SeriesCoefficients(
            ell, "D_series", tuple(_d_closed(blk, cm)[: order + 1])
        )
    raise ValueError(f"unknown method {method!r}")


def _d_closed(blk: EigenspaceData, cm: np.ndarray) -> list[np.ndarray]:
    p, s = blk.projection, blk.resolvent

    def rb(a):
        return bracket(blk, a, "right")

    d0 = p @ cm @ p
    d1 = -p @ cm @ s @ rb(cm) @ p
    d2 = p @ cm @ s @ rb(cm @ s @ rb(cm)) @ p - p @ cm @ s @ s @ rb(rb(cm) @ p @ cm) @ p
    d3 = (
        -p @ cm @ s @ rb(cm @ s @ rb(cm @ s @ rb(cm))) @ p
        + p @ cm @ s @ rb(cm @ s @ s @ rb(rb(cm) @ p @ cm)) @ p
        + p @ cm @ s @ s @ rb(rb(cm) @ p @ cm @ s @ rb(cm)) @ p
        + p @ cm @ s @ s @ rb(rb(cm @ s @ rb(cm)) @ p @ cm) @ p
        - p @ cm @ s @ s @ s @ rb(rb(rb(cm) @ p @ cm) @ p @ cm) @ p
    )
    return [d0, d1, d2, d3]


def _sw_closed(blk: EigenspaceData, cm: np.ndarray) -> list[np.ndarray]:
    """Symmetrized generator coefficients through third order."""
    p, s, nil = blk.projection, blk.resolvent, blk.nilpotent

    def rb(a):
        return bracket(blk, a, "right")

    def lb(a):
        return bracket(blk, a, "left")

    s2 = s @ s
    s3 = s2 @ s
    k0 = p @ cm @ p
    k1 = -0.5 * (p @ cm @ s @ rb(cm) @ p + p @ lb(cm) @ s @ cm @ p)
    k2 = 0.5 * (
        p @ cm @ s @ rb(cm @ s @ rb(cm)) @ p
        + p @ lb(lb(cm) @ s @ cm) @ s @ cm @ p
        - p @ cm @ s2 @ rb(rb(cm) @ p @ cm) @ p
        - p @ lb(cm @ p @ lb(cm)) @ s2 @ cm @ p
    )
    core = lb(cm) @ s2 @ rb(cm)
    k3 = 0.5 * (
        -p @ cm @ s @ rb(cm @ s @ rb(cm @ s @ rb(cm))) @ p
        - p @ lb(lb(lb(cm) @ s @ cm) @ s @ cm) @ s @ cm @ p
        + p @ cm @ s @ rb(cm @ s2 @ rb(rb(cm) @ p @ cm)) @ p
        + p @ lb(lb(cm @ p @ lb(cm)) @ s2 @ cm) @ s @ cm @ p
        + p @ cm @ s2 @ rb(rb(cm) @ p @ cm @ s @ rb(cm)) @ p
        + p @ lb(lb(cm) @ s @ cm @ p @ lb(cm)) @ s2 @ cm @ p
        + p @ cm @ s2 @ rb(rb(cm @ s @ rb(cm)) @ p @ cm) @ p
        + p @ lb(cm @ p @ lb(lb(cm) @ s @ cm)) @ s2 @ cm @ p
        - p @ cm @ s3 @ rb(rb(rb(cm) @ p @ cm) @ p @ cm) @ p
        - p @ lb(cm @ p @ lb(cm @ p @ lb(cm))) @ s3 @ cm @ p
    ) + (
        -0.125 * (nil @ core @ p @ core @ p + p @ core @ p @ core @ nil)
        + 0.25 * (p @ core @ nil @ core @ p)
    )
    return [k0, k1, k2, k3]


def _series_mul(a: list, b: list, order: int) -> list:
    shape = a[0].shape
    out = [np.zeros(shape, dtype=np.complex128) for _ in range(order + 1)]
    for j in range(order + 1):
        for i in range(j + 1):
            if i < len(a) and (j - i) < len(b):
                out[j] = out[j] + a[i] @ b[j - i]
    return out


def _binomial_sqrt_series(q: list, alpha: float, order: int) -> list:
    """(1 + Q)^alpha for a series Q with vanishing 0th and 1st coefficients."""
    n = q[0].shape[0]
    eye = np.eye(n, dtype=np.complex128)
    out = [eye.copy()] + [np.zeros((n, n), dtype=np.complex128) for _ in range(order)]
    power = [eye.copy()] + [np.zeros((n, n), dtype=np.complex128) for _ in range(order)]
    coeff = 1.0
    for k in range(1, order // 2 + 1):
        coeff *= (alpha - (k - 1)) / k
        power = _series_mul(power, q, order)
        for j in range(order + 1):
            out[j] = out[j] + coeff * power[j]
    return out


def schrieffer_wolff_series(
    dec: SpectralDecomposition,
    c,
    ell: int,
    order: int,
    method: str = "closed",
) -> SeriesCoefficients:
    """Coefficients of the symmetrized block generator.

    ``closed`` evaluates the explicit formulas (order <= 3).  ``series``
    composes the omega expansions through the symmetric similarity with the
    square root handled by a truncated binomial series, valid at any order.
    """
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    if method == "closed":
        if order > 3:
            raise ValueError(
                "closed-form symmetrized coefficients stop at order 3; "
                "use method='series'"
            )
        coeffs = _sw_closed(blk, cm)[: order + 1]
        return SeriesCoefficients(ell, "K_series", tuple(coeffs))
    if method != "series":
        raise ValueError(f"unknown method {method!r}")

    work = order + 1  # one extra order: the nilpotent term carries a factor gamma
    om = omega_series(dec, c, ell, work).coeffs
    omc = omega_conj_series(dec, c, ell, work).coeffs
    s2 = blk.resolvent @ blk.resolvent
    n = dec.dim
    zero = np.zeros((n, n), dtype=np.complex128)
    q = [zero.copy() for _ in range(work + 1)]
    for j in range(2, work + 1):
        acc = zero.copy()
        for a in range(j - 1):
            acc = acc + omc[a] @ s2 @ om[j - 2 - a]
        q[j] = acc
    plus = _binomial_sqrt_series(q, 0.5, work)
    minus = _binomial_sqrt_series(q, -0.5, work)

    d_series = [blk.projection @ o for o in om]
    sym_d = _series_mul(_series_mul(plus, d_series, work), minus, work)
    nil_series = [blk.nilpotent] + [zero.copy() for _ in range(work)]
    sym_n = _series_mul(_series_mul(plus, nil_series, work), minus, work)

    p = blk.projection
    coeffs = []
    for j in range(order + 1):
        # gamma * (Y^1/2 N Y^-1/2 - N) shifts the series down one order
        k_j = sym_n[j + 1] + sym_d[j]
        coeffs.append(p @ k_j @ p)
    return SeriesCoefficients(ell, "K_series", tuple(coeffs))


# ---------------------------------------------------------------------------
# resummed correction series


@dataclass(frozen=True)
class CorrectionSeries:
    """Partial sum of the iterated-correction series and its diagnostics."""

    ell: int
    matrix: np.ndarray
    terms: int
    last_increment: float
    leakage_free_defect: float


def sum_correction_series(
    dec: SpectralDecomposition,
    c,
    d_block,
    gamma: float,
    ell: int,
    n_max: int = 500,
    tol: float = 1e-14,
) -> CorrectionSeries:
    """Sum the alternating series of iterated corrections on one block.

    The map applied repeatedly is A -> C S A - S A D - gamma S A N.  The
    series converges for couplings above the block threshold
    max(1, [||S|| (||C|| + ||D|| + ||N||)]^n); below it a
    :class:`PreconditionError` is raised.  When D solves the adiabatic
    Bloch equation, the summed correction has no P ... P component, which
    is reported as ``leakage_free_defect``.
    """
    blk = dec.blocks[ell]
    cm = matcore.as_cmatrix(c)
    dm = matcore.as_cmatrix(d_block)
    s, nil, p = blk.resolvent, blk.nilpotent, blk.projection
    s_norm = matcore.op_norm(s, "spectral")
    threshold = max(
        1.0,
        (
            s_norm
            * (
                matcore.op_norm(cm, "spectral")
                + matcore.op_norm(dm, "spectral")
                + matcore.op_norm(nil, "spectral")
            )
        )
        ** blk.index,
    )
    if gamma <= threshold:
        raise PreconditionError(
            f"correction series requires gamma > {threshold:.6g} on block "
            f"{ell}, got gamma = {gamma:.6g}"
        )

    term = cm - dm  # holds (-1/gamma)^j K^j (C - D)
    total = term.copy()
    increment = matcore.op_norm(term, "spectral")
    terms = 1
    for _j in range(1, n_max + 1):
        term = (cm @ s @ term - s @ term @ dm - gamma * s @ term @ nil) * (
            -1.0 / gamma
        )
        total = total + term
        increment = matcore.op_norm(term, "spectral")
        terms += 1
        if increment < tol:
            break
    else:
        raise ConvergenceError(
            f"correction series did not converge in {n_max} terms on block "
            f"{ell} (last increment {increment:.3e})",
            residual=float(increment),
            iterations=n_max,
        )
    defect = matcore.op_norm(p @ total @ p, "spectral")
    return CorrectionSeries(
        ell=ell,
        matrix=total,
        terms=terms,
        last_increment=float(increment),
        leakage_free_defect=float(defect),
    )
