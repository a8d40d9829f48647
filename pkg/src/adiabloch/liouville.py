"""Superoperators on vectorized density matrices and their physical structure.

Everything uses the column-stacking convention vec(A rho B) = (B^T kron A)
vec(rho), so a generator of GKLS form

    L(rho) = -i [H, rho] - (1/2) sum_i g_i (L_i^dag L_i rho + rho L_i^dag L_i
                                            - 2 L_i rho L_i^dag)

becomes the d^2 x d^2 matrix built by :func:`build_superop`.  The module also
provides the real coherence-vector representation in a Hermitian operator
basis (identity plus generalized Gell-Mann matrices), the trace-preservation
(TP) / Hermiticity-preservation (HP) / conditional-complete-positivity (CCP)
checks, and the extraction of the GKLS form (Hamiltonian, Kossakowski matrix,
rates, jump operators) from a generator's matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import matcore
from .errors import PhysicalityError

HERMITICITY_TOL = 1e-12


def vec(rho) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho, dtype=np.complex128).reshape(-1, order="F")


def unvec(v, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=np.complex128).reshape((dim, dim), order="F")


def hamiltonian_superop(h) -> np.ndarray:
    """Matrix of -i[H, .] in the vectorized representation."""
    hm = matcore.as_cmatrix(h)
    d = hm.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    return -1j * (np.kron(eye, hm) - np.kron(hm.T, eye))


def dissipator_superop(jump) -> np.ndarray:
    """Matrix of L . L^dag - (1/2){L^dag L, .} in the vectorized representation."""
    lm = matcore.as_cmatrix(jump)
    d = lm.shape[0]
    eye = np.eye(d, dtype=np.complex128)
    ldl = lm.conj().T @ lm
    return (
        np.kron(lm.conj(), lm)
        - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    )


@dataclass(frozen=True)
class Superoperator:
    """A d^2 x d^2 matrix acting on vectorized d x d density operators."""

    dim: int
    matrix: np.ndarray
    tag: str = "custom"

    def __post_init__(self):
        m = matcore.as_cmatrix(self.matrix)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise ValueError(
                f"superoperator for dim {self.dim} must be {n}x{n}, "
                f"got {m.shape}"
            )
        object.__setattr__(self, "matrix", m)

    def apply(self, rho) -> np.ndarray:
        """Action on a d x d operator."""
        return unvec(self.matrix @ vec(rho), self.dim)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Superoperator(self.dim, self.matrix + other.matrix)


@dataclass(frozen=True)
class LindbladModel:
    """Physical model split into a strong part and a weak part.

    The strong part (Hamiltonian ``strong_hamiltonian`` plus dissipators,
    each a ``(rate, jump)`` pair) enters the total generator multiplied by
    the coupling ``gamma``; the weak part enters with weight one.
    """

    dim: int
    gamma: float
    strong_hamiltonian: np.ndarray
    strong_dissipators: tuple = ()
    weak_hamiltonian: np.ndarray = None
    weak_dissipators: tuple = ()

    def __post_init__(self):
        d = self.dim
        sh = _check_hamiltonian(self.strong_hamiltonian, d, "strong_hamiltonian")
        wh = self.weak_hamiltonian
        wh = np.zeros((d, d), dtype=np.complex128) if wh is None else wh
        wh = _check_hamiltonian(wh, d, "weak_hamiltonian")
        object.__setattr__(self, "strong_hamiltonian", sh)
        object.__setattr__(self, "weak_hamiltonian", wh)
        object.__setattr__(
            self,
            "strong_dissipators",
            _check_dissipators(self.strong_dissipators, d, "strong"),
        )
        object.__setattr__(
            self,
            "weak_dissipators",
            _check_dissipators(self.weak_dissipators, d, "weak"),
        )
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")

    def to_dict(self, float_mode: str = "repr") -> dict:
        return {
            "dim": self.dim,
            "gamma": _num(self.gamma, float_mode),
            "strong": {
                "H": _matrix_to_json(self.strong_hamiltonian, float_mode),
                "dissipators": [
                    {"rate": _num(r, float_mode), "L": _matrix_to_json(l, float_mode)}
                    for r, l in self.strong_dissipators
                ],
            },
            "weak": {
                "H": _matrix_to_json(self.weak_hamiltonian, float_mode),
                "dissipators": [
                    {"rate": _num(r, float_mode), "L": _matrix_to_json(l, float_mode)}
                    for r, l in self.weak_dissipators
                ],
            },
        }

    def to_json(self, float_mode: str = "repr") -> str:
        return json.dumps(self.to_dict(float_mode=float_mode), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "LindbladModel":
        d = int(data["dim"])
        strong = data.get("strong", {})
        weak = data.get("weak", {})
        return cls(
            dim=d,
            gamma=_read_num(data["gamma"]),
            strong_hamiltonian=_matrix_from_json(strong.get("H"), d),
            strong_dissipators=tuple(
                (_read_num(t["rate"]), _matrix_from_json(t["L"], d))
                for t in strong.get("dissipators", [])
            ),
            weak_hamiltonian=_matrix_from_json(weak.get("H"), d),
            weak_dissipators=tuple(
                (_read_num(t["rate"]), _matrix_from_json(t["L"], d))
                for t in weak.get("dissipators", [])
            ),
        )

    @classmethod
    def from_json(cls, text: str) -> "LindbladModel":
        return cls.from_dict(json.loads(text))


def _check_hamiltonian(h, d, name) -> np.ndarray:
    m = matcore.as_cmatrix(h)
    if m.shape != (d, d):
        raise ValueError(f"{name} must be {d}x{d}, got {m.shape}")
    defect = np.abs(m - m.conj().T).max()
    scale = max(1.0, np.abs(m).max())
    if defect > HERMITICITY_TOL * scale:
        raise ValueError(f"{name} is not Hermitian (defect {defect:.3e})")
    return m


def _check_dissipators(dissipators, d, which) -> tuple:
    out = []
    for i, (rate, jump) in enumerate(dissipators):
        rate = float(rate)
        if rate < 0:
            raise ValueError(f"{which} dissipator {i} has negative rate {rate}")
        jm = matcore.as_cmatrix(jump)
        if jm.shape != (d, d):
            raise ValueError(
                f"{which} dissipator {i} jump must be {d}x{d}, got {jm.shape}"
            )
        out.append((rate, jm))
    return tuple(out)


def _num(x: float, mode: str):
    x = float(x)
    return x.hex() if mode == "hex" else x


def _read_num(x) -> float:
    return float.fromhex(x) if isinstance(x, str) else float(x)


def _matrix_to_json(m, mode: str):
    return [
        [[_num(z.real, mode), _num(z.imag, mode)] for z in row]
        for row in np.asarray(m, dtype=np.complex128)
    ]


def _matrix_from_json(rows, d) -> np.ndarray:
    if rows is None:
        return np.zeros((d, d), dtype=np.complex128)
    out = np.array(
        [[complex(_read_num(re), _read_num(im)) for re, im in row] for row in rows],
        dtype=np.complex128,
    )
    if out.shape != (d, d):
        raise ValueError(f"matrix in model file must be {d}x{d}, got {out.shape}")
    return out


def build_superop(model: LindbladModel, part: str = "total") -> Superoperator:
    """Assemble the generator matrix for the strong, weak, or total part.

    ``total`` returns gamma * strong + weak.
    """
    d = model.dim

    def assemble(h, dissipators):
        mat = hamiltonian_superop(h)
        for rate, jump in dissipators:
            mat = mat + rate * dissipator_superop(jump)
        return mat

    if part == "strong":
        return Superoperator(
            d, assemble(model.strong_hamiltonian, model.strong_dissipators), "strong_B"
        )
    if part == "weak":
        return Superoperator(
            d, assemble(model.weak_hamiltonian, model.weak_dissipators), "weak_C"
        )
    if part == "total":
        mat = model.gamma * assemble(
            model.strong_hamiltonian, model.strong_dissipators
        ) + assemble(model.weak_hamiltonian, model.weak_dissipators)
        return Superoperator(d, mat, "total")
    raise ValueError(f"unknown part {part!r}")


def hermitian_basis(d: int) -> list[np.ndarray]:
    """Identity plus generalized Gell-Mann matrices.

    Ordering: identity, then symmetric off-diagonal E_jk + E_kj (j < k,
    lexicographic), then antisymmetric -i(E_jk - E_kj), then the d-1
    diagonal matrices.  The traceless elements are normalized to
    tr(tau_i tau_j) = 2 delta_ij.
    """
    basis = [np.eye(d, dtype=np.complex128)]
    sym, asym = [], []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), dtype=np.complex128)
            s[j, k] = s[k, j] = 1.0
            sym.append(s)
            a = np.zeros((d, d), dtype=np.complex128)
            a[j, k] = -1j
            a[k, j] = 1j
            asym.append(a)
    diag = []
    for k in range(1, d):
        h = np.zeros((d, d), dtype=np.complex128)
        h[:k, :k] = np.eye(k)
        h[k, k] = -k
        diag.append(np.sqrt(2.0 / (k * (k + 1))) * h)
    return basis + sym + asym + diag


def _basis_frame(d: int) -> np.ndarray:
    """Columns vec(tau_a) of the Hermitian basis; cached per dimension."""
    cached = _basis_frame._cache.get(d)
    if cached is None:
        cached = np.column_stack([vec(t) for t in hermitian_basis(d)])
        _basis_frame._cache[d] = cached
    return cached


_basis_frame._cache = {}


def coherence_rep(sop: Superoperator) -> tuple[np.ndarray, float]:
    """Real matrix of the generator on coherence vectors, plus HP defect.

    Element (i, j) is (tau_i | L(tau_j)) / (tau_i | tau_i); the generator is
    Hermiticity-preserving exactly when all elements are real, so the
    maximum imaginary modulus is returned as the HP defect.
    """
    d = sop.dim
    frame = _basis_frame(d)
    norms = np.real(np.sum(frame.conj() * frame, axis=0))  # (tau_i | tau_i)
    g = frame.conj().T @ sop.matrix @ frame
    m = g / norms[:, None]
    defect = float(np.abs(m.imag).max()) if m.size else 0.0
    return np.real(m).copy(), defect


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    defect: float


def check_tp(sop: Superoperator, tol: float = 1e-12) -> CheckResult:
    """Trace preservation: the identity row of the generator must vanish."""
    row = vec(np.eye(sop.dim)).conj() @ sop.matrix
    defect = float(np.linalg.norm(row))
    return CheckResult(defect <= tol, defect)


def check_hp(sop: Superoperator, tol: float = 1e-12) -> CheckResult:
    """Hermiticity preservation: reality of the coherence representation."""
    _, defect = coherence_rep(sop)
    return CheckResult(defect <= tol, defect)


@dataclass(frozen=True)
class GKLSForm:
    """GKLS data of a generator: -i[H, .] + sum_i rates[i] D[jumps[i]].

    ``kossakowski`` is expressed in the orthonormal traceless Hermitian
    basis tau_i / sqrt(2), so its eigenvalues are the ``rates`` and the
    corresponding ``jumps`` are traceless with unit Hilbert-Schmidt norm.
    """

    dim: int
    hamiltonian: np.ndarray
    kossakowski: np.ndarray
    rates: tuple
    jumps: tuple
    verdicts: dict = field(default_factory=dict)

    def assemble(self) -> Superoperator:
        """Rebuild the generator matrix from (H, rates, jumps)."""
        mat = hamiltonian_superop(self.hamiltonian)
        for rate, jump in zip(self.rates, self.jumps):
            mat = mat + rate * dissipator_superop(jump)
        return Superoperator(self.dim, mat, "custom")


def gkls_decompose(sop: Superoperator, tol: float = 1e-9) -> GKLSForm:
    """Extract the unique GKLS form of an HP, TP generator.

    The generator is expanded as L(rho) = sum_ab x_ab F_a rho F_b over the
    orthonormal Hermitian frame F_0 = 1/sqrt(d), F_i = tau_i/sqrt(2); the
    traceless-traceless block of x is the Kossakowski matrix, and the
    Hamiltonian is the anti-Hermitian part of the F_i rho F_0 column.  The
    gauge is fixed by tr H = 0 and by jumps that are traceless, mutually
    orthonormal, with the first nonvanishing eigenvector component made
    real positive.
    """
    tp = check_tp(sop, tol)
    hp = check_hp(sop, tol)
    if not (tp.passed and hp.passed):
        raise PhysicalityError(
            "generator is not HP/TP within tolerance "
            f"(hp defect {hp.defect:.3e}, tp defect {tp.defect:.3e}); "
            "GKLS decomposition would be meaningless"
        )
    d = sop.dim
    n = d * d
    taus = hermitian_basis(d)
    frame = [taus[0] / np.sqrt(d)] + [t / np.sqrt(2.0) for t in taus[1:]]
    # L = sum_ab x_ab (F_b^T kron F_a); the reshuffle R[(i,k),(l,j)] =
    # L[(i,j),(k,l)] turns this into R = G x G^T with G = [vec(F_a)] unitary.
    tens = sop.matrix.reshape(d, d, d, d, order="F")
    reshuffled = np.transpose(tens, (0, 2, 3, 1)).reshape(n, n, order="F")
    g = np.column_stack([vec(f) for f in frame])
    x = g.conj().T @ reshuffled @ g.conj()
    x = 0.5 * (x + x.conj().T)  # HP makes x Hermitian; symmetrize rounding

    koss = x[1:, 1:].copy()
    a_op = sum(x[i, 0] * frame[i] for i in range(1, n))
    ham = 1j / (2.0 * np.sqrt(d)) * (a_op - a_op.conj().T)

    evals, evecs = np.linalg.eigh(koss)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    jumps = []
    for i in range(n - 1):
        v = evecs[:, i]
        nz = np.flatnonzero(np.abs(v) > 1e-12)
        if nz.size:
            v = v * (np.abs(v[nz[0]]) / v[nz[0]])
        evecs[:, i] = v
        jumps.append(sum(v[j] * frame[j + 1] for j in range(n - 1)))

    form = GKLSForm(
        dim=d,
        hamiltonian=ham,
        kossakowski=koss,
        rates=tuple(float(r) for r in evals),
        jumps=tuple(jumps),
        verdicts={
            "hp": hp.passed,
            "tp": tp.passed,
            "ccp": bool(evals.min() >= -tol) if evals.size else True,
        },
    )
    return form


def check_ccp(form: GKLSForm, tol: float = 1e-10) -> CheckResult:
    """Conditional complete positivity: Kossakowski spectrum >= -tol."""
    min_rate = float(min(form.rates)) if form.rates else 0.0
    result = CheckResult(min_rate >= -tol, min_rate)
    return result
