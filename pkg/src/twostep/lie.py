"""Matrix realizations of compact Lie algebras.

Algebra elements are plain real coefficient vectors over an ordered basis
of anti-Hermitian matrices; group elements are complex square matrices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.linalg

from .exceptions import (
    BadSpecFile,
    DegenerateForm,
    NotAntiHermitian,
    NotClosed,
    NotInAlgebra,
    OutOfLogWindow,
)

FORM_KINDS = ("neg_killing", "neg_trace")
DEFAULT_TOL_ALG = 1e-9
LOG_WINDOW = 0.5

# Taylor degree for ||A|| <= 1/2 after scaling: 0.5**19 / 19! ~ 1e-23.
_TAYLOR_DEGREE = 18
_SCALING_THRESHOLD = 0.5


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring of a truncated Taylor series.

    Accepts a single matrix or a stack of shape ``(..., n, n)``; one common
    scaling exponent is used for the whole stack.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[-1]
    norm = np.max(np.abs(a).sum(axis=-2)) if a.size else 0.0
    s = 0
    if norm > _SCALING_THRESHOLD:
        s = int(np.ceil(np.log2(norm / _SCALING_THRESHOLD)))
    a = a / 2.0**s
    eye = np.broadcast_to(np.eye(n, dtype=complex), a.shape)
    # Horner evaluation of sum_k a^k / k!
    result = eye.copy()
    for k in range(_TAYLOR_DEGREE, 0, -1):
        result = eye + (a @ result) / k
    for _ in range(s):
        result = result @ result
    return result


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


@dataclass(frozen=True, eq=False)
class MatrixLieAlgebra:
    """A real Lie algebra of anti-Hermitian ``n x n`` matrices.

    Built by :func:`build_algebra`; immutable afterwards.
    """

    basis: np.ndarray  # (d, n, n) complex
    structure_constants: np.ndarray  # (d, d, d): [b_i, b_j] = sum_k c[i, j, k] b_k
    form_kind: str
    gram_B: np.ndarray  # (d, d)
    tol: float = DEFAULT_TOL_ALG
    name: str = field(default="")

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def _real_basis(self) -> np.ndarray:
        return _realify(self.basis).T  # (2 n^2, d)

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self._real_basis)

    # -- coordinates -----------------------------------------------------

    def to_matrix(self, a: np.ndarray) -> np.ndarray:
        """Matrix realization of coefficient vector(s) ``a`` of shape ``(..., d)``."""
        return np.tensordot(np.asarray(a, dtype=float), self.basis, axes=(-1, 0))

    def from_matrix(self, m: np.ndarray, check: bool = True, tol: float | None = None) -> np.ndarray:
        """Basis coefficients of matrix (or stack of matrices) ``m``.

        Raises NotInAlgebra if ``check`` and the least-squares residual exceeds
        ``tol`` relative to ``max(1, |m|)``.
        """
        m = np.asarray(m, dtype=complex)
        flat = _realify(m)
        coeffs = flat @ self._pinv.T
        if check:
            tol = self.tol if tol is None else tol
            resid = np.linalg.norm(coeffs @ self._real_basis.T - flat, axis=-1)
            scale = np.maximum(1.0, np.linalg.norm(flat, axis=-1))
            worst = float(np.max(resid / scale)) if resid.size else 0.0
            if worst > tol:
                raise NotInAlgebra(f"matrix leaves the algebra span (residual {worst:.3e})")
        return coeffs

    # -- algebra operations ---------------------------------------------

    def bracket(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.einsum("...i,...j,ijk->...k", a, b, self.structure_constants)

    def B(self, a: np.ndarray, b: np.ndarray) -> np.ndarray | float:
        return np.einsum("...i,ij,...j->...", a, self.gram_B, b)

    def norm_B(self, a: np.ndarray) -> np.ndarray | float:
        return np.sqrt(np.maximum(self.B(a, a), 0.0))

    def ad_matrix(self, a: np.ndarray) -> np.ndarray:
        """Matrix of ``ad(a)`` in basis coordinates: column j is ``[a, b_j]``."""
        return np.einsum("i,ijk->kj", np.asarray(a, dtype=float), self.structure_constants)

    # -- group operations -----------------------------------------------

    def group_exp(self, a: np.ndarray, t: float | np.ndarray = 1.0) -> np.ndarray:
        """``exp(t * a)``; ``t`` may be an array, giving a stack of matrices."""
        t = np.asarray(t, dtype=float)
        mat = self.to_matrix(a)
        return expm(t[..., None, None] * mat)

    def group_log(self, g: np.ndarray, check: bool = True) -> np.ndarray:
        """Principal logarithm of ``g`` near the identity, in basis coefficients.

        With ``check=False`` the logarithm is projected onto the algebra
        instead of raising NotInAlgebra; used for integrator output that has
        drifted slightly off the group.
        """
        g = np.asarray(g, dtype=complex)
        n = self.ambient_dim
        dist = np.linalg.norm(g - np.eye(n), ord=2)
        if dist > LOG_WINDOW:
            raise OutOfLogWindow(f"|g - I| = {dist:.3f} exceeds log window {LOG_WINDOW}")
        xi = scipy.linalg.logm(g)
        # an anti-Hermitian log is expected; symmetrize away round-off
        xi = 0.5 * (xi - xi.conj().T)
        return self.from_matrix(xi, check=check, tol=10 * self.tol)

    def Ad(self, g: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Coefficients of ``g a g^{-1}``."""
        g = np.asarray(g, dtype=complex)
        conj = g @ self.to_matrix(a) @ np.linalg.inv(g)
        return self.from_matrix(conj)

    def random_vector(self, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
        """Gaussian vector in B-orthonormal coordinates, mapped back to the basis."""
        z = rng.standard_normal(self.dim)
        return scale * np.linalg.solve(self._chol_B.T, z)

    @cached_property
    def _chol_B(self) -> np.ndarray:
        return np.linalg.cholesky(self.gram_B)

    def to_spec(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "basis": [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in self.basis],
            "form": self.form_kind,
        }


def _realify(m: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts of the trailing ``n x n`` block into one vector."""
    m = np.asarray(m, dtype=complex)
    lead = m.shape[:-2]
    return np.concatenate([m.real.reshape(*lead, -1), m.imag.reshape(*lead, -1)], axis=-1)


def build_algebra(basis, form_kind: str = "neg_killing", tol: float = DEFAULT_TOL_ALG,
                  name: str = "") -> MatrixLieAlgebra:
    """Structure constants and invariant form for the span of ``basis``.

    ``form_kind`` selects ``B = -Killing`` or ``B(x, y) = -Re tr(xy)``.
    """
    if form_kind not in FORM_KINDS:
        raise ValueError(f"form_kind must be one of {FORM_KINDS}, got {form_kind!r}")
    mats = np.array(basis, dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[0] == 0:
        raise ValueError("basis must be a non-empty list of square matrices of equal size")
    d, n, _ = mats.shape
    for idx, b in enumerate(mats):
        err = np.max(np.abs(b + b.conj().T))
        if err > tol:
            raise NotAntiHermitian(f"basis element {idx} is not anti-Hermitian (|M + M*| = {err:.3e})")
    real = _realify(mats).T
    if np.linalg.matrix_rank(real, tol=tol * max(1.0, np.abs(real).max())) < d:
        raise ValueError("basis matrices are linearly dependent")

    pinv = np.linalg.pinv(real)
    brackets = mats[:, None] @ mats[None, :] - mats[None, :] @ mats[:, None]  # (d, d, n, n)
    flat = _realify(brackets)
    c = flat @ pinv.T
    resid = np.linalg.norm(c @ real.T - flat, axis=-1) / np.maximum(1.0, np.linalg.norm(flat, axis=-1))
    if resid.max() > tol:
        i, j = np.unravel_index(np.argmax(resid), resid.shape)
        raise NotClosed(f"[b_{i}, b_{j}] escapes the span (residual {resid.max():.3e})")

    if form_kind == "neg_killing":
        gram = -np.einsum("ilk,jkl->ij", c, c)
    else:
        gram = -np.einsum("iab,jba->ij", mats, mats).real
    gram = 0.5 * (gram + gram.T)
    eig_min = np.linalg.eigvalsh(gram).min()
    if eig_min <= tol * max(1.0, np.abs(gram).max()):
        raise DegenerateForm(f"{form_kind} form is not positive definite (min eigenvalue {eig_min:.3e})")
    return MatrixLieAlgebra(basis=mats, structure_constants=c, form_kind=form_kind,
                            gram_B=gram, tol=tol, name=name)


# -- standard bases -----------------------------------------------------------


def offdiag_pair(n: int, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Real root vectors ``E_pq - E_qp`` and ``i(E_pq + E_qp)`` (0-based, p != q)."""
    a = np.zeros((n, n), dtype=complex)
    a[p, q], a[q, p] = 1.0, -1.0
    b = np.zeros((n, n), dtype=complex)
    b[p, q] = b[q, p] = 1j
    return a, b


def su_basis(n: int) -> list[np.ndarray]:
    """Basis of su(n): root pairs in lexicographic (p, q) order, then ``i(E_pp - E_{p+1,p+1})``."""
    basis = []
    for p in range(n):
        for q in range(p + 1, n):
            basis.extend(offdiag_pair(n, p, q))
    for p in range(n - 1):
        h = np.zeros((n, n), dtype=complex)
        h[p, p], h[p + 1, p + 1] = 1j, -1j
        basis.append(h)
    return basis


def u_basis(n: int) -> list[np.ndarray]:
    """Basis of u(n): root pairs in lexicographic order, then ``i E_pp``."""
    basis = []
    for p in range(n):
        for q in range(p + 1, n):
            basis.extend(offdiag_pair(n, p, q))
    for p in range(n):
        h = np.zeros((n, n), dtype=complex)
        h[p, p] = 1j
        basis.append(h)
    return basis


def su2_basis() -> list[np.ndarray]:
    """``e1 = [[0,1],[-1,0]], e2 = [[0,i],[i,0]], e3 = [[i,0],[0,-i]]``."""
    return su_basis(2)


def su(n: int, form_kind: str = "neg_killing", tol: float = DEFAULT_TOL_ALG) -> MatrixLieAlgebra:
    return build_algebra(su_basis(n), form_kind, tol=tol, name=f"su({n})")


def u(n: int, form_kind: str = "neg_trace", tol: float = DEFAULT_TOL_ALG) -> MatrixLieAlgebra:
    return build_algebra(u_basis(n), form_kind, tol=tol, name=f"u({n})")


# -- algebra spec files -------------------------------------------------------

NAMED_ALGEBRAS = {"su": su, "u": u}


def algebra_from_spec(spec, tol: float = DEFAULT_TOL_ALG, where: str = "algebra") -> MatrixLieAlgebra:
    """Build from a parsed JSON algebra spec or a named preset such as ``"su(3)"``."""
    if isinstance(spec, str):
        return _named_algebra(spec, tol, where)
    if not isinstance(spec, dict):
        raise BadSpecFile(f"{where}: expected an object or a named algebra string")
    for key in ("ambient_dim", "basis", "form"):
        if key not in spec:
            raise BadSpecFile(f"{where}: missing field {key!r}")
    n = spec["ambient_dim"]
    if not isinstance(n, int) or n < 1:
        raise BadSpecFile(f"{where}.ambient_dim: expected a positive integer")
    if spec["form"] not in FORM_KINDS:
        raise BadSpecFile(f"{where}.form: expected one of {FORM_KINDS}")
    mats = []
    for i, rows in enumerate(spec["basis"]):
        path = f"{where}.basis[{i}]"
        try:
            arr = np.array(rows, dtype=float)
        except (TypeError, ValueError) as exc:
            raise BadSpecFile(f"{path}: entries must be [re, im] pairs") from exc
        if arr.shape != (n, n, 2):
            raise BadSpecFile(f"{path}: expected shape ({n}, {n}, 2), got {arr.shape}")
        mats.append(arr[..., 0] + 1j * arr[..., 1])
    return build_algebra(mats, spec["form"], tol=tol)


def _named_algebra(text: str, tol: float, where: str) -> MatrixLieAlgebra:
    text = text.strip()
    head, _, rest = text.partition("(")
    if head not in NAMED_ALGEBRAS or not rest.endswith(")"):
        raise BadSpecFile(f"{where}: unknown named algebra {text!r} (use su(n) or u(n))")
    try:
        n = int(rest[:-1])
    except ValueError as exc:
        raise BadSpecFile(f"{where}: bad size in {text!r}") from exc
    return NAMED_ALGEBRAS[head](n, tol=tol)


def load_algebra(path: str | Path, tol: float = DEFAULT_TOL_ALG) -> MatrixLieAlgebra:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadSpecFile(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return algebra_from_spec(spec, tol=tol)
