"""Subspaces of a matrix Lie algebra and reductive homogeneous spaces.

All subspaces carry a B-orthonormal basis, so B-orthogonal projection is a
pair of matrix products. A :class:`HomogeneousSpace` fixes an ordered
basis of ``m`` (the split members' bases concatenated); vectors given in
"m-coordinates" refer to that ordering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .exceptions import BadSpecFile, InputError, NotInM
from .lie import DEFAULT_TOL_ALG, MatrixLieAlgebra, algebra_from_spec
from .report import CheckResult


@dataclass(frozen=True, eq=False)
class Subspace:
    algebra: MatrixLieAlgebra
    basis: np.ndarray  # (r, d), B-orthonormal rows
    label: str = ""

    @classmethod
    def span(cls, algebra: MatrixLieAlgebra, vectors, label: str = "") -> "Subspace":
        """B-orthonormal basis of the span of ``vectors`` (dependent vectors are dropped)."""
        vecs = np.asarray(vectors, dtype=float).reshape(-1, algebra.dim)
        return cls(algebra, _orthonormalize(vecs, algebra.gram_B, algebra.tol), label)

    @classmethod
    def zero(cls, algebra: MatrixLieAlgebra, label: str = "") -> "Subspace":
        return cls(algebra, np.zeros((0, algebra.dim)), label)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def projector(self) -> np.ndarray:
        """Matrix ``P`` with ``P @ v`` the B-orthogonal projection of ``v``."""
        return self.basis.T @ self.basis @ self.algebra.gram_B

    def coords(self, v: np.ndarray) -> np.ndarray:
        """Coordinates of the projection of ``v`` in this subspace's basis."""
        return np.asarray(v) @ (self.basis @ self.algebra.gram_B).T

    def from_coords(self, c: np.ndarray) -> np.ndarray:
        return np.asarray(c, dtype=float) @ self.basis

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v) @ self.projector.T

    def with_label(self, label: str) -> "Subspace":
        return Subspace(self.algebra, self.basis, label)

    def __add__(self, other: "Subspace") -> "Subspace":
        label = "+".join(x for x in (self.label, other.label) if x)
        return Subspace.span(self.algebra, np.vstack([self.basis, other.basis]), label)


def _orthonormalize(vecs: np.ndarray, gram: np.ndarray, tol: float) -> np.ndarray:
    """Modified Gram-Schmidt in the inner product ``gram``, two passes."""
    out: list[np.ndarray] = []
    for v in vecs:
        v = v.astype(float).copy()
        norm0 = np.sqrt(max(v @ gram @ v, 0.0))
        if norm0 == 0.0:
            continue
        for _ in range(2):
            for q in out:
                v -= (q @ gram @ v) * q
        norm = np.sqrt(max(v @ gram @ v, 0.0))
        if norm <= 1e3 * tol * norm0:
            continue
        out.append(v / norm)
    d = gram.shape[0]
    return np.array(out).reshape(-1, d)


def orthocomplement(sub: Subspace, label: str = "m") -> Subspace:
    """B-orthogonal complement of ``sub`` in the whole algebra."""
    alg = sub.algebra
    if sub.dim == 0:
        return Subspace.span(alg, np.eye(alg.dim), label)
    null = scipy.linalg.null_space(sub.basis @ alg.gram_B)
    return Subspace.span(alg, null.T, label)


def bracket_inclusion_residual(a: Subspace, c: Subspace, target: Subspace) -> float:
    """Worst relative distance of ``[a_i, c_j]`` from ``target``, over basis pairs."""
    alg = a.algebra
    if a.dim == 0 or c.dim == 0:
        return 0.0
    br = np.einsum("ai,cj,ijk->ack", a.basis, c.basis, alg.structure_constants).reshape(-1, alg.dim)
    off = br - target.project(br) if target.dim else br
    scale = np.maximum(1.0, alg.norm_B(br))
    return float(np.max(alg.norm_B(off) / scale))


def is_subalgebra(sub: Subspace) -> bool:
    return bracket_inclusion_residual(sub, sub, sub) <= sub.algebra.tol


@dataclass(frozen=True, eq=False)
class HomogeneousSpace:
    """``g = k + m`` with ``m = m_1 + ... + m_s`` and metric ``sum_i lambda_i B|m_i``.

    ``degenerate`` marks spaces built from a construction whose second
    summand came out empty; they carry a single summand and no deformation
    axis.
    """

    algebra: MatrixLieAlgebra
    k: Subspace
    split: tuple[Subspace, ...]
    lambdas: tuple[float, ...]
    name: str = ""
    degenerate: bool = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        split = tuple(self.split)
        lambdas = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "split", split)
        object.__setattr__(self, "lambdas", lambdas)
        if not split:
            raise InputError("split must contain at least one subspace")
        if len(lambdas) != len(split):
            raise InputError(f"got {len(lambdas)} lambdas for {len(split)} split members")
        if any(not np.isfinite(x) or x <= 0 for x in lambdas):
            raise InputError(f"lambdas must be strictly positive, got {lambdas}")
        for i, sub in enumerate(split):
            if sub.dim == 0:
                raise InputError(f"split member {i} ({sub.label or 'unnamed'}) has dimension 0")
        total = self.k.dim + sum(s.dim for s in split)
        if total != self.algebra.dim:
            raise InputError(
                f"dim k + sum dim m_i = {total} but the algebra has dimension {self.algebra.dim}")
        if self.m.dim != total - self.k.dim:
            raise InputError("split members are linearly dependent")

    @property
    def s(self) -> int:
        return len(self.split)

    @cached_property
    def m(self) -> Subspace:
        """``m`` with basis ordered as the split members' bases, concatenated."""
        stacked = np.vstack([sub.basis for sub in self.split])
        return Subspace.span(self.algebra, stacked, "m")

    @property
    def dim_m(self) -> int:
        return self.m.dim

    @cached_property
    def block_slices(self) -> tuple[slice, ...]:
        out, start = [], 0
        for sub in self.split:
            out.append(slice(start, start + sub.dim))
            start += sub.dim
        return tuple(out)

    # -- m-coordinate machinery ------------------------------------------

    @cached_property
    def metric_gram(self) -> np.ndarray:
        """Gram matrix of the deformed metric on the m-basis."""
        gram = np.zeros((self.dim_m, self.dim_m))
        for lam, sub in zip(self.lambdas, self.split):
            c = sub.coords(self.m.basis)  # (dim m, dim m_i)
            gram += lam * c @ c.T
        return 0.5 * (gram + gram.T)

    @cached_property
    def m_brackets(self) -> np.ndarray:
        """``C[i, j, k]``: k-th m-coordinate of ``[f_i, f_j]_m`` for m-basis vectors f."""
        alg = self.algebra
        br = np.einsum("ai,bj,ijk->abk", self.m.basis, self.m.basis, alg.structure_constants)
        return self.m.coords(br)

    def to_m(self, v: np.ndarray, check: bool = True) -> np.ndarray:
        """m-coordinates of algebra vector(s) ``v``; NotInM if ``v`` has a k-part."""
        v = np.asarray(v, dtype=float)
        if check and self.k.dim:
            kpart = self.algebra.norm_B(self.k.project(v))
            scale = np.maximum(1.0, self.algebra.norm_B(v))
            if np.max(kpart / scale) > self.algebra.tol:
                raise NotInM(f"vector has a k-component of size {np.max(kpart):.3e}")
        return self.m.coords(v)

    def from_m(self, c: np.ndarray) -> np.ndarray:
        return self.m.from_coords(c)

    def block_vector(self, index: int, coords) -> np.ndarray:
        """Algebra vector from coordinates over the basis of split member ``index``."""
        sub = self.split[index]
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (sub.dim,):
            raise InputError(f"m_{index + 1} has dimension {sub.dim}, got {coords.size} coordinates")
        return sub.from_coords(coords)

    def deformed_norm(self, v: np.ndarray) -> float:
        return float(np.sqrt(deformed_inner(self, v, v)))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "algebra": self.algebra.name,
            "dim_g": self.algebra.dim,
            "dim_k": self.k.dim,
            "dim_m": self.dim_m,
            "split": [s.dim for s in self.split],
            "split_labels": [s.label for s in self.split],
            "lambdas": list(self.lambdas),
            "degenerate": self.degenerate,
        }


def deformed_inner(space: HomogeneousSpace, x: np.ndarray, y: np.ndarray) -> float:
    """``sum_i lambda_i B(x_i, y_i)`` over the split components of ``x, y`` in m."""
    cx, cy = space.to_m(x), space.to_m(y)
    return float(cx @ space.metric_gram @ cy)


def _nomizu_coords(space: HomogeneousSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Nomizu operator on m-coordinates; ``x, y`` may be stacks ``(..., D)``."""
    gram, c = space.metric_gram, space.m_brackets
    gx, gy = x @ gram, y @ gram
    # rhs_z = <[z,x]_m, y> + <x, [z,y]_m>
    rhs = np.einsum("zik,...i,...k->...z", c, x, gy) + np.einsum("zik,...i,...k->...z", c, y, gx)
    return np.linalg.solve(gram, 0.5 * rhs.T).T


def nomizu_U(space: HomogeneousSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """The ``U(x, y)`` in m with ``2<U(x,y), z> = <[z,x]_m, y> + <x, [z,y]_m>`` for all z in m."""
    u = _nomizu_coords(space, space.to_m(x), space.to_m(y))
    return space.from_m(u)


# -- structural checks --------------------------------------------------------


def check_split_orthogonality(space: HomogeneousSpace, tol: float | None = None) -> CheckResult:
    """Largest ``|B(u, v)|`` over basis pairs from different members of ``k, m_1, ..., m_s``."""
    tol = space.algebra.tol if tol is None else tol
    blocks = ([space.k] if space.k.dim else []) + list(space.split)
    worst = 0.0
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            cross = blocks[i].basis @ space.algebra.gram_B @ blocks[j].basis.T
            if cross.size:
                worst = max(worst, float(np.abs(cross).max()))
    return CheckResult("split_orthogonality", worst, tol)


def check_ad_K_invariance(space: HomogeneousSpace, tol: float | None = None) -> CheckResult:
    """``[k, k] in k`` and ``[k, m_i] in m_i``, at the algebra level (K assumed connected)."""
    tol = space.algebra.tol if tol is None else tol
    worst = bracket_inclusion_residual(space.k, space.k, space.k)
    for sub in space.split:
        worst = max(worst, bracket_inclusion_residual(space.k, sub, sub))
    return CheckResult("ad_k_invariance", worst, tol, note="assumes K connected")


def natural_reductivity_residual(space: HomogeneousSpace, gram: np.ndarray | None = None) -> float:
    """Max over m-basis triples of ``<[X,Y]_m, Z> + <Y, [X,Z]_m>`` for the form ``gram``.

    ``gram`` defaults to B on m (identity on the orthonormal m-basis).
    """
    c = space.m_brackets
    if gram is None:
        gram = np.eye(space.dim_m)
    first = np.einsum("xyk,kz->xyz", c, gram)
    second = np.einsum("yk,xzk->xyz", gram, c)
    return float(np.abs(first + second).max()) if c.size else 0.0


def check_natural_reductivity(space: HomogeneousSpace, tol: float | None = None,
                              use_deformed: bool = False) -> CheckResult:
    tol = space.algebra.tol if tol is None else tol
    gram = space.metric_gram if use_deformed else None
    name = "natural_reductivity" + ("_deformed" if use_deformed else "")
    return CheckResult(name, natural_reductivity_residual(space, gram), tol)


def check_bracket_inclusion(space: HomogeneousSpace, a: int = 0, b: int = 1,
                            tol: float | None = None) -> CheckResult:
    """``[m_a, m_b] in m_a`` for split members ``a, b`` (0-based)."""
    tol = space.algebra.tol if tol is None else tol
    if space.s < 2:
        return CheckResult("bracket_inclusion", None, tol, note="degenerate split")
    res = bracket_inclusion_residual(space.split[a], space.split[b], space.split[a])
    return CheckResult("bracket_inclusion", res, tol, note=f"[m{a + 1}, m{b + 1}] in m{a + 1}")


def structural_checks(space: HomogeneousSpace, tol: float | None = None) -> list[CheckResult]:
    """The structural certification run by ``twostep check``."""
    checks = [
        check_split_orthogonality(space, tol),
        check_ad_K_invariance(space, tol),
        check_natural_reductivity(space, tol),
        check_bracket_inclusion(space, tol=tol),
    ]
    degenerate = space.degenerate or space.s < 2
    checks.append(CheckResult("nondegenerate_split", float(degenerate), 0.0,
                              note="degenerate split" if degenerate else ""))
    return checks


# -- space spec files ---------------------------------------------------------


def space_from_spec(spec: dict, tol: float = DEFAULT_TOL_ALG, lambdas: Sequence[float] | None = None
                    ) -> HomogeneousSpace:
    """Build from a parsed space spec (see README for the schema)."""
    if not isinstance(spec, dict):
        raise BadSpecFile("space spec: expected a JSON object")
    for key in ("algebra", "split", "lambdas"):
        if key not in spec:
            raise BadSpecFile(f"space spec: missing field {key!r}")
    alg = algebra_from_spec(spec["algebra"], tol=tol)

    def vectors(obj, where):
        try:
            arr = np.array(obj, dtype=float).reshape(-1, alg.dim) if len(obj) else np.zeros((0, alg.dim))
        except (TypeError, ValueError) as exc:
            raise BadSpecFile(f"{where}: expected a list of {alg.dim}-vectors") from exc
        if arr.shape[0] != len(obj):
            raise BadSpecFile(f"{where}: expected a list of {alg.dim}-vectors")
        return arr

    k = Subspace.span(alg, vectors(spec.get("k_basis", []), "k_basis"), "k")
    if not isinstance(spec["split"], list) or not spec["split"]:
        raise BadSpecFile("split: expected a non-empty list of vector lists")
    split = [Subspace.span(alg, vectors(s, f"split[{i}]"), f"m{i + 1}") for i, s in enumerate(spec["split"])]
    lams = spec["lambdas"] if lambdas is None else lambdas
    if not isinstance(lams, (list, tuple)) or not all(isinstance(x, (int, float)) for x in lams):
        raise BadSpecFile("lambdas: expected a list of numbers")
    try:
        return HomogeneousSpace(alg, k, tuple(split), tuple(lams), name=str(spec.get("name", "")))
    except InputError as exc:
        raise BadSpecFile(f"space spec: {exc}") from exc


def space_to_spec(space: HomogeneousSpace) -> dict:
    return {
        "algebra": space.algebra.to_spec(),
        "k_basis": space.k.basis.tolist(),
        "split": [s.basis.tolist() for s in space.split],
        "lambdas": list(space.lambdas),
        "name": space.name,
    }


def load_space(path: str | Path, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadSpecFile(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return space_from_spec(spec, tol=tol)
