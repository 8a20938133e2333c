"""Constructors for the example families of two-step g.o. spaces.

Every constructor re-certifies its structural hypotheses and raises
ConditionViolated if they fail. When a construction leaves the second
summand empty, the result has a single summand and ``degenerate=True``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .decomposition import (
    HomogeneousSpace,
    Subspace,
    bracket_inclusion_residual,
    check_ad_K_invariance,
    check_natural_reductivity,
    check_split_orthogonality,
    is_subalgebra,
    orthocomplement,
)
from .exceptions import ConditionViolated, InputError, UnknownPreset
from .lie import DEFAULT_TOL_ALG, MatrixLieAlgebra, su, u


def _certify(space: HomogeneousSpace) -> HomogeneousSpace:
    checks = [check_split_orthogonality(space), check_ad_K_invariance(space), check_natural_reductivity(space)]
    if space.s >= 2 and not space.degenerate:
        res = bracket_inclusion_residual(space.split[0], space.split[1], space.split[0])
        if res > space.algebra.tol:
            raise ConditionViolated(f"{space.name}: [m1, m2] not in m1 (residual {res:.3e})")
    bad = [str(c) for c in checks if not c.passed]
    if bad:
        raise ConditionViolated(f"{space.name}: " + "; ".join(bad))
    return space


def _two_summand_space(alg, k, m1, m2, lam, name, notes=None) -> HomogeneousSpace:
    notes = dict(notes or {})
    if m2.dim == 0:
        return _certify(HomogeneousSpace(alg, k, (m1,), (1.0,), name=name, degenerate=True, notes=notes))
    return _certify(HomogeneousSpace(alg, k, (m1, m2), (1.0, lam), name=name, notes=notes))


def _span_basis(alg: MatrixLieAlgebra, indices, label) -> Subspace:
    return Subspace.span(alg, np.eye(alg.dim)[list(indices)], label)


def _pair_index(n: int, p: int, q: int) -> int:
    """Position of the root pair (p, q), p < q, in :func:`twostep.lie.su_basis` ordering."""
    idx = 0
    for pp in range(n):
        for qq in range(pp + 1, n):
            if (pp, qq) == (p, q):
                return 2 * idx
            idx += 1
    raise ValueError((p, q))


def _root_space(alg: MatrixLieAlgebra, n: int, p: int, q: int) -> Subspace:
    i = _pair_index(n, p, q)
    return _span_basis(alg, (i, i + 1), f"m({p + 1},{q + 1})")


# -- Hopf fibration -----------------------------------------------------------


def hopf_sphere(n: int, lam: float, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """``S^{2n+1} = U(n+1)/U(n)`` fibered over ``CP^n``; fibre direction scaled by ``lam``."""
    if n < 1:
        raise InputError("hopf_sphere needs n >= 1")
    N = n + 1
    alg = u(N, tol=tol)
    last = N - 1
    n_pairs = N * (N - 1) // 2
    k_idx, m1_idx = [], []
    for pair, (p, q) in enumerate((p, q) for p in range(N) for q in range(p + 1, N)):
        (m1_idx if q == last else k_idx).extend((2 * pair, 2 * pair + 1))
    k_idx.extend(2 * n_pairs + p for p in range(n))
    k = _span_basis(alg, k_idx, "k")
    m1 = _span_basis(alg, m1_idx, "m1 (CP^n)")
    m2 = _span_basis(alg, [2 * n_pairs + last], "m2 (S^1)")
    return _two_summand_space(alg, k, m1, m2, lam, f"hopf:n={n},lambda={lam:g}")


# -- Lie groups ---------------------------------------------------------------


def group_as_space(alg: MatrixLieAlgebra, k_sub: Subspace, lam: float, name: str = "") -> HomogeneousSpace:
    """``G/{e}`` with the left-invariant metric ``B|_m + lam B|_{k_sub}``, ``m`` the complement of ``k_sub``."""
    if k_sub.dim == 0:
        raise InputError("k_sub must be non-zero (the split would have an empty member)")
    if not is_subalgebra(k_sub):
        raise ConditionViolated("k_sub is not a subalgebra")
    m1 = orthocomplement(k_sub, "m1")
    res = bracket_inclusion_residual(m1, k_sub, m1)
    if res > alg.tol:
        raise ConditionViolated(f"[k_sub, m] not in m (residual {res:.3e})")
    if m1.dim == 0:
        raise InputError("k_sub is the whole algebra; the complement is empty")
    return _certify(HomogeneousSpace(alg, Subspace.zero(alg, "k"), (m1, k_sub.with_label("m2")), (1.0, lam),
                                     name=name or f"{alg.name}-group,lambda={lam:g}"))


def su2_berger(lam: float, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """SU(2) with the Berger metric: ``k_sub`` spanned by ``e3 = diag(i, -i)``."""
    alg = su(2, tol=tol)
    return group_as_space(alg, Subspace.span(alg, [[0, 0, 1]]), lam, name=f"su2-berger:lambda={lam:g}")


# -- root data and flag manifolds ---------------------------------------------


@dataclass(frozen=True, eq=False)
class RootDatum:
    """Positive roots as integer coefficient vectors over the simple roots.

    ``complementary`` holds the 1-based indices of the simple roots in
    ``Pi_M``. ``realization`` optionally maps a root (as a tuple) to its
    two-dimensional root space.
    """

    rank: int
    positive_roots: tuple[tuple[int, ...], ...]
    complementary: tuple[int, ...]
    realization: dict = field(default_factory=dict)

    def __post_init__(self):
        for root in self.positive_roots:
            if len(root) != self.rank or any(c < 0 or int(c) != c for c in root):
                raise InputError(f"root {root} is not a non-negative integer vector of length {self.rank}")
        if any(not 1 <= i <= self.rank for i in self.complementary):
            raise InputError("complementary indices must lie in 1..rank")

    def is_m_root(self, root) -> bool:
        return any(root[i - 1] != 0 for i in self.complementary)

    @property
    def m_roots(self) -> list[tuple[int, ...]]:
        return [r for r in self.positive_roots if self.is_m_root(r)]

    @property
    def k_roots(self) -> list[tuple[int, ...]]:
        return [r for r in self.positive_roots if not self.is_m_root(r)]


def parity_classes(datum: RootDatum, i0: int) -> tuple[list, list]:
    """Roots of ``R_M^+`` with odd and with even coefficient at simple root ``i0`` (1-based)."""
    if i0 not in datum.complementary:
        raise InputError(f"i0 = {i0} is not a complementary simple root {datum.complementary}")
    odd = [r for r in datum.m_roots if r[i0 - 1] % 2 == 1]
    even = [r for r in datum.m_roots if r[i0 - 1] % 2 == 0]
    return odd, even


def coefficient_classes(datum: RootDatum, i0: int) -> dict[int, list]:
    """``{c: roots of R_M^+ whose coefficient at i0 equals c}``; the isotropy summands of a one-root ``Pi_M``."""
    out: dict[int, list] = {}
    for r in datum.m_roots:
        out.setdefault(r[i0 - 1], []).append(r)
    return dict(sorted(out.items()))


def root_parity_split(datum: RootDatum, i0: int, alg: MatrixLieAlgebra | None = None
                      ) -> tuple[Subspace, Subspace]:
    """``m_1`` (odd coefficient at ``i0``) and ``m_2`` (even), from the realization.

    The integer bookkeeping is re-certified on the matrices: ConditionViolated
    if ``[m_1, m_2]`` is not contained in ``m_1``. ``m_2`` may be zero.
    """
    if not datum.realization:
        raise InputError("root datum has no realization; use parity_classes for abstract data")
    odd, even = parity_classes(datum, i0)
    alg = alg or next(iter(datum.realization.values())).algebra
    basis = lambda roots: [datum.realization[r].basis for r in roots]  # noqa: E731
    m1 = Subspace.span(alg, np.vstack(basis(odd) or [np.zeros((0, alg.dim))]), "m1")
    m2 = Subspace.span(alg, np.vstack(basis(even) or [np.zeros((0, alg.dim))]), "m2")
    res = bracket_inclusion_residual(m1, m2, m1)
    if res > alg.tol:
        raise ConditionViolated(f"parity split fails [m1, m2] in m1 (residual {res:.3e})")
    return m1, m2


def _boundaries(partition: Sequence[int]) -> list[int]:
    return list(np.cumsum(partition)[:-1])


def type_a_root_datum(partition: Sequence[int], alg: MatrixLieAlgebra | None = None) -> RootDatum:
    """Root datum of ``SU(n)/S(U(n_1) x ... x U(n_k))`` realized with ``E_pq`` matrices.

    The root ``e_p - e_q`` has coefficient 1 at simple roots ``p..q-1`` (1-based).
    """
    n = int(sum(partition))
    alg = alg or su(n)
    roots, realization = [], {}
    for p in range(n):
        for q in range(p + 1, n):
            root = tuple(int(p <= j < q) for j in range(n - 1))
            roots.append(root)
            realization[root] = _root_space(alg, n, p, q)
    return RootDatum(n - 1, tuple(roots), tuple(int(b) for b in _boundaries(partition)), realization)


def flag_su(partition: Sequence[int], i0: int, lam: float, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """Flag manifold ``SU(n)/S(U(n_1) x ... x U(n_k))`` with the parity split at simple root ``i0``.

    ``i0`` is the 1-based index of a simple root that sits on a block boundary.
    """
    partition = [int(x) for x in partition]
    if any(x < 1 for x in partition) or sum(partition) < 2 or len(partition) < 2:
        raise InputError("partition must have at least two positive blocks")
    n = sum(partition)
    alg = su(n, tol=tol)
    datum = type_a_root_datum(partition, alg)
    if i0 not in datum.complementary:
        raise InputError(f"i0 = {i0} is not a block boundary; choose from {list(datum.complementary)}")
    k_vecs = [datum.realization[r].basis for r in datum.k_roots]
    cartan = np.eye(alg.dim)[n * (n - 1):]
    k = Subspace.span(alg, np.vstack(k_vecs + [cartan]), "k")
    m1, m2 = root_parity_split(datum, i0, alg)
    name = f"flag-su:partition={'-'.join(map(str, partition))},i0={i0},lambda={lam:g}"
    return _two_summand_space(alg, k, m1, m2, lam, name, notes={"i0": i0, "partition": partition})


def numerical_root_coefficient(alg: MatrixLieAlgebra, n: int, root_space: Subspace, i0: int) -> float:
    """Coefficient of simple root ``i0`` in a root, read off from ``ad(H)`` on its root space.

    ``H = i diag(w)`` with ``w`` the ``i0``-th fundamental coweight, so that
    ``ad(H)^2 = -c^2`` on the root space.
    """
    w = np.array([1.0 if p < i0 else 0.0 for p in range(n)])
    w -= w.mean()
    h = alg.from_matrix(np.diag(1j * w))
    ad = alg.ad_matrix(h)
    v = root_space.basis[0]
    sq = ad @ (ad @ v)
    return float(np.sqrt(max(-alg.B(sq, v) / alg.B(v, v), 0.0)))


# -- generalized Wallach spaces -----------------------------------------------

WALLACH_MODULES = {1: (0, 1), 2: (0, 2), 3: (1, 2)}  # n_1 = (1,2), n_2 = (1,3), n_3 = (2,3)


def wallach_modules(alg: MatrixLieAlgebra) -> dict[int, Subspace]:
    return {i: _root_space(alg, 3, p, q).with_label(f"n{i}") for i, (p, q) in WALLACH_MODULES.items()}


def wallach_su3(l: int, lam: float, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """``SU(3)/T`` with metric ``B|_{n_i + n_j} + lam B|_{n_l}``."""
    if l not in (1, 2, 3):
        raise InputError("l must be 1, 2 or 3")
    alg = su(3, tol=tol)
    k = Subspace.span(alg, np.eye(alg.dim)[6:], "k")
    mods = wallach_modules(alg)
    for i, sub in mods.items():
        res = bracket_inclusion_residual(sub, sub, k)
        if res > alg.tol:
            raise ConditionViolated(f"[n{i}, n{i}] not in k (residual {res:.3e})")
    i, j = [x for x in (1, 2, 3) if x != l]
    m1 = (mods[i] + mods[j]).with_label(f"n{i}+n{j}")
    return _two_summand_space(alg, k, m1, mods[l], lam, f"wallach-su3:l={l},lambda={lam:g}")


# -- k-symmetric spaces -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GradedDecomposition:
    """``g = n_0 + n_1 + ... + n_t`` from an order-``order`` automorphism, ``t = order // 2``."""

    order: int
    components: tuple[Subspace, ...]

    @property
    def t(self) -> int:
        return len(self.components) - 1

    def target(self, i: int, j: int) -> tuple[int, int]:
        """Indices of the two components that must contain ``[n_i, n_j]`` for ``j <= i``."""
        return (i + j if i + j <= self.t else self.order - (i + j)), i - j

    def relation_residuals(self) -> dict[tuple[int, int], float]:
        out = {}
        for i in range(self.t + 1):
            for j in range(i + 1):
                a, b = self.target(i, j)
                tgt = self.components[a] + self.components[b]
                out[(i, j)] = bracket_inclusion_residual(self.components[i], self.components[j], tgt)
        return out

    def parity_split(self) -> tuple[list[Subspace], list[Subspace]]:
        odd = [c for i, c in enumerate(self.components) if i % 2 == 1 and c.dim]
        even = [c for i, c in enumerate(self.components) if i >= 2 and i % 2 == 0 and c.dim]
        return odd, even


def phase_grading(n: int, exponents: Sequence[int], order: int, alg: MatrixLieAlgebra | None = None
                  ) -> GradedDecomposition:
    """Grading of su(n) by ``Ad(diag(zeta^a_1, ..., zeta^a_n))``, ``zeta = exp(2 pi i / order)``.

    ``n_j`` is the real form of the ``zeta^{+-j}`` eigenspaces; the root pair
    ``(p, q)`` has class ``min(d, order - d)`` with ``d = (a_p - a_q) mod order``.
    Diagonal matrices are fixed, so they belong to ``n_0``.
    """
    if len(exponents) != n:
        raise InputError(f"need {n} exponents, got {len(exponents)}")
    if order < 2 or order % 2:
        raise ConditionViolated(f"automorphism order must be even and >= 2, got {order}")
    alg = alg or su(n)
    t = order // 2
    vecs: list[list[np.ndarray]] = [[] for _ in range(t + 1)]
    for p in range(n):
        for q in range(p + 1, n):
            d = (exponents[p] - exponents[q]) % order
            vecs[min(d, order - d)].append(_root_space(alg, n, p, q).basis)
    vecs[0].append(np.eye(alg.dim)[n * (n - 1):])
    comps = tuple(
        Subspace.span(alg, np.vstack(v) if v else np.zeros((0, alg.dim)), f"n{j}") for j, v in enumerate(vecs))
    return GradedDecomposition(order, comps)


def verify_phase_automorphism(alg: MatrixLieAlgebra, exponents: Sequence[int], order: int) -> float:
    """Residual of ``phi^order = id`` and of ``phi`` acting by ``zeta^{+-j}`` on each class (rotation check)."""
    zeta = np.exp(2j * np.pi / order)
    d = np.diag(zeta ** np.asarray(exponents))
    phi = np.array([alg.from_matrix(d @ b @ d.conj().T) for b in alg.basis]).T  # column j = phi(b_j)
    return float(np.abs(np.linalg.matrix_power(phi, order) - np.eye(alg.dim)).max())


def k_symmetric_su(n: int, exponents: Sequence[int], order: int, lam: float,
                   tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """``SU(n)/K`` for ``K`` the fixed group of ``Ad(diag(zeta^a))``; ``m_1`` = odd ``n_j``, ``m_2`` = even."""
    alg = su(n, tol=tol)
    grading = phase_grading(n, exponents, order, alg)
    if verify_phase_automorphism(alg, exponents, order) > alg.tol:
        raise ConditionViolated("phase automorphism does not have the requested order")
    bad = {ij: r for ij, r in grading.relation_residuals().items() if r > alg.tol}
    if bad:
        raise ConditionViolated(f"grading relations fail for (i, j) in {sorted(bad)}")
    k = grading.components[0].with_label("k")
    if k.dim == alg.dim:
        raise InputError("automorphism is the identity: k = g and m = 0")
    odd, even = grading.parity_split()
    if not odd:
        raise ConditionViolated("no odd graded components: [m, m] would close in even degrees only")
    m1 = Subspace.span(alg, np.vstack([c.basis for c in odd]), "+".join(c.label for c in odd))
    m2 = (Subspace.span(alg, np.vstack([c.basis for c in even]), "+".join(c.label for c in even))
          if even else Subspace.zero(alg, "m2"))
    name = f"ksym-su:n={n},exp={'-'.join(map(str, exponents))},k={order},lambda={lam:g}"
    notes = {"t": grading.t, "t_identification": "t = order/2, the number of nonzero eigenvalue-pair classes",
             "graded_dims": [c.dim for c in grading.components]}
    return _two_summand_space(alg, k, m1, m2, lam, name, notes)


# -- preset registry ----------------------------------------------------------


@dataclass(frozen=True)
class Preset:
    name: str
    grammar: str
    build: Callable[..., HomogeneousSpace]
    defaults: dict


def _int(v):
    return int(v)


def _ints(v):
    return [int(x) for x in str(v).split("-")] if not isinstance(v, list) else [int(x) for x in v]


PRESETS: dict[str, Preset] = {
    "hopf": Preset("hopf", "hopf:n=<int>,lambda=<float>",
                   lambda p, tol: hopf_sphere(_int(p["n"]), p["lambda"], tol), {"n": 1, "lambda": 2.0}),
    "su2-berger": Preset("su2-berger", "su2-berger:lambda=<float>",
                         lambda p, tol: su2_berger(p["lambda"], tol), {"lambda": 4.0}),
    "flag-su": Preset("flag-su", "flag-su:partition=<n1-n2-...>,i0=<int>,lambda=<float>",
                      lambda p, tol: flag_su(_ints(p["partition"]), _int(p["i0"]), p["lambda"], tol),
                      {"partition": "1-1-1", "i0": 1, "lambda": 2.0}),
    "wallach-su3": Preset("wallach-su3", "wallach-su3:l=<1|2|3>,lambda=<float>",
                          lambda p, tol: wallach_su3(_int(p["l"]), p["lambda"], tol), {"l": 3, "lambda": 2.0}),
    "ksym-su": Preset("ksym-su", "ksym-su:n=<int>,exp=<a1-a2-...>,k=<even int>,lambda=<float>",
                      lambda p, tol: k_symmetric_su(_int(p["n"]), _ints(p["exp"]), _int(p["k"]), p["lambda"], tol),
                      {"n": 3, "exp": "0-1-2", "k": 4, "lambda": 2.0}),
}


def parse_preset(text: str) -> tuple[str, dict]:
    """``"name:key=value,..."`` into ``(name, params)``; values stay strings except ``lambda``."""
    name, _, rest = text.strip().partition(":")
    if name not in PRESETS:
        raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(PRESETS)}")
    params = dict(PRESETS[name].defaults)
    for item in filter(None, rest.split(",")):
        key, eq, value = item.partition("=")
        key = key.strip()
        if not eq or key not in params:
            raise InputError(f"{name}: bad parameter {item!r}; grammar {PRESETS[name].grammar}")
        params[key] = value.strip()
    try:
        params["lambda"] = float(params["lambda"])
    except ValueError as exc:
        raise InputError(f"{name}: lambda must be a number") from exc
    return name, params


def build_preset(text: str, lam: float | None = None, tol: float = DEFAULT_TOL_ALG) -> HomogeneousSpace:
    """Build a named preset, optionally overriding its lambda; lambda is validated before construction."""
    name, params = parse_preset(text)
    if lam is not None:
        params["lambda"] = float(lam)
    if not np.isfinite(params["lambda"]) or params["lambda"] <= 0:
        raise InputError(f"lambda must be positive, got {params['lambda']}")
    try:
        return PRESETS[name].build(params, tol)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"{name}: {exc}") from exc


# the structural certification set (acceptance criterion scope)
STANDARD_PRESETS = (
    "hopf:n=1,lambda=2",
    "hopf:n=2,lambda=2",
    "su2-berger:lambda=4",
    "flag-su:partition=1-1-1,i0=1,lambda=2",
    "flag-su:partition=1-1-1,i0=2,lambda=2",
    "flag-su:partition=1-1-1-1,i0=1,lambda=2",
    "flag-su:partition=1-1-1-1,i0=2,lambda=2",
    "flag-su:partition=1-1-1-1,i0=3,lambda=2",
    "wallach-su3:l=1,lambda=2",
    "wallach-su3:l=2,lambda=2",
    "wallach-su3:l=3,lambda=2",
    "ksym-su:n=3,exp=0-1-2,k=4,lambda=2",
)
