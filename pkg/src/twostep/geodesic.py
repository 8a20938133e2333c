"""Two-step homogeneous geodesics ``pi(exp tX exp tY)`` and their verification.

For a pair of split members with ``[m_a, m_b] in m_a`` and initial velocity
``X_a + X_b``, the closed form uses ``X = X_a + lam X_b``, ``Y = (1 - lam) X_b``
with ``lam = lambda_b / lambda_a``. Two independent checks are provided:

* the Koszul-formula terms, evaluated both in reduced closed form and from
  the unreduced metric pairings;
* the geodesic equation written with the Nomizu operator, either as a
  pointwise defect of the closed form or integrated as an ODE (RK4) from
  the same initial velocity and compared in ``G/K``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .decomposition import HomogeneousSpace, Subspace, _nomizu_coords, bracket_inclusion_residual
from .exceptions import ConditionViolated, InputError, StepTooLarge
from .report import CheckResult, VerificationReport

DEFAULT_TOL_ODE = 1e-6
DEFAULT_TOL_DEFECT = 1e-8
DEFAULT_STEP = 1e-3
KOSZUL_TOL = 1e-12
ORACLE_TIMES = (0.5, 1.0, 2.0)


@dataclass(frozen=True, eq=False)
class TwoStepCurve:
    """Initial data ``(X_a, X_b)`` for the curve ``exp(tX) exp(tY)``.

    With ``check=True`` (default) the inclusion ``[m_a, m_b] in m_a`` is
    certified at construction; pass ``check=False`` only to build
    deliberate counterexamples.
    """

    space: HomogeneousSpace
    a_index: int
    b_index: int
    X_a: np.ndarray
    X_b: np.ndarray
    check: bool = True

    def __post_init__(self):
        sp = self.space
        if self.a_index == self.b_index or not (0 <= self.a_index < sp.s and 0 <= self.b_index < sp.s):
            raise InputError(f"invalid split pair ({self.a_index}, {self.b_index}) for s = {sp.s}")
        object.__setattr__(self, "X_a", np.asarray(self.X_a, dtype=float))
        object.__setattr__(self, "X_b", np.asarray(self.X_b, dtype=float))
        alg = sp.algebra
        for vec, sub, label in ((self.X_a, self.m_a, "X_a"), (self.X_b, self.m_b, "X_b")):
            off = alg.norm_B(vec - sub.project(vec))
            if off > alg.tol * max(1.0, alg.norm_B(vec)):
                raise InputError(f"{label} does not lie in {sub.label or 'its split member'} (off by {off:.3e})")
        if self.check:
            res = bracket_inclusion_residual(self.m_a, self.m_b, self.m_a)
            if res > alg.tol:
                raise ConditionViolated(
                    f"[m_{self.a_index + 1}, m_{self.b_index + 1}] is not contained in m_{self.a_index + 1} "
                    f"(residual {res:.3e})")

    @classmethod
    def from_velocity(cls, space: HomogeneousSpace, v0: np.ndarray, a_index: int = 0, b_index: int = 1,
                      check: bool = True) -> "TwoStepCurve":
        """Split an initial velocity ``v0 in m_a + m_b`` into its two components."""
        xa = space.split[a_index].project(v0)
        xb = space.split[b_index].project(v0)
        rest = space.algebra.norm_B(np.asarray(v0) - xa - xb)
        if rest > space.algebra.tol * max(1.0, space.algebra.norm_B(v0)):
            raise InputError(f"initial velocity has a component outside m_a + m_b ({rest:.3e})")
        return cls(space, a_index, b_index, xa, xb, check)

    @property
    def m_a(self) -> Subspace:
        return self.space.split[self.a_index]

    @property
    def m_b(self) -> Subspace:
        return self.space.split[self.b_index]

    @property
    def lambda_a(self) -> float:
        return self.space.lambdas[self.a_index]

    @property
    def lambda_b(self) -> float:
        return self.space.lambdas[self.b_index]

    @property
    def lam(self) -> float:
        return self.lambda_b / self.lambda_a

    @cached_property
    def X(self) -> np.ndarray:
        return self.X_a + self.lam * self.X_b

    @cached_property
    def Y(self) -> np.ndarray:
        return (1.0 - self.lam) * self.X_b

    @property
    def v0(self) -> np.ndarray:
        return self.X_a + self.X_b


def curve_point(c: TwoStepCurve, t):
    """``exp(tX) exp(tY)``; array ``t`` gives a stack of group elements."""
    alg = c.space.algebra
    return alg.group_exp(c.X, t) @ alg.group_exp(c.Y, t)


def one_step_point(c: TwoStepCurve, t):
    """The one-parameter orbit ``exp(t (X_a + X_b))`` with the same initial velocity."""
    return c.space.algebra.group_exp(c.v0, t)


@dataclass(frozen=True)
class BodyVelocity:
    """Left-trivialized velocity of ``alpha(t) = exp(tX) exp(tY)`` and its pieces.

    ``w = Ad(exp(-tY)) X + Y``; ``Ya = Ad(exp(-tY)) X_a``; ``x_m = Ya + X_b``;
    ``kappa`` is the k-part of ``w`` and ``w_dot = [Ad(exp(-tY)) X, Y]``.
    Fields are stacked along a leading axis when ``t`` is an array.
    """

    t: np.ndarray
    w: np.ndarray
    Ya: np.ndarray
    x_m: np.ndarray
    kappa: np.ndarray
    w_dot: np.ndarray


def _adjoint_by_exp(c: TwoStepCurve, t, vectors: list[np.ndarray]) -> list[np.ndarray]:
    """``Ad(exp(-tY)) v`` for each ``v`` (stacked over ``t``)."""
    alg = c.space.algebra
    t = np.asarray(t, dtype=float)
    g = alg.group_exp(c.Y, -t)
    g_inv = alg.group_exp(c.Y, t)
    return [alg.from_matrix(g @ alg.to_matrix(v) @ g_inv) for v in vectors]


def body_velocity(c: TwoStepCurve, t) -> BodyVelocity:
    alg = c.space.algebra
    tx, ya = _adjoint_by_exp(c, t, [c.X, c.X_a])
    w = tx + c.Y
    x_m = ya + c.X_b
    kappa = c.space.k.project(w) if c.space.k.dim else np.zeros_like(w)
    w_dot = alg.bracket(tx, np.broadcast_to(c.Y, tx.shape))
    return BodyVelocity(np.asarray(t, dtype=float), w, ya, x_m, kappa, w_dot)


def _koszul_bracket(c: TwoStepCurve, t) -> np.ndarray:
    """``[Ya(t), X_b]_m`` (stacked over array ``t``)."""
    sp, alg = c.space, c.space.algebra
    ya = body_velocity(c, t).Ya
    return sp.m.project(alg.bracket(ya, np.broadcast_to(c.X_b, ya.shape)))


def koszul_terms(c: TwoStepCurve, t, Z: np.ndarray):
    """The three Koszul-formula terms in reduced form.

    With ``b = B(Z, [Ya(t), X_b]_m)``: ``T1 = (1 - lam) lambda_a b``,
    ``T2 = (lam - 1) lambda_a b``, ``T3 = 2 b (lam lambda_a - lambda_b)``.
    For scalar ``t`` and a single ``Z`` the terms are floats; an array of
    times and a stack of ``Z`` give arrays of shape ``(T, N)``.
    """
    sp = c.space
    sp.to_m(Z)
    b = _koszul_bracket(c, t) @ sp.algebra.gram_B @ np.asarray(Z).T
    b = float(b) if np.ndim(b) == 0 else b
    lam, la, lb = c.lam, c.lambda_a, c.lambda_b
    return (1.0 - lam) * la * b, (lam - 1.0) * la * b, 2.0 * b * (lam * la - lb)


def koszul_scale(c: TwoStepCurve, t, Z: np.ndarray):
    """Operand scale ``max(lambda_a, lambda_b) |Z|_B |[Ya, X_b]_m|_B`` for relative comparisons."""
    alg = c.space.algebra
    scale = max(c.lambda_a, c.lambda_b) * np.multiply.outer(alg.norm_B(_koszul_bracket(c, t)), alg.norm_B(Z))
    return float(scale) if np.ndim(scale) == 0 else scale


def koszul_terms_unreduced(c: TwoStepCurve, t: float, Z: np.ndarray) -> tuple[float, float, float]:
    """The same three terms evaluated from the deformed metric before any simplification.

    ``<Z, [TX, Y]_m>``, ``<Ya + X_b, [Z, Y]_m>`` and ``2 <[TX, Z]_m, Ya + X_b>``
    with ``TX = Ad(exp(-tY)) X``. The Koszul right-hand side is
    ``first + second - third / 2``.
    """
    sp, alg = c.space, c.space.algebra
    gram = sp.metric_gram
    tx, ya = _adjoint_by_exp(c, t, [c.X, c.X_a])
    vel = sp.to_m(ya + c.X_b, check=False)
    z = sp.to_m(Z)

    def m_coords(v):
        return sp.m.coords(v)

    first = z @ gram @ m_coords(alg.bracket(tx, c.Y))
    second = vel @ gram @ m_coords(alg.bracket(Z, c.Y))
    third = 2.0 * m_coords(alg.bracket(tx, Z)) @ gram @ vel
    return float(first), float(second), float(third)


def defect_coords(c: TwoStepCurve, t) -> np.ndarray:
    """m-coordinates of ``D(t) = (w_dot)_m + [kappa, x]_m + U(x, x)``, ``x = w_m``.

    ``D`` vanishes identically iff the projected curve is a geodesic.
    """
    sp, alg = c.space, c.space.algebra
    bv = body_velocity(c, t)
    x = sp.m.coords(bv.w)
    rot = sp.m.coords(alg.bracket(bv.kappa, sp.m.project(bv.w)))
    return sp.m.coords(bv.w_dot) + rot + _nomizu_coords(sp, x, x)


def geodesic_defect(c: TwoStepCurve, t) -> np.ndarray:
    """The defect ``D(t)`` as an algebra vector in m (stacked over array ``t``)."""
    return c.space.from_m(defect_coords(c, t))


def max_defect(c: TwoStepCurve, times) -> float:
    """``max_t |D(t)|_B`` (the m-basis is B-orthonormal)."""
    return float(np.max(np.linalg.norm(defect_coords(c, np.asarray(times)), axis=-1)))


# -- ODE oracle ---------------------------------------------------------------


def _rk4_step(space: HomogeneousSpace, mats: np.ndarray, g: np.ndarray, x: np.ndarray, h: float):
    """One classical RK4 step of ``g' = g x``, ``x' = -U(x, x)`` (x in m-coordinates, batched)."""

    def field(g, x):
        return g @ np.tensordot(x, mats, axes=(-1, 0)), -_nomizu_coords(space, x, x)

    k1g, k1x = field(g, x)
    k2g, k2x = field(g + 0.5 * h * k1g, x + 0.5 * h * k1x)
    k3g, k3x = field(g + 0.5 * h * k2g, x + 0.5 * h * k2x)
    k4g, k4x = field(g + h * k3g, x + h * k3x)
    return g + (h / 6.0) * (k1g + 2 * k2g + 2 * k3g + k4g), x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)


def integrate_at_times(space: HomogeneousSpace, v0_coords: np.ndarray, times, step: float = DEFAULT_STEP,
                       tol_ode: float = DEFAULT_TOL_ODE) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the horizontal geodesic lift for a batch of initial velocities.

    ``v0_coords`` holds m-coordinates, shape ``(D,)`` or ``(N, D)``; ``g(0) = I``.
    Between consecutive sample times the step is shrunk to divide the
    interval exactly. Returns ``g`` of shape ``(T, N, n, n)`` and ``x`` of
    shape ``(T, N, D)``. Raises StepTooLarge if the relative drift of
    ``<x, x>`` exceeds ``100 * tol_ode``.
    """
    if step <= 0:
        raise InputError("step must be positive")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(times < 0) or np.any(np.diff(times) < 0):
        raise InputError("sample times must be non-negative and non-decreasing")
    alg = space.algebra
    mats = alg.to_matrix(space.m.basis)
    gram = space.metric_gram
    x = np.atleast_2d(np.asarray(v0_coords, dtype=float))
    g = np.broadcast_to(np.eye(alg.ambient_dim, dtype=complex), (x.shape[0],) + mats.shape[1:]).copy()
    e0 = np.einsum("ni,ij,nj->n", x, gram, x)
    now = 0.0
    gs, xs = [], []
    for target in times:
        span = target - now
        if span > 0:
            n_sub = max(1, int(np.ceil(span / step - 1e-9)))
            h = span / n_sub
            for _ in range(n_sub):
                g, x = _rk4_step(space, mats, g, x, h)
            now = target
            e = np.einsum("ni,ij,nj->n", x, gram, x)
            drift = float(np.max(np.abs(e - e0) / np.maximum(e0, 1e-300)))
            if drift > 100 * tol_ode:
                raise StepTooLarge(f"energy drift {drift:.3e} at t = {target:.6g} exceeds {100 * tol_ode:.1e}")
        gs.append(g.copy())
        xs.append(x.copy())
    return np.array(gs), np.array(xs)


def integrate_geodesic(space: HomogeneousSpace, v0: np.ndarray, t_end: float, step: float = DEFAULT_STEP,
                       stride: float | None = None, tol_ode: float = DEFAULT_TOL_ODE):
    """Integrate the horizontal geodesic lift from ``g(0) = I`` with velocity ``v0 in m``.

    Returns a list of ``(t, g, x)`` at multiples of ``stride`` (default: ``step``)
    and at ``t_end``; ``x`` is the body velocity as an algebra vector.
    """
    if step <= 0 or t_end <= 0:
        raise InputError("step and t_end must be positive")
    stride = step if stride is None else stride
    if stride <= 0:
        raise InputError("stride must be positive")
    count = int(np.floor(t_end / stride + 1e-9))
    times = [i * stride for i in range(count + 1)]
    if t_end - times[-1] > 1e-9 * t_end:
        times.append(t_end)
    gs, xs = integrate_at_times(space, space.to_m(v0), times, step, tol_ode)
    return [(float(t), g[0], space.from_m(x[0])) for t, g, x in zip(times, gs, xs)]


def coset_distance(g1: np.ndarray, g2: np.ndarray, space: HomogeneousSpace) -> float:
    """``|log(g1^{-1} g2)_m|_B``: zero iff ``g1 K = g2 K`` near the identity."""
    alg = space.algebra
    xi = alg.group_log(np.linalg.solve(g1, g2), check=False)
    return float(alg.norm_B(space.m.project(xi)))


# -- full verification --------------------------------------------------------


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial), so results do not depend on evaluation order."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, trial])


def random_unit_velocity(space: HomogeneousSpace, rng: np.random.Generator, a: int = 0, b: int = 1) -> np.ndarray:
    """Gaussian in B-orthonormal coordinates of ``m_a + m_b``, unit length in the deformed metric."""
    coords = np.zeros(space.dim_m)
    for idx in (a, b):
        sl = space.block_slices[idx]
        coords[sl] = rng.standard_normal(sl.stop - sl.start)
    coords /= np.sqrt(coords @ space.metric_gram @ coords)
    return space.from_m(coords)


def random_m_vector(space: HomogeneousSpace, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(space.dim_m)
    return space.from_m(z / np.linalg.norm(z))


def lemma_residual(space: HomogeneousSpace, a: int, b: int, rng: np.random.Generator, samples: int = 100,
                   radius: float = 2.0) -> float:
    """Worst component of ``Ad(exp(u)) v`` outside ``m_a`` for random ``u in m_b``, ``v in m_a``."""
    alg = space.algebra
    ma, mb = space.split[a], space.split[b]
    worst = 0.0
    for _ in range(samples):
        u = mb.from_coords(rng.uniform(-1, 1, mb.dim))
        v = ma.from_coords(rng.uniform(-1, 1, ma.dim))
        u *= radius * rng.uniform() / max(alg.norm_B(u), 1e-300)
        v *= radius * rng.uniform() / max(alg.norm_B(v), 1e-300)
        w = alg.Ad(alg.group_exp(u), v)
        worst = max(worst, float(alg.norm_B(w - ma.project(w))))
    return worst


def verify_two_step(space: HomogeneousSpace, trials: int = 20, t_samples: int = 100, seed: int = 0,
                    a: int = 0, b: int = 1, koszul_z: int = 10, tol_defect: float = DEFAULT_TOL_DEFECT,
                    tol_ode: float = DEFAULT_TOL_ODE, step: float = DEFAULT_STEP,
                    oracle_times=ORACLE_TIMES, oracle: bool = True) -> VerificationReport:
    """Check the closed-form two-step geodesics of ``space`` against both oracles.

    Raises ConditionViolated if ``[m_a, m_b] in m_a`` fails or the split is degenerate.
    """
    if trials < 1 or t_samples < 1:
        raise InputError("trials and t_samples must be positive")
    alg = space.algebra
    tol = alg.tol
    if space.degenerate or space.s < 2:
        raise ConditionViolated(f"{space.name or 'space'}: degenerate split, no deformation axis")
    inclusion = bracket_inclusion_residual(space.split[a], space.split[b], space.split[a])
    if inclusion > tol:
        raise ConditionViolated(f"[m{a + 1}, m{b + 1}] not contained in m{a + 1} (residual {inclusion:.3e})")

    times = np.linspace(0.0, 2 * np.pi, t_samples)
    koszul_sum = koszul_t3 = koszul_gap = 0.0
    defect = speed = lemma = orbit_gap = 0.0
    one_step = 0.0
    one_step_hits = 0
    curves = []
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        c = TwoStepCurve.from_velocity(space, random_unit_velocity(space, rng, a, b), a, b)
        curves.append(c)
        bv = body_velocity(c, times)
        # Ad(exp(-tY)) X_a stays in m_a; Ad(exp(-tY)) X_b = X_b
        lemma = max(lemma, float(np.max(alg.norm_B(bv.Ya - c.m_a.project(bv.Ya)))))
        tx_b = _adjoint_by_exp(c, times, [c.X_b])[0]
        lemma = max(lemma, float(np.max(alg.norm_B(tx_b - c.X_b))))
        speeds = np.einsum("ti,ij,tj->t", space.m.coords(bv.x_m), space.metric_gram, space.m.coords(bv.x_m))
        speed = max(speed, float(np.max(np.abs(speeds - speeds[0])) / speeds[0]))
        defect = max(defect, float(np.max(np.linalg.norm(defect_coords(c, times), axis=-1))))
        for t in rng.choice(times, size=min(koszul_z, t_samples), replace=False):
            z = random_m_vector(space, rng)
            t1, t2, t3 = koszul_terms(c, t, z)
            scale = koszul_scale(c, t, z)
            koszul_sum = max(koszul_sum, abs(t1 + t2 + t3) / scale if scale else abs(t1 + t2 + t3))
            koszul_t3 = max(koszul_t3, abs(t3) / scale if scale else abs(t3))
            u1, u2, u3 = koszul_terms_unreduced(c, t, z)
            ref = max(1.0, c.lambda_a, c.lambda_b)
            koszul_gap = max(koszul_gap, abs(u1 - t1) / ref, abs(u2 - t2) / ref, abs(u3 - t3) / ref)
        gap = float(np.max(np.abs(curve_point(c, times[:10]) - one_step_point(c, times[:10]))))
        orbit_gap = max(orbit_gap, gap)
        one_step_hits += gap <= tol
        if np.isclose(c.lambda_a, c.lambda_b, rtol=0, atol=0):
            one_step = max(one_step, gap)

    checks = [
        CheckResult("bracket_inclusion", inclusion, tol, note=f"[m{a + 1}, m{b + 1}] in m{a + 1}"),
        CheckResult("koszul_sum", koszul_sum, KOSZUL_TOL, note="relative to operand scale"),
        CheckResult("koszul_third_term", koszul_t3, KOSZUL_TOL, note="relative to operand scale"),
        CheckResult("koszul_unreduced", koszul_gap, tol, note="reduced vs direct metric pairings"),
        CheckResult("adjoint_preserves_m_a", lemma, tol),
        CheckResult("constant_speed", speed, 1e-10, note="relative drift"),
        CheckResult("geodesic_defect", defect, tol_defect),
    ]
    if oracle:
        v0s = np.array([space.m.coords(c.v0) for c in curves])
        g_ode, _ = integrate_at_times(space, v0s, oracle_times, step, tol_ode)
        worst = 0.0
        for ti, t in enumerate(oracle_times):
            for j, c in enumerate(curves):
                worst = max(worst, coset_distance(curve_point(c, t), g_ode[ti, j], space))
        checks.append(CheckResult("ode_oracle_coset", worst, tol_ode, note=f"RK4 step {step:g}"))
    if space.lambdas[a] == space.lambdas[b]:
        checks.append(CheckResult("one_step_degeneration", one_step, tol, note="lambda_a = lambda_b"))
    if bracket_inclusion_residual(space.split[a], space.split[b], Subspace.zero(alg)) <= tol:
        checks.append(CheckResult("one_step_degeneration_commuting", orbit_gap, tol, note="[m_a, m_b] = 0"))

    config = {
        "pair": [a + 1, b + 1],
        "lambdas": list(space.lambdas),
        "t_samples": t_samples,
        "koszul_z": koszul_z,
        "step": step,
        "oracle_times": list(oracle_times) if oracle else [],
        "tol_alg": tol,
        "tol_defect": tol_defect,
        "tol_ode": tol_ode,
        "one_step_coincidences": int(one_step_hits),
    }
    return VerificationReport(space.name, checks, seed=seed, trials=trials, config=config)
