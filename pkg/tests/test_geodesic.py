import numpy as np
import pytest

from twostep.catalog import build_preset, group_as_space, hopf_sphere, su2_berger
from twostep.decomposition import HomogeneousSpace, Subspace
from twostep.exceptions import ConditionViolated, InputError, NotInM, OutOfLogWindow, StepTooLarge
from twostep.geodesic import (
    TwoStepCurve,
    _adjoint_by_exp,
    body_velocity,
    coset_distance,
    curve_point,
    defect_coords,
    geodesic_defect,
    integrate_at_times,
    integrate_geodesic,
    koszul_scale,
    koszul_terms,
    koszul_terms_unreduced,
    lemma_residual,
    max_defect,
    one_step_point,
    random_m_vector,
    random_unit_velocity,
    trial_rng,
    verify_two_step,
)
from twostep.lie import u

from .conftest import E1, E2, E3

TOL = 1e-9
TIMES = np.linspace(0.0, 2 * np.pi, 100)


def random_curve(space, seed=0, trial=0, a=0, b=1):
    return TwoStepCurve.from_velocity(space, random_unit_velocity(space, trial_rng(seed, trial), a, b), a, b)


@pytest.fixture(scope="module")
def hopf2():
    return hopf_sphere(1, 2.0)


@pytest.fixture(scope="module")
def commuting_space():
    # U(2) as a group: m1 = su(2), m2 = centre, so [m1, m2] = 0
    alg = u(2)
    return group_as_space(alg, Subspace.span(alg, [[0, 0, 1, 1]]), 3.0, name="u2-group")


@pytest.fixture(scope="module")
def three_member_space():
    # U(2) as a group with split span{e1, e2} + span{e3} + centre
    alg = u(2)
    members = (Subspace.span(alg, np.eye(4)[:2]), Subspace.span(alg, [[0, 0, 1, -1]]),
               Subspace.span(alg, [[0, 0, 1, 1]]))
    return HomogeneousSpace(alg, Subspace.zero(alg), members, (1.0, 2.0, 3.0), name="u2-three")


# -- curve construction -------------------------------------------------------


def test_curve_exponents(hopf2):
    c = random_curve(hopf2)
    assert c.lam == 2.0
    assert np.allclose(c.X + c.Y, c.X_a + c.X_b)
    assert np.allclose(c.Y, -c.X_b)


def test_curve_rejects_vectors_outside_members(hopf2):
    m1, m2 = hopf2.split
    with pytest.raises(InputError):
        TwoStepCurve(hopf2, 0, 1, m2.basis[0], m2.basis[0])
    with pytest.raises(InputError):
        TwoStepCurve(hopf2, 0, 0, m1.basis[0], m1.basis[0])
    with pytest.raises(InputError):
        TwoStepCurve.from_velocity(hopf2, hopf2.k.basis[0] + m1.basis[0])


def test_curve_rejects_violated_inclusion():
    space = build_preset("flag-su:partition=1-1-1,i0=1,lambda=2")
    v = random_unit_velocity(space, trial_rng(0, 0))
    with pytest.raises(ConditionViolated):
        TwoStepCurve.from_velocity(space, v, 1, 0)


def test_curve_point_basics(hopf2):
    c = random_curve(hopf2)
    assert np.array_equal(curve_point(c, 0.0), np.eye(2))
    stack = curve_point(c, TIMES[:5])
    assert stack.shape == (5, 2, 2)
    assert np.allclose(stack[3], curve_point(c, TIMES[3]))


def test_round_metric_gives_one_parameter_orbit():
    space = hopf_sphere(1, 1.0)
    c = random_curve(space)
    gap = np.abs(curve_point(c, TIMES) - space.algebra.group_exp(c.X_a + c.X_b, TIMES)).max()
    assert gap <= 1e-12


def test_commuting_pair_gives_one_parameter_orbit(commuting_space):
    c = random_curve(commuting_space)
    assert np.abs(curve_point(c, TIMES) - one_step_point(c, TIMES)).max() <= TOL


def test_generic_two_step_curve_is_not_one_step(hopf2):
    c = random_curve(hopf2)
    assert np.abs(curve_point(c, TIMES) - one_step_point(c, TIMES)).max() > 1e-3


# -- body velocity ----------------------------------------------------------


def test_body_velocity_at_zero(hopf2):
    c = random_curve(hopf2)
    bv = body_velocity(c, 0.0)
    assert np.allclose(bv.w, c.X_a + c.X_b)
    assert np.allclose(bv.Ya, c.X_a)


def test_body_velocity_constant_for_round_metric():
    c = random_curve(hopf_sphere(1, 1.0))
    bv = body_velocity(c, TIMES)
    assert np.allclose(bv.Ya, c.X_a, atol=1e-14)


def test_hopf_Ya_rotates_with_constant_norm(hopf2):
    alg = hopf2.algebra
    m1, m2 = hopf2.split
    c = TwoStepCurve(hopf2, 0, 1, m1.basis[0], 0.7 * m2.basis[0])
    ts = np.linspace(0, 2 * np.pi, 50)
    ya = body_velocity(c, ts).Ya
    assert np.allclose(alg.norm_B(ya), alg.norm_B(c.X_a), atol=TOL)
    assert np.max(alg.norm_B(ya - m1.project(ya))) <= TOL
    assert np.max(alg.norm_B(ya - c.X_a)) > 0.1  # it genuinely rotates


@pytest.mark.parametrize("preset", ["hopf:n=2,lambda=0.5", "wallach-su3:l=1,lambda=5",
                                    "flag-su:partition=1-1-1-1,i0=3,lambda=2", "ksym-su:n=3,exp=0-1-2,k=4,lambda=2"])
def test_body_velocity_invariants(preset):
    space = build_preset(preset)
    alg = space.algebra
    for trial in range(5):
        c = random_curve(space, trial=trial)
        bv = body_velocity(c, TIMES)
        assert np.max(alg.norm_B(space.m.project(bv.w) - bv.x_m)) <= TOL
        assert np.max(alg.norm_B(bv.kappa)) <= TOL
        assert np.max(alg.norm_B(bv.Ya - c.m_a.project(bv.Ya))) <= TOL
        tx_b = _adjoint_by_exp(c, TIMES, [c.X_b])[0]
        assert np.max(alg.norm_B(tx_b - c.X_b)) <= TOL
        speed = np.einsum("ti,ij,tj->t", space.m.coords(bv.x_m), space.metric_gram, space.m.coords(bv.x_m))
        assert np.ptp(speed) / speed[0] <= 1e-10


def test_w_dot_matches_finite_difference(hopf2):
    c = random_curve(hopf2, trial=3)
    h = 1e-5
    for t in (0.3, 1.7, 4.0):
        fd = (body_velocity(c, t + h).w - body_velocity(c, t - h).w) / (2 * h)
        assert np.allclose(body_velocity(c, t).w_dot, fd, atol=1e-8)


# -- Koszul terms -------------------------------------------------------------


@pytest.mark.parametrize("preset", ["hopf:n=1,lambda=2", "wallach-su3:l=2,lambda=2", "su2-berger:lambda=0.3"])
def test_koszul_terms_cancel(preset):
    space = build_preset(preset)
    for trial in range(5):
        rng = trial_rng(12, trial)
        c = random_curve(space, seed=11, trial=trial)
        for t in rng.uniform(0, 2 * np.pi, 5):
            z = random_m_vector(space, rng)
            t1, t2, t3 = koszul_terms(c, t, z)
            scale = koszul_scale(c, t, z)
            assert abs(t1 + t2 + t3) <= 1e-12 * scale
            assert abs(t3) <= 1e-12 * scale


def test_koszul_terms_match_unreduced_pairings():
    space = build_preset("flag-su:partition=1-1-1,i0=1,lambda=3")
    rng = np.random.default_rng(99)
    c = random_curve(space, seed=5)
    for t in (0.0, 0.9, 3.3):
        z = random_m_vector(space, rng)
        reduced = np.array(koszul_terms(c, t, z))
        assert np.allclose(koszul_terms_unreduced(c, t, z), reduced, atol=1e-12)
        assert abs(reduced[1]) > 1e-6  # the comparison is not vacuous


def test_koszul_terms_round_metric():
    space = hopf_sphere(1, 1.0)
    c = random_curve(space)
    t1, t2, _ = koszul_terms(c, 1.3, random_m_vector(space, trial_rng(0, 9)))
    assert t1 == 0.0 and t2 == 0.0


def test_koszul_terms_vanish_for_orthogonal_Z(hopf2):
    alg = hopf2.algebra
    c = random_curve(hopf2)
    t = 0.8
    br = hopf2.m.project(alg.bracket(body_velocity(c, t).Ya, c.X_b))
    z = random_m_vector(hopf2, trial_rng(1, 1))
    z -= alg.B(z, br) / alg.B(br, br) * br
    assert np.allclose(koszul_terms(c, t, z), 0.0, atol=1e-14)


def test_koszul_terms_reject_k_vector(hopf2):
    with pytest.raises(NotInM):
        koszul_terms(random_curve(hopf2), 0.5, hopf2.k.basis[0])


# -- geodesic defect ----------------------------------------------------------


def test_defect_round_metric():
    space = build_preset("wallach-su3:l=3,lambda=1")
    c = random_curve(space)
    assert np.max(np.linalg.norm(defect_coords(c, [0.0, 0.5, 1.0, 2.0]), axis=-1)) <= 10 * TOL


@pytest.mark.parametrize("preset", ["hopf:n=1,lambda=2", "su2-berger:lambda=4", "flag-su:partition=1-1-1,i0=2,lambda=5",
                                    "wallach-su3:l=3,lambda=0.5"])
def test_defect_of_valid_curves(preset):
    space = build_preset(preset)
    for trial in range(5):
        assert max_defect(random_curve(space, trial=trial), TIMES) <= 1e-8


def test_defect_detects_swapped_roles():
    space = build_preset("flag-su:partition=1-1-1,i0=1,lambda=2")
    worst = 0.0
    for trial in range(20):
        v = random_unit_velocity(space, trial_rng(0, trial))
        c = TwoStepCurve.from_velocity(space, v, 1, 0, check=False)
        worst = max(worst, max_defect(c, TIMES))
    assert worst > 1e-3


def test_defect_as_algebra_vector(hopf2):
    c = random_curve(hopf2)
    d = geodesic_defect(c, TIMES[:3])
    assert d.shape == (3, hopf2.algebra.dim)
    assert np.max(np.abs(hopf2.m.project(d) - d)) <= 1e-14


# -- ODE oracle ---------------------------------------------------------------


def test_oracle_naturally_reductive_is_exponential():
    space = build_preset("wallach-su3:l=2,lambda=1")
    v0 = random_unit_velocity(space, trial_rng(2, 0))
    for t, g, x in integrate_geodesic(space, v0, 2.0, stride=0.5):
        assert coset_distance(space.algebra.group_exp(v0, t), g, space) <= 1e-6
        assert np.allclose(x, v0, atol=1e-12)


def test_oracle_conserves_speed(hopf2):
    v0 = random_unit_velocity(hopf2, trial_rng(3, 0))
    samples = integrate_geodesic(hopf2, v0, 2.0, step=1e-3, stride=0.1)
    assert len(samples) == 21 and samples[-1][0] == pytest.approx(2.0)
    for _, _, x in samples:
        xc = hopf2.to_m(x)
        assert abs(xc @ hopf2.metric_gram @ xc - 1.0) <= 1e-8


def test_oracle_matches_closed_form(hopf2):
    c = random_curve(hopf2, trial=4)
    g, _ = integrate_at_times(hopf2, hopf2.m.coords(c.v0), [0.5, 1.0, 2.0])
    for gt, t in zip(g[:, 0], (0.5, 1.0, 2.0)):
        assert coset_distance(curve_point(c, t), gt, hopf2) <= 1e-6


def test_oracle_is_sensitive_to_lambda():
    c = random_curve(hopf_sphere(1, 2.0))
    wrong = hopf_sphere(1, 3.0)
    g, _ = integrate_at_times(wrong, wrong.m.coords(c.v0), [2.0])
    assert coset_distance(curve_point(c, 2.0), g[0, 0], wrong) > 1e-3


def test_oracle_fourth_order():
    space = su2_berger(4.0)
    c = random_curve(space)
    errors = []
    for h in (0.2, 0.1, 0.05):
        g, _ = integrate_at_times(space, space.m.coords(c.v0), [2.0], h, tol_ode=1e-2)
        errors.append(coset_distance(curve_point(c, 2.0), g[0, 0], space))
    for coarse, fine in zip(errors, errors[1:]):
        assert 12 <= coarse / fine <= 20


def test_oracle_step_too_large(hopf2):
    with pytest.raises(StepTooLarge):
        integrate_at_times(hopf2, hopf2.m.coords(random_curve(hopf2).v0), [2.0], step=1.0)


def test_oracle_input_validation(hopf2):
    v = hopf2.m.basis[0]
    with pytest.raises(InputError):
        integrate_geodesic(hopf2, v, 1.0, step=0.0)
    with pytest.raises(InputError):
        integrate_at_times(hopf2, hopf2.m.coords(v), [1.0, 0.5])


# -- coset distance -----------------------------------------------------------


def test_coset_distance_examples(su2, rng):
    space = HomogeneousSpace(su2, Subspace.span(su2, [E3]), (Subspace.span(su2, [E1, E2]),), (1.0,))
    g = su2.group_exp(rng.standard_normal(3))
    assert coset_distance(g, g, space) <= 1e-14
    assert coset_distance(g, g @ su2.group_exp(E3, 0.2), space) <= TOL
    assert coset_distance(np.eye(2), su2.group_exp(E1, 0.1), space) == pytest.approx(0.1 * np.sqrt(8))
    with pytest.raises(OutOfLogWindow):
        coset_distance(np.eye(2), su2.group_exp(E2, 1.0), space)


# -- Ad(exp m_b) preserves m_a ---------------------------------------------------


@pytest.mark.parametrize("preset", ["hopf:n=2,lambda=2", "wallach-su3:l=1,lambda=2",
                                    "flag-su:partition=1-1-1-1,i0=1,lambda=2"])
def test_adjoint_preserves_m_a(preset):
    space = build_preset(preset)
    assert lemma_residual(space, 0, 1, np.random.default_rng(0)) <= TOL


def test_adjoint_leaves_m_b_for_swapped_roles():
    space = build_preset("flag-su:partition=1-1-1,i0=1,lambda=2")
    assert lemma_residual(space, 1, 0, np.random.default_rng(0)) > 1e-3


# -- full verification --------------------------------------------------------


def test_verify_hopf():
    report = verify_two_step(hopf_sphere(1, 2.0), trials=50, seed=7)
    assert report.passed, [str(c) for c in report.failing()]
    assert report.check("geodesic_defect").max_residual <= 1e-8
    assert report.check("ode_oracle_coset").max_residual <= 1e-6
    assert report.assumed_connected


def test_verify_group_berger():
    assert verify_two_step(su2_berger(3.0), trials=10).passed


def test_verify_round_metric_adds_degeneration_check():
    report = verify_two_step(hopf_sphere(1, 1.0), trials=5, oracle=False)
    assert report.passed
    assert report.check("one_step_degeneration").max_residual <= 1e-12
    assert report.config["one_step_coincidences"] == 5


def test_verify_commuting_pair(commuting_space):
    report = verify_two_step(commuting_space, trials=5)
    assert report.passed
    assert report.check("one_step_degeneration_commuting").max_residual <= TOL


def test_verify_three_members_pairwise(three_member_space):
    for b in (1, 2):
        report = verify_two_step(three_member_space, trials=5, a=0, b=b)
        assert report.passed, [str(c) for c in report.failing()]
        assert report.config["pair"] == [1, b + 1]
    with pytest.raises(ConditionViolated):
        verify_two_step(three_member_space, trials=2, a=1, b=0)


def test_verify_rejects_degenerate_split():
    with pytest.raises(ConditionViolated, match="degenerate"):
        verify_two_step(build_preset("ksym-su:n=3,exp=0-1-2,k=2,lambda=2"), trials=1)


def test_verify_is_deterministic(hopf2):
    first = verify_two_step(hopf2, trials=4, seed=123).to_json()
    assert verify_two_step(hopf2, trials=4, seed=123).to_json() == first
    assert verify_two_step(hopf2, trials=4, seed=124).to_json() != first


def test_trial_streams_are_independent():
    a = trial_rng(5, 0).standard_normal(4)
    assert np.array_equal(a, trial_rng(5, 0).standard_normal(4))
    assert not np.array_equal(a, trial_rng(5, 1).standard_normal(4))
