import numpy as np
import pytest

from nio_synth.augmentation import default_artificial
from nio_synth.auxiliary import aux_shift, aux_system
from nio_synth.consistency import build_set, from_quadratic
from nio_synth.errors import Infeasible
from nio_synth.experiment import NoiseLaw, UniformLaw, assemble, collect, energy_bound
from nio_synth.lti import StateSpaceModel
from nio_synth.plants import batch_reactor
from nio_synth.sdp import LmiConstraint, LmiProblem, Term, VariableSpec, solve_feasibility
from nio_synth.synthesis import (
    DynController,
    assemble_lmi,
    default_epsilon,
    gain_from,
    make_controller,
    synthesize,
)
from nio_synth.verify import report, spectral_radius

SHIFT = aux_shift(2, 2, 2)


def br_set(seed=0, noise=0.01, scale=2.0):
    logs = collect(batch_reactor(), 2, 10, 4, UniformLaw(20.0), NoiseLaw.uniform(noise, noise), seed, UniformLaw(10.0))
    d = assemble(logs, 2)
    return build_set(d, energy_bound(noise, noise, 2, d.n_cols, scale, p=2, m=2), SHIFT)


def test_lmi_sizes():
    cs = from_quadratic(np.eye(2), np.zeros((1, 2)), -np.eye(1))
    prob = assemble_lmi(cs, aux_shift(1, 1, 1))
    assert prob.constraints[0].block_sizes == [2, 2, 2]
    big = assemble_lmi(br_set(), SHIFT, variant="eq18")
    assert big.constraints[0].constant.shape == (24, 24)


def test_unknown_variant():
    with pytest.raises(ValueError):
        assemble_lmi(br_set(), SHIFT, variant="nope")


def test_mismatched_shift():
    with pytest.raises(ValueError):
        assemble_lmi(br_set(), aux_shift(2, 1, 2))


@pytest.mark.parametrize("variant", ["zqa", "eq18"])
def test_batch_reactor_feasible(variant):
    res = synthesize(br_set(), SHIFT, variant)
    assert res.K.shape == (2, 8) and res.variant == variant
    assert res.margin >= default_epsilon(br_set()) * (1 - 1e-9)
    ctrl = make_controller(res, SHIFT)
    assert ctrl.order == 8
    assert report(batch_reactor(), ctrl).spectral_radius < 1


def test_balance_is_a_congruence():
    cs = br_set(1)
    for variant in ("zqa", "eq18"):
        for balance in (True, False):
            res = synthesize(cs, SHIFT, variant, balance=balance)
            assert report(batch_reactor(), make_controller(res, SHIFT)).schur


def test_oversized_bound_infeasible():
    cs = br_set(scale=20.0)
    for variant in ("zqa", "eq18"):
        with pytest.raises(Infeasible):
            synthesize(cs, SHIFT, variant)


def test_noise_free_matches_classical_lyapunov(rng):
    # p*ell = n = 2, single-input plant; with exact data the set is a point
    model = StateSpaceModel([[1.2, 1.0], [0.0, 0.9]], [[0.0], [1.0]], [[1.0, 0.0]])
    shift = aux_shift(1, 1, 2)
    logs = collect(model, 2, 1, 20, UniformLaw(1.0), NoiseLaw.uniform(0, 0), 0)
    d = assemble(logs, 2)
    cs = build_set(d, energy_bound(0, 0, 2, d.n_cols, p=1, m=1), shift)
    res = synthesize(cs, shift)
    # classical state-feedback LMI on the known auxiliary matrices
    A = aux_system(model, 2).A_aux
    Bb = shift.Bb
    prob = LmiProblem(
        [VariableSpec("P", (4, 4), symmetric=True, positive_definite=True), VariableSpec("Y", (1, 4))],
        [LmiConstraint([4, 4], np.zeros((8, 8)), [Term(0, 0, "P", coef=-1.0), Term(0, 1, "P", left=A),
                                                 Term(0, 1, "Y", left=Bb), Term(1, 1, "P", coef=-1.0)])],
    )
    solve_feasibility(prob)
    assert spectral_radius(A + Bb @ res.K) < 1


def test_gain_from():
    P = np.array([[2.0, 0.5], [0.5, 1.0]])
    Y = np.array([[1.0, -1.0]])
    K, cond = gain_from(P, Y)
    assert np.allclose(K @ P, Y)
    assert cond == pytest.approx(np.linalg.cond(P))


def test_zero_gain_controller_is_shift():
    ctrl = make_controller(np.zeros((2, 8)), SHIFT)
    assert np.array_equal(ctrl.Ac, SHIFT.F)
    assert not np.linalg.matrix_power(ctrl.Ac, 2).any()
    assert np.array_equal(ctrl.Bc, SHIFT.L) and not ctrl.Cc.any()


def test_augmented_controller_layout(rng):
    art = default_artificial(3, 2, 2, 2)
    K = rng.standard_normal((2, 8))
    ctrl = make_controller(K, SHIFT, art)
    assert ctrl.augmented and ctrl.order == 9
    assert ctrl.Ac.shape == (9, 9)
    assert np.array_equal(ctrl.Ac[:1, 1:], art.B_a @ K)
    assert np.array_equal(ctrl.Ac[1:, :1], SHIFT.L @ art.C_a)
    assert not ctrl.Bc[0].any() and not ctrl.Cc[:, 0].any()


def test_make_controller_shape_check():
    with pytest.raises(ValueError):
        make_controller(np.zeros((2, 7)), SHIFT)
    assert isinstance(make_controller(np.zeros((2, 8)), SHIFT), DynController)
