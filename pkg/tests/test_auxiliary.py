import numpy as np
import pytest

from conftest import random_system
from nio_synth.auxiliary import (
    aux_shift,
    aux_system,
    forced_response_aux,
    forced_response_formula,
    io_to_aux_matrix,
    lift_initial_condition,
    reachability_report,
    simulate_aux,
    stack_window,
)
from nio_synth.lti import StateSpaceModel, io_parameter, simulate
from nio_synth.plants import batch_reactor, small_plant


def test_shift_small_case():
    s = aux_shift(1, 1, 2)
    F = np.zeros((4, 4))
    F[0, 1] = F[2, 3] = 1
    assert np.array_equal(s.F, F)
    assert np.array_equal(s.L.ravel(), [0, 1, 0, 0])
    assert np.array_equal(s.Bb.ravel(), [0, 0, 0, 1])


def test_shift_shapes_and_invariants():
    s = aux_shift(2, 2, 2)
    assert (s.F.shape, s.L.shape, s.Bb.shape) == ((8, 8), (8, 2), (8, 2))
    for p, m, ell in [(1, 1, 1), (2, 3, 2), (3, 1, 4)]:
        s = aux_shift(p, m, ell)
        assert not np.linalg.matrix_power(s.F, ell).any()
        assert not (s.L.T @ s.F).any() and not (s.Bb.T @ s.F).any()


@pytest.mark.parametrize("p,m,ell", [(1, 1, 3), (2, 1, 2), (2, 3, 4)])
def test_shift_moves_blocks_up(p, m, ell, rng):
    s = aux_shift(p, m, ell)
    v = rng.standard_normal(s.dim)
    ys = v[:p * ell].reshape(ell, p)
    us = v[p * ell:].reshape(ell, m)
    expect = np.concatenate([np.vstack([ys[1:], np.zeros((1, p))]).ravel(), np.vstack([us[1:], np.zeros((1, m))]).ravel()])
    assert np.array_equal(s.F @ v, expect)


def test_shift_rejects_zero_dims():
    with pytest.raises(ValueError):
        aux_shift(0, 1, 1)


def test_aux_scalar():
    aux = aux_system(StateSpaceModel([[0.4]], [[3.0]], [[1.0]]), 1)
    assert np.allclose(aux.A_aux, [[0.4, 3.0], [0, 0]])
    assert np.array_equal(aux.Bb.ravel(), [0, 1])


def test_aux_batch_reactor_rows():
    aux = aux_system(batch_reactor(), 2)
    A = aux.A_aux
    assert A.shape == (8, 8)
    assert np.allclose(A[2:4], io_parameter(batch_reactor(), 2).Z)
    assert not A[6:8].any()
    # the remaining rows are plain shift rows
    for r in (0, 1, 4, 5):
        row = A[r]
        assert set(np.unique(row)) <= {0.0, 1.0} and row.sum() == 1


def test_bd_matches_definition():
    aux = aux_system(batch_reactor(), 2)
    assert np.allclose(aux.Bd, aux.shift.L @ np.hstack([np.eye(2), -aux.Z]))


def test_lift_zero_and_scalar():
    assert not lift_initial_condition(batch_reactor(), 2, np.zeros(4), np.zeros(4)).any()
    xi = lift_initial_condition(StateSpaceModel([[0.9]], [[1.0]], [[1.0]]), 1, [2.5], [-1.0])
    assert np.allclose(xi, [2.5, -1.0])


def test_lift_matches_simulation(rng):
    model = random_system(rng, 4, 2, 2)
    x0, u = rng.standard_normal(4), rng.standard_normal((6, 2))
    _, y = simulate(model, x0, u)
    xi = lift_initial_condition(model, 2, x0, u[:2])
    assert np.allclose(xi, stack_window(y, u, 2, 2), atol=1e-10)
    traj = simulate_aux(aux_system(model, 2), xi, u[2:])
    for j in range(len(traj)):
        assert np.allclose(traj[j], stack_window(y, u, 2 + j, 2), atol=1e-9)


def test_lift_rejects_wrong_window():
    with pytest.raises(ValueError):
        lift_initial_condition(batch_reactor(), 2, np.zeros(4), np.zeros(3))


def test_reachability_report_cases():
    br = reachability_report(batch_reactor(), 2)
    assert br["dim_reach_aux"] == 8 and br["lemma1_holds"] and br["lemma2_consistent"]
    sp = reachability_report(small_plant(), 2)
    assert sp["dim_reach_aux"] < 8 and sp["lemma1_holds"] and sp["lemma2_consistent"]
    sc = reachability_report(StateSpaceModel([[0.5]], [[2.0]], [[1.0]]), 1)
    assert sc["dim_reach_aux"] == 2 and sc["lemma2_consistent"]


def test_reachability_report_unreachable_plant():
    model = StateSpaceModel(np.diag([0.5, 0.7]), [[1.0], [0.0]], [[1.0, 1.0]])
    rep = reachability_report(model, 2)
    assert rep["not_applicable"] and rep["lemma2_consistent"] is None


def test_io_to_aux_matrix_shape():
    H = io_to_aux_matrix(batch_reactor(), 2)
    assert H.shape == (8, 8)
    assert np.array_equal(H[4:, 4:], np.eye(4)) and not H[4:, :4].any()


def test_forced_response_zero():
    aux = aux_system(batch_reactor(), 2)
    assert not forced_response_aux(aux, np.zeros((5, 2))).any()
    assert not forced_response_formula(batch_reactor(), 2, np.zeros((5, 2))).any()


def test_forced_response_early_impulse():
    model = batch_reactor()
    v = np.zeros((4, 2))
    v[0] = [1.0, -2.0]
    xi = forced_response_formula(model, 2, v)
    # at k = 1 the impulse sits in the newest input slot; the output half is T vwin
    assert np.allclose(xi[1, 6:], [1.0, -2.0]) and not xi[1, 4:6].any()
    T = np.zeros((4, 4))
    T[2:4, 0:2] = model.C @ model.B
    assert np.allclose(xi[1, :4], T @ xi[1, 4:])
    assert np.allclose(xi, forced_response_aux(aux_system(model, 2), v), atol=1e-12)


def test_forced_response_long_run(rng):
    model = random_system(rng, 5, 2, 3, spectral_radius=0.95)
    v = rng.standard_normal((50, 2))
    a = forced_response_aux(aux_system(model, 2), v)
    b = forced_response_formula(model, 2, v)
    assert np.max(np.abs(a - b)) <= 1e-9 * max(1.0, np.abs(b).max())
