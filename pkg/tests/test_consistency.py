import numpy as np
import pytest

from nio_synth.auxiliary import aux_shift
from nio_synth.consistency import (
    build_set,
    contains,
    contains_quadratic,
    eliminate_check,
    from_parts,
    from_quadratic,
    from_upsilon,
    radius,
    sample,
    sample_upsilon,
)
from nio_synth.errors import Assumption2Violated, NoiseBoundViolated
from nio_synth.experiment import NoiseBound, NoiseLaw, UniformLaw, assemble, collect, energy_bound
from nio_synth.lti import io_parameter
from nio_synth.plants import batch_reactor

SHIFT = aux_shift(2, 2, 2)


def br_set(seed=0, noise=0.01, scale=2.0):
    logs = collect(batch_reactor(), 2, 10, 4, UniformLaw(20.0), NoiseLaw.uniform(noise, noise), seed, UniformLaw(10.0))
    d = assemble(logs, 2)
    return d, build_set(d, energy_bound(noise, noise, 2, d.n_cols, scale, p=2, m=2), SHIFT)


def test_noise_free_singleton():
    _, cs = br_set(noise=0.0)
    assert np.allclose(cs.Zcen, io_parameter(batch_reactor(), 2).Z, atol=1e-8)
    assert np.linalg.norm(cs.Qcal, 2) < 1e-8
    assert radius(cs) < 1e-8


def test_true_parameter_inside():
    Z = io_parameter(batch_reactor(), 2).Z
    for seed in range(10):
        _, cs = br_set(seed)
        assert contains(cs, Z) and contains_quadratic(cs, Z)


def test_theta_too_large():
    logs = collect(batch_reactor(), 2, 10, 4, UniformLaw(20.0), NoiseLaw.uniform(0.01, 0.01), 0, UniformLaw(10.0))
    d = assemble(logs, 2)
    with pytest.raises(Assumption2Violated) as info:
        build_set(d, NoiseBound(1e8 * np.eye(10), 2, 2, 2), SHIFT)
    assert info.value.min_eig < 0


def test_generic_and_svd_routes_agree():
    d, cs = br_set(3)
    g = from_quadratic(cs.Acal, cs.Bcal, cs.Ccal)
    assert np.allclose(g.Zcen, cs.Zcen, atol=1e-8)
    assert np.allclose(g.Qcal, cs.Qcal, atol=1e-8 * max(1, np.abs(cs.Qcal).max()))
    # a bound that is not a multiple of the identity takes the generic route
    th = energy_bound(0.01, 0.01, 2, d.n_cols, 2.0, p=2, m=2).Theta.copy()
    th[0, 0] *= 1.5
    assert build_set(d, NoiseBound(th, 2, 2, 2), SHIFT).Qcal.shape == (2, 2)


def test_from_parts_roundtrip():
    _, cs = br_set(1)
    again = from_parts(cs.Acal, cs.Bcal, cs.Ccal, cs.Zcen, cs.Qcal, cs.cancel_scale)
    assert np.array_equal(again.Zcen, cs.Zcen)
    assert np.allclose(again.Acal_inv_sqrt, cs.Acal_inv_sqrt, rtol=1e-8, atol=1e-12)


def test_empty_set_detected():
    with pytest.raises(NoiseBoundViolated):
        from_quadratic(np.eye(2), np.zeros((1, 2)), np.eye(1))


def test_contains_basic():
    _, cs = br_set(2)
    assert contains(cs, cs.Zcen)
    assert not contains(cs, cs.Zcen + 1e3)
    assert not contains_quadratic(cs, cs.Zcen + 1e3)


def test_sampling(rng):
    _, cs = br_set(4)
    Us = sample_upsilon(2, 8, 40, rng)
    assert not Us[0].any()
    norms = [np.linalg.norm(U, 2) for U in Us]
    assert np.allclose(norms[1:11], 1.0) and max(norms) <= 1 + 1e-12
    assert np.array_equal(from_upsilon(cs, Us[0]), cs.Zcen)
    r = radius(cs)
    for Z in sample(cs, 100, rng):
        assert contains(cs, Z)
        assert np.linalg.norm(Z - cs.Zcen, 2) <= r * (1 + 1e-9)
    with pytest.raises(ValueError):
        sample_upsilon(2, 8, 0, rng)


def test_singleton_samples_collapse(rng):
    _, cs = br_set(noise=0.0)
    for Z in sample(cs, 10, rng):
        assert np.allclose(Z, cs.Zcen, atol=1e-8)


def test_radius_values():
    cs = from_quadratic(np.eye(3), np.zeros((2, 3)), -4 * np.eye(2))
    assert radius(cs) == pytest.approx(2.0)
    z = from_quadratic(np.eye(3), np.zeros((2, 3)), np.zeros((2, 2)))
    assert radius(z) == 0


def test_eliminate_check(rng):
    F = rng.standard_normal((4, 3))
    D = rng.standard_normal((3, 2))
    D /= 1.1 * np.linalg.norm(D, 2)
    assert eliminate_check(F @ D, F, np.eye(3))
    assert eliminate_check(np.zeros((4, 2)), F, np.eye(3))
    assert not eliminate_check(np.eye(2), np.zeros((2, 2)), np.eye(2))
