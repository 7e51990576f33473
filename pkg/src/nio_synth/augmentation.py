"""Augmentation with a designer-chosen artificial system for p*ell > n.

When the output window overdetermines the state (p*ell > n), the plant is run
in parallel with an artificial system ``x_a+ = A_a x_a + B_a u`` whose output
``C_a x_a`` is added to the measurements.  The augmented plant has state
dimension p*ell, so the standard pipeline applies to the augmented data; the
artificial system then becomes part of the controller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auxiliary import AuxShift
from .consistency import build_set
from .errors import NotContractive, NotNeeded
from .experiment import (
    DataMatrices,
    ExperimentLog,
    LogTruth,
    NoiseBound,
    UniformLaw,
    collect,
    energy_bound,
)
from .lti import StateSpaceModel
from .synthesis import DEFAULT_VARIANT, DynController, SynthesisResult, make_controller, synthesize


@dataclass(frozen=True)
class ArtificialSystem:
    A_a: np.ndarray
    B_a: np.ndarray
    C_a: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A_a, dtype=float))
        B = np.atleast_2d(np.asarray(self.B_a, dtype=float))
        C = np.atleast_2d(np.asarray(self.C_a, dtype=float))
        na = A.shape[0]
        if A.shape != (na, na) or na < 1:
            raise ValueError(f"A_a must be square with n_a >= 1, got {A.shape}")
        if B.shape[0] != na or C.shape[1] != na:
            raise ValueError(f"B_a {B.shape} / C_a {C.shape} do not match n_a={na}")
        object.__setattr__(self, "A_a", A)
        object.__setattr__(self, "B_a", B)
        object.__setattr__(self, "C_a", C)

    @property
    def n_a(self) -> int:
        return self.A_a.shape[0]

    @property
    def m(self) -> int:
        return self.B_a.shape[1]

    @property
    def p(self) -> int:
        return self.C_a.shape[0]

    def to_dict(self) -> dict:
        return {"A_a": self.A_a.tolist(), "B_a": self.B_a.tolist(), "C_a": self.C_a.tolist()}


@dataclass(frozen=True)
class AugmentedSetup:
    artificial: ArtificialSystem
    ell: int
    model: StateSpaceModel  # block-diagonal augmented plant
    dya_bar: float


def default_artificial(n: int, p: int, m: int, ell: int, style: str = "ones", seed: int | None = None) -> ArtificialSystem:
    """Artificial system of dimension p*ell - n.

    'ones': A_a = 0 and all-ones B_a, C_a.  'random-contractive': Gaussian
    entries with A_a rescaled so that ||A_a|| <= 0.5.
    """
    na = p * ell - n
    if na == 0:
        raise NotNeeded(f"p*ell = n = {n}; no augmentation needed")
    if na < 0:
        raise ValueError(f"p*ell = {p * ell} < n = {n}: ell is below the observability index")
    if style == "ones":
        return ArtificialSystem(np.zeros((na, na)), np.ones((na, m)), np.ones((p, na)))
    if style == "random-contractive":
        rng = np.random.default_rng(seed)
        A = rng.standard_normal((na, na))
        nrm = np.linalg.norm(A, 2)
        if nrm > 0.5:
            A *= 0.5 / nrm
        return ArtificialSystem(A, rng.standard_normal((na, m)), rng.standard_normal((p, na)))
    raise ValueError(f"unknown artificial-system style {style!r}")


def artificial_noise_bound(art: ArtificialSystem, du_bar: float) -> float:
    """Amplitude bound on ``C_a`` times the artificial state driven by input noise."""
    a = float(np.linalg.norm(art.A_a, 2))
    if a >= 1:
        raise NotContractive(f"||A_a|| = {a:.4g} >= 1")
    return float(np.linalg.norm(art.C_a, 2) * np.linalg.norm(art.B_a, 2) * du_bar / (1 - a))


def augment_model(model: StateSpaceModel, art: ArtificialSystem) -> StateSpaceModel:
    """Parallel connection: blockdiag(A, A_a), [B; B_a], [C, C_a]."""
    if art.m != model.m or art.p != model.p:
        raise ValueError("artificial system dimensions do not match the plant")
    n, na = model.n, art.n_a
    A = np.block([[model.A, np.zeros((n, na))], [np.zeros((na, n)), art.A_a]])
    return StateSpaceModel(A, np.vstack([model.B, art.B_a]), np.hstack([model.C, art.C_a]))


def augmented_setup(model: StateSpaceModel, art: ArtificialSystem, ell: int, du_bar: float) -> AugmentedSetup:
    return AugmentedSetup(art, ell, augment_model(model, art), artificial_noise_bound(art, du_bar))


def _artificial_states(art: ArtificialSystem, u: np.ndarray) -> np.ndarray:
    xa = np.zeros((len(u), art.n_a))
    for k in range(len(u) - 1):
        xa[k + 1] = art.A_a @ xa[k] + art.B_a @ u[k]
    return xa


def augment_log(log: ExperimentLog, art: ArtificialSystem) -> ExperimentLog:
    """Add the artificial output to a plant log (artificial state from 0, driven by u_m).

    With ground truth, the truth of the augmented log follows the pushed-noise
    view: the artificial state driven by the true input, and the difference
    absorbed into the output noise ``d_y + d_ya``.
    """
    if log.u_meas.shape[1] != art.m or log.y_meas.shape[1] != art.p:
        raise ValueError("artificial system dimensions do not match the log")
    xa_m = _artificial_states(art, log.u_meas)
    y_aug = log.y_meas + xa_m @ art.C_a.T
    if log.truth is None:
        return ExperimentLog(log.u_meas, y_aug)
    tr = log.truth
    xa = _artificial_states(art, log.u_true)
    y_true = tr.y_true + xa @ art.C_a.T
    d_ya = (xa_m - xa) @ art.C_a.T
    truth = LogTruth(np.concatenate([tr.x0, np.zeros(art.n_a)]), tr.d_u, tr.d_y + d_ya, y_true)
    return ExperimentLog(log.u_meas, y_aug, truth)


def pushed_noise_outputs(model: StateSpaceModel, art: ArtificialSystem, log: ExperimentLog) -> np.ndarray:
    """Measured augmented outputs rebuilt from the augmented plant with pushed noise.

    Simulates ``x_aug+ = A_aug x_aug + B_aug (u_m - d_u)`` and returns
    ``C_aug x_aug + d_y + d_ya`` where ``d_ya(k) = sum_j C_a A_a^(k-j-1) B_a d_u(j)``.
    Needs ground truth.
    """
    if log.truth is None:
        raise ValueError("log carries no ground truth")
    tr = log.truth
    aug = augment_model(model, art)
    u = log.u_true
    x = np.zeros((len(u), aug.n))
    x[0] = np.concatenate([tr.x0[:model.n], np.zeros(art.n_a)])
    for k in range(len(u) - 1):
        x[k + 1] = aug.A @ x[k] + aug.B @ u[k]
    d_ya = np.zeros((len(u), art.p))
    for k in range(len(u)):
        for j in range(k):
            d_ya[k] += art.C_a @ np.linalg.matrix_power(art.A_a, k - j - 1) @ art.B_a @ tr.d_u[j]
    return x @ aug.C.T + tr.d_y + d_ya


def collect_augmented(
    model: StateSpaceModel,
    art: ArtificialSystem,
    ell: int,
    num_experiments: int,
    samples_per_experiment: int,
    input_law,
    noise_law,
    rng_seed: int,
    x0_law=UniformLaw(1.0),
) -> list[ExperimentLog]:
    """Plant experiments as in ``collect``, each run in parallel with ``art``."""
    logs = collect(model, ell, num_experiments, samples_per_experiment, input_law, noise_law, rng_seed, x0_law)
    return [augment_log(lg, art) for lg in logs]


def augmented_energy_bound(
    dy_bar: float, du_bar: float, dya_bar: float, ell: int, n_cols: int, scale: float = 1.0, *, p: int, m: int
) -> NoiseBound:
    """Energy bound with the output amplitude raised to dy_bar + dya_bar."""
    if dya_bar < 0:
        raise ValueError("dya_bar must be non-negative")
    return energy_bound(dy_bar + dya_bar, du_bar, ell, n_cols, scale, p=p, m=m)


def synthesize_augmented(
    aug_data: DataMatrices,
    theta_aug: NoiseBound,
    shift: AuxShift,
    art: ArtificialSystem,
    variant: str = DEFAULT_VARIANT,
    epsilon: float | None = None,
) -> tuple[DynController, SynthesisResult]:
    """Standard pipeline on augmented data; the controller embeds ``art``."""
    cs = build_set(aug_data, theta_aug, shift)
    result = synthesize(cs, shift, variant, epsilon)
    return make_controller(result, shift, art), result

