"""Noisy data collection and assembly of the data matrices.

An experiment applies a measured input ``u_m(k)``; the plant actually receives
``u(k) = u_m(k) - d_u(k)`` and the sensor reports ``y_m(k) = C x(k) + d_y(k)``.
Data matrices are built from sliding ell-long windows that never straddle two
experiments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lti import StateSpaceModel


@dataclass(frozen=True)
class UniformLaw:
    """i.i.d. entries uniform in [-bound, bound]."""

    bound: float

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.bound == 0:
            return np.zeros(shape)
        return rng.uniform(-self.bound, self.bound, size=shape)


@dataclass(frozen=True)
class TruncatedGaussianLaw:
    """Gaussian entries clipped to [-bound, bound]."""

    sigma: float
    bound: float

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.bound == 0 or self.sigma == 0:
            return np.zeros(shape)
        return np.clip(rng.normal(0.0, self.sigma, size=shape), -self.bound, self.bound)


@dataclass(frozen=True)
class NoiseLaw:
    du: UniformLaw | TruncatedGaussianLaw
    dy: UniformLaw | TruncatedGaussianLaw

    @classmethod
    def uniform(cls, du_bar: float, dy_bar: float) -> "NoiseLaw":
        return cls(UniformLaw(du_bar), UniformLaw(dy_bar))


@dataclass(frozen=True)
class LogTruth:
    x0: np.ndarray
    d_u: np.ndarray
    d_y: np.ndarray
    y_true: np.ndarray


@dataclass(frozen=True)
class ExperimentLog:
    u_meas: np.ndarray  # (T+1, m)
    y_meas: np.ndarray  # (T+1, p)
    truth: Optional[LogTruth] = None

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u_meas, dtype=float))
        y = np.atleast_2d(np.asarray(self.y_meas, dtype=float))
        if u.shape[0] != y.shape[0]:
            raise ValueError(f"u_meas and y_meas lengths differ: {u.shape[0]} vs {y.shape[0]}")
        object.__setattr__(self, "u_meas", u)
        object.__setattr__(self, "y_meas", y)

    @property
    def T(self) -> int:
        return self.u_meas.shape[0] - 1

    @property
    def u_true(self) -> np.ndarray:
        if self.truth is None:
            raise ValueError("log carries no ground truth")
        return self.u_meas - self.truth.d_u


@dataclass(frozen=True)
class DataMatrices:
    Psi1: np.ndarray
    Psi0: np.ndarray
    U1: np.ndarray
    p: int
    m: int
    ell: int
    Delta10: Optional[np.ndarray] = None
    S0: Optional[np.ndarray] = None
    N0: Optional[np.ndarray] = None

    @property
    def n_cols(self) -> int:
        return self.Psi0.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.Delta10 is not None


@dataclass(frozen=True)
class NoiseBound:
    Theta: np.ndarray
    p: int
    m: int
    ell: int

    @property
    def Theta11(self):
        return self.Theta[:self.p, :self.p]

    @property
    def Theta12(self):
        return self.Theta[:self.p, self.p:]

    @property
    def Theta22(self):
        return self.Theta[self.p:, self.p:]


def collect(
    model: StateSpaceModel,
    ell: int,
    num_experiments: int,
    samples_per_experiment: int,
    input_law,
    noise_law: NoiseLaw,
    rng_seed: int,
    x0_law=UniformLaw(1.0),
) -> list[ExperimentLog]:
    """Run ``num_experiments`` independent noisy experiments on ``model``.

    Each experiment draws from its own child of ``SeedSequence(rng_seed)`` in the
    fixed order x0, u_m, d_u, d_y, so results do not depend on how many
    experiments are run alongside it.
    """
    if samples_per_experiment < ell + 1:
        raise ValueError(f"need at least ell+1={ell + 1} samples per experiment, got {samples_per_experiment}")
    if num_experiments < 1:
        raise ValueError("num_experiments must be >= 1")
    N = samples_per_experiment
    logs = []
    for child in np.random.SeedSequence(rng_seed).spawn(num_experiments):
        rng = np.random.default_rng(child)
        x0 = x0_law.sample(rng, model.n)
        u_m = input_law.sample(rng, (N, model.m))
        d_u = noise_law.du.sample(rng, (N, model.m))
        d_y = noise_law.dy.sample(rng, (N, model.p))
        logs.append(run_experiment(model, x0, u_m, d_u, d_y))
    return logs


def run_experiment(model: StateSpaceModel, x0, u_meas, d_u, d_y) -> ExperimentLog:
    """Noisy experiment with given signals: x+ = A x + B (u_m - d_u), y_m = C x + d_y."""
    u_meas = np.asarray(u_meas, dtype=float).reshape(-1, model.m)
    d_u = np.asarray(d_u, dtype=float).reshape(-1, model.m)
    d_y = np.asarray(d_y, dtype=float).reshape(-1, model.p)
    N = u_meas.shape[0]
    x = np.empty((N, model.n))
    x[0] = np.asarray(x0, dtype=float).reshape(-1)
    u = u_meas - d_u
    for k in range(N - 1):
        x[k + 1] = model.A @ x[k] + model.B @ u[k]
    y = x @ model.C.T
    truth = LogTruth(x[0].copy(), d_u, d_y, y)
    return ExperimentLog(u_meas, y + d_y, truth)


def _windows(sig: np.ndarray, start: int, ell: int, count: int) -> np.ndarray:
    """Columns [sig(j); ...; sig(j+ell-1)] for j = start .. start+count-1."""
    return np.column_stack([sig[j:j + ell].reshape(-1) for j in range(start, start + count)])


def assemble(logs: Sequence[ExperimentLog], ell: int) -> DataMatrices:
    """Stack the sliding windows of every log into Psi1, Psi0, U1 (and truth blocks)."""
    if not logs:
        raise ValueError("no logs given")
    p = logs[0].y_meas.shape[1]
    m = logs[0].u_meas.shape[1]
    with_truth = all(lg.truth is not None for lg in logs)
    cols = {k: [] for k in ("Psi1", "Psi0", "U1", "Delta10", "S0", "N0")}
    for lg in logs:
        if lg.T < ell:
            raise ValueError(f"log with T={lg.T} is too short for ell={ell}")
        if lg.y_meas.shape[1] != p or lg.u_meas.shape[1] != m:
            raise ValueError("logs have inconsistent signal dimensions")
        c = lg.T - ell + 1
        cols["Psi0"].append(np.vstack([_windows(lg.y_meas, 0, ell, c), _windows(lg.u_meas, 0, ell, c)]))
        cols["Psi1"].append(np.vstack([_windows(lg.y_meas, 1, ell, c), _windows(lg.u_meas, 1, ell, c)]))
        cols["U1"].append(lg.u_meas[ell:ell + c].T)
        if with_truth:
            tr = lg.truth
            N0 = np.vstack([_windows(tr.d_y, 0, ell, c), _windows(tr.d_u, 0, ell, c)])
            cols["N0"].append(N0)
            cols["Delta10"].append(np.vstack([tr.d_y[ell:ell + c].T, N0]))
            cols["S0"].append(np.vstack([_windows(tr.y_true, 0, ell, c), _windows(lg.u_true, 0, ell, c)]))
    out = {k: np.hstack(v) for k, v in cols.items() if v}
    return DataMatrices(
        out["Psi1"], out["Psi0"], out["U1"], p, m, ell,
        out.get("Delta10"), out.get("S0"), out.get("N0"),
    )


def energy_bound(dy_bar: float, du_bar: float, ell: int, n_cols: int, scale: float = 1.0, *, p: int, m: int) -> NoiseBound:
    """Theta = scale * n_cols * ((ell+1) dy_bar^2 + ell du_bar^2) * I."""
    if dy_bar < 0 or du_bar < 0:
        raise ValueError("noise bounds must be non-negative")
    if n_cols < 1 or scale <= 0:
        raise ValueError("n_cols must be >= 1 and scale > 0")
    c = scale * n_cols * ((ell + 1) * dy_bar**2 + ell * du_bar**2)
    return NoiseBound(c * np.eye(p + (p + m) * ell), p, m, ell)


def diagnostics(data: DataMatrices, theta: NoiseBound) -> dict:
    """Data-richness check Psi0 Psi0^T > Theta22 and, with truth, the SNR ratio."""
    G = data.Psi0 @ data.Psi0.T - theta.Theta22
    margin = float(np.linalg.eigvalsh((G + G.T) / 2)[0])
    out = {"assumption2_ok": margin > 0, "assumption2_margin": margin, "snr_ok": None, "snr_ratio": None}
    if data.S0 is not None:
        smin = float(np.linalg.svd(data.S0 @ data.S0.T, compute_uv=False)[-1])
        tmax = float(np.linalg.svd(theta.Theta22, compute_uv=False)[0])
        ratio = np.inf if tmax == 0 else smin / tmax
        out["snr_ratio"] = float(ratio)
        out["snr_ok"] = bool(ratio > 4)
    return out
