"""Closed-loop assembly, Schur tests, Lyapunov certification and noisy runs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .auxiliary import AuxShift
from .consistency import ConsistentSet, from_upsilon, sample_upsilon
from .experiment import NoiseLaw
from .lti import StateSpaceModel
from .synthesis import DynController

SCHUR_TOL = 1e-9
LYAP_RTOL = 1e-7
DIVERGENCE = 1e9


def spectral_radius(M) -> float:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got {M.shape}")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def is_schur(M, tol: float = SCHUR_TOL) -> bool:
    return spectral_radius(M) < 1 - tol


def closed_loop(plant: StateSpaceModel, ctrl: DynController) -> np.ndarray:
    """[[A, B Cc], [Bc C, Ac]] with the controller state (x_a, chi) or chi."""
    if plant.m != ctrl.shift.m or plant.p != ctrl.shift.p:
        raise ValueError(f"plant (m={plant.m}, p={plant.p}) does not match controller (m={ctrl.shift.m}, p={ctrl.shift.p})")
    return np.block([
        [plant.A, plant.B @ ctrl.Cc],
        [ctrl.Bc @ plant.C, ctrl.Ac],
    ])


@dataclass
class ClosedLoopReport:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    spectral_radius: float
    schur: bool
    lyapunov_ok: bool | None = None
    samples: int = 0
    worst_slack: float | None = None
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.schur and self.lyapunov_ok is not False

    def to_dict(self) -> dict:
        ev = sorted(self.eigenvalues, key=lambda z: (-abs(z), z.real, z.imag))
        return {
            "spectral_radius": self.spectral_radius,
            "schur": self.schur,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "lyapunov_ok": self.lyapunov_ok,
            "samples": self.samples,
            "worst_slack": self.worst_slack,
            "failures": self.failures,
        }


def report(plant: StateSpaceModel, ctrl: DynController) -> ClosedLoopReport:
    M = closed_loop(plant, ctrl)
    ev = np.linalg.eigvals(M)
    rho = float(np.max(np.abs(ev)))
    return ClosedLoopReport(M, ev, rho, rho < 1 - SCHUR_TOL)


@dataclass
class Certificate:
    ok: bool
    samples: int
    worst_slack: float  # max over samples of lambda_max(M P M^T - P) / ||P||
    worst_radius: float
    failures: list


def certify(cs: ConsistentSet, shift: AuxShift, K, P, samples: int = 200, seed: int = 0) -> Certificate:
    """Check ``M P M^T - P < 0`` and rho(M) < 1 for M = F + L Z + Bb K on sampled Z.

    Samples are the centre, ceil(samples/4) points on the boundary and the rest
    inside the set.  The decrease must hold strictly: lambda_max at most
    ``-LYAP_RTOL * ||P||``.  With Q = 0 (up to rounding) the set is a single point and one check
    is made.
    """
    K = np.asarray(K, dtype=float)
    P = np.asarray(P, dtype=float)
    P = (P + P.T) / 2
    nP = float(np.linalg.norm(P, 2))
    if float(np.linalg.norm(cs.Qcal, 2)) <= cs.psd_slack:
        samples = 1
    Us = sample_upsilon(cs.p, cs.dim, samples, np.random.default_rng(seed))
    base = shift.F + shift.Bb @ K
    worst, worst_rho, failures = -np.inf, 0.0, []
    for i, U in enumerate(Us):
        M = base + shift.L @ from_upsilon(cs, U)
        D = M @ P @ M.T - P
        slack = float(np.linalg.eigvalsh((D + D.T) / 2)[-1]) / nP
        rho = spectral_radius(M)
        worst, worst_rho = max(worst, slack), max(worst_rho, rho)
        if slack > -LYAP_RTOL or rho >= 1 - SCHUR_TOL:
            failures.append({"sample": i, "slack": slack, "rho": rho})
    return Certificate(not failures, len(Us), worst, worst_rho, failures)


@dataclass
class NoisyRun:
    states: np.ndarray  # plant states (H+1, n)
    outputs: np.ndarray  # true outputs C x (H+1, p)
    inputs: np.ndarray  # applied u_m (H, m)
    tail_max: float  # max |y(k)|, k in [H/2, H]
    diverged: bool

    def to_dict(self) -> dict:
        return {"tail_max": self.tail_max, "diverged": self.diverged, "horizon": len(self.inputs)}


def simulate_noisy_closed_loop(
    plant: StateSpaceModel,
    ctrl: DynController,
    noise_law: NoiseLaw,
    x0,
    horizon: int,
    seed: int,
) -> NoisyRun:
    """Run the controller against the plant with measurement noise.

    ``x+ = A x + B (u_m - d_u)``, ``y_m = C x + d_y``, ``w+ = Ac w + Bc y_m``,
    ``u_m = Cc w`` with w(0) = 0.  The tail window is the second half of the
    horizon.
    """
    rng = np.random.default_rng(seed)
    d_u = noise_law.du.sample(rng, (horizon, plant.m))
    d_y = noise_law.dy.sample(rng, (horizon + 1, plant.p))
    Ac, Bc, Cc = ctrl.Ac, ctrl.Bc, ctrl.Cc
    x = np.full((horizon + 1, plant.n), np.nan)
    u = np.full((horizon, plant.m), np.nan)
    x[0] = np.asarray(x0, dtype=float).reshape(-1)
    w = np.zeros(ctrl.order)
    diverged = False
    for k in range(horizon):
        u[k] = Cc @ w
        y_m = plant.C @ x[k] + d_y[k]
        x[k + 1] = plant.A @ x[k] + plant.B @ (u[k] - d_u[k])
        w = Ac @ w + Bc @ y_m
        if not (np.all(np.isfinite(x[k + 1])) and np.max(np.abs(x[k + 1])) < DIVERGENCE and np.max(np.abs(w)) < DIVERGENCE):
            diverged = True
            break
    y = x @ plant.C.T
    tail = y[horizon // 2:]
    tail_max = float(np.inf) if diverged else float(np.max(np.abs(tail)))
    return NoisyRun(x, y, u, tail_max, diverged)
