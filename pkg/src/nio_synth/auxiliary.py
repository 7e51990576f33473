"""Auxiliary (shift-register) representation of an observable LTI system.

The auxiliary state stacks the last ``ell`` outputs on top of the last ``ell``
inputs.  Its dynamics are ``xi+ = (F + L Z) xi + Bb v`` where F, L, Bb are
known shift/injection matrices and Z is the I/O parameter of the plant.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .lti import (
    DEFAULT_RANK_RTOL,
    IoParameter,
    StateSpaceModel,
    io_parameter,
    is_reachable,
    numerical_rank,
    reachability_matrix,
    structural_matrices,
)


def _ro(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AuxShift:
    F: np.ndarray
    L: np.ndarray
    Bb: np.ndarray
    p: int
    m: int
    ell: int

    @property
    def dim(self) -> int:
        return (self.p + self.m) * self.ell


@dataclass(frozen=True)
class AuxSystem:
    shift: AuxShift
    io: IoParameter

    @property
    def Z(self) -> np.ndarray:
        return self.io.Z

    @property
    def A_aux(self) -> np.ndarray:
        return self.shift.F + self.shift.L @ self.io.Z

    @property
    def Bb(self) -> np.ndarray:
        return self.shift.Bb

    @property
    def Bd(self) -> np.ndarray:
        p = self.shift.p
        return self.shift.L @ np.hstack([np.eye(p), -self.io.Z])


def _upshift(block: int, ell: int) -> np.ndarray:
    S = np.zeros((block * ell, block * ell))
    for i in range(ell - 1):
        S[i * block:(i + 1) * block, (i + 1) * block:(i + 2) * block] = np.eye(block)
    return S


def aux_shift(p: int, m: int, ell: int) -> AuxShift:
    if min(p, m, ell) < 1:
        raise ValueError(f"p, m, ell must all be >= 1, got {(p, m, ell)}")
    dim_y, dim_u = p * ell, m * ell
    F = np.zeros((dim_y + dim_u, dim_y + dim_u))
    F[:dim_y, :dim_y] = _upshift(p, ell)
    F[dim_y:, dim_y:] = _upshift(m, ell)
    L = np.zeros((dim_y + dim_u, p))
    L[dim_y - p:dim_y] = np.eye(p)
    Bb = np.zeros((dim_y + dim_u, m))
    Bb[dim_y + dim_u - m:] = np.eye(m)
    return AuxShift(_ro(F), _ro(L), _ro(Bb), p, m, ell)


def aux_system(model: StateSpaceModel, ell: int, rank_tol: float = DEFAULT_RANK_RTOL) -> AuxSystem:
    return AuxSystem(aux_shift(model.p, model.m, ell), io_parameter(model, ell, rank_tol))


def stack_window(y, u, k: int, ell: int) -> np.ndarray:
    """[y(k-ell); ...; y(k-1); u(k-ell); ...; u(k-1)] from per-step arrays."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    return np.concatenate([y[k - ell:k].reshape(-1), u[k - ell:k].reshape(-1)])


def lift_initial_condition(model: StateSpaceModel, ell: int, x0, first_inputs) -> np.ndarray:
    """Auxiliary state at time ``ell`` matching the plant started at ``x0``.

    ``first_inputs`` holds u(0), ..., u(ell-1).
    """
    sm = structural_matrices(model, ell)
    uwin = np.asarray(first_inputs, dtype=float).reshape(-1)
    if uwin.shape != (model.m * ell,):
        raise ValueError(f"expected {ell} inputs of dimension {model.m}")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    return np.concatenate([sm.O @ x0 + sm.T @ uwin, uwin])


def simulate_aux(aux: AuxSystem, xi0, inputs) -> np.ndarray:
    """States xi(0..N) of the auxiliary system driven by ``inputs`` (N x m)."""
    A, B = aux.A_aux, aux.Bb
    v = np.asarray(inputs, dtype=float).reshape(-1, aux.shift.m)
    xi = np.empty((len(v) + 1, aux.shift.dim))
    xi[0] = np.asarray(xi0, dtype=float).reshape(-1)
    for k in range(len(v)):
        xi[k + 1] = A @ xi[k] + B @ v[k]
    return xi


def forced_response_aux(aux: AuxSystem, inputs) -> np.ndarray:
    """Zero-initial-condition response xi(0..N), computed by the recurrence."""
    return simulate_aux(aux, np.zeros(aux.shift.dim), inputs)


def forced_response_formula(model: StateSpaceModel, ell: int, inputs) -> np.ndarray:
    """Closed form of the zero-state auxiliary response.

    Top block ``O sum_j A^(k-1-ell-j) B v(j) + T vwin(k)``, bottom block the
    window ``vwin(k) = [v(k-ell); ...; v(k-1)]`` with zero inputs before k=0.
    """
    sm = structural_matrices(model, ell)
    m = model.m
    v = np.asarray(inputs, dtype=float).reshape(-1, m)
    N = len(v)
    padded = np.vstack([np.zeros((ell, m)), v])
    out = np.empty((N + 1, (model.p + m) * ell))
    for k in range(N + 1):
        acc = np.zeros(model.n)
        for j in range(0, k - ell):
            acc += np.linalg.matrix_power(model.A, k - 1 - ell - j) @ model.B @ v[j]
        vwin = padded[k:k + ell].reshape(-1)
        out[k] = np.concatenate([sm.O @ acc + sm.T @ vwin, vwin])
    return out


def io_to_aux_matrix(model: StateSpaceModel, ell: int) -> np.ndarray:
    """H = [[O, T], [0, I]], mapping (x, input window) to the auxiliary state."""
    sm = structural_matrices(model, ell)
    n, m = model.n, model.m
    return np.block([[sm.O, sm.T], [np.zeros((m * ell, n)), np.eye(m * ell)]])


# largest principal angle (radians) still counted as "same subspace"; Krylov
# matrices are badly conditioned, so bases carry errors far above rank_tol
SUBSPACE_ANGLE_TOL = 1e-6


def _orth(M, rank_tol):
    if M.size == 0:
        return M
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return U[:, :0]
    r = int(np.sum(s > max(M.shape) * s[0] * rank_tol))
    return U[:, :r]


def reachability_report(model: StateSpaceModel, ell: int, rank_tol: float = DEFAULT_RANK_RTOL) -> dict:
    """Compare im H with the reachable subspace of (A_aux, Bb).

    The subspaces are equal when their dimensions agree and the largest
    principal angle between them is below ``SUBSPACE_ANGLE_TOL``.
    """
    aux = aux_system(model, ell)
    H = io_to_aux_matrix(model, ell)
    reach = reachability_matrix(aux.A_aux, aux.Bb, normalize=True)
    QH = _orth(H, rank_tol)
    QR = _orth(reach, rank_tol)
    rH, rR = QH.shape[1], QR.shape[1]
    angle = float(np.max(subspace_angles(QH, QR))) if rH and rR else (0.0 if rH == rR else np.pi / 2)
    plant_reachable = is_reachable(model.A, model.B, rank_tol)
    full = (model.p + model.m) * ell
    report = {
        "H": H,
        "dim_reach_aux": rR,
        "rank_H": rH,
        "max_angle": angle,
        "lemma1_holds": bool(rH == rR and angle < SUBSPACE_ANGLE_TOL),
        "lemma2_consistent": None,
        "not_applicable": not plant_reachable,
    }
    if plant_reachable:
        report["lemma2_consistent"] = bool((rR == full) == (model.p * ell == model.n))
    return report
