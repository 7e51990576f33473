"""The set of I/O parameters Z consistent with noisy data.

Given data matrices and an energy bound Theta, the consistent set is the matrix
ellipsoid ``{Z : (Z - Zc) A (Z - Zc)^T <= Q}``, equivalently
``{Zc + Q^(1/2) U A^(-1/2) : ||U|| <= 1}``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .auxiliary import AuxShift
from .errors import Assumption2Violated, NoiseBoundViolated
from .experiment import DataMatrices, NoiseBound


def _sym(M):
    return (M + M.T) / 2


def _psd_sqrt(M, clip=True):
    w, V = np.linalg.eigh(_sym(M))
    if clip:
        w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.T


@dataclass(frozen=True)
class ConsistentSet:
    Acal: np.ndarray
    Bcal: np.ndarray
    Ccal: np.ndarray
    Zcen: np.ndarray
    Qcal: np.ndarray
    Acal_inv_sqrt: np.ndarray
    Qcal_sqrt: np.ndarray
    # magnitude of the terms cancelling inside Q; sets the rounding floor of PSD tests
    cancel_scale: float

    @property
    def p(self) -> int:
        return self.Qcal.shape[0]

    @property
    def dim(self) -> int:
        return self.Acal.shape[0]

    @property
    def psd_slack(self) -> float:
        return 1e-9 * np.linalg.norm(self.Qcal, 2) + 1e-12 * self.cancel_scale


def _finish(Acal, Bcal, Ccal, Zcen, Qcal, Acal_inv_sqrt, cancel_scale) -> ConsistentSet:
    Qcal = _sym(Qcal)
    cs = ConsistentSet(
        Acal=Acal,
        Bcal=Bcal,
        Ccal=Ccal,
        Zcen=Zcen,
        Qcal=Qcal,
        Acal_inv_sqrt=Acal_inv_sqrt,
        Qcal_sqrt=_psd_sqrt(Qcal),
        cancel_scale=float(cancel_scale),
    )
    qmin = float(np.linalg.eigvalsh(Qcal)[0])
    if qmin < -cs.psd_slack:
        raise NoiseBoundViolated(qmin)
    return cs


def from_quadratic(Acal, Bcal, Ccal) -> ConsistentSet:
    """Center/shape form of ``{Z : Z A Z^T + Z B^T + B Z^T + C <= 0}``; needs A > 0.

    Raises ``NoiseBoundViolated`` when Q is clearly indefinite (the set is empty).
    """
    Acal = _sym(np.asarray(Acal, dtype=float))
    Bcal = np.asarray(Bcal, dtype=float)
    Ccal = _sym(np.asarray(Ccal, dtype=float))
    w, V = np.linalg.eigh(Acal)
    nrm = max(abs(w[0]), abs(w[-1]))
    if w[0] <= 1e-12 * nrm or w[0] <= 0:
        raise Assumption2Violated(w[0])
    Ainv = (V / w) @ V.T
    BAB = _sym(Bcal @ Ainv @ Bcal.T)
    cancel = np.linalg.norm(BAB, 2) + np.linalg.norm(Ccal, 2)
    return _finish(Acal, Bcal, Ccal, -Bcal @ Ainv, BAB - Ccal, (V / np.sqrt(w)) @ V.T, cancel)


def from_parts(Acal, Bcal, Ccal, Zcen, Qcal, cancel_scale: float = 0.0) -> ConsistentSet:
    """Rebuild a set from stored quadratic data plus its centre and shape."""
    Acal = _sym(np.asarray(Acal, dtype=float))
    w, V = np.linalg.eigh(Acal)
    if w[0] <= 0:
        raise Assumption2Violated(w[0])
    return _finish(Acal, np.asarray(Bcal, dtype=float), _sym(np.asarray(Ccal, dtype=float)),
                   np.asarray(Zcen, dtype=float), np.asarray(Qcal, dtype=float), (V / np.sqrt(w)) @ V.T, cancel_scale)


def _scalar_identity(M) -> float | None:
    c = float(M[0, 0]) if M.size else 0.0
    return c if np.array_equal(M, c * np.eye(M.shape[0])) else None


def build_set(data: DataMatrices, theta: NoiseBound, shift: AuxShift) -> ConsistentSet:
    """A = Psi0 Psi0^T - Theta22, B = -L^T Psi1 Psi0^T + Theta12, C = L^T Psi1 Psi1^T L - Theta11.

    When Theta12 = 0 and Theta22 = c I the centre and shape come from an SVD
    of Psi0 rather than from the Gram matrices.  On long runs of an unstable
    plant Psi0 Psi0^T is so badly conditioned that B A^-1 B^T - C loses every
    digit of Q; the SVD route keeps it.
    """
    if shift.dim != data.Psi0.shape[0] or shift.p != data.p:
        raise ValueError("shift dimensions do not match the data matrices")
    if theta.Theta.shape[0] != data.p + shift.dim:
        raise ValueError("Theta has the wrong size for these data")
    Y = shift.L.T @ data.Psi1
    Acal = _sym(data.Psi0 @ data.Psi0.T - theta.Theta22)
    Bcal = -Y @ data.Psi0.T + theta.Theta12
    Ccal = _sym(Y @ Y.T - theta.Theta11)
    c = _scalar_identity(theta.Theta22)
    if c is None or np.any(theta.Theta12):
        return from_quadratic(Acal, Bcal, Ccal)
    N = shift.dim
    U, s, Vt = np.linalg.svd(data.Psi0, full_matrices=False)
    if len(s) < N:
        raise Assumption2Violated(-c)
    lam = s**2 - c
    if lam[-1] <= 1e-12 * max(s[0] ** 2, c) or lam[-1] <= 0:
        raise Assumption2Violated(lam[-1])
    YV = Y @ Vt.T
    R = Y - YV @ Vt  # part of Y outside the row space of Psi0
    G = YV / np.sqrt(lam)
    Zcen = (YV * (s / lam)) @ U.T
    Qcal = theta.Theta11 - R @ R.T + c * (G @ G.T)
    # R carries rounding of order eps ||Y||, so R R^T is only known to about ||R|| ||Y||
    cancel = np.linalg.norm(theta.Theta11, 2) + np.linalg.norm(R, 2) * np.linalg.norm(Y, 2) + c * np.linalg.norm(G, 2) ** 2
    return _finish(Acal, Bcal, Ccal, Zcen, Qcal, (U / np.sqrt(lam)) @ U.T, cancel)


def contains(cs: ConsistentSet, Z) -> bool:
    """(Z - Zc) A (Z - Zc)^T <= Q, up to ``cs.psd_slack``."""
    D = np.asarray(Z, dtype=float) - cs.Zcen
    M = _sym(cs.Qcal - D @ cs.Acal @ D.T)
    return bool(np.linalg.eigvalsh(M)[0] >= -cs.psd_slack)


def contains_quadratic(cs: ConsistentSet, Z) -> bool:
    """Membership through the expanded form Z A Z^T + Z B^T + B Z^T + C <= 0."""
    Z = np.asarray(Z, dtype=float)
    M = _sym(Z @ cs.Acal @ Z.T + Z @ cs.Bcal.T + cs.Bcal @ Z.T + cs.Ccal)
    return bool(np.linalg.eigvalsh(M)[-1] <= cs.psd_slack)


def from_upsilon(cs: ConsistentSet, U) -> np.ndarray:
    return cs.Zcen + cs.Qcal_sqrt @ np.asarray(U, dtype=float) @ cs.Acal_inv_sqrt


def _unit_norm(rng, shape):
    U = rng.standard_normal(shape)
    return U / np.linalg.norm(U, 2)


def sample_upsilon(p: int, dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Contractions U (p x dim): U=0 first, then ceil(count/4) with ||U|| = 1, rest inside the ball."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = [np.zeros((p, dim))]
    n_boundary = min(count - 1, -(-count // 4))
    for _ in range(n_boundary):
        out.append(_unit_norm(rng, (p, dim)))
    while len(out) < count:
        out.append(rng.uniform(0.0, 1.0) * _unit_norm(rng, (p, dim)))
    return out


def sample(cs: ConsistentSet, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [from_upsilon(cs, U) for U in sample_upsilon(cs.p, cs.dim, count, rng)]


def radius(cs: ConsistentSet) -> float:
    """sqrt(lambda_max(Q) / lambda_min(A)); bounds ||Z - Zc|| over the set."""
    qmax = max(float(np.linalg.eigvalsh(cs.Qcal)[-1]), 0.0)
    return float(np.sqrt(qmax / np.linalg.eigvalsh(cs.Acal)[0]))


def eliminate_check(E, F, G, slack: float | None = None) -> bool:
    """Whether E E^T <= F G F^T (the D-free side of the matrix elimination result)."""
    E = np.atleast_2d(np.asarray(E, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    lhs = E @ E.T
    rhs = F @ G @ F.T
    M = _sym(rhs - lhs)
    if slack is None:
        slack = 1e-10 * max(np.linalg.norm(lhs, 2), np.linalg.norm(rhs, 2), 1e-300)
    return bool(np.linalg.eigvalsh(M)[0] >= -slack)
