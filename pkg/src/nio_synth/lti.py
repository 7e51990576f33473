"""Discrete-time LTI models, simulation and the structural matrices O, T, R.

The structural matrices relate an ell-long window of outputs to the state at
the start of the window and the inputs applied inside it::

    [y(k-ell); ...; y(k-1)] = O x(k-ell) + T [u(k-ell); ...; u(k-1)]
    x(k) = A^ell x(k-ell) + R [u(k-ell); ...; u(k-1)]

from which the one-step output predictor ``y(k) = Z1 ywin + Z2 uwin`` follows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Unobservable

DEFAULT_RANK_RTOL = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def numerical_rank(M, rtol: float = DEFAULT_RANK_RTOL) -> int:
    """Rank counting singular values above ``max(rows, cols) * ||M|| * rtol``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > max(M.shape) * s[0] * rtol))


@dataclass(frozen=True)
class StateSpaceModel:
    """x+ = A x + B u,  y = C x."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        B = _frozen(np.atleast_2d(self.B))
        C = _frozen(np.atleast_2d(self.C))
        n = A.shape[0]
        if A.ndim != 2 or A.shape != (n, n) or n < 1:
            raise ValueError(f"A must be square and non-empty, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != n or B.shape[1] < 1:
            raise ValueError(f"B must have {n} rows and at least one column, got shape {B.shape}")
        if C.ndim != 2 or C.shape[1] != n or C.shape[0] < 1:
            raise ValueError(f"C must have {n} columns and at least one row, got shape {C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist(), "C": self.C.tolist()}

    @classmethod
    def from_dict(cls, d) -> "StateSpaceModel":
        return cls(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float), np.asarray(d["C"], dtype=float))


@dataclass(frozen=True)
class StructuralMatrices:
    ell: int
    O: np.ndarray
    T: np.ndarray
    R: np.ndarray
    O_left: np.ndarray


@dataclass(frozen=True)
class IoParameter:
    Z1: np.ndarray
    Z2: np.ndarray
    Z: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "Z1", _frozen(self.Z1))
        object.__setattr__(self, "Z2", _frozen(self.Z2))
        object.__setattr__(self, "Z", _frozen(np.hstack([self.Z1, self.Z2])))


def simulate(model: StateSpaceModel, x0, inputs):
    """Simulate the model from ``x0``.

    Returns ``(states, outputs)`` as arrays of shape ``(N+1, n)`` and
    ``(N+1, p)`` where ``N = len(inputs)``; ``outputs[k] = C states[k]``.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.shape != (model.n,):
        raise ValueError(f"x0 must have dimension {model.n}, got {x.shape}")
    u = np.asarray(inputs, dtype=float)
    if u.size == 0:
        u = np.zeros((0, model.m))
    u = u.reshape(len(u), -1) if u.ndim != 2 else u
    if u.shape[1] != model.m:
        raise ValueError(f"inputs must be {model.m}-vectors, got shape {u.shape}")
    N = u.shape[0]
    states = np.empty((N + 1, model.n))
    states[0] = x
    for k in range(N):
        states[k + 1] = model.A @ states[k] + model.B @ u[k]
    return states, states @ model.C.T


def observability_matrix(A, C, ell: int) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    blocks = [C]
    for _ in range(ell - 1):
        blocks.append(blocks[-1] @ A)
    return np.vstack(blocks)


def observability_index(A, C, rank_tol: float = DEFAULT_RANK_RTOL) -> int:
    """Smallest ell such that [C; CA; ...; CA^(ell-1)] has rank n."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if A.shape[0] != A.shape[1] or C.shape[1] != A.shape[0]:
        raise ValueError(f"incompatible shapes A {A.shape}, C {C.shape}")
    n = A.shape[0]
    block = C
    stacked = C
    for ell in range(1, n + 1):
        if numerical_rank(stacked, rank_tol) == n:
            return ell
        block = block @ A
        stacked = np.vstack([stacked, block])
    raise Unobservable(f"(A, C) is not observable: rank of the observability matrix stays below {n}")


def structural_matrices(model: StateSpaceModel, ell: int, rank_tol: float = DEFAULT_RANK_RTOL) -> StructuralMatrices:
    if ell < 1:
        raise ValueError("ell must be >= 1")
    A, B, C = model.A, model.B, model.C
    n, m, p = model.n, model.m, model.p
    O = observability_matrix(A, C, ell)
    if numerical_rank(O, rank_tol) < n:
        raise Unobservable(f"the {ell}-step observability matrix has rank below n={n}")
    # Markov parameters C A^k B, k = 0..ell-2
    markov = []
    CAk = C
    for _ in range(max(ell - 1, 0)):
        markov.append(CAk @ B)
        CAk = CAk @ A
    T = np.zeros((p * ell, m * ell))
    for i in range(ell):
        for j in range(i):
            T[i * p:(i + 1) * p, j * m:(j + 1) * m] = markov[i - j - 1]
    AkB = [B]
    for _ in range(ell - 1):
        AkB.append(A @ AkB[-1])
    R = np.hstack(AkB[::-1])
    return StructuralMatrices(ell, _frozen(O), _frozen(T), _frozen(R), _frozen(np.linalg.pinv(O)))


def io_parameter(model: StateSpaceModel, ell: int, rank_tol: float = DEFAULT_RANK_RTOL) -> IoParameter:
    """Z = [C A^ell O_left,  C R - C A^ell O_left T]."""
    sm = structural_matrices(model, ell, rank_tol)
    CAl = model.C @ np.linalg.matrix_power(model.A, ell)
    Z1 = CAl @ sm.O_left
    Z2 = model.C @ sm.R - Z1 @ sm.T
    return IoParameter(Z1, Z2)


def reachability_matrix(A, B, steps: int | None = None, normalize: bool = False) -> np.ndarray:
    """[B, AB, ..., A^(q-1) B] with q = state dimension unless ``steps`` is given.

    With ``normalize`` each block is divided by its spectral norm, which leaves
    the column space unchanged and keeps the rank test well scaled.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    q = A.shape[0] if steps is None else steps
    blocks = []
    blk = B
    for _ in range(q):
        if normalize:
            nrm = np.linalg.norm(blk, 2)
            blocks.append(blk / nrm if nrm > 0 else blk)
        else:
            blocks.append(blk)
        blk = A @ blk
    return np.hstack(blocks)


def is_reachable(A, B, rank_tol: float = DEFAULT_RANK_RTOL) -> bool:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return numerical_rank(reachability_matrix(A, B, normalize=True), rank_tol) == A.shape[0]
