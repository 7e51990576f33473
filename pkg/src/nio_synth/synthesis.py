"""Robust synthesis of the auxiliary-state gain K and the dynamic controller.

The controller is ``chi+ = (F + Bb K) chi + L y``, ``u = K chi``: it rebuilds
the I/O window of the plant in its state and applies a static gain to it.
K is found from an LMI in (Y, P) that makes ``F + L Z + Bb K`` share the
Lyapunov matrix P for every Z in the consistent set.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .auxiliary import AuxShift
from .consistency import ConsistentSet
from .sdp import LmiConstraint, LmiProblem, Term, VariableSpec, solve_feasibility

log = logging.getLogger(__name__)

VARIANTS = ("zqa", "eq18")
DEFAULT_VARIANT = "zqa"
COND_WARN = 1e10


@dataclass(frozen=True)
class SynthesisResult:
    K: np.ndarray
    P: np.ndarray
    Y: np.ndarray
    margin: float
    variant: str
    cond_P: float
    solver: dict


@dataclass(frozen=True)
class DynController:
    """Dynamic output-feedback controller ``w+ = Ac w + Bc y``, ``u = Cc w``.

    Without augmentation ``w = chi``; with it ``w = (x_a, chi)``.
    """

    shift: AuxShift
    K: np.ndarray
    A_a: Optional[np.ndarray] = None
    B_a: Optional[np.ndarray] = None
    C_a: Optional[np.ndarray] = None

    @property
    def augmented(self) -> bool:
        return self.A_a is not None

    @property
    def n_a(self) -> int:
        return 0 if self.A_a is None else self.A_a.shape[0]

    @property
    def order(self) -> int:
        return self.shift.dim + self.n_a

    @property
    def chi_matrix(self) -> np.ndarray:
        return self.shift.F + self.shift.Bb @ self.K

    @property
    def Ac(self) -> np.ndarray:
        if not self.augmented:
            return self.chi_matrix
        return np.block([
            [self.A_a, self.B_a @ self.K],
            [self.shift.L @ self.C_a, self.chi_matrix],
        ])

    @property
    def Bc(self) -> np.ndarray:
        return np.vstack([np.zeros((self.n_a, self.shift.p)), self.shift.L])

    @property
    def Cc(self) -> np.ndarray:
        return np.hstack([np.zeros((self.K.shape[0], self.n_a)), self.K])


def default_epsilon(cs: ConsistentSet) -> float:
    """Strictness margin shared by both variants: 1e-6 times the balanced 'zqa' scale."""
    return 1e-6 * max(1.0, float(np.linalg.norm(cs.Qcal, 2)))


def assemble_lmi(
    cs: ConsistentSet,
    shift: AuxShift,
    epsilon: float | None = None,
    variant: str = DEFAULT_VARIANT,
    balance: bool | None = None,
) -> LmiProblem:
    """Three-block LMI in (Y, P); each block has size (p+m) ell.

    With ``balance`` the third block row and column are multiplied by
    A^(-1/2), a congruence that leaves feasibility unchanged but turns the
    ``-A`` block into ``-I``.  For 'zqa' (the default there) this lifts the
    cap lambda_min(A) on the attainable margin, which is tiny next to ||A|| on
    short, noisy data sets.  'eq18' is left unbalanced by default: its first
    block carries C, which only cancels against B A^-1 B^T through the third
    block, and balancing scatters that cancellation.
    ``epsilon`` defaults to ``default_epsilon(cs)`` so that both variants
    answer the same question.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    N, p, m = shift.dim, shift.p, shift.m
    if cs.dim != N or cs.p != p:
        raise ValueError(f"consistent set has p={cs.p}, dim={cs.dim}; shift expects p={p}, dim={N}")
    if epsilon is None:
        epsilon = default_epsilon(cs)
    if balance is None:
        balance = variant == "zqa"
    F, L, Bb = shift.F, shift.L, shift.Bb
    W = cs.Acal_inv_sqrt if balance else None
    C = np.zeros((3 * N, 3 * N))
    s0, s2 = slice(0, N), slice(2 * N, 3 * N)
    C[s2, s2] = -np.eye(N) if balance else -cs.Acal
    if variant == "eq18":
        C[s0, s0] = -L @ cs.Ccal @ L.T
        LB = L @ cs.Bcal if W is None else L @ cs.Bcal @ W
        C[s0, s2] = LB
        C[s2, s0] = LB.T
        terms = [
            Term(0, 0, "P", coef=-1.0),
            Term(0, 1, "P", left=F),
            Term(0, 1, "Y", left=Bb),
            Term(1, 1, "P", coef=-1.0),
            Term(1, 2, "P", right=W, coef=-1.0),
        ]
    else:
        C[s0, s0] = L @ cs.Qcal @ L.T
        terms = [
            Term(0, 0, "P", coef=-1.0),
            Term(0, 1, "P", left=F + L @ cs.Zcen),
            Term(0, 1, "Y", left=Bb),
            Term(1, 1, "P", coef=-1.0),
            Term(1, 2, "P", right=W),
        ]
    variables = [VariableSpec("P", (N, N), symmetric=True, positive_definite=True), VariableSpec("Y", (m, N))]
    return LmiProblem(variables, [LmiConstraint([N, N, N], C, terms, name=variant)], epsilon)


def gain_from(P, Y) -> tuple[np.ndarray, float]:
    """K = Y P^-1 through a Cholesky factorisation, with cond(P)."""
    P = (P + P.T) / 2
    K = cho_solve(cho_factor(P), Y.T).T
    cond = float(np.linalg.cond(P))
    if cond > COND_WARN:
        log.warning("Lyapunov matrix is ill conditioned (cond %.2e)", cond)
    return K, cond


def synthesize(
    cs: ConsistentSet,
    shift: AuxShift,
    variant: str = DEFAULT_VARIANT,
    epsilon: float | None = None,
    solver: str | None = None,
    balance: bool | None = None,
) -> SynthesisResult:
    """Solve the synthesis LMI; raises ``Infeasible`` or ``NumericalFailure``."""
    problem = assemble_lmi(cs, shift, epsilon, variant, balance)
    sol = solve_feasibility(problem, solver=solver) if solver else solve_feasibility(problem)
    P, Y = sol.assignment["P"], sol.assignment["Y"]
    K, cond = gain_from(P, Y)
    margin = -max(sol.margins.values())
    return SynthesisResult(K, P, Y, margin, variant, cond, sol.diagnostics)


def make_controller(result: SynthesisResult, shift: AuxShift, augmentation=None) -> DynController:
    """Realise the controller; ``augmentation`` is an object with A_a, B_a, C_a."""
    K = np.asarray(result.K if isinstance(result, SynthesisResult) else result, dtype=float)
    if K.shape != (shift.m, shift.dim):
        raise ValueError(f"K has shape {K.shape}, expected {(shift.m, shift.dim)}")
    if augmentation is None:
        return DynController(shift, K)
    return DynController(shift, K, np.asarray(augmentation.A_a), np.asarray(augmentation.B_a), np.asarray(augmentation.C_a))
