import numpy as np
import pytest

from nio_synth.errors import Unobservable
from nio_synth.lti import StateSpaceModel, observability_index

# criterion number -> list of (ok, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))


def random_system(rng, n, m, p, spectral_radius=None, ell=None):
    """Random observable (A, B, C); with ``ell`` the observability index is forced to ell."""
    while True:
        A = rng.standard_normal((n, n))
        if spectral_radius is not None:
            A *= spectral_radius / max(np.max(np.abs(np.linalg.eigvals(A))), 1e-9)
        B = rng.standard_normal((n, m))
        C = rng.standard_normal((p, n))
        try:
            idx = observability_index(A, C)
        except Unobservable:
            continue
        if ell is None or idx == ell:
            return StateSpaceModel(A, B, C)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        items = ACCEPTANCE[crit]
        ok = all(o for o, _ in items)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  " + "; ".join(d for _, d in items))
