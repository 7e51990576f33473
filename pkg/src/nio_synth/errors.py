"""Exception types raised across the toolkit."""


class NioSynthError(Exception):
    """Base class for all toolkit errors."""


class Unobservable(NioSynthError):
    """The pair (A, C) is not observable."""


class Assumption2Violated(NioSynthError):
    """The data are not rich enough: Psi0 Psi0^T - Theta22 is not positive definite."""

    def __init__(self, min_eig, message=None):
        self.min_eig = float(min_eig)
        super().__init__(message or f"Psi0 Psi0^T - Theta22 has minimum eigenvalue {self.min_eig:.6g} <= 0")


class Infeasible(NioSynthError):
    """No feasible point was found at the requested margin."""

    def __init__(self, best_margin, message=None):
        self.best_margin = float(best_margin)
        super().__init__(message or f"no feasible point at the requested margin (best margin {self.best_margin:.6g})")


class NoiseBoundViolated(NioSynthError):
    """No parameter is consistent with the data under the stated noise bound (Q is indefinite)."""

    def __init__(self, min_eig, message=None):
        self.min_eig = float(min_eig)
        super().__init__(message or f"the consistent set is empty: Q has eigenvalue {self.min_eig:.6g} < 0; "
                                    "the noise bound is too small for these data")


class NumericalFailure(NioSynthError):
    """The solver could not reach a verdict."""


class NotNeeded(NioSynthError):
    """Augmentation requested although p*ell == n."""


class NotContractive(NioSynthError):
    """The artificial state matrix has spectral norm >= 1."""


class SchemaError(NioSynthError):
    """A JSON document does not match the expected layout."""
