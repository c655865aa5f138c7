"""Exception hierarchy shared by all modules."""


class ModalStabError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ModalStabError):
    """Invalid or incomplete experiment configuration."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(ModalStabError):
    """A numerical routine failed to deliver a trustworthy result."""


# spectral
class DegenerateDenominator(NumericalError):
    pass


class RootNotBracketed(NumericalError):
    def __init__(self, k, branch, message=""):
        self.k = k
        self.branch = branch
        super().__init__(f"no sign change near seed for k={k}, branch={branch}. {message}".strip())


class NormalizationFailure(NumericalError):
    pass


class MultipleEigenvalue(NumericalError):
    pass


# design
class Uncontrollable(ModalStabError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"mode {k} has a vanishing input coefficient")


class Unobservable(ModalStabError):
    def __init__(self, k):
        self.k = k
        super().__init__(f"mode {k} has a vanishing output coefficient")


class TargetCollision(ModalStabError):
    pass


# dimfind
class DimensionMismatch(ModalStabError):
    pass


class EigenSolverFailure(NumericalError):
    pass


class NotConverged(ModalStabError):
    def __init__(self, curve):
        self.curve = curve
        super().__init__(f"rho_m did not converge for n={curve.n}")


class NoneStabilizes(ModalStabError):
    def __init__(self, table):
        self.table = table
        super().__init__("no slow order in the requested range is certified stabilizing")


# assumptions
class Divergent(ModalStabError):
    pass


class AssumptionFailed(ModalStabError):
    def __init__(self, name, witness):
        self.name = name
        self.witness = witness
        super().__init__(f"{name} violated at k={witness}")


class NoPeriodFound(ModalStabError):
    def __init__(self, best_k1, residual):
        self.best_k1 = best_k1
        self.residual = residual
        super().__init__(f"no exact pairing period; best k1={best_k1} with residual {residual:.3e}")


class DivergentAtZero(ModalStabError):
    pass


class DomainError(ModalStabError):
    pass


# sim
class PropagatorFailure(NumericalError):
    pass


class WindowTooShort(ModalStabError):
    pass
