"""Exception types shared across the solver; the CLI maps them to exit codes."""


class SolverError(Exception):
    exit_code = 1


class ConfigError(SolverError, ValueError):
    exit_code = 2


class ResonanceError(SolverError):
    exit_code = 3


class MergeResonanceError(ResonanceError):
    def __init__(self, node, cond):
        self.node = node
        self.cond = cond
        super().__init__(
            f"merge at node {node} is near-singular (cond(I - R33b R33a) ~ {cond:.3e})")


class DomainResonanceError(ResonanceError):
    def __init__(self, cond, threshold):
        self.cond = cond
        self.threshold = threshold
        super().__init__(
            f"wavenumber is close to an interior Dirichlet resonance of the domain: "
            f"cond(R - I) ~ {cond:.3e} exceeds {threshold:.1e}. Enlarge the domain "
            f"slightly (e.g. add a column of leaf boxes) or shift the wavenumber.")


class FactorizationError(SolverError):
    pass


class AccuracyError(SolverError):
    exit_code = 4
