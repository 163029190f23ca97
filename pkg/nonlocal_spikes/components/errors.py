from typing import Any, Optional


class NonlocalSpikesError(Exception):
    """Base class for all failures raised by the pipeline."""

    code = "error"
    exit_status = 3

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}

    def __str__(self) -> str:
        return f"{type(self).__name__}[{self.code}]: {self.message}"


class ConfigError(NonlocalSpikesError):
    code = "config_error"
    exit_status = 1


class GridError(NonlocalSpikesError):
    code = "grid_error"
    exit_status = 1


class KernelError(NonlocalSpikesError):
    code = "kernel_error"
    exit_status = 1


class HypothesisError(NonlocalSpikesError):
    code = "hypothesis_error"
    exit_status = 2


class NoNullspace(HypothesisError):
    code = "no_nullspace"


class ExcessNullspace(HypothesisError):
    code = "excess_nullspace"


class DegeneratePairing(HypothesisError):
    code = "degenerate_pairing"


class InvertibilityViolation(HypothesisError):
    code = "invertibility_violation"


class IndefiniteHessian(HypothesisError):
    code = "indefinite_hessian"


class DegenerateUnfolding(HypothesisError):
    code = "degenerate_unfolding"


class DegenerateQuadratic(HypothesisError):
    code = "degenerate_quadratic"


class CriticalityViolation(HypothesisError):
    code = "criticality_violation"


class SymmetryViolation(HypothesisError):
    code = "symmetry_violation"


class BranchDivergence(HypothesisError):
    code = "branch_divergence"


class NondegeneracyFailure(HypothesisError):
    code = "nondegeneracy_failure"


class IllConditioned(HypothesisError):
    code = "ill_conditioned"


class SolverError(NonlocalSpikesError):
    code = "solver_error"
    exit_status = 3


class PreconditionFailure(SolverError):
    code = "precondition_failure"


class InversionFailure(SolverError):
    code = "inversion_failure"


class NoContraction(SolverError):
    code = "no_contraction"


class MaxIterations(SolverError):
    code = "max_iterations"


class KrylovStagnation(SolverError):
    code = "krylov_stagnation"


class SymmetryDrift(SolverError):
    code = "symmetry_drift"


class TrustRegionExceeded(SolverError):
    code = "trust_region_exceeded"


class GridMismatch(SolverError):
    code = "grid_mismatch"


class AllFailed(SolverError):
    code = "all_failed"


class WindowUnderResolved(SolverError):
    code = "window_under_resolved"
