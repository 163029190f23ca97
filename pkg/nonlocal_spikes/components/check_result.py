from typing import Any, Optional


class ClauseResult:
    """Class representing the outcome of one hypothesis clause check."""

    def __init__(
        self,
        clause: str,
        passed: bool,
        message: str,
        margin: Optional[float] = None,
        code: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ):
        self.clause = clause
        self.passed = passed
        self.message = message
        self.margin = margin
        self.code = code
        self.details = details or {}
        self.id = f"{clause}_{code or 'ok'}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "clause": self.clause,
            "passed": self.passed,
            "message": self.message,
            "margin": self.margin,
            "code": self.code,
            "details": self.details,
        }

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"Clause[{self.clause}] {status}: {self.message}"
