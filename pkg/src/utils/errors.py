"""
Exception hierarchy and exit codes for sumsetlab experiments
"""

from typing import Any, Dict, Optional

# Exit codes returned as 'statusCode' by the experiment handler
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_INTERNAL = 4


class LabError(Exception):
    """Base class for all errors raised by the workbench."""
    exit_code = EXIT_INTERNAL

    def to_body(self) -> Dict[str, Any]:
        return {'error': str(self), 'type': type(self).__name__}


class ConfigError(LabError, ValueError):
    """Invalid configuration, group/curve spec, or violated precondition."""
    exit_code = EXIT_CONFIG


class MemoryCapExceeded(ConfigError):
    """A table would exceed the configured memory cap."""

    def __init__(self, needed: int, cap: int):
        super().__init__(f"table needs {needed} bytes, memory cap is {cap} bytes")
        self.needed = needed
        self.cap = cap


class BudgetExhausted(LabError):
    """A search ran out of its node budget before it could certify its answer.

    Carries whatever partial result was known at the time.
    """
    exit_code = EXIT_BUDGET

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class HypothesisFailure(LabError):
    """A constructive procedure could not verify one of its hypotheses."""

    def __init__(self, hypothesis: str, detail: str = ''):
        message = f"hypothesis failed: {hypothesis}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.hypothesis = hypothesis

    def to_body(self) -> Dict[str, Any]:
        body = super().to_body()
        body['hypothesis'] = self.hypothesis
        return body


class InternalAssertion(LabError):
    """A result failed its own verification; this signals a bug, not bad input."""

    def __init__(self, message: str, counterexample: Optional[Any] = None):
        super().__init__(message)
        self.counterexample = counterexample

    def to_body(self) -> Dict[str, Any]:
        body = super().to_body()
        if self.counterexample is not None:
            body['counterexample'] = self.counterexample
        return body
