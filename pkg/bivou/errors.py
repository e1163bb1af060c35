"""Exception hierarchy shared by the library, the experiments and the CLI."""
from __future__ import annotations

from typing import Any, Dict, Optional


class BivouError(Exception):
    """Base error. `context` echoes the offending inputs for diagnostics."""

    kind = "error"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def as_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": self.message, "context": self.context}


class DomainError(BivouError, ValueError):
    """Invalid parameters, grids, component indices or scenario choices."""

    kind = "domain"


class NumericError(BivouError):
    """Factorization failure or an underflowing innovation variance."""

    kind = "numeric"


class EstimationError(BivouError):
    """The optimizer could not produce any finite likelihood value."""

    kind = "estimation"


class ExperimentError(BivouError):
    """Too many failed replications in a Monte Carlo run."""

    kind = "experiment"


class SampleIOError(BivouError):
    """Reading or writing a sample / result file failed."""

    kind = "io"
