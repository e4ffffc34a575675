"""Exception types shared across the package."""

from __future__ import annotations


class GalockError(Exception):
    """Base class for all package errors."""


class InvalidParams(GalockError):
    """Parameter vector has the wrong arity or a non-positive/non-finite entry."""


class DegenerateModel(GalockError):
    """A derived model quantity is unusable (e.g. the loop never settles)."""


class SimulationFailure(GalockError):
    """A model evaluation failed; attack code scores it as +inf fitness."""


class KeyLengthMismatch(GalockError):
    """Key does not cover the bit indices referenced by a lock grid."""


class GenerationFailure(GalockError):
    """Lock generation could not satisfy its constraints within bounded retries."""


class EncodingMismatch(GalockError):
    """Operator applied to a chromosome encoding it does not support."""


class SpecMissing(GalockError):
    """Constraint attack invoked without the circuit specification it requires.

    The genetic attack consumes only the locked netlist and oracle responses;
    the equation-based attack additionally needs design constants such as the
    reference current. This error marks that asymmetry.
    """


class CandidateOverflow(GalockError):
    """Candidate key set exceeded the configured enumeration cap."""


class CapExceeded(GalockError):
    """Exhaustive census requested above the configured key-space cap."""


class BudgetExhausted(GalockError):
    """Attack ran out of generations or wall time; carries the best-so-far."""

    def __init__(self, message: str, *, best=None, trace=None, report=None):
        super().__init__(message)
        self.best = best
        self.trace = trace
        self.report = report
