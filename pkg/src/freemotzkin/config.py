"""Shared tolerances, size caps and exception types."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    atol: float = 1e-12
    rtol: float = 1e-10


DEFAULT_TOL = Tolerances()

# Largest chain for dense 3^N x 3^N construction without an explicit opt-in.
DENSE_SITE_CAP = 8
# Non-hermitian complex eigensolves (t at a complex probe).
COMPLEX_ED_SITE_CAP = 6
# Vectorised cycle census of the Omega permutation.
ENUMERATION_SITE_CAP = 14


class MotzkinError(Exception):
    """Base class for errors raised by this package."""


class SizeError(MotzkinError):
    """A dense construction would exceed the configured site cap."""


class ConfigurationError(MotzkinError, ValueError):
    """Inconsistent chain or solver configuration."""


class PoleError(MotzkinError, ZeroDivisionError):
    """Evaluation hit a pole of a rational expression."""


class PreconditionError(MotzkinError, ValueError):
    """Input violates an operation's documented precondition."""


def check_dense_cap(n_sites, cap=DENSE_SITE_CAP, allow_large=False):
    if n_sites > cap and not allow_large:
        raise SizeError(
            f"N={n_sites} exceeds the dense cap N<={cap}; pass allow_large=True "
            f"to accept ~{(3 ** n_sites) ** 2 * 16 / 2**30:.1f} GiB per operator"
        )
