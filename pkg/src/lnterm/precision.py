"""Extended-precision scalars shared by the solver and the criticality analysis.

The backward recursion for the model coefficients and the convexity-adjusted
Libors is numerically benign (all terms positive, no cancellation) but spans
many orders of magnitude once the volatility is supercritical: adjusted
Libors decay like exp(-(n-i-1) psi^2 t_i) while the normalizations grow by
the same factor.  Everything upstream of pricing therefore runs on mpmath
arbitrary-precision floats at a configurable mantissa width; pricing and
Monte Carlo down-convert explicitly to doubles.
"""

from __future__ import annotations

import os
from contextlib import contextmanager

import mpmath
from mpmath import mpf

# WideReal values are mpmath floats.  They carry their full mantissa with
# them; the ambient precision only controls subsequent arithmetic.
WideReal = mpmath.mpf

DEFAULT_SOLVER_BITS = 256
DEFAULT_MC_BITS = 53
MIN_BITS = 53

#: Environment variable overriding the default solver precision (in bits).
PRECISION_ENV_VAR = "LNTERM_PRECISION_BITS"


def default_bits() -> int:
    """Default mantissa width in bits, honoring the environment override."""
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None:
        return DEFAULT_SOLVER_BITS
    try:
        bits = int(raw)
    except ValueError as exc:
        raise ValueError(
            f"{PRECISION_ENV_VAR} must be an integer, got {raw!r}"
        ) from exc
    _check_bits(bits)
    return bits


def _check_bits(bits: int) -> None:
    if bits < MIN_BITS:
        raise ValueError(f"precision_bits must be >= {MIN_BITS}, got {bits}")


@contextmanager
def working_bits(bits: int):
    """Run the enclosed block with mpmath arithmetic at ``bits`` mantissa bits."""
    _check_bits(bits)
    with mpmath.mp.workprec(int(bits)):
        yield


def wide(x, bits: int | None = None) -> WideReal:
    """Construct a WideReal from an int, float, decimal string or WideReal.

    Strings are parsed at the requested precision (default: `default_bits`),
    so decimal representations survive a round trip through text.
    """
    if isinstance(x, mpf):
        return x
    if isinstance(x, str):
        with working_bits(bits if bits is not None else default_bits()):
            return mpf(x)
    return mpf(x)


def to_double(x) -> float:
    """Explicit, saturating conversion to a Python float.

    Values beyond the double exponent range map to +-inf / 0.0 rather than
    raising, so callers can hand extended-precision results to double-only
    consumers without spurious failures.
    """
    return float(x)


def decimal_digits(bits: int) -> int:
    """Decimal digits sufficient to reproduce a ``bits``-bit float exactly."""
    return mpmath.libmp.prec_to_dps(bits) + 3


def wide_str(x: WideReal, digits: int | None = None, bits: int | None = None) -> str:
    """Decimal-string form of a WideReal.

    With no arguments the string is exact for values produced at
    `default_bits`; pass ``digits`` for a fixed shorter form (e.g. CSV
    export at 40 significant digits).
    """
    if digits is None:
        digits = decimal_digits(bits if bits is not None else default_bits())
    return mpmath.nstr(x, digits, strip_zeros=False)
