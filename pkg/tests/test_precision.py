import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lnterm import default_bits, to_double, wide, working_bits
from lnterm.precision import PRECISION_ENV_VAR, decimal_digits, wide_str

finite = st.floats(
    min_value=-1e12, max_value=1e12, allow_nan=False, allow_infinity=False
)


@given(finite, finite)
@settings(max_examples=200, deadline=None)
def test_wide_arithmetic_matches_double(a, b):
    with working_bits(256):
        s = to_double(wide(a) + wide(b))
        p = to_double(wide(a) * wide(b))
    assert s == pytest.approx(a + b, rel=1e-15, abs=1e-300)
    assert p == pytest.approx(a * b, rel=1e-15, abs=1e-300)


def test_wide_arithmetic_deterministic():
    with working_bits(128):
        x = wide("0.1") / wide(3)
        y = wide("0.1") / wide(3)
    assert x == y


def test_to_double_saturates():
    with working_bits(256):
        huge = mpmath.exp(wide(1000))
        tiny = mpmath.exp(wide(-1000))
    assert to_double(huge) == math.inf
    assert to_double(tiny) == 0.0
    assert to_double(-huge) == -math.inf


def test_wide_str_round_trip():
    with working_bits(256):
        x = wide(1) / wide(7)
    s = wide_str(x, bits=256)
    y = wide(s, bits=256)
    assert x == y


def test_decimal_digits_cover_precision():
    assert decimal_digits(256) >= 78


def test_minimum_bits_enforced():
    with pytest.raises(ValueError):
        with working_bits(10):
            pass


def test_env_var_overrides_default(monkeypatch):
    monkeypatch.setenv(PRECISION_ENV_VAR, "192")
    assert default_bits() == 192
    monkeypatch.setenv(PRECISION_ENV_VAR, "not-a-number")
    with pytest.raises(ValueError):
        default_bits()
    monkeypatch.delenv(PRECISION_ENV_VAR)
    assert default_bits() == 256
