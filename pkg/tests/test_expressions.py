import numpy as np
import pytest
from hypothesis import given, seed, strategies as st

from plapx.errors import ConfigurationError
from plapx.expressions import CompiledExpression, compile_expression

TOL = 1e-12


def test_constant_from_number():
    f = compile_expression(3.5)
    assert f.is_constant()
    assert f(x=np.linspace(0, 1, 7)).shape == (7,)
    assert np.allclose(f(x=np.linspace(0, 1, 7)), 3.5)


def test_spatial_expression_broadcasts():
    f = compile_expression("2 + 0.3*sin(pi*x)*cos(pi*y)")
    x = np.linspace(0.0, 1.0, 11)
    y = np.linspace(0.0, 1.0, 11)
    vals = f(x=x, y=y)
    ref = 2 + 0.3 * np.sin(np.pi * x) * np.cos(np.pi * y)
    assert np.allclose(vals, ref, atol=TOL)


def test_t_requires_flag():
    with pytest.raises(ConfigurationError):
        compile_expression("t**2")
    f = compile_expression("t**2", allow_t=True)
    assert abs(f(t=3.0) - 9.0) < TOL


def test_caret_means_power():
    f = compile_expression("x^3")
    assert abs(f(x=2.0) - 8.0) < TOL


def test_unknown_name_rejected():
    with pytest.raises(ConfigurationError, match="unknown names"):
        compile_expression("x + q")


def test_empty_rejected():
    with pytest.raises(ConfigurationError):
        compile_expression("   ")
    with pytest.raises(ConfigurationError):
        compile_expression(None)


def test_unparseable_rejected():
    with pytest.raises(ConfigurationError, match="cannot parse"):
        compile_expression("x +* 2")


def test_parameters_substituted():
    f = compile_expression("nu * abs(t)**h", allow_t=True,
                           parameters={"nu": 2.0, "h": 3.0})
    assert abs(f(t=-2.0) - 16.0) < TOL


def test_parameter_collision_rejected():
    with pytest.raises(ConfigurationError, match="collides"):
        compile_expression("x", parameters={"x": 1.0})


def test_diff_t_matches_symbolic():
    f = compile_expression("abs(t)**4 / 4", allow_t=True)
    df = f.diff_t()
    ts = np.linspace(-2.0, 2.0, 41)
    assert np.allclose(df(t=ts), np.sign(ts) * np.abs(ts) ** 3, atol=TOL)


def test_diff_t_of_constant_is_zero():
    f = compile_expression("7", allow_t=True)
    assert np.allclose(f.diff_t()(t=np.linspace(-1, 1, 5)), 0.0)


@seed(1)
@given(t=st.floats(min_value=-10.0, max_value=10.0))
def test_diff_t_chain_rule(t):
    f = compile_expression("sin(t**2)", allow_t=True)
    df = f.diff_t()
    assert np.allclose(df(t=t), 2 * t * np.cos(t * t), atol=1e-10)


def test_repr_round_trips_text():
    f = compile_expression("x + 1")
    assert "x + 1" in repr(f)
    assert isinstance(f, CompiledExpression)
