"""Small closed-form expression grammar for config files.

Grammar: + - * / ^ (caret means power), parentheses, numeric literals,
the coordinate variables x and y, and (for potentials) the state variable t.
A handful of smooth single-argument functions are allowed. Anything else in
an expression string is rejected with a ConfigurationError.

Expressions are parsed once with sympy and lambdified to vectorized numpy
callables; the t-derivative of potential pieces is produced symbolically so
one-sided slopes at breakpoints are exact.
"""

import numbers

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ConfigurationError

__all__ = ["CompiledExpression", "compile_expression"]

X = sympy.Symbol("x", real=True)
Y = sympy.Symbol("y", real=True)
T = sympy.Symbol("t", real=True)

_FUNCTIONS = {
    "abs": sympy.Abs,
    "Abs": sympy.Abs,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "tan": sympy.tan,
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "pi": sympy.pi,
}

_TRANSFORMS = standard_transformations + (convert_xor,)

# constructors the tokenizer emits for literals and names; unknown names
# become Symbols and are rejected by the free-symbol check afterwards
_PARSE_GLOBALS = dict(_FUNCTIONS)
_PARSE_GLOBALS.update({
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
})


class CompiledExpression:
    """A parsed expression plus its vectorized evaluator.

    The evaluator broadcasts over (x, y, t) arrays; variables the expression
    does not mention are simply ignored.
    """

    def __init__(self, text, expr):
        self.text = text
        self.expr = expr
        self._func = sympy.lambdify((X, Y, T), expr, modules="numpy")

    def __repr__(self):
        return f"CompiledExpression({self.text!r})"

    def __call__(self, x=0.0, y=0.0, t=0.0):
        x, y, t = np.asarray(x, float), np.asarray(y, float), np.asarray(t, float)
        out = self._func(x, y, t)
        # lambdify returns a bare scalar for constant expressions
        shape = np.broadcast_shapes(x.shape, y.shape, t.shape)
        out = np.asarray(out, dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).copy()
        return out

    def diff_t(self):
        return CompiledExpression(f"d/dt({self.text})", sympy.diff(self.expr, T))

    def is_constant(self):
        return not self.expr.free_symbols


def compile_expression(text, allow_t=False, parameters=None):
    """Parse ``text`` into a CompiledExpression.

    parameters: optional mapping name -> number, substituted at parse time so
    config constants like nu can appear inside piece formulas.
    """
    if isinstance(text, numbers.Number):
        return CompiledExpression(repr(float(text)), sympy.Float(float(text)))
    if not isinstance(text, str) or not text.strip():
        raise ConfigurationError(f"empty or non-string expression: {text!r}")

    local = {"x": X, "y": Y}
    if allow_t:
        local["t"] = T
    if parameters:
        for name, value in parameters.items():
            if name in local:
                raise ConfigurationError(
                    f"parameter name {name!r} collides with a variable"
                )
            local[name] = sympy.Float(float(value))

    try:
        expr = parse_expr(
            text,
            local_dict=local,
            global_dict=dict(_PARSE_GLOBALS),
            transformations=_TRANSFORMS,
            evaluate=True,
        )
    except (SyntaxError, TypeError, ValueError, AttributeError, NameError) as exc:
        raise ConfigurationError(f"cannot parse expression {text!r}: {exc}") from exc

    allowed = {X, Y} | ({T} if allow_t else set())
    stray = expr.free_symbols - allowed
    if stray:
        names = ", ".join(sorted(str(s) for s in stray))
        raise ConfigurationError(
            f"expression {text!r} uses unknown names: {names}"
        )
    return CompiledExpression(text, expr)
