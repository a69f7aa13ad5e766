"""Variable exponent fields p(x) sampled at mesh nodes.

An ExponentField is a passive container: it may hold invalid data, and
validate() reports exactly which admissibility inequalities fail. The
critical Sobolev exponent uses math.inf as its only infinity sentinel;
the finite/at-infinity split is a branch, never a large float.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .expressions import compile_expression

__all__ = [
    "ExponentField",
    "ExponentSummary",
    "validate",
    "conjugate",
    "sobolev_critical",
    "field_from_config_value",
]


@dataclass(frozen=True)
class ExponentField:
    """Nodal samples of an exponent function plus the ambient dimension N."""

    values: np.ndarray
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 1:
            raise ConfigurationError("exponent values must be a 1-d nodal array")
        if int(self.dimension) < 1:
            raise ConfigurationError("ambient dimension must be >= 1")

    @property
    def n_nodes(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class ExponentSummary:
    p_minus: float
    p_plus: float
    p_hat_star: float  # math.inf when p_minus >= dimension
    valid: bool
    violations: tuple = field(default_factory=tuple)

    def to_dict(self):
        phs = self.p_hat_star
        return {
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "p_hat_star": "inf" if math.isinf(phs) else phs,
            "valid": self.valid,
            "violations": list(self.violations),
        }


def validate(field_):
    """Summarize an exponent field and list every violated admissibility rule.

    Rules: all values finite, p- > 1, and p+ < p_hat_star where
    p_hat_star = N p- / (N - p-) if p- < N else infinity.
    """
    vals = field_.values
    if vals.size == 0:
        raise ConfigurationError("empty exponent field")
    violations = []
    finite = np.isfinite(vals)
    if not finite.all():
        violations.append("values finite")
        vals = vals[finite]
        if vals.size == 0:
            return ExponentSummary(math.nan, math.nan, math.nan, False,
                                   tuple(violations))
    p_minus = float(vals.min())
    p_plus = float(vals.max())
    n = float(field_.dimension)
    if p_minus < n:
        p_hat_star = n * p_minus / (n - p_minus)
    else:
        p_hat_star = math.inf
    if not p_minus > 1.0:
        violations.append("p- > 1")
    if not p_plus < p_hat_star:
        violations.append("p+ < p_hat_star")
    return ExponentSummary(p_minus, p_plus, p_hat_star,
                           len(violations) == 0, tuple(violations))


def conjugate(field_):
    """Nodewise Holder conjugate p'(x) = p(x) / (p(x) - 1)."""
    summary = validate(field_)
    if not summary.valid and "p- > 1" in summary.violations:
        raise ConfigurationError(
            f"conjugate needs p(x) > 1 everywhere, got p- = {summary.p_minus}"
        )
    if "values finite" in summary.violations:
        raise ConfigurationError("conjugate needs a finite exponent field")
    vals = field_.values
    return ExponentField(vals / (vals - 1.0), field_.dimension)


def sobolev_critical(field_):
    """Nodewise critical exponent p*(x); math.inf where p(x) >= N."""
    vals = field_.values
    if vals.size == 0:
        raise ConfigurationError("empty exponent field")
    if not np.isfinite(vals).all():
        raise ConfigurationError("critical exponent needs a finite field")
    n = float(field_.dimension)
    out = np.full_like(vals, math.inf)
    below = vals < n
    out[below] = n * vals[below] / (n - vals[below])
    return ExponentField(out, field_.dimension)


def field_from_config_value(value, coords, dimension):
    """Build an ExponentField from a config-style declaration.

    value: a number, an expression string over x and y, or a 1-d array of
    nodal values matching coords. coords has shape (n_nodes, dim).
    """
    coords = np.asarray(coords, float)
    n_nodes = coords.shape[0]
    if isinstance(value, (list, tuple, np.ndarray)):
        arr = np.asarray(value, dtype=float)
        if arr.shape != (n_nodes,):
            raise ConfigurationError(
                f"nodewise exponent array has length {arr.size}, mesh has "
                f"{n_nodes} nodes"
            )
        return ExponentField(arr, dimension)
    expr = compile_expression(value, allow_t=False)
    x = coords[:, 0]
    y = coords[:, 1] if coords.shape[1] > 1 else np.zeros_like(x)
    return ExponentField(expr(x=x, y=y), dimension)
