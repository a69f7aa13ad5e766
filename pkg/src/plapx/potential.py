"""Piecewise-smooth potentials j(x, t) and their Clarke subdifferential data.

A potential is a finite ordered list of pieces, each a smooth closed-form
expression over (x, y, t) on a t-interval; consecutive pieces share a
breakpoint where j stays continuous. Between breakpoints the Clarke interval
is the single classical derivative; at a breakpoint it is the convex hull of
the two one-sided derivatives, both evaluated symbolically so hull endpoints
are exact.

The hypothesis checkers (growth bound, asymptotic tail ratio, near-zero
ratio, tail negativity) are reporters: they scan deterministic sample grids,
record the worst value with its location, and return a verdict. They never
abort a solve.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .exponent import validate
from .expressions import compile_expression

__all__ = [
    "Piece", "PotentialSpec", "ClarkeInterval", "CheckReport",
    "eval_j", "eval_dj", "clarke_interval", "clarke_bounds", "generalized_dd",
    "sampled_dd_estimate", "builtin_j1", "check_growth",
    "check_asymptotic_iv", "check_h1", "check_h2",
]

CONTINUITY_TOL = 1e-10
RATIO_SLACK = 1e-3  # absolute slack on asymptotic ratio verdicts


@dataclass(frozen=True)
class Piece:
    t_lo: float
    t_hi: float
    text: str
    expr: object = field(repr=False, compare=False, default=None)
    dexpr: object = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class ClarkeInterval:
    lower: float
    upper: float

    def contains(self, v, tol=0.0):
        return self.lower - tol <= v <= self.upper + tol


def _default_sample_coords():
    xs = np.linspace(-1.0, 1.0, 9)
    xg, yg = np.meshgrid(xs, xs, indexing="xy")
    return np.column_stack([xg.ravel(), yg.ravel()])


def _split_coords(coords, m=None):
    """Normalize coordinate input to matching (x, y) arrays."""
    if coords is None:
        coords = 0.0
    arr = np.asarray(coords, dtype=float)
    if arr.ndim == 0:
        x = arr.reshape(1)
        y = np.zeros(1)
    elif arr.ndim == 1:
        x, y = arr, np.zeros_like(arr)
    elif arr.ndim == 2 and arr.shape[1] == 1:
        x, y = arr[:, 0], np.zeros(arr.shape[0])
    elif arr.ndim == 2 and arr.shape[1] == 2:
        x, y = arr[:, 0], arr[:, 1]
    else:
        raise ConfigurationError(f"cannot interpret coordinates of shape {arr.shape}")
    if m is not None and x.shape[0] not in (1, m):
        raise ConfigurationError(
            f"{x.shape[0]} coordinates for {m} state values")
    return x, y


class PotentialSpec:
    """Ordered pieces covering the whole real line in t."""

    def __init__(self, pieces, name="custom", declared=None):
        if not pieces:
            raise ConfigurationError("potential needs at least one piece")
        self.name = str(name)
        self.declared = dict(declared or {})
        self.pieces = tuple(pieces)
        if self.pieces[0].t_lo != -math.inf or self.pieces[-1].t_hi != math.inf:
            raise ConfigurationError("pieces must cover all of R in t")
        bps = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            if left.t_hi != right.t_lo:
                raise ConfigurationError(
                    f"pieces are not contiguous at t = {left.t_hi} / {right.t_lo}")
            if not math.isfinite(left.t_hi):
                raise ConfigurationError("interior breakpoints must be finite")
            bps.append(left.t_hi)
        if bps != sorted(bps):
            raise ConfigurationError("breakpoints must increase")
        self.breakpoints = np.asarray(bps, dtype=float)
        self._self_check()

    @classmethod
    def from_pieces(cls, piece_defs, name="custom", declared=None,
                    parameters=None):
        pieces = []
        for lo, hi, text in piece_defs:
            expr = compile_expression(text, allow_t=True, parameters=parameters)
            pieces.append(Piece(float(lo), float(hi), expr.text.strip()
                                if isinstance(text, str) else expr.text,
                                expr, expr.diff_t()))
        return cls(pieces, name=name, declared=declared)

    @classmethod
    def smooth(cls, text, name="smooth", declared=None, parameters=None):
        return cls.from_pieces([(-math.inf, math.inf, text)], name=name,
                               declared=declared, parameters=parameters)

    # -- evaluation ----------------------------------------------------------

    def _piece_of(self, t):
        return np.searchsorted(self.breakpoints, t, side="right")

    def _eval_by_piece(self, funcs, x, y, t):
        t = np.asarray(t, dtype=float)
        idx = self._piece_of(t)
        out = np.empty_like(t)
        for k in range(len(self.pieces)):
            mask = idx == k
            if not mask.any():
                continue
            xk = x if x.shape[0] == 1 else x[mask]
            yk = y if y.shape[0] == 1 else y[mask]
            out[mask] = funcs[k](x=xk, y=yk, t=t[mask])
        return out

    def evaluate(self, coords, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, y = _split_coords(coords, t.shape[0])
        return self._eval_by_piece([pc.expr for pc in self.pieces], x, y, t)

    def derivative(self, coords, t):
        """Classical derivative of the active piece (off breakpoints)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, y = _split_coords(coords, t.shape[0])
        return self._eval_by_piece([pc.dexpr for pc in self.pieces], x, y, t)

    def clarke_bounds(self, coords, t):
        """Vectorized Clarke interval endpoints (lo, hi) at nodal states."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, y = _split_coords(coords, t.shape[0])
        lo = self._eval_by_piece([pc.dexpr for pc in self.pieces], x, y, t)
        hi = lo.copy()
        if self.breakpoints.size:
            pos = np.searchsorted(self.breakpoints, t, side="left")
            inb = pos < self.breakpoints.size
            hit = np.zeros_like(inb)
            hit[inb] = self.breakpoints[pos[inb]] == t[inb]
            if hit.any():
                hit_idx = np.where(hit)[0]
                for i in hit_idx:
                    k = int(pos[i])  # left piece k, right piece k + 1
                    xi = x[0:1] if x.shape[0] == 1 else x[i:i + 1]
                    yi = y[0:1] if y.shape[0] == 1 else y[i:i + 1]
                    dl = float(self.pieces[k].dexpr(x=xi, y=yi, t=t[i:i + 1])[0])
                    dr = float(self.pieces[k + 1].dexpr(x=xi, y=yi, t=t[i:i + 1])[0])
                    lo[i] = min(dl, dr)
                    hi[i] = max(dl, dr)
        return lo, hi

    # -- validation ----------------------------------------------------------

    def _self_check(self):
        self.validate_on(_default_sample_coords())

    def validate_on(self, coords):
        """Check j(x, 0) = 0 and continuity at breakpoints on given coords."""
        x, y = _split_coords(coords)
        zero = np.zeros_like(x)
        at0 = self.pieces[int(self._piece_of(np.zeros(1))[0])].expr(x=x, y=y, t=zero)
        if np.max(np.abs(at0)) > 1e-12:
            raise ConfigurationError(
                f"potential {self.name!r} violates j(x, 0) = 0, worst "
                f"|j| = {float(np.max(np.abs(at0))):.3e}")
        for k, b in enumerate(self.breakpoints):
            tb = np.full_like(x, float(b))
            left = self.pieces[k].expr(x=x, y=y, t=tb)
            right = self.pieces[k + 1].expr(x=x, y=y, t=tb)
            gap = float(np.max(np.abs(left - right)))
            if gap > CONTINUITY_TOL * max(1.0, float(np.max(np.abs(left)))):
                raise ConfigurationError(
                    f"potential {self.name!r} is discontinuous at t = {b} "
                    f"(gap {gap:.3e})")

    def describe(self):
        return {
            "name": self.name,
            "pieces": [[pc.t_lo, pc.t_hi, pc.text] for pc in self.pieces],
            "breakpoints": [float(b) for b in self.breakpoints],
            "declared": {k: v for k, v in sorted(self.declared.items())},
        }


# ---------------------------------------------------------------------------
# functional-style API
# ---------------------------------------------------------------------------

def eval_j(spec, x, t):
    out = spec.evaluate(x, t)
    return float(out[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def eval_dj(spec, x, t):
    out = spec.derivative(x, t)
    return float(out[0]) if np.isscalar(t) or np.asarray(t).ndim == 0 else out


def clarke_interval(spec, x, t):
    lo, hi = spec.clarke_bounds(x, np.asarray([float(t)]))
    return ClarkeInterval(float(lo[0]), float(hi[0]))


def clarke_bounds(spec, coords, t):
    return spec.clarke_bounds(coords, t)


def generalized_dd(spec, x, t, direction):
    """Generalized directional derivative j0(x, t; direction).

    For piecewise-C1 potentials this is the support function of the Clarke
    interval: max(lower * direction, upper * direction).
    """
    iv = clarke_interval(spec, x, t)
    d = float(direction)
    return max(iv.lower * d, iv.upper * d)


def sampled_dd_estimate(spec, x, t, direction, rng, decades=6, n_offsets=200):
    """Direct sampled estimate of the limsup difference quotient.

    Scans shrinking step sizes over the given number of decades with random
    base points near t, and returns the largest quotient seen at the two
    smallest step sizes. Diagnostic cross-check for generalized_dd.
    """
    d = float(direction)
    best = -math.inf
    for k in range(decades - 1, decades + 1):
        lam = 10.0 ** (-k)
        ys = t + rng.uniform(-4.0 * lam, 4.0 * lam, n_offsets)
        ys = np.append(ys, t)
        q = (spec.evaluate(x, ys + lam * d) - spec.evaluate(x, ys)) / lam
        best = max(best, float(np.max(q)))
    return best


# ---------------------------------------------------------------------------
# built-in two-piece example potential
# ---------------------------------------------------------------------------

def builtin_j1(nu, h, r_plus, declared=None):
    """The bundled kinked potential.

    -nu |t|^{h(x)} inside |t| <= 1 and -|t|^{r_plus} - nu + 1 outside;
    continuous at the breakpoints t = -1, 1. h may be a constant or an
    expression over x, y.
    """
    nu = float(nu)
    r_plus = float(r_plus)
    if nu <= 0.0:
        raise ConfigurationError("j1 needs nu > 0")
    h_text = h if isinstance(h, str) else repr(float(h))
    h_expr = compile_expression(h_text, allow_t=False)
    tail = f"-abs(t)^({repr(r_plus)}) - ({repr(nu)}) + 1"
    mid = f"-({repr(nu)})*abs(t)^({h_text})"
    info = {"nu": nu, "h": h_text, "r_plus": r_plus}
    if declared:
        info.update(declared)
    spec = PotentialSpec.from_pieces(
        [(-math.inf, -1.0, tail), (-1.0, 1.0, mid), (1.0, math.inf, tail)],
        name="j1", declared=info)
    # ordering within the potential itself: 1 < h(x) <= h+ < r_plus
    sample_x, sample_y = _split_coords(_default_sample_coords())
    h_vals = h_expr(x=sample_x, y=sample_y)
    if np.min(h_vals) <= 1.0:
        raise ConfigurationError("j1 needs h(x) > 1 everywhere")
    if np.max(h_vals) >= r_plus:
        raise ConfigurationError("j1 needs h+ < r_plus")
    return spec


# ---------------------------------------------------------------------------
# hypothesis checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    decisive: float       # the quantity compared against the threshold
    threshold: float
    slack: float
    worst_t: float
    worst_x: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"name": self.name, "passed": self.passed,
               "decisive": self.decisive, "threshold": self.threshold,
               "slack": self.slack, "worst_t": self.worst_t,
               "worst_x": self.worst_x}
        out.update({k: v for k, v in sorted(self.details.items())})
        return out


def _signed_geomspace(t_min, t_max, n):
    g = np.geomspace(t_min, t_max, n)
    return np.concatenate([-g[::-1], g])


def _outer_scan(spec, coords, t_grid, func):
    """Evaluate func over the (coords x t_grid) product; track the max.

    func(xcol, ycol, tcol, lo, hi, jvals) -> per-sample scores.
    Returns (max_score, t_at_max, x_at_max, scores_by_t_max).
    """
    x, y = _split_coords(coords)
    n, m = x.shape[0], t_grid.shape[0]
    xx = np.repeat(x, m)
    yy = np.repeat(y, m)
    tt = np.tile(t_grid, n)
    lo, hi = spec.clarke_bounds(np.column_stack([xx, yy]), tt)
    jv = spec.evaluate(np.column_stack([xx, yy]), tt)
    scores = func(xx, yy, tt, lo, hi, jv)
    k = int(np.argmax(scores))
    per_t = scores.reshape(n, m).max(axis=0)
    return float(scores[k]), float(tt[k]), float(xx[k]), per_t


def check_growth(spec, c1, r_field, coords, t_grid=None, p_summary=None):
    """Pointwise bound |v| <= c1 |t|^{r(x)-1} for v in the Clarke interval.

    Reports the worst ratio |v| / bound over the scan grid. The exponent
    ordering max p < min r <= r(x) < critical is enforced first when a
    p-field summary is supplied.
    """
    c1 = float(c1)
    r_summary = validate(r_field)
    if p_summary is not None:
        if not p_summary.p_plus < r_summary.p_minus:
            raise ConfigurationError(
                "growth-bound exponent ordering violated: requires "
                f"max p < min r, got p+ = {p_summary.p_plus} and "
                f"r- = {r_summary.p_minus}")
        if not r_summary.p_plus < p_summary.p_hat_star:
            raise ConfigurationError(
                "growth-bound exponent ordering violated: requires "
                f"r(x) < critical exponent {p_summary.p_hat_star}")
    if t_grid is None:
        t_grid = _signed_geomspace(1e-6, 10.0, 160)
    coords = np.asarray(coords, dtype=float)
    r_nodes = np.asarray(r_field.values, dtype=float)
    x, _ = _split_coords(coords)
    if r_nodes.shape[0] != x.shape[0]:
        raise ConfigurationError("r field does not match the sample coords")
    m = t_grid.shape[0]
    r_rep = np.repeat(r_nodes, m)

    def score(xx, yy, tt, lo, hi, jv):
        vmax = np.maximum(np.abs(lo), np.abs(hi))
        bound = c1 * np.abs(tt) ** (r_rep - 1.0)
        return vmax / bound

    worst, t_at, x_at, _ = _outer_scan(spec, coords, t_grid, score)
    return CheckReport(
        name="growth-bound", passed=bool(worst <= 1.0 + 1e-12),
        decisive=worst, threshold=1.0, slack=float(1.0 - worst),
        worst_t=t_at, worst_x=x_at,
        details={"c1": c1, "t_min": float(np.min(np.abs(t_grid))),
                 "t_max": float(np.max(np.abs(t_grid)))})


def check_asymptotic_iv(spec, c, r_field, coords, t_max=1e6, n_grid=600,
                        slack=RATIO_SLACK):
    """Tail ratio max_{v} (v t - j(x, t)) / |t|^{r(x)} <= -c + slack.

    The running max is taken over the outer half of a geometric grid
    (|t| >= t_max / 2). Declared constants are echoed informationally; the
    verdict depends only on the sampled ratios.
    """
    c = float(c)
    coords = np.asarray(coords, dtype=float)
    r_nodes = np.asarray(r_field.values, dtype=float)
    t_grid = _signed_geomspace(1.0, t_max, n_grid)
    m = t_grid.shape[0]
    r_rep = np.repeat(r_nodes, m)
    tail = np.abs(t_grid) >= t_max / 2.0

    def score(xx, yy, tt, lo, hi, jv):
        best_vt = np.maximum(lo * tt, hi * tt)
        ratio = (best_vt - jv) / np.abs(tt) ** r_rep
        # push non-tail samples out of the argmax
        return np.where(np.tile(tail, coords.shape[0]), ratio, -np.inf)

    worst, t_at, x_at, _ = _outer_scan(spec, coords, t_grid, score)
    details = {"c": c, "t_max": float(t_max)}
    c1 = spec.declared.get("c1")
    if c1 is not None:
        details["c_above_2c1"] = bool(c > 2.0 * float(c1))
    return CheckReport(
        name="asymptotic-tail", passed=bool(worst <= -c + slack),
        decisive=worst, threshold=-c, slack=float((-c + slack) - worst),
        worst_t=t_at, worst_x=x_at, details=details)


def check_h1(spec, nu, h_field, coords, slack=RATIO_SLACK, p_summary=None):
    """Near-zero ratio j(x, t) / |t|^{h(x)} <= -nu + slack as |t| -> 0."""
    nu = float(nu)
    h_summary = validate(h_field)
    if not h_summary.p_minus > 1.0:
        raise ConfigurationError(
            f"near-zero exponent ordering violated: requires h(x) > 1, got "
            f"h- = {h_summary.p_minus}")
    if p_summary is not None and not h_summary.p_plus < p_summary.p_minus:
        raise ConfigurationError(
            "near-zero exponent ordering violated: requires h+ < min p, got "
            f"h+ = {h_summary.p_plus} and p- = {p_summary.p_minus}")
    coords = np.asarray(coords, dtype=float)
    h_nodes = np.asarray(h_field.values, dtype=float)
    t_grid = _signed_geomspace(1e-8, 1e-1, 300)
    m = t_grid.shape[0]
    h_rep = np.repeat(h_nodes, m)
    near = np.abs(t_grid) <= 1e-7

    def score(xx, yy, tt, lo, hi, jv):
        ratio = jv / np.abs(tt) ** h_rep
        return np.where(np.tile(near, coords.shape[0]), ratio, -np.inf)

    worst, t_at, x_at, per_t = _outer_scan(spec, coords, t_grid, score)

    def full_score(xx, yy, tt, lo, hi, jv):
        return jv / np.abs(tt) ** h_rep

    grid_worst, _, _, _ = _outer_scan(spec, coords, t_grid, full_score)
    return CheckReport(
        name="near-zero-ratio", passed=bool(worst <= -nu + slack),
        decisive=worst, threshold=-nu, slack=float((-nu + slack) - worst),
        worst_t=t_at, worst_x=x_at,
        details={"nu": nu, "grid_max_ratio": grid_worst})


def check_h2(spec, mu, r_field, coords, t_max=1e6, n_grid=600,
             slack=RATIO_SLACK):
    """Tail negativity j(x, t) / |t|^{r(x)} <= -mu + slack for large |t|."""
    mu = float(mu)
    coords = np.asarray(coords, dtype=float)
    r_nodes = np.asarray(r_field.values, dtype=float)
    t_grid = _signed_geomspace(1.0, t_max, n_grid)
    m = t_grid.shape[0]
    r_rep = np.repeat(r_nodes, m)
    tail = np.abs(t_grid) >= t_max / 2.0

    def score(xx, yy, tt, lo, hi, jv):
        ratio = jv / np.abs(tt) ** r_rep
        return np.where(np.tile(tail, coords.shape[0]), ratio, -np.inf)

    worst, t_at, x_at, _ = _outer_scan(spec, coords, t_grid, score)
    return CheckReport(
        name="tail-negativity", passed=bool(worst <= -mu + slack),
        decisive=worst, threshold=-mu, slack=float((-mu + slack) - worst),
        worst_t=t_at, worst_x=x_at,
        details={"mu": mu, "t_max": float(t_max)})
