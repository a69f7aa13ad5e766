"""Modulars, Luxemburg norms, and the norm/modular comparison reports.

The scalar Luxemburg norm solves phi(u / lam) = 1 by bracketed bisection
(relative tolerance 1e-12, geometric bracket growth from lam = 1). The norm
of the zero function is 0 by convention, matching the infimum over the empty
constraint set.

Two Sobolev-type norms appear:

  sobolev_norm          ||u||_{p(x)} + ||grad u||_{p(x)}   (the sum norm)
  sobolev_luxemburg_norm  the root of Phi(u / lam) = 1

The power comparison items of the norm/modular lemma hold exactly for the
norm built from the modular itself, so the Sobolev report evaluates them
with the second norm and additionally records the equivalence bracket
sum/2 <= modular norm <= sum relating the two.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, NumericsError
from .exponent import conjugate, validate
from .mesh import GridFunction

__all__ = [
    "modular_lp",
    "luxemburg_norm",
    "luxemburg_norm_of_gradient",
    "sobolev_modular",
    "sobolev_norm",
    "sobolev_luxemburg_norm",
    "check_norm_modular",
    "check_sobolev_modular",
    "holder_pairing",
    "poincare_ratio",
    "batch_sobolev_norms",
    "run_lemma_sweep",
    "BoundCheck",
    "ModularReport",
    "SobolevReport",
    "HolderReport",
]

LUX_RTOL = 1e-12
LUX_MAXIT = 200
SIDE_TOL = 1e-10


def _fields_at_qp(u, p):
    if not isinstance(u, GridFunction):
        raise ConfigurationError("u must be a GridFunction")
    mesh = u.mesh
    if p.n_nodes != mesh.n_nodes:
        raise ConfigurationError(
            f"exponent field has {p.n_nodes} nodes, mesh has {mesh.n_nodes}")
    return mesh, mesh.values_at_qp(p.values)


def _lux_from_samples(absvals, pvals, weights):
    if not np.any(absvals):
        return 0.0
    root = _kernels.luxemburg_root(
        np.ascontiguousarray(absvals, float),
        np.ascontiguousarray(pvals, float),
        np.ascontiguousarray(weights, float),
        LUX_RTOL, LUX_MAXIT)
    if root <= 0.0:
        raise NumericsError("Luxemburg bisection failed to converge")
    return float(root)


def modular_lp(u, p):
    """Integral of |u|^{p(x)} over the domain."""
    mesh, p_qp = _fields_at_qp(u, p)
    return float(_kernels.modular_sum(np.abs(u.values_at_qp()), p_qp,
                                      mesh.qp_weights))


def luxemburg_norm(u, p):
    mesh, p_qp = _fields_at_qp(u, p)
    return _lux_from_samples(np.abs(u.values_at_qp()), p_qp, mesh.qp_weights)


def luxemburg_norm_of_gradient(u, p):
    """Luxemburg norm of |grad u| (Euclidean magnitude at quadrature points)."""
    mesh, p_qp = _fields_at_qp(u, p)
    gmag = _kernels.grad_mag(u.grads_at_qp())
    return _lux_from_samples(gmag, p_qp, mesh.qp_weights)


def sobolev_modular(u, p):
    """Phi(u) = integral of |grad u|^{p(x)} + |u|^{p(x)}."""
    mesh, p_qp = _fields_at_qp(u, p)
    w = mesh.qp_weights
    gmag = _kernels.grad_mag(u.grads_at_qp())
    return float(_kernels.modular_sum(gmag, p_qp, w)
                 + _kernels.modular_sum(np.abs(u.values_at_qp()), p_qp, w))


def sobolev_norm(u, p):
    """Sum norm ||u||_{p(x)} + ||grad u||_{p(x)}."""
    return luxemburg_norm(u, p) + luxemburg_norm_of_gradient(u, p)


def sobolev_luxemburg_norm(u, p):
    """Root of Phi(u / lam) = 1; the norm generated by the Sobolev modular."""
    mesh, p_qp = _fields_at_qp(u, p)
    gmag = _kernels.grad_mag(u.grads_at_qp())
    absvals = np.concatenate([np.abs(u.values_at_qp()), gmag], axis=0)
    pvals = np.concatenate([p_qp, p_qp], axis=0)
    weights = mesh.qp_weights
    return _lux_from_samples(absvals, pvals, weights)


# ---------------------------------------------------------------------------
# comparison reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundCheck:
    check_id: str
    lhs: float
    rhs: float
    holds: bool
    slack: float  # rhs - lhs; negative means violated by that amount

    def to_dict(self):
        return {"id": self.check_id, "lhs": self.lhs, "rhs": self.rhs,
                "holds": self.holds, "slack": self.slack}


@dataclass(frozen=True)
class ModularReport:
    norm: float
    modular: float
    side: str  # "below", "at", "above" relative to 1
    checks: tuple

    def all_hold(self):
        return all(c.holds for c in self.checks)

    def worst_slack(self):
        return min((c.slack for c in self.checks), default=0.0)

    def to_dict(self):
        return {"norm": self.norm, "modular": self.modular, "side": self.side,
                "checks": [c.to_dict() for c in self.checks]}


@dataclass(frozen=True)
class SobolevReport:
    modular: float
    norm: float       # modular-generated norm used in the power comparisons
    sum_norm: float   # || . ||_{p(x)} + || grad . ||_{p(x)}
    side: str
    checks: tuple

    def all_hold(self):
        return all(c.holds for c in self.checks)

    def worst_slack(self):
        return min((c.slack for c in self.checks), default=0.0)

    def to_dict(self):
        return {"modular": self.modular, "norm": self.norm,
                "sum_norm": self.sum_norm, "side": self.side,
                "checks": [c.to_dict() for c in self.checks]}


def _side_of(value):
    if abs(value - 1.0) <= SIDE_TOL:
        return "at"
    return "below" if value < 1.0 else "above"


def _ineq(check_id, lhs, rhs, tol):
    # tol is relative: the compared quantities are powers of a bisection
    # root, so their float noise scales with their magnitude
    cushion = tol * (1.0 + max(abs(lhs), abs(rhs)))
    return BoundCheck(check_id, float(lhs), float(rhs),
                      bool(lhs <= rhs + cushion), float(rhs - lhs))


def _power_items(norm, modular, unit_modular, p_minus, p_plus, tol):
    checks = []
    if unit_modular is not None:
        gap = abs(unit_modular - 1.0)
        checks.append(BoundCheck("unit-modular", float(unit_modular), 1.0,
                                 bool(gap <= max(tol, SIDE_TOL)), -float(gap)))
    norm_side = _side_of(norm)
    mod_side = _side_of(modular)
    agree = norm_side == mod_side or "at" in (norm_side, mod_side)
    checks.append(BoundCheck("side-agreement", {"below": -1.0, "at": 0.0,
                                                "above": 1.0}[norm_side],
                             {"below": -1.0, "at": 0.0,
                              "above": 1.0}[mod_side], bool(agree), 0.0))
    if norm > 1.0 + SIDE_TOL:
        checks.append(_ineq("norm^p- <= modular", norm ** p_minus, modular, tol))
        checks.append(_ineq("modular <= norm^p+", modular, norm ** p_plus, tol))
    elif 0.0 < norm < 1.0 - SIDE_TOL:
        checks.append(_ineq("norm^p+ <= modular", norm ** p_plus, modular, tol))
        checks.append(_ineq("modular <= norm^p-", modular, norm ** p_minus, tol))
    return checks, norm_side


def check_norm_modular(u, p, tol=1e-8):
    """Luxemburg norm versus scalar modular comparison report."""
    mesh, p_qp = _fields_at_qp(u, p)
    summary = validate(p)
    w = mesh.qp_weights
    absvals = np.abs(u.values_at_qp())
    modular = float(_kernels.modular_sum(absvals, p_qp, w))
    norm = _lux_from_samples(absvals, p_qp, w)
    unit = None
    if norm > 0.0:
        unit = float(_kernels.modular_sum(absvals / norm, p_qp, w))
    checks, side = _power_items(norm, modular, unit,
                                summary.p_minus, summary.p_plus, tol)
    return ModularReport(norm, modular, side, tuple(checks))


def check_sobolev_modular(u, p, tol=1e-8):
    """Sobolev modular versus norm comparison report.

    Power items use the modular-generated norm; the equivalence item ties it
    back to the sum norm within the exact factor-2 bracket.
    """
    summary = validate(p)
    modular = sobolev_modular(u, p)
    norm = sobolev_luxemburg_norm(u, p)
    snorm = sobolev_norm(u, p)
    unit = None
    if norm > 0.0:
        mesh, p_qp = _fields_at_qp(u, p)
        w = mesh.qp_weights
        gmag = _kernels.grad_mag(u.grads_at_qp())
        unit = float(
            _kernels.modular_sum(np.abs(u.values_at_qp()) / norm, p_qp, w)
            + _kernels.modular_sum(gmag / norm, p_qp, w))
    checks, side = _power_items(norm, modular, unit,
                                summary.p_minus, summary.p_plus, tol)
    checks = list(checks)
    checks.append(_ineq("sum/2 <= modular-norm", 0.5 * snorm, norm, tol))
    checks.append(_ineq("modular-norm <= sum", norm, snorm, tol))
    return SobolevReport(modular, norm, snorm, side, tuple(checks))


@dataclass(frozen=True)
class HolderReport:
    lhs: float
    rhs: float
    factor: float
    norm_u: float
    norm_v: float
    holds: bool

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "factor": self.factor,
                "norm_u": self.norm_u, "norm_v": self.norm_v,
                "holds": self.holds}


def holder_pairing(u, v, p, tol=1e-10):
    """Check int |u v| <= (1/p- + 1/p'-) ||u||_{p(x)} ||v||_{p'(x)}."""
    mesh, p_qp = _fields_at_qp(u, p)
    if v.mesh is not mesh and v.mesh != mesh:
        raise ConfigurationError("u and v live on different meshes")
    pc = conjugate(p)
    w = mesh.qp_weights
    lhs = float(_kernels.modular_sum(
        np.abs(u.values_at_qp() * v.values_at_qp()),
        np.ones((mesh.n_cells, len(w))), w))
    p_minus = validate(p).p_minus
    pc_minus = validate(pc).p_minus
    factor = 1.0 / p_minus + 1.0 / pc_minus
    norm_u = _lux_from_samples(np.abs(u.values_at_qp()), p_qp, w)
    norm_v = _lux_from_samples(np.abs(v.values_at_qp()),
                               mesh.values_at_qp(pc.values), w)
    rhs = factor * norm_u * norm_v
    return HolderReport(lhs, rhs, factor, norm_u, norm_v,
                        bool(lhs <= rhs + tol))


def poincare_ratio(u, p):
    """||u||_{p(x)} / ||grad u||_{p(x)} for a zero-boundary u != 0."""
    if not u.has_zero_boundary:
        raise ConfigurationError("Poincare ratio needs zero boundary values")
    num = luxemburg_norm(u, p)
    if num == 0.0:
        raise ConfigurationError("Poincare ratio needs u != 0")
    den = luxemburg_norm_of_gradient(u, p)
    if den == 0.0:
        # zero-trace with zero gradient forces u = 0; reaching here is a bug
        raise AssertionError("internal invariant violation: grad u = 0 "
                             "with nonzero zero-boundary u")
    return num / den


# ---------------------------------------------------------------------------
# batched norms (path re-equalization, sphere sampling)
# ---------------------------------------------------------------------------

def _lux_roots_batch(absrows, pflat, wflat, iters=90):
    """Luxemburg roots of many sample rows at once.

    absrows: (S, M) nonnegative samples, one field per row, flattened over
    (cell, quadrature point); pflat, wflat: matching (M,) exponents and
    weights. Same bisection as the scalar kernel, run on all rows in lock
    step with a fixed iteration count, so the whole batch costs a few dozen
    matrix operations. Zero rows get norm 0.
    """
    absrows = np.asarray(absrows, dtype=float)

    def phi(lam):
        return np.einsum("sm,m->s", (absrows / lam[:, np.newaxis]) ** pflat,
                         wflat)

    S = absrows.shape[0]
    out = np.zeros(S)
    lo = np.ones(S)
    hi = np.ones(S)
    active = absrows.any(axis=1)
    if not active.any():
        return out
    for _ in range(1100):
        mask = active & (phi(hi) > 1.0)
        if not mask.any():
            break
        lo[mask] = hi[mask]
        hi[mask] *= 2.0
    for _ in range(1100):
        mask = active & (phi(lo) < 1.0)
        if not mask.any():
            break
        hi[mask] = lo[mask]
        lo[mask] *= 0.5
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        high = phi(mid) > 1.0
        lo = np.where(active & high, mid, lo)
        hi = np.where(active & ~high, mid, hi)
    out[active] = 0.5 * (lo[active] + hi[active])
    return out


def batch_sobolev_norms(mesh, p, nodal_rows):
    """Sobolev sum norms of many nodal fields in one batched bisection."""
    rows = np.asarray(nodal_rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[np.newaxis, :]
    if rows.shape[1] != mesh.n_nodes:
        raise ConfigurationError("rows do not match the mesh node count")
    S = rows.shape[0]
    # (S, n_cells, n_loc) local values -> samples at quadrature points
    local = rows[:, mesh.cells]
    vals = np.abs(np.einsum("scl,ql->scq", local, mesh.shape_vals))
    grads = np.einsum("scl,qld->scqd", local, mesh.shape_grads)
    gmag = np.sqrt(np.sum(grads * grads, axis=3))
    M = mesh.n_cells * len(mesh.qp_weights)
    pflat = mesh.values_at_qp(np.asarray(p.values, dtype=float)).ravel()
    wflat = np.tile(mesh.qp_weights, mesh.n_cells)
    stacked = np.concatenate([vals.reshape(S, M), gmag.reshape(S, M)], axis=0)
    roots = _lux_roots_batch(stacked, pflat, wflat)
    return roots[:S] + roots[S:]

# ---------------------------------------------------------------------------
# randomized verification sweep
# ---------------------------------------------------------------------------

def _sweep_fields(mesh, rng, count):
    """Random zero-boundary nodal fields with log-uniform amplitudes.

    Rough iid values exercise the norms away from any smooth special case;
    the amplitude spread 10^[-2, 2] lands norms on both sides of 1 so every
    branch of the power comparisons gets traffic.
    """
    rows = rng.standard_normal((count, mesh.n_nodes))
    rows *= (10.0 ** rng.uniform(-2.0, 2.0, size=count))[:, np.newaxis]
    rows[:, mesh.boundary_mask] = 0.0
    return rows


def _qp_flat(mesh, p, rows):
    """(S, M) |values| at quadrature points plus flat exponents/weights."""
    local = np.asarray(rows, dtype=float)[:, mesh.cells]
    vals = np.abs(np.einsum("scl,ql->scq", local, mesh.shape_vals))
    S = local.shape[0]
    M = mesh.n_cells * len(mesh.qp_weights)
    pflat = mesh.values_at_qp(np.asarray(p.values, dtype=float)).ravel()
    wflat = np.tile(mesh.qp_weights, mesh.n_cells)
    grads = np.einsum("scl,qld->scqd", local, mesh.shape_grads)
    gmag = np.sqrt(np.sum(grads * grads, axis=3))
    return vals.reshape(S, M), gmag.reshape(S, M), pflat, wflat


def _aggregate_reports(reports):
    failures = 0
    checked = 0
    worst = np.inf
    unit_gap = 0.0
    for rep in reports:
        for c in rep.checks:
            if not c.holds:
                failures += 1
            if c.check_id == "unit-modular":
                unit_gap = max(unit_gap, -c.slack)
            elif c.check_id != "side-agreement":
                checked += 1
                worst = min(worst, c.slack)
    return {
        "samples": len(reports),
        "bound_failures": failures,
        "inequalities_checked": checked,
        "worst_inequality_slack": None if np.isinf(worst) else float(worst),
        "max_unit_modular_gap": float(unit_gap),
        "passed": failures == 0,
    }


def _sequence_verdict(norms, mods, direction):
    """Co-monotone decay or divergence of norm and modular columns.

    norms, mods: (T, S) values along T scaling steps for S base fields.
    """
    dn = np.diff(norms, axis=0)
    dm = np.diff(mods, axis=0)
    if direction == "decay":
        mono = (dn < 0.0).all(axis=0) & (dm < 0.0).all(axis=0)
        limit = ((norms[-1] <= 1e-3 * norms[0])
                 & (mods[-1] <= 1e-3 * mods[0]))
    else:
        mono = (dn > 0.0).all(axis=0) & (dm > 0.0).all(axis=0)
        limit = ((norms[-1] >= 1e3 * norms[0])
                 & (mods[-1] >= 1e3 * mods[0]))
    return {
        "sequences": int(norms.shape[1]),
        "monotonicity_violations": int((~mono).sum()),
        "limit_violations": int((~limit).sum()),
        "passed": bool((mono & limit).all()),
    }


def _sequence_block(mesh, p, base_rows, steps):
    """Norm/modular co-monotonicity along u / 2^n and 2^n u."""
    S = base_rows.shape[0]
    scales_down = 2.0 ** -np.arange(steps + 1, dtype=float)
    scales_up = 2.0 ** np.arange(steps + 1, dtype=float)
    out = {}
    for space in ("lp", "sobolev"):
        per_dir = {}
        for label, scales in (("decay", scales_down),
                              ("divergence", scales_up)):
            T = len(scales)
            rows = (scales[:, np.newaxis, np.newaxis]
                    * base_rows[np.newaxis, :, :]).reshape(T * S, -1)
            vals, gmag, pflat, wflat = _qp_flat(mesh, p, rows)
            if space == "lp":
                flat, pf, wf = vals, pflat, wflat
            else:
                flat = np.concatenate([vals, gmag], axis=1)
                pf = np.concatenate([pflat, pflat])
                wf = np.concatenate([wflat, wflat])
            norms = _lux_roots_batch(flat, pf, wf).reshape(T, S)
            mods = np.einsum("sm,m->s", flat ** pf, wf).reshape(T, S)
            per_dir[label] = _sequence_verdict(norms, mods, label)
        per_dir["passed"] = (per_dir["decay"]["passed"]
                             and per_dir["divergence"]["passed"])
        out[space] = per_dir
    out["passed"] = out["lp"]["passed"] and out["sobolev"]["passed"]
    return out


def run_lemma_sweep(mesh, p, seed=0, samples=1000, tol=1e-8,
                    sequence_steps=12, sequence_bases=200):
    """Randomized sweep of the norm/modular inequality suite.

    Draws `samples` random fields and verifies, per field: the scalar
    norm/modular power comparisons, the Sobolev analogues, the pairing
    inequality against a second random field, and the zero-boundary
    norm-quotient bound. Scaled sequences u / 2^n and 2^n u check that norm
    and modular decay or diverge together. Returns a JSON-ready dict whose
    top-level "passed" is the conjunction of every block.
    """
    rng = np.random.default_rng([int(seed), 404])
    samples = int(samples)
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    fields = _sweep_fields(mesh, rng, samples)
    partners = _sweep_fields(mesh, rng, samples)

    norm_reports = []
    sob_reports = []
    for row in fields:
        u = GridFunction(mesh, row)
        norm_reports.append(check_norm_modular(u, p, tol))
        sob_reports.append(check_sobolev_modular(u, p, tol))
    norm_block = _aggregate_reports(norm_reports)
    sob_block = _aggregate_reports(sob_reports)

    holder_violations = 0
    holder_min_slack = np.inf
    for row_u, row_v in zip(fields, partners):
        rep = holder_pairing(GridFunction(mesh, row_u),
                             GridFunction(mesh, row_v), p)
        if not rep.holds:
            holder_violations += 1
        holder_min_slack = min(holder_min_slack, rep.rhs - rep.lhs)
    holder_block = {
        "pairs": samples,
        "violations": holder_violations,
        "min_slack": float(holder_min_slack),
        "passed": holder_violations == 0,
    }

    vals, gmag, pflat, wflat = _qp_flat(mesh, p, fields)
    num = _lux_roots_batch(vals, pflat, wflat)
    den = _lux_roots_batch(gmag, pflat, wflat)
    nz = num > 0.0
    if np.any(nz & (den == 0.0)):
        raise AssertionError("internal invariant violation: grad u = 0 "
                             "with nonzero zero-boundary u")
    ratios = num[nz] / den[nz]
    poincare_block = {
        "samples": int(nz.sum()),
        "max_ratio": float(np.max(ratios)),
        "mean_ratio": float(np.mean(ratios)),
        "passed": bool(np.all(np.isfinite(ratios))),
    }

    bases = fields[:min(samples, int(sequence_bases))]
    sequences_block = _sequence_block(mesh, p, bases, int(sequence_steps))

    summary = validate(p)
    report = {
        "seed": int(seed),
        "samples": samples,
        "tolerance": tol,
        "mesh": {"dimension": mesh.dimension,
                 "extents": [list(e) for e in mesh.extents],
                 "resolution": list(mesh.resolution)},
        "exponent": {"p_minus": summary.p_minus, "p_plus": summary.p_plus},
        "norm_modular": norm_block,
        "sobolev_modular": sob_block,
        "holder": holder_block,
        "poincare": poincare_block,
        "sequences": sequences_block,
    }
    report["passed"] = bool(
        norm_block["passed"] and sob_block["passed"]
        and holder_block["passed"] and poincare_block["passed"]
        and sequences_block["passed"])
    return report
