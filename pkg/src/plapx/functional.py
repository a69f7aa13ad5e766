"""The discretized energy, its subgradient selections, and trajectory checks.

The energy of a zero-boundary grid function u is

    R(u) = int (1/p)|grad u|^p - int (lam/p)|u|^p - int j(x, u),

all three terms integrated with the mesh quadrature. Stationarity is measured
through a nodal selection v* from the Clarke intervals: with lumped nodal
masses M the minimization of |g - M v*| over admissible selections separates
per node into a clip, giving the min-norm residual magnitude m(u) and the
weighted quantity (1 + |u|) * m(u) used as the stopping criterion.

Two gradient-like objects coexist on purpose. ``discrete_gradient`` is the
exact nodal gradient of the quadrature energy wherever the potential is
classically differentiable (the right object for line searches and
finite-difference checks), while ``min_norm_subgradient`` works with the
lumped-mass dual pairing whose per-node clip makes the minimal selection
exact. They agree up to quadrature lumping, and only the latter defines
convergence.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, NumericsError
from .exponent import ExponentField, validate
from .mesh import GridFunction, Mesh
from .modular import sobolev_norm
from .operators import pairing_vector
from .potential import PotentialSpec

__all__ = [
    "SolverParams", "ProblemConfig", "RValue", "StationarityReport",
    "R_value", "batch_R_values", "discrete_gradient", "min_norm_subgradient",
    "cerami_diagnostic",
]


@dataclass
class SolverParams:
    tol: float = 1e-6
    max_outer: int = 500
    path_points: int = 32
    multistart: int = 8
    rho: float = 0.5
    endpoint_cap: int = 60
    probe_count: int = 10000
    sphere_samples: int = 200
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    armijo_max_backtracks: int = 40
    certify_tol: float = 1e-6
    history_stride: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.path_points < 2:
            raise ConfigurationError("path needs at least 2 segments")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError("rho must lie in (0, 1)")
        if not 0.0 < self.armijo_shrink < 1.0:
            raise ConfigurationError("armijo_shrink must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 1.0:
            raise ConfigurationError("armijo_c must lie in (0, 1)")
        for name in ("max_outer", "multistart", "endpoint_cap", "probe_count",
                     "sphere_samples", "armijo_max_backtracks",
                     "history_stride"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be at least 1")

    def to_dict(self):
        return {
            "tol": self.tol, "max_outer": self.max_outer,
            "path_points": self.path_points, "multistart": self.multistart,
            "rho": self.rho, "endpoint_cap": self.endpoint_cap,
            "probe_count": self.probe_count,
            "sphere_samples": self.sphere_samples,
            "armijo_c": self.armijo_c, "armijo_shrink": self.armijo_shrink,
            "armijo_max_backtracks": self.armijo_max_backtracks,
            "certify_tol": self.certify_tol,
            "history_stride": self.history_stride, "seed": self.seed,
        }


@dataclass
class ProblemConfig:
    mesh: Mesh
    p: ExponentField
    lam: float
    potential: PotentialSpec
    params: SolverParams = field(default_factory=SolverParams)
    hypothesis: dict = field(default_factory=dict)
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lam = float(self.lam) if self.lam is not None else 0.0
        if not math.isfinite(self.lam):
            raise ConfigurationError("lambda must be finite")
        if self.p.n_nodes != self.mesh.n_nodes:
            raise ConfigurationError(
                f"exponent field has {self.p.n_nodes} values for "
                f"{self.mesh.n_nodes} mesh nodes")
        summary = validate(self.p)
        if not summary.valid:
            raise ConfigurationError(
                "exponent field is inadmissible: " + "; ".join(summary.violations))
        self.p_summary = summary
        self.potential.validate_on(self.mesh.node_coords)

    def p_at_qp(self):
        return self.mesh.values_at_qp(self.p.values)


@dataclass(frozen=True)
class RValue:
    total: float
    diffusion: float   # int (1/p) |grad u|^p
    reaction: float    # int (lam/p) |u|^p, sign carried by lam
    potential: float   # int j(x, u)

    def __float__(self):
        return self.total

    def to_dict(self):
        return {"total": self.total, "diffusion": self.diffusion,
                "reaction": self.reaction, "potential": self.potential}


def _check_state(u, config):
    if not isinstance(u, GridFunction):
        raise ConfigurationError("state must be a GridFunction")
    if u.mesh is not config.mesh and u.mesh != config.mesh:
        raise ConfigurationError("state lives on a different mesh")
    if not u.has_zero_boundary:
        raise ConfigurationError("state must vanish on the boundary")


def potential_term(u, config):
    """int j(x, u(x)) by the mesh quadrature."""
    mesh = config.mesh
    uq = u.values_at_qp()
    j_qp = config.potential.evaluate(mesh.flat_qp_coords(), uq.ravel())
    return mesh.integrate(j_qp.reshape(uq.shape))


def R_value(u, config):
    """Energy with its three-term breakdown (floats to the total)."""
    _check_state(u, config)
    mesh = config.mesh
    p_qp = config.p_at_qp()
    w = mesh.qp_weights
    diffusion = float(_kernels.energy_sum(
        _kernels.grad_mag(u.grads_at_qp()), p_qp, w))
    reaction = config.lam * float(_kernels.energy_sum(
        u.values_at_qp(), p_qp, w))
    pot = potential_term(u, config)
    return RValue(diffusion - reaction - pot, diffusion, reaction, pot)


def batch_R_values(rows, config, chunk=2048):
    """Energy totals of many nodal fields at once.

    Vectorizes the three quadrature sums over a (S, n_nodes) stack of
    zero-boundary fields. Used for probe clouds, sphere sampling, and path
    refreshes, where per-field calls would dominate the runtime. Chunked to
    bound peak memory.
    """
    mesh = config.mesh
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[np.newaxis, :]
    if rows.shape[1] != mesh.n_nodes:
        raise ConfigurationError("rows do not match the mesh node count")
    p_qp = config.p_at_qp()
    w = mesh.qp_weights
    coords = mesh.flat_qp_coords()
    out = np.empty(rows.shape[0])
    for base in range(0, rows.shape[0], chunk):
        part = rows[base:base + chunk]
        local = part[:, mesh.cells]
        vals = np.einsum("scl,ql->scq", local, mesh.shape_vals)
        grads = np.einsum("scl,qld->scqd", local, mesh.shape_grads)
        gmag = np.sqrt(np.sum(grads * grads, axis=3))
        diffusion = np.sum(gmag ** p_qp / p_qp * w, axis=(1, 2))
        reaction = config.lam * np.sum(
            np.abs(vals) ** p_qp / p_qp * w, axis=(1, 2))
        S = part.shape[0]
        tiled = np.tile(coords, (S, 1))
        j_qp = config.potential.evaluate(tiled, vals.reshape(-1))
        pot = np.sum(j_qp.reshape(vals.shape) * w, axis=(1, 2))
        total = diffusion - reaction - pot
        bad = ~np.isfinite(total)
        if bad.any():
            k = int(np.argmax(bad))
            raise NumericsError(
                "non-finite energy in batched evaluation",
                location={"row": base + k})
        out[base:base + chunk] = total
    return out


def discrete_gradient(u, config):
    """Exact nodal gradient of the quadrature energy (smooth branch).

    The potential's classical t-derivative is evaluated at the quadrature
    points, so this is the true gradient of R as a function of the nodal
    values wherever no quadrature value of u sits on a breakpoint. Central
    finite differences of R_value reproduce it to truncation error.
    Boundary rows are included; callers mask.
    """
    mesh = config.mesh
    g = pairing_vector(u, config.p, config.lam)
    uq = u.values_at_qp()
    dj_qp = config.potential.derivative(mesh.flat_qp_coords(), uq.ravel())
    vterm = _kernels.assemble_qpfield(dj_qp.reshape(uq.shape), mesh.qp_weights,
                                      mesh.cells, mesh.shape_vals, mesh.n_nodes)
    return g - vterm


@dataclass(frozen=True)
class StationarityReport:
    m_value: float
    cerami_value: float
    selection: np.ndarray   # nodal v*, admissible per node
    residual: np.ndarray    # full nodal g - M v*
    sobolev: float          # Sobolev sum norm of u

    def to_dict(self):
        return {"m_value": self.m_value, "cerami_value": self.cerami_value,
                "sobolev": self.sobolev}


def min_norm_subgradient(u, config):
    """Minimal-norm subgradient residual under the lumped dual pairing.

    The fixed part g collects the diffusion and reaction pairings against
    every nodal basis function. Choosing nodal v* inside the Clarke
    intervals to minimize |g - M v*| (M the lumped masses) separates per
    node; each entry clips g_i / M_i into its interval. m is the Euclidean
    magnitude of the interior residual.
    """
    _check_state(u, config)
    mesh = config.mesh
    g = pairing_vector(u, config.p, config.lam)
    lo, hi = config.potential.clarke_bounds(mesh.node_coords, u.values)
    masses = mesh.lumped_masses()
    selection = np.clip(g / masses, lo, hi)
    assert np.all((selection >= lo) & (selection <= hi)), \
        "internal invariant violation: clipped selection left its interval"
    residual = g - masses * selection
    m = float(np.linalg.norm(residual[mesh.interior_idx]))
    nrm = sobolev_norm(u, config.p)
    return StationarityReport(m, (1.0 + nrm) * m, selection, residual, nrm)


def cerami_diagnostic(history, window=25):
    """Trajectory report: energy boundedness, stopping-quantity trend.

    history is a sequence of per-iteration records with keys R, m, cerami,
    norm (extra keys ignored). Flags stagnation (the running best of the
    weighted quantity stopped improving over the last `window` entries) and
    the divergence pattern of growing norms with the residual magnitude
    bounded away from zero.
    """
    if not history:
        raise ConfigurationError("history must be nonempty")
    r = np.array([rec["R"] for rec in history], dtype=float)
    m_vals = np.array([rec["m"] for rec in history], dtype=float)
    cer = np.array([rec["cerami"] for rec in history], dtype=float)
    nrm = np.array([rec["norm"] for rec in history], dtype=float)
    n = len(history)
    stagnant = False
    if n > window:
        best_before = float(np.min(cer[:-window]))
        stagnant = bool(np.min(cer[-window:])
                        >= best_before - 1e-15 * (1.0 + abs(best_before)))
    tail = m_vals[-min(window, n):]
    norm_divergence = bool(nrm[-1] > 100.0 * (1.0 + float(np.min(nrm)))
                           and float(np.min(tail)) > 1e-8)
    return {
        "iterations": n,
        "r_first": float(r[0]), "r_final": float(r[-1]),
        "r_min": float(np.min(r)), "r_max": float(np.max(r)),
        "r_bounded": bool(np.all(np.isfinite(r))),
        "m_final": float(m_vals[-1]),
        "cerami_first": float(cer[0]), "cerami_final": float(cer[-1]),
        "cerami_best": float(np.min(cer)),
        "norm_first": float(nrm[0]), "norm_max": float(np.max(nrm)),
        "stagnant": stagnant,
        "norm_divergence": norm_divergence,
    }
