"""Hot numeric kernels: quadrature sums, nonlinear assembly, Luxemburg roots.

Every kernel exists twice with an identical contract: a pure-numpy version
and a numba @njit version. The active set is chosen once at import time from
the PLAPX_BACKEND environment variable ("numba", "numpy", or "auto"; default
auto picks numba when it imports). benchmarks/bench_kernels.py compares the
two backends on representative workloads.

Array layout conventions (uniform structured meshes):
  vals, pvals   (n_cells, n_qp)        scalar samples at quadrature points
  grads         (n_cells, n_qp, dim)   gradient samples
  w             (n_qp,)                physical quadrature weights per cell
  cells         (n_cells, n_loc)       node indices, int64
  shape_vals    (n_qp, n_loc)
  shape_grads   (n_qp, n_loc, dim)
"""

import os
import warnings

import numpy as np

__all__ = ["BACKEND", "HAS_NUMBA", "IMPLEMENTATIONS"]

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _values_at_qp_np(nodal, cells, shape_vals):
    # (n_cells, n_loc) nodal samples contracted against (n_qp, n_loc)
    return np.einsum("cl,ql->cq", nodal[cells], shape_vals)


def _grads_at_qp_np(nodal, cells, shape_grads):
    return np.einsum("cl,qld->cqd", nodal[cells], shape_grads)


def _modular_sum_np(vals, pvals, w):
    return float(np.sum(np.abs(vals) ** pvals * w[np.newaxis, :]))


def _energy_sum_np(vals, pvals, w):
    return float(np.sum(np.abs(vals) ** pvals / pvals * w[np.newaxis, :]))


def _grad_mag_np(grads):
    return np.sqrt(np.sum(grads * grads, axis=2))


def _pairing_sum_np(grads_u, grads_v, pvals, w):
    gmag = _grad_mag_np(grads_u)
    dot = np.sum(grads_u * grads_v, axis=2)
    coef = np.zeros_like(gmag)
    pos = gmag > 0.0
    coef[pos] = gmag[pos] ** (pvals[pos] - 2.0)
    return float(np.sum(coef * dot * w[np.newaxis, :]))


def _assemble_flux_np(grads_u, pvals, w, cells, shape_grads, n_nodes):
    gmag = _grad_mag_np(grads_u)
    coef = np.zeros_like(gmag)
    pos = gmag > 0.0
    coef[pos] = gmag[pos] ** (pvals[pos] - 2.0)
    flux = coef[:, :, np.newaxis] * grads_u * w[np.newaxis, :, np.newaxis]
    local = np.einsum("cqd,qld->cl", flux, shape_grads)
    out = np.zeros(n_nodes)
    np.add.at(out, cells, local)
    return out


def _assemble_qpfield_np(f_qp, w, cells, shape_vals, n_nodes):
    local = np.einsum("cq,ql->cl", f_qp * w[np.newaxis, :], shape_vals)
    out = np.zeros(n_nodes)
    np.add.at(out, cells, local)
    return out


def _luxemburg_root_np(absvals, pvals, w, rtol, maxit):
    # absvals, pvals: (n_cells, n_qp); strictly decreasing phi(lam)
    def phi(lam):
        return float(np.sum((absvals / lam) ** pvals * w[np.newaxis, :]))

    lo = hi = 1.0
    f1 = phi(1.0)
    if f1 == 1.0:
        return 1.0
    if f1 > 1.0:
        for _ in range(1100):
            lo = hi
            hi *= 2.0
            if phi(hi) <= 1.0:
                break
        else:
            return -1.0
    else:
        for _ in range(1100):
            hi = lo
            lo *= 0.5
            if lo == 0.0:
                # bracket underflowed: phi never reaches 1 (degenerate input)
                return -1.0
            if phi(lo) >= 1.0:
                break
        else:
            return -1.0
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * mid:
            return mid
        if phi(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return -1.0


# ---------------------------------------------------------------------------
# numba implementations (same contracts, loop bodies)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _values_at_qp_nb(nodal, cells, shape_vals):
    n_cells, n_loc = cells.shape
    n_qp = shape_vals.shape[0]
    out = np.empty((n_cells, n_qp))
    for c in range(n_cells):
        for q in range(n_qp):
            acc = 0.0
            for a in range(n_loc):
                acc += nodal[cells[c, a]] * shape_vals[q, a]
            out[c, q] = acc
    return out


@njit(cache=True)
def _grads_at_qp_nb(nodal, cells, shape_grads):
    n_cells, n_loc = cells.shape
    n_qp = shape_grads.shape[0]
    dim = shape_grads.shape[2]
    out = np.zeros((n_cells, n_qp, dim))
    for c in range(n_cells):
        for q in range(n_qp):
            for a in range(n_loc):
                v = nodal[cells[c, a]]
                for d in range(dim):
                    out[c, q, d] += v * shape_grads[q, a, d]
    return out


@njit(cache=True)
def _modular_sum_nb(vals, pvals, w):
    n_cells, n_qp = vals.shape
    acc = 0.0
    for c in range(n_cells):
        for q in range(n_qp):
            acc += abs(vals[c, q]) ** pvals[c, q] * w[q]
    return acc


@njit(cache=True)
def _energy_sum_nb(vals, pvals, w):
    n_cells, n_qp = vals.shape
    acc = 0.0
    for c in range(n_cells):
        for q in range(n_qp):
            p = pvals[c, q]
            acc += abs(vals[c, q]) ** p / p * w[q]
    return acc


@njit(cache=True)
def _grad_mag_nb(grads):
    n_cells, n_qp, dim = grads.shape
    out = np.empty((n_cells, n_qp))
    for c in range(n_cells):
        for q in range(n_qp):
            acc = 0.0
            for d in range(dim):
                acc += grads[c, q, d] * grads[c, q, d]
            out[c, q] = np.sqrt(acc)
    return out


@njit(cache=True)
def _pairing_sum_nb(grads_u, grads_v, pvals, w):
    n_cells, n_qp, dim = grads_u.shape
    acc = 0.0
    for c in range(n_cells):
        for q in range(n_qp):
            g2 = 0.0
            dot = 0.0
            for d in range(dim):
                g2 += grads_u[c, q, d] * grads_u[c, q, d]
                dot += grads_u[c, q, d] * grads_v[c, q, d]
            if g2 > 0.0:
                gmag = np.sqrt(g2)
                acc += gmag ** (pvals[c, q] - 2.0) * dot * w[q]
    return acc


@njit(cache=True)
def _assemble_flux_nb(grads_u, pvals, w, cells, shape_grads, n_nodes):
    n_cells, n_qp, dim = grads_u.shape
    n_loc = cells.shape[1]
    out = np.zeros(n_nodes)
    for c in range(n_cells):
        for q in range(n_qp):
            g2 = 0.0
            for d in range(dim):
                g2 += grads_u[c, q, d] * grads_u[c, q, d]
            if g2 <= 0.0:
                continue
            coef = np.sqrt(g2) ** (pvals[c, q] - 2.0) * w[q]
            for a in range(n_loc):
                acc = 0.0
                for d in range(dim):
                    acc += grads_u[c, q, d] * shape_grads[q, a, d]
                out[cells[c, a]] += coef * acc
    return out


@njit(cache=True)
def _assemble_qpfield_nb(f_qp, w, cells, shape_vals, n_nodes):
    n_cells, n_qp = f_qp.shape
    n_loc = cells.shape[1]
    out = np.zeros(n_nodes)
    for c in range(n_cells):
        for q in range(n_qp):
            coef = f_qp[c, q] * w[q]
            for a in range(n_loc):
                out[cells[c, a]] += coef * shape_vals[q, a]
    return out


@njit(cache=True)
def _lux_phi_nb(absvals, pvals, w, lam):
    n_cells, n_qp = absvals.shape
    acc = 0.0
    for c in range(n_cells):
        for q in range(n_qp):
            acc += (absvals[c, q] / lam) ** pvals[c, q] * w[q]
    return acc


@njit(cache=True)
def _luxemburg_root_nb(absvals, pvals, w, rtol, maxit):
    lo = 1.0
    hi = 1.0
    f1 = _lux_phi_nb(absvals, pvals, w, 1.0)
    if f1 == 1.0:
        return 1.0
    if f1 > 1.0:
        ok = False
        for _ in range(1100):
            lo = hi
            hi *= 2.0
            if _lux_phi_nb(absvals, pvals, w, hi) <= 1.0:
                ok = True
                break
        if not ok:
            return -1.0
    else:
        ok = False
        for _ in range(1100):
            hi = lo
            lo *= 0.5
            if lo == 0.0:
                break
            if _lux_phi_nb(absvals, pvals, w, lo) >= 1.0:
                ok = True
                break
        if not ok:
            return -1.0
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rtol * mid:
            return mid
        if _lux_phi_nb(absvals, pvals, w, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return -1.0


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_NUMPY_IMPL = {
    "values_at_qp": _values_at_qp_np,
    "grads_at_qp": _grads_at_qp_np,
    "modular_sum": _modular_sum_np,
    "energy_sum": _energy_sum_np,
    "grad_mag": _grad_mag_np,
    "pairing_sum": _pairing_sum_np,
    "assemble_flux": _assemble_flux_np,
    "assemble_qpfield": _assemble_qpfield_np,
    "luxemburg_root": _luxemburg_root_np,
}

_NUMBA_IMPL = {
    "values_at_qp": _values_at_qp_nb,
    "grads_at_qp": _grads_at_qp_nb,
    "modular_sum": _modular_sum_nb,
    "energy_sum": _energy_sum_nb,
    "grad_mag": _grad_mag_nb,
    "pairing_sum": _pairing_sum_nb,
    "assemble_flux": _assemble_flux_nb,
    "assemble_qpfield": _assemble_qpfield_nb,
    "luxemburg_root": _luxemburg_root_nb,
}

IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if HAS_NUMBA:
    IMPLEMENTATIONS["numba"] = _NUMBA_IMPL


def _pick_backend():
    want = os.getenv("PLAPX_BACKEND", "auto").strip().lower()
    if want in {"", "auto"}:
        return "numba" if HAS_NUMBA else "numpy"
    if want == "numba" and not HAS_NUMBA:
        warnings.warn("PLAPX_BACKEND=numba but numba is unavailable; "
                      "falling back to numpy")
        return "numpy"
    if want not in {"numba", "numpy"}:
        warnings.warn(f"unknown PLAPX_BACKEND={want!r}; using auto selection")
        return "numba" if HAS_NUMBA else "numpy"
    return want


BACKEND = _pick_backend()
_ACTIVE = IMPLEMENTATIONS[BACKEND]

values_at_qp = _ACTIVE["values_at_qp"]
grads_at_qp = _ACTIVE["grads_at_qp"]
modular_sum = _ACTIVE["modular_sum"]
energy_sum = _ACTIVE["energy_sum"]
grad_mag = _ACTIVE["grad_mag"]
pairing_sum = _ACTIVE["pairing_sum"]
assemble_flux = _ACTIVE["assemble_flux"]
assemble_qpfield = _ACTIVE["assemble_qpfield"]
luxemburg_root = _ACTIVE["luxemburg_root"]
