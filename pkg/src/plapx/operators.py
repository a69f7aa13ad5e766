"""The variable-exponent diffusion energy and its first-order pairings.

energy_J(u)      integral of (1/p(x)) |grad u|^{p(x)}
apply_A(u, v)    integral of |grad u|^{p(x)-2} (grad u, grad v)

The degenerate flux at grad u = 0 is defined as 0, the continuous extension
for every admissible exponent. Assembly walks cells in fixed order; dual
norms of assembled vectors are Euclidean on interior-node coefficients.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError
from .modular import _fields_at_qp

__all__ = ["energy_J", "apply_A", "pairing_vector", "assemble_residual",
           "monotonicity_gap", "AssembledResidual"]


def energy_J(u, p):
    mesh, p_qp = _fields_at_qp(u, p)
    gmag = _kernels.grad_mag(u.grads_at_qp())
    return float(_kernels.energy_sum(gmag, p_qp, mesh.qp_weights))


def apply_A(u, v, p):
    """Duality pairing <A u, v> of the diffusion operator."""
    mesh, p_qp = _fields_at_qp(u, p)
    if v.mesh is not mesh and v.mesh != mesh:
        raise ConfigurationError("u and v live on different meshes")
    return float(_kernels.pairing_sum(u.grads_at_qp(), v.grads_at_qp(),
                                      p_qp, mesh.qp_weights))


def _signed_power(vals, pvals):
    # |t|^{p-2} t with the 0 branch taken literally
    out = np.zeros_like(vals)
    pos = vals != 0.0
    out[pos] = np.abs(vals[pos]) ** (pvals[pos] - 2.0) * vals[pos]
    return out


def pairing_vector(u, p, lam):
    """Full nodal vector of <A u, e_i> - lam * int |u|^{p-2} u e_i.

    Boundary rows are assembled too; callers restrict to interior nodes.
    """
    mesh, p_qp = _fields_at_qp(u, p)
    w = mesh.qp_weights
    g = _kernels.assemble_flux(u.grads_at_qp(), p_qp, w, mesh.cells,
                               mesh.shape_grads, mesh.n_nodes)
    if lam != 0.0:
        f_qp = _signed_power(u.values_at_qp(), p_qp)
        g = g - lam * _kernels.assemble_qpfield(f_qp, w, mesh.cells,
                                                mesh.shape_vals, mesh.n_nodes)
    return g


@dataclass(frozen=True)
class AssembledResidual:
    vector: np.ndarray    # interior-node coefficients
    norm_dual: float      # Euclidean norm of vector

    def to_dict(self):
        return {"norm_dual": self.norm_dual,
                "vector": [float(v) for v in self.vector]}


def assemble_residual(u, p, lam, vstar):
    """Residual pairing of the inclusion against interior basis functions.

    vstar is a full nodal selection from the Clarke interval; its term is
    integrated consistently like the others.
    """
    mesh, _ = _fields_at_qp(u, p)
    vstar = np.asarray(vstar, dtype=float)
    if vstar.shape != (mesh.n_nodes,):
        raise ConfigurationError("vstar must be a full nodal array")
    g = pairing_vector(u, p, lam)
    vterm = _kernels.assemble_qpfield(mesh.values_at_qp(vstar), mesh.qp_weights,
                                      mesh.cells, mesh.shape_vals, mesh.n_nodes)
    full = g - vterm
    interior = full[mesh.interior_idx]
    return AssembledResidual(interior, float(np.linalg.norm(interior)))


def monotonicity_gap(u1, u2, p):
    """<A u1 - A u2, u1 - u2>; strictly positive for distinct arguments."""
    mesh, p_qp = _fields_at_qp(u1, p)
    if u2.mesh is not mesh and u2.mesh != mesh:
        raise ConfigurationError("u1 and u2 live on different meshes")
    diff = u1.grads_at_qp() - u2.grads_at_qp()
    w = mesh.qp_weights
    return float(_kernels.pairing_sum(u1.grads_at_qp(), diff, p_qp, w)
                 - _kernels.pairing_sum(u2.grads_at_qp(), diff, p_qp, w))
