"""Structured meshes on intervals and axis-aligned rectangles.

1-d domains use linear segment elements; 2-d domains use bilinear
quadrilateral cells. Quadrature is 2-point Gauss per axis (order >= 3),
with nonlinear integrands evaluated directly at the quadrature points.
Cell traversal and scatter order are fixed, so every reduction is
bit-reproducible run to run.
"""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigurationError, NumericsError

__all__ = ["Mesh", "GridFunction", "build_mesh"]

_GAUSS = 1.0 / math.sqrt(3.0)


class Mesh:
    def __init__(self, dimension, extents, resolution):
        self.dimension = int(dimension)
        if self.dimension not in (1, 2):
            raise ConfigurationError("dimension must be 1 or 2")
        self.extents = tuple((float(a), float(b)) for a, b in extents)
        self.resolution = tuple(int(r) for r in resolution)
        if len(self.extents) != self.dimension or len(self.resolution) != self.dimension:
            raise ConfigurationError("extents/resolution do not match dimension")
        for (a, b), r in zip(self.extents, self.resolution):
            if not (math.isfinite(a) and math.isfinite(b) and a < b):
                raise ConfigurationError(f"bad extent ({a}, {b})")
            if r < 1:
                raise ConfigurationError("resolution must be >= 1 cell per axis")
        self.spacing = tuple((b - a) / r for (a, b), r in
                             zip(self.extents, self.resolution))
        self._build_nodes_cells()
        self._build_quadrature()

    # -- construction -------------------------------------------------------

    def _build_nodes_cells(self):
        if self.dimension == 1:
            (a, b), = self.extents
            n, = self.resolution
            xs = np.linspace(a, b, n + 1)
            self.node_coords = xs[:, np.newaxis].copy()
            self.cells = np.column_stack(
                [np.arange(n), np.arange(1, n + 1)]).astype(np.int64)
            mask = np.zeros(n + 1, dtype=bool)
            mask[0] = mask[-1] = True
        else:
            (ax, bx), (ay, by) = self.extents
            nx, ny = self.resolution
            xs = np.linspace(ax, bx, nx + 1)
            ys = np.linspace(ay, by, ny + 1)
            xg, yg = np.meshgrid(xs, ys, indexing="xy")
            self.node_coords = np.column_stack([xg.ravel(), yg.ravel()])
            cells = np.empty((nx * ny, 4), dtype=np.int64)
            row = nx + 1
            k = 0
            for iy in range(ny):
                for ix in range(nx):
                    n00 = iy * row + ix
                    cells[k] = (n00, n00 + 1, n00 + row + 1, n00 + row)
                    k += 1
            self.cells = cells
            x = self.node_coords[:, 0]
            y = self.node_coords[:, 1]
            mask = (np.isclose(x, ax) | np.isclose(x, bx)
                    | np.isclose(y, ay) | np.isclose(y, by))
        self.boundary_mask = mask
        self.interior_idx = np.where(~mask)[0]
        self.n_nodes = self.node_coords.shape[0]
        self.n_cells = self.cells.shape[0]

    def _build_quadrature(self):
        if self.dimension == 1:
            h, = self.spacing
            xi = np.array([-_GAUSS, _GAUSS])
            self.qp_weights = np.full(2, h / 2.0)
            self.shape_vals = np.column_stack([(1 - xi) / 2, (1 + xi) / 2])
            grads = np.array([[-1.0 / h, 1.0 / h]] * 2)
            self.shape_grads = grads[:, :, np.newaxis]
            self.center_shape_grads = np.array([[-1.0 / h], [1.0 / h]])
            left = self.node_coords[self.cells[:, 0], 0]
            local = (xi + 1.0) * h / 2.0
            qx = left[:, np.newaxis] + local[np.newaxis, :]
            self.qp_coords = qx[:, :, np.newaxis].copy()
        else:
            hx, hy = self.spacing
            pts = [(-_GAUSS, -_GAUSS), (_GAUSS, -_GAUSS),
                   (_GAUSS, _GAUSS), (-_GAUSS, _GAUSS)]
            self.qp_weights = np.full(4, hx * hy / 4.0)
            sv = np.empty((4, 4))
            sg = np.empty((4, 4, 2))
            for q, (xi, eta) in enumerate(pts):
                sv[q] = self._bilinear_vals(xi, eta)
                sg[q] = self._bilinear_grads(xi, eta, hx, hy)
            self.shape_vals = sv
            self.shape_grads = sg
            self.center_shape_grads = self._bilinear_grads(0.0, 0.0, hx, hy)
            origin = self.node_coords[self.cells[:, 0]]
            qp = np.empty((self.n_cells, 4, 2))
            for q, (xi, eta) in enumerate(pts):
                qp[:, q, 0] = origin[:, 0] + (xi + 1.0) * hx / 2.0
                qp[:, q, 1] = origin[:, 1] + (eta + 1.0) * hy / 2.0
            self.qp_coords = qp

    @staticmethod
    def _bilinear_vals(xi, eta):
        return np.array([(1 - xi) * (1 - eta), (1 + xi) * (1 - eta),
                         (1 + xi) * (1 + eta), (1 - xi) * (1 + eta)]) / 4.0

    @staticmethod
    def _bilinear_grads(xi, eta, hx, hy):
        dxi = np.array([-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)]) / 4.0
        deta = np.array([-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)]) / 4.0
        out = np.empty((4, 2))
        out[:, 0] = dxi * 2.0 / hx
        out[:, 1] = deta * 2.0 / hy
        return out

    # -- sampling and integration ------------------------------------------

    def values_at_qp(self, nodal):
        nodal = np.ascontiguousarray(nodal, dtype=float)
        return _kernels.values_at_qp(nodal, self.cells, self.shape_vals)

    def grads_at_qp(self, nodal):
        nodal = np.ascontiguousarray(nodal, dtype=float)
        return _kernels.grads_at_qp(nodal, self.cells, self.shape_grads)

    def flat_qp_coords(self):
        return self.qp_coords.reshape(-1, self.dimension)

    def integrate(self, integrand):
        """Integrate over the domain.

        integrand: either a callable taking (m, dim) quadrature coordinates
        and returning m values, or a precomputed (n_cells, n_qp) array.
        """
        if callable(integrand):
            vals = np.asarray(integrand(self.flat_qp_coords()), dtype=float)
            vals = vals.reshape(self.n_cells, len(self.qp_weights))
        else:
            vals = np.asarray(integrand, dtype=float)
            if vals.shape != (self.n_cells, len(self.qp_weights)):
                raise ConfigurationError(
                    f"integrand array must have shape "
                    f"{(self.n_cells, len(self.qp_weights))}, got {vals.shape}"
                )
        bad = ~np.isfinite(vals)
        if bad.any():
            c, q = np.argwhere(bad)[0]
            where = self.qp_coords[c, q]
            raise NumericsError(
                f"non-finite integrand value at cell {c}, quadrature point "
                f"{tuple(float(v) for v in where)}",
                location={"cell": int(c), "point": [float(v) for v in where]},
            )
        return float(np.sum(vals * self.qp_weights[np.newaxis, :]))

    def gradient(self, u):
        """Cell-centered gradient vectors, shape (n_cells, dim)."""
        nodal = _as_nodal(self, u)
        return np.einsum("cl,ld->cd", nodal[self.cells], self.center_shape_grads)

    def lumped_masses(self):
        ones = np.ones((self.n_cells, len(self.qp_weights)))
        return _kernels.assemble_qpfield(ones, self.qp_weights, self.cells,
                                         self.shape_vals, self.n_nodes)

    # -- misc ----------------------------------------------------------------

    def describe(self):
        return {
            "dimension": self.dimension,
            "extents": [list(e) for e in self.extents],
            "resolution": list(self.resolution),
            "n_nodes": self.n_nodes,
            "n_cells": self.n_cells,
        }

    def __eq__(self, other):
        return (isinstance(other, Mesh)
                and self.dimension == other.dimension
                and self.extents == other.extents
                and self.resolution == other.resolution)

    def __repr__(self):
        return (f"Mesh(dim={self.dimension}, extents={self.extents}, "
                f"resolution={self.resolution})")


def build_mesh(dimension, extents, resolution):
    """Build a structured mesh.

    extents: (a, b) for 1-d, ((ax, bx), (ay, by)) for 2-d.
    resolution: cells per axis, an int or a per-axis tuple.
    """
    dimension = int(dimension)
    if dimension == 1:
        if len(extents) == 2 and np.isscalar(extents[0]):
            extents = (extents,)
        if np.isscalar(resolution):
            resolution = (resolution,)
    else:
        if np.isscalar(resolution):
            resolution = (resolution, resolution)
    return Mesh(dimension, extents, resolution)


def _as_nodal(mesh, u):
    if isinstance(u, GridFunction):
        if u.mesh is not mesh and u.mesh != mesh:
            raise ConfigurationError("grid function lives on a different mesh")
        return u.values
    arr = np.asarray(u, dtype=float)
    if arr.shape != (mesh.n_nodes,):
        raise ConfigurationError(
            f"nodal array has length {arr.size}, mesh has {mesh.n_nodes} nodes")
    return arr


@dataclass
class GridFunction:
    """Nodal field on a mesh.

    Solution fields carry homogeneous Dirichlet data (zero at boundary-mask
    nodes); use pin_boundary() to enforce it. Plain measurable fields, for
    example the inputs of norm and modular routines, may hold any boundary
    values.
    """

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_nodes,):
            raise ConfigurationError(
                f"values length {self.values.size} does not match mesh with "
                f"{self.mesh.n_nodes} nodes")

    @classmethod
    def zeros(cls, mesh):
        return cls(mesh, np.zeros(mesh.n_nodes))

    @classmethod
    def from_callable(cls, mesh, func, pin_boundary=False):
        coords = mesh.node_coords
        if mesh.dimension == 1:
            vals = func(coords[:, 0])
        else:
            vals = func(coords[:, 0], coords[:, 1])
        gf = cls(mesh, np.asarray(vals, dtype=float))
        if pin_boundary:
            gf.pin_boundary()
        return gf

    def copy(self):
        return GridFunction(self.mesh, self.values.copy())

    def pin_boundary(self):
        self.values[self.mesh.boundary_mask] = 0.0
        return self

    @property
    def has_zero_boundary(self):
        return bool(np.all(self.values[self.mesh.boundary_mask] == 0.0))

    def values_at_qp(self):
        return self.mesh.values_at_qp(self.values)

    def grads_at_qp(self):
        return self.mesh.grads_at_qp(self.values)

    # -- interchange ---------------------------------------------------------

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["x", "u"] if self.mesh.dimension == 1 else ["x", "y", "u"]
            writer.writerow(header)
            for coord, val in zip(self.mesh.node_coords, self.values):
                writer.writerow([repr(float(c)) for c in coord] + [repr(float(val))])

    def to_json_dict(self):
        return {
            "mesh": self.mesh.describe(),
            "values": [float(v) for v in self.values],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def from_nodal_file(cls, mesh, path):
        """Load nodal values from a CSV (last column) or JSON export."""
        text = str(path)
        if text.endswith(".json"):
            with open(text) as fh:
                payload = json.load(fh)
            vals = np.asarray(payload["values"], dtype=float)
        else:
            rows = []
            with open(text, newline="") as fh:
                for row in csv.reader(fh):
                    if not row:
                        continue
                    try:
                        rows.append(float(row[-1]))
                    except ValueError:
                        continue  # header
            vals = np.asarray(rows, dtype=float)
        if vals.shape != (mesh.n_nodes,):
            raise ConfigurationError(
                f"file {path} holds {vals.size} values, mesh has "
                f"{mesh.n_nodes} nodes")
        return cls(mesh, vals)
