"""Linear (P1) triangular finite elements on the cross-section.

Element integrals use the closed forms for constant coefficients: the
stiffness follows from the constant shape-function gradients, the mass is
the classic area/12 pattern, and the load of a per-region constant source
puts a third of the cell integral on each vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse

from .geometry import Mesh2D

_MASS_PATTERN = np.array([[2.0, 1.0, 1.0],
                          [1.0, 2.0, 1.0],
                          [1.0, 1.0, 2.0]]) / 12.0


def _gradient_factors(coords: np.ndarray):
    """Edge-difference vectors b, c and the signed area of one triangle."""
    x = coords[:, 0]
    y = coords[:, 1]
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]])
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])
    area = 0.5 * (b[0] * c[1] - b[1] * c[0])
    return b, c, area


def element_stiffness(coords: np.ndarray, conductivity: float) -> np.ndarray:
    """Conductivity-weighted stiffness of one triangle (rows sum to zero)."""
    b, c, area = _gradient_factors(np.asarray(coords, dtype=float))
    if area <= 0.0:
        raise ValueError("degenerate or clockwise triangle")
    return conductivity * (np.outer(b, b) + np.outer(c, c)) / (4.0 * area)


def element_mass(coords: np.ndarray, coefficient: float) -> np.ndarray:
    """Coefficient-weighted consistent mass of one triangle."""
    _, _, area = _gradient_factors(np.asarray(coords, dtype=float))
    if area <= 0.0:
        raise ValueError("degenerate or clockwise triangle")
    return coefficient * area * _MASS_PATTERN


@dataclass(eq=False)
class FEOperators:
    """Assembled cross-section operators.

    Two mass matrices are kept: one weighted with the conductivity (it
    multiplies the longitudinal stiffness in the tensor product) and one
    with the volumetric heat capacity (the transient term).
    """

    mesh: Mesh2D
    stiffness: sparse.csr_matrix
    mass_conductivity: sparse.csr_matrix
    mass_heat_capacity: sparse.csr_matrix
    load: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.mesh.num_nodes


def _region_values(mesh: Mesh2D, values: dict, what: str) -> np.ndarray:
    present = np.unique(mesh.region_ids)
    per_triangle = np.empty(mesh.num_triangles)
    for region_id in present:
        name = mesh.region_names[region_id]
        if name not in values:
            raise ValueError(f"missing {what} for region '{name}'")
        per_triangle[mesh.region_ids == region_id] = values[name]
    return per_triangle


def assemble_fe_operators(mesh: Mesh2D, conductivity: dict, heat_capacity: dict,
                          source_density: dict) -> FEOperators:
    """Assemble stiffness, both weighted mass matrices and the load.

    The coefficient dictionaries map region names to constants; a region
    present in the mesh but missing from a dictionary is an error.
    Duplicate COO entries are summed on compression, which realizes the
    scatter-add over elements.
    """
    lam = _region_values(mesh, conductivity, "conductivity")
    cv = _region_values(mesh, heat_capacity, "heat capacity")
    source = _region_values(mesh, source_density, "source density")

    p = mesh.nodes[mesh.triangles]
    x = p[:, :, 0]
    y = p[:, :, 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    if np.any(area <= 0.0):
        raise ValueError("mesh contains degenerate or clockwise triangles")

    grads = b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    k_el = (lam / (4.0 * area))[:, None, None] * grads
    m_lam_el = (lam * area)[:, None, None] * _MASS_PATTERN
    m_cv_el = (cv * area)[:, None, None] * _MASS_PATTERN

    num_triangles = mesh.num_triangles
    rows = np.broadcast_to(mesh.triangles[:, :, None], (num_triangles, 3, 3)).ravel()
    cols = np.broadcast_to(mesh.triangles[:, None, :], (num_triangles, 3, 3)).ravel()
    shape = (mesh.num_nodes, mesh.num_nodes)
    stiffness = sparse.coo_matrix((k_el.ravel(), (rows, cols)), shape=shape).tocsr()
    mass_lam = sparse.coo_matrix((m_lam_el.ravel(), (rows, cols)), shape=shape).tocsr()
    mass_cv = sparse.coo_matrix((m_cv_el.ravel(), (rows, cols)), shape=shape).tocsr()

    load = np.zeros(mesh.num_nodes)
    np.add.at(load, mesh.triangles.ravel(),
              np.repeat(source * area / 3.0, 3))

    return FEOperators(mesh, stiffness, mass_lam, mass_cv, load)
