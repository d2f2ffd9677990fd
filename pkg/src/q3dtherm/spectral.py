"""Modal spectral elements for the longitudinal direction.

The basis on the reference interval [-1, 1] combines two nodal boundary
modes (the linear hat ends) with interior bubble modes built from Lobatto
polynomials.  Interior modes vanish at the element endpoints, so global
C0 continuity and Dirichlet data are carried by the boundary modes alone,
while the interior blocks of the element matrices stay sparse (diagonal
stiffness, banded mass).

Element matrices are integrated on the reference interval with a
Gauss-Legendre rule of ``degree + 2`` points, which is exact for the
polynomial integrands, and scaled by the affine map Jacobian.  Physical
loads are interpolated at the mapped Gauss-Lobatto-Legendre points,
transformed to modal coefficients and multiplied by the element mass
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sparse
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi


def _legendre_table(max_degree: int, xi: np.ndarray):
    """Values and derivatives of Legendre polynomials P_0..P_max at ``xi``.

    Uses the three-term recurrence for the values and the derivative
    recurrence P'_{k+1} = (2k+1) P_k + P'_{k-1}, both stable on [-1, 1].
    """
    xi = np.asarray(xi, dtype=float)
    values = np.zeros((max_degree + 1,) + xi.shape)
    derivs = np.zeros_like(values)
    values[0] = 1.0
    if max_degree >= 1:
        values[1] = xi
        derivs[1] = 1.0
    for k in range(1, max_degree):
        values[k + 1] = ((2 * k + 1) * xi * values[k] - k * values[k - 1]) / (k + 1)
        derivs[k + 1] = (2 * k + 1) * values[k] + derivs[k - 1]
    return values, derivs


def legendre_poly(degree: int, xi):
    """Evaluate the Legendre polynomial P_degree at ``xi``."""
    if degree < 0:
        raise ValueError("Legendre degree must be >= 0")
    values, _ = _legendre_table(degree, np.asarray(xi, dtype=float))
    return values[degree]


def lobatto_poly(order: int, xi):
    """Evaluate the Lobatto polynomial LO_order at ``xi``.

    LO_q is the derivative of the Legendre polynomial of degree q + 1,
    so LO_0 = 1, LO_1 = 3 xi, and so on.
    """
    if order < 0:
        raise ValueError("Lobatto order must be >= 0")
    _, derivs = _legendre_table(order + 1, np.asarray(xi, dtype=float))
    return derivs[order + 1]


def modified_lobatto(mode: int, xi, degree: int):
    """Evaluate basis mode ``mode`` (1-based) of a degree-``degree`` element.

    Mode 1 and mode ``degree + 1`` are the nodal boundary modes
    (1 -+ xi)/2; modes 2..degree are the interior bubbles
    (1 - xi^2)/4 * LO_{mode-2}(xi).
    """
    if not 1 <= mode <= degree + 1:
        raise ValueError(f"mode {mode} outside 1..{degree + 1}")
    xi = np.asarray(xi, dtype=float)
    if mode == 1:
        return 0.5 * (1.0 - xi)
    if mode == degree + 1:
        return 0.5 * (1.0 + xi)
    return 0.25 * (1.0 - xi * xi) * lobatto_poly(mode - 2, xi)


def modified_lobatto_deriv(mode: int, xi, degree: int):
    """Derivative of basis mode ``mode`` with respect to xi.

    For the interior bubbles the Legendre differential equation collapses
    the product rule to -q(q-1)/4 * P_{q-1}(xi).
    """
    if not 1 <= mode <= degree + 1:
        raise ValueError(f"mode {mode} outside 1..{degree + 1}")
    xi = np.asarray(xi, dtype=float)
    if mode == 1:
        return np.full_like(xi, -0.5)
    if mode == degree + 1:
        return np.full_like(xi, 0.5)
    return -0.25 * mode * (mode - 1) * legendre_poly(mode - 1, xi)


def gll_points(num_points: int) -> np.ndarray:
    """Gauss-Lobatto-Legendre points on [-1, 1], endpoints included.

    The interior points are the roots of P'_{num_points-1}, obtained as
    Gauss-Jacobi (alpha = beta = 1) nodes.
    """
    if num_points < 2:
        raise ValueError("need at least the two endpoint nodes")
    if num_points == 2:
        return np.array([-1.0, 1.0])
    interior, _ = roots_jacobi(num_points - 2, 1.0, 1.0)
    return np.concatenate(([-1.0], np.sort(interior), [1.0]))


class ModalBasis:
    """Reference-element tables for one polynomial degree.

    Holds the GLL nodes, the Vandermonde matrix of the modified Lobatto
    modes at those nodes (with its inverse for the forward transform) and
    the reference mass/stiffness integrals.  Instances are cached by
    :func:`get_basis` and must be treated as read-only.
    """

    def __init__(self, degree: int):
        if degree < 1:
            raise ValueError("element degree must be >= 1")
        self.degree = degree
        self.num_modes = degree + 1
        self.nodes = gll_points(degree + 1)
        self.vandermonde = self.eval_modes(self.nodes)
        self.vandermonde_inv = np.linalg.inv(self.vandermonde)
        xg, wg = leggauss(degree + 2)
        phi = self.eval_modes(xg)
        dphi = self.eval_mode_derivs(xg)
        mass = (phi * wg[:, None]).T @ phi
        stiffness = (dphi * wg[:, None]).T @ dphi
        # quadrature is exact here; symmetrize away the last-ulp asymmetry
        self.ref_mass = 0.5 * (mass + mass.T)
        self.ref_stiffness = 0.5 * (stiffness + stiffness.T)

    def eval_modes(self, xi) -> np.ndarray:
        """Tabulate all modes at ``xi``, shape (len(xi), num_modes)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        _, derivs = _legendre_table(max(self.degree - 1, 1), xi)
        out = np.empty((xi.size, self.num_modes))
        out[:, 0] = 0.5 * (1.0 - xi)
        out[:, -1] = 0.5 * (1.0 + xi)
        bubble = 0.25 * (1.0 - xi * xi)
        for mode in range(2, self.degree + 1):
            out[:, mode - 1] = bubble * derivs[mode - 1]
        return out

    def eval_mode_derivs(self, xi) -> np.ndarray:
        """Tabulate all mode derivatives at ``xi``."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        values, _ = _legendre_table(max(self.degree - 1, 1), xi)
        out = np.empty((xi.size, self.num_modes))
        out[:, 0] = -0.5
        out[:, -1] = 0.5
        for mode in range(2, self.degree + 1):
            out[:, mode - 1] = -0.25 * mode * (mode - 1) * values[mode - 1]
        return out

    def forward(self, values: np.ndarray) -> np.ndarray:
        """Physical values at the GLL nodes -> modal coefficients."""
        return self.vandermonde_inv @ values

    def backward(self, coefficients: np.ndarray) -> np.ndarray:
        """Modal coefficients -> physical values at the GLL nodes."""
        return self.vandermonde @ coefficients


@lru_cache(maxsize=None)
def get_basis(degree: int) -> ModalBasis:
    """Cached reference basis for ``degree``."""
    return ModalBasis(degree)


@dataclass(frozen=True, eq=False)
class SpectralMesh1D:
    """Partition of [0, length] into line elements with per-element degree.

    ``interfaces`` holds the K+1 element boundaries (strictly increasing,
    starting at 0), ``degrees`` the K polynomial degrees.  The global mode
    numbering is element-contiguous with shared interface modes, so the
    total count is sum(degrees) + 1 and the first/last global modes are
    the nodal boundary modes of the end elements.
    """

    interfaces: np.ndarray
    degrees: np.ndarray

    def __post_init__(self):
        interfaces = np.asarray(self.interfaces, dtype=float)
        degrees = np.asarray(self.degrees, dtype=int)
        if interfaces.ndim != 1 or interfaces.size < 2:
            raise ValueError("need at least two element interfaces")
        if not np.all(np.diff(interfaces) > 0.0):
            raise ValueError("interfaces must be strictly increasing")
        if degrees.shape != (interfaces.size - 1,):
            raise ValueError("one degree per element required")
        if np.any(degrees < 1):
            raise ValueError("element degrees must be >= 1")
        object.__setattr__(self, "interfaces", interfaces)
        object.__setattr__(self, "degrees", degrees)

    @classmethod
    def uniform(cls, length: float, num_elements: int, degree: int) -> "SpectralMesh1D":
        if length <= 0.0:
            raise ValueError("length must be positive")
        if num_elements < 1:
            raise ValueError("need at least one element")
        interfaces = np.linspace(0.0, length, num_elements + 1)
        return cls(interfaces, np.full(num_elements, degree, dtype=int))

    @property
    def num_elements(self) -> int:
        return self.interfaces.size - 1

    @property
    def length(self) -> float:
        return float(self.interfaces[-1] - self.interfaces[0])

    @property
    def element_lengths(self) -> np.ndarray:
        return np.diff(self.interfaces)

    @property
    def num_modes(self) -> int:
        return int(self.degrees.sum()) + 1

    @property
    def mode_offsets(self) -> np.ndarray:
        """Global index of each element's left boundary mode."""
        return np.concatenate(([0], np.cumsum(self.degrees)))

    @property
    def nodal_mode_indices(self) -> np.ndarray:
        """Global indices of the K+1 nodal (interface) modes."""
        return self.mode_offsets

    def locate(self, z) -> np.ndarray:
        """Element index containing ``z``; interface points go to the right
        element, except the final interface which stays in the last one."""
        k = np.searchsorted(self.interfaces, np.asarray(z, dtype=float), side="right") - 1
        return np.clip(k, 0, self.num_elements - 1)

    def reference_coords(self, z, element) -> np.ndarray:
        """Map physical z inside ``element`` to xi on [-1, 1]."""
        z = np.asarray(z, dtype=float)
        z0 = self.interfaces[element]
        lengths = self.element_lengths[element]
        return 2.0 * (z - z0) / lengths - 1.0

    def equals(self, other: "SpectralMesh1D") -> bool:
        return np.array_equal(self.interfaces, other.interfaces) and np.array_equal(
            self.degrees, other.degrees
        )


def se_element_matrices(length: float, degree: int):
    """Stiffness and mass of one element of physical ``length``.

    Returns (stiffness, mass); the reference integrals are scaled by the
    affine Jacobian, 2/length for stiffness and length/2 for mass.
    """
    if length <= 0.0:
        raise ValueError("element length must be positive")
    basis = get_basis(degree)
    return (2.0 / length) * basis.ref_stiffness, (0.5 * length) * basis.ref_mass


def se_element_load(z_start: float, z_end: float, degree: int,
                    longitudinal: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Element load vector for a longitudinal source profile.

    The profile is interpolated at the mapped GLL points, transformed to
    modal coefficients and weighted with the element mass matrix, i.e.
    the load of the interpolant rather than of the exact profile.
    """
    basis = get_basis(degree)
    z = 0.5 * (z_start + z_end) + 0.5 * (z_end - z_start) * basis.nodes
    coefficients = basis.forward(np.asarray(longitudinal(z), dtype=float))
    return (0.5 * (z_end - z_start)) * (basis.ref_mass @ coefficients)


@dataclass(eq=False)
class SEOperators:
    """Globally assembled 1D spectral operators on a :class:`SpectralMesh1D`."""

    mesh: SpectralMesh1D
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    load: Optional[np.ndarray]
    longitudinal: Optional[Callable[[np.ndarray], np.ndarray]]


def assemble_se_global(mesh: SpectralMesh1D,
                       longitudinal: Optional[Callable] = None) -> SEOperators:
    """Assemble global 1D mass/stiffness (and load) with C0 coupling.

    Adjacent elements share their nodal boundary mode; the duplicate
    entries are summed when the COO triplets are compressed.
    """
    num_modes = mesh.num_modes
    offsets = mesh.mode_offsets
    rows, cols, k_data, m_data = [], [], [], []
    load = np.zeros(num_modes) if longitudinal is not None else None
    for k in range(mesh.num_elements):
        degree = int(mesh.degrees[k])
        length = float(mesh.element_lengths[k])
        idx = np.arange(offsets[k], offsets[k] + degree + 1)
        k_el, m_el = se_element_matrices(length, degree)
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        k_data.append(k_el.ravel())
        m_data.append(m_el.ravel())
        if longitudinal is not None:
            z0, z1 = mesh.interfaces[k], mesh.interfaces[k + 1]
            load[idx] += se_element_load(z0, z1, degree, longitudinal)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    shape = (num_modes, num_modes)
    stiffness = sparse.coo_matrix((np.concatenate(k_data), (rows, cols)), shape=shape).tocsr()
    mass = sparse.coo_matrix((np.concatenate(m_data), (rows, cols)), shape=shape).tocsr()
    return SEOperators(mesh, stiffness, mass, load, longitudinal)


def constant_lift(mesh: SpectralMesh1D) -> np.ndarray:
    """Modal coefficients of the constant function 1.

    All nodal (interface) modes are 1 and every interior mode is 0, since
    the two boundary modes of each element sum to one.
    """
    lift = np.zeros(mesh.num_modes)
    lift[mesh.nodal_mode_indices] = 1.0
    return lift


def z_mode_rows(mesh: SpectralMesh1D, z_values) -> np.ndarray:
    """Dense (len(z), num_modes) table of global mode values at ``z``.

    Each row holds the basis values of the element containing the sample;
    all other global modes are zero there.
    """
    z = np.atleast_1d(np.asarray(z_values, dtype=float))
    if np.any(z < mesh.interfaces[0] - 1e-12) or np.any(z > mesh.interfaces[-1] + 1e-12):
        raise ValueError("z sample outside the spectral mesh")
    rows = np.zeros((z.size, mesh.num_modes))
    elements = mesh.locate(z)
    offsets = mesh.mode_offsets
    for k in np.unique(elements):
        sel = elements == k
        xi = mesh.reference_coords(z[sel], k)
        basis = get_basis(int(mesh.degrees[k]))
        rows[np.ix_(sel, np.arange(offsets[k], offsets[k] + basis.num_modes))] = \
            basis.eval_modes(xi)
    return rows
