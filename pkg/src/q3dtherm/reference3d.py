"""Conventional 3D reference discretization on extruded prism elements.

The cross-section triangulation is extruded into uniform z-layers; the
prism basis is the tensor product of the P1 triangle functions with 1D
linear interval functions, so the element (and hence global) matrices
factor exactly into

    K3 = M_z (x) K_fe + K_z (x) M_fe[conductivity]
    M3 = M_z (x) M_fe[heat capacity]

with the 1D hat-function matrices on the z-grid.  Node ordering is
z-layer-major (index = layer * J + fe_node).  The longitudinal source
factor is integrated slab-by-slab with a 3-point Gauss rule, unlike the
interpolation-based spectral load, so the two paths stay independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.sparse as sparse
from numpy.polynomial.legendre import leggauss

from .fem2d import FEOperators, assemble_fe_operators
from .geometry import Mesh2D, locate_point
from .solving import (DIRECT_DIM_LIMIT, BackwardEulerStepper, free_indices,
                      solve_separable, solve_spd)


@dataclass(frozen=True, eq=False)
class PrismMesh3D:
    """Extrusion of a triangle mesh along uniform z-layers."""

    mesh2d: Mesh2D
    z_grid: np.ndarray

    def __post_init__(self):
        z_grid = np.asarray(self.z_grid, dtype=float)
        if z_grid.size < 2 or not np.all(np.diff(z_grid) > 0):
            raise ValueError("z grid must be strictly increasing with >= 2 points")
        object.__setattr__(self, "z_grid", z_grid)

    @property
    def num_layers(self) -> int:
        return self.z_grid.size - 1

    @property
    def num_nodes(self) -> int:
        return self.z_grid.size * self.mesh2d.num_nodes


def extrude(mesh2d: Mesh2D, length: float, num_layers: int) -> PrismMesh3D:
    """Uniform extrusion of the cross-section over [0, length]."""
    if length <= 0.0:
        raise ValueError("length must be positive")
    if num_layers < 1:
        raise ValueError("need at least one layer")
    return PrismMesh3D(mesh2d, np.linspace(0.0, length, num_layers + 1))


def _line_matrices(z_grid: np.ndarray):
    """Global 1D hat-function mass and stiffness on the z grid."""
    n = z_grid.size
    h = np.diff(z_grid)
    rows, cols, m_data, k_data = [], [], [], []
    mass_el = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    stiff_el = np.array([[1.0, -1.0], [-1.0, 1.0]])
    for k in range(n - 1):
        idx = np.array([k, k + 1])
        rows.append(np.repeat(idx, 2))
        cols.append(np.tile(idx, 2))
        m_data.append((h[k] * mass_el).ravel())
        k_data.append((stiff_el / h[k]).ravel())
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    mass = sparse.coo_matrix((np.concatenate(m_data), (rows, cols)), shape=(n, n)).tocsr()
    stiffness = sparse.coo_matrix((np.concatenate(k_data), (rows, cols)), shape=(n, n)).tocsr()
    return mass, stiffness


def _line_load(z_grid: np.ndarray, longitudinal: Callable) -> np.ndarray:
    """1D hat-function load, 3-point Gauss per slab (degree-5 exact)."""
    xg, wg = leggauss(3)
    load = np.zeros(z_grid.size)
    for k in range(z_grid.size - 1):
        z0, z1 = z_grid[k], z_grid[k + 1]
        h = z1 - z0
        z = 0.5 * (z0 + z1) + 0.5 * h * xg
        g = np.asarray(longitudinal(z), dtype=float)
        left = (z1 - z) / h
        load[k] += 0.5 * h * np.sum(wg * g * left)
        load[k + 1] += 0.5 * h * np.sum(wg * g * (1.0 - left))
    return load


@dataclass(eq=False)
class Ref3DSystem:
    """Assembled 3D operators; ``free`` is None before Dirichlet marking."""

    mesh3d: PrismMesh3D
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    load: np.ndarray
    # Kronecker factors, kept for the memory-lean separable direct solve
    fe_ops: Optional[FEOperators] = None
    line_mass: Optional[sparse.csr_matrix] = None
    line_stiffness: Optional[sparse.csr_matrix] = None
    theta_dirichlet: Optional[float] = None
    free: Optional[np.ndarray] = None
    stiffness_free: Optional[sparse.csr_matrix] = None
    mass_free: Optional[sparse.csr_matrix] = None
    load_free: Optional[np.ndarray] = None
    _steppers: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.stiffness.shape[0]

    def constrained_indices(self) -> np.ndarray:
        j = self.mesh3d.mesh2d.num_nodes
        last = self.mesh3d.num_layers
        return np.concatenate([np.arange(j), last * j + np.arange(j)])

    def stepper(self, dt: float, method: str = "direct") -> BackwardEulerStepper:
        key = (float(dt), method)
        if key not in self._steppers:
            self._steppers[key] = BackwardEulerStepper(
                self.mass_free, self.stiffness_free, dt, method)
        return self._steppers[key]


def assemble_3d(mesh3d: PrismMesh3D, conductivity: dict, heat_capacity: dict,
                source_density: dict, longitudinal: Callable) -> Ref3DSystem:
    """Assemble the prism FEM system from per-region material data."""
    fe_ops = assemble_fe_operators(mesh3d.mesh2d, conductivity, heat_capacity,
                                   source_density)
    mass_z, stiffness_z = _line_matrices(mesh3d.z_grid)
    stiffness = (sparse.kron(mass_z, fe_ops.stiffness, format="csr")
                 + sparse.kron(stiffness_z, fe_ops.mass_conductivity, format="csr"))
    mass = sparse.kron(mass_z, fe_ops.mass_heat_capacity, format="csr")
    load = np.kron(_line_load(mesh3d.z_grid, longitudinal), fe_ops.load)
    return Ref3DSystem(mesh3d, stiffness, mass, load, fe_ops=fe_ops,
                       line_mass=mass_z, line_stiffness=stiffness_z)


def apply_dirichlet_3d(system: Ref3DSystem, theta_dirichlet: float) -> Ref3DSystem:
    """Eliminate the first and last node layers (rise formulation)."""
    constrained = system.constrained_indices()
    free = free_indices(system.dim, constrained)
    return Ref3DSystem(system.mesh3d, system.stiffness, system.mass, system.load,
                       fe_ops=system.fe_ops, line_mass=system.line_mass,
                       line_stiffness=system.line_stiffness,
                       theta_dirichlet=theta_dirichlet, free=free,
                       stiffness_free=system.stiffness[free][:, free].tocsr(),
                       mass_free=system.mass[free][:, free].tocsr(),
                       load_free=system.load[free])


@dataclass(eq=False)
class NodalField3D:
    """Nodal temperature-rise values of one 3D state (layer-major)."""

    values: np.ndarray
    mesh3d: PrismMesh3D
    theta_dirichlet: float
    time: Optional[float] = None

    def layer_matrix(self) -> np.ndarray:
        """View shaped (layers + 1, J)."""
        return self.values.reshape(self.mesh3d.z_grid.size,
                                   self.mesh3d.mesh2d.num_nodes)


def _expand(system: Ref3DSystem, u_free: np.ndarray) -> np.ndarray:
    full = np.zeros(system.dim)
    full[system.free] = u_free
    return full


def solve_3d_steady(system: Ref3DSystem, method: str = "auto") -> NodalField3D:
    """Steady solve of the reduced system.

    "auto" factors the assembled matrix directly up to DIRECT_DIM_LIMIT
    unknowns and switches to the separable fast-diagonalization solve
    beyond; "direct", "cg" and "tensor" force the respective path.  The
    separable path exploits that eliminating whole node layers keeps the
    reduced matrix an exact Kronecker sum.
    """
    if system.free is None:
        raise ValueError("apply_dirichlet_3d must be called before solving")
    if method == "auto":
        method = "direct" if system.free.size <= DIRECT_DIM_LIMIT else "tensor"
    if method == "tensor":
        u_free = solve_separable(system.line_mass[1:-1, 1:-1],
                                 system.line_stiffness[1:-1, 1:-1],
                                 system.fe_ops.stiffness,
                                 system.fe_ops.mass_conductivity,
                                 system.load_free, system.stiffness_free)
    else:
        u_free = solve_spd(system.stiffness_free, system.load_free, method=method)
    return NodalField3D(_expand(system, u_free), system.mesh3d,
                        system.theta_dirichlet, time=None)


def probe_matrix_3d(mesh3d: PrismMesh3D, points: Iterable) -> sparse.csr_matrix:
    """Rows mapping nodal rise values to point values of the rise."""
    points = list(points)
    j = mesh3d.mesh2d.num_nodes
    z_grid = mesh3d.z_grid
    rows, cols, data = [], [], []
    for p, (x, y, z) in enumerate(points):
        if not z_grid[0] - 1e-12 <= z <= z_grid[-1] + 1e-12:
            raise ValueError(f"probe z={z} outside the extrusion")
        tri, bary = locate_point(mesh3d.mesh2d, x, y)
        layer = min(int(np.searchsorted(z_grid, z, side="right") - 1),
                    mesh3d.num_layers - 1)
        layer = max(layer, 0)
        t = (z - z_grid[layer]) / (z_grid[layer + 1] - z_grid[layer])
        for corner, weight in ((layer, 1.0 - t), (layer + 1, t)):
            for v in range(3):
                rows.append(p)
                cols.append(corner * j + mesh3d.mesh2d.triangles[tri, v])
                data.append(weight * bary[v])
    return sparse.csr_matrix((data, (rows, cols)),
                             shape=(len(points), mesh3d.num_nodes))


@dataclass(eq=False)
class Transient3DResult:
    times: np.ndarray
    probe_temperatures: np.ndarray
    snapshots: list
    final: NodalField3D


def solve_3d_transient(system: Ref3DSystem, theta_initial: float, t_end: float,
                       dt: float, probe_points: Iterable = (),
                       snapshot_times: Iterable = (),
                       method: str = "direct") -> Transient3DResult:
    """Backward-Euler transient of the reference discretization."""
    if system.free is None:
        raise ValueError("apply_dirichlet_3d must be called before solving")
    if t_end < 0.0 or dt <= 0.0:
        raise ValueError("need t_end >= 0 and dt > 0")
    num_steps = int(round(t_end / dt)) if t_end > 0.0 else 0
    if num_steps > 0 and not math.isclose(num_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError("t_end must be an integer multiple of dt")

    probes = probe_matrix_3d(system.mesh3d, probe_points)
    snapshot_queue = sorted(float(t) for t in snapshot_times)
    u = np.full(system.dim, theta_initial - system.theta_dirichlet)
    u[system.constrained_indices()] = 0.0
    times = [0.0]
    history = [system.theta_dirichlet + probes @ u]
    snapshots = []
    stepper = system.stepper(dt, method)

    for n in range(1, num_steps + 1):
        t = n * dt
        u_free = stepper.step(u[system.free], system.load_free)
        u = _expand(system, u_free)
        times.append(t)
        history.append(system.theta_dirichlet + probes @ u)
        while snapshot_queue and t >= snapshot_queue[0] - 1e-12 * max(t_end, dt):
            snapshot_queue.pop(0)
            snapshots.append(NodalField3D(u.copy(), system.mesh3d,
                                          system.theta_dirichlet, time=t))

    final = NodalField3D(u.copy(), system.mesh3d, system.theta_dirichlet,
                         time=times[-1])
    return Transient3DResult(np.array(times), np.array(history), snapshots, final)


def evaluate_field_line(field: NodalField3D, x: float, y: float,
                        z_values) -> np.ndarray:
    """Temperature along a longitudinal line, linearly interpolated
    between layers."""
    tri, bary = locate_point(field.mesh3d.mesh2d, x, y)
    nodal = field.layer_matrix()[:, field.mesh3d.mesh2d.triangles[tri]] @ bary
    z = np.atleast_1d(np.asarray(z_values, dtype=float))
    return field.theta_dirichlet + np.interp(z, field.mesh3d.z_grid, nodal)
