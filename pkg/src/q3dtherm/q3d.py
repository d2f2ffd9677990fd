"""Quasi-3D system: Kronecker coupling of the 2D FE cross-section with the
1D spectral-element direction.

The 3D operators factor into tensor products of the per-direction ones,

    K = M_se (x) K_fe  +  K_se (x) M_fe[conductivity]
    M = M_se (x) M_fe[heat capacity]
    q = q_se (x) q_fe

with the flat unknown ordering mode-major: index = z_mode * J + fe_node,
where J is the number of cross-section nodes.  The solve works on the
temperature rise u = theta - theta_D, so the longitudinal Dirichlet ends
(first and last global z-mode) are eliminated as homogeneous rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
import scipy.sparse as sparse

from .fem2d import FEOperators
from .geometry import Mesh2D, locate_point
from .solving import BackwardEulerStepper, free_indices, solve_spd
from .spectral import SEOperators, SpectralMesh1D, constant_lift, z_mode_rows


@dataclass(eq=False)
class SpectralSolution:
    """Temperature-rise coefficients of one Q3D state.

    ``coefficients`` has length J * D_z in the mode-major flat ordering;
    entries of constrained boundary modes are zero.  ``time`` is None for
    a steady solve.
    """

    coefficients: np.ndarray
    mesh2d: Mesh2D
    spectral_mesh: SpectralMesh1D
    theta_dirichlet: float
    time: Optional[float] = None

    def coefficient_matrix(self) -> np.ndarray:
        """View shaped (D_z, J): one row of FE nodal values per z-mode."""
        return self.coefficients.reshape(self.spectral_mesh.num_modes,
                                         self.mesh2d.num_nodes)


@dataclass(eq=False)
class Q3DSystem:
    """Assembled Q3D operators plus the factor operators they came from.

    The factor operators are retained so adaptivity can rebuild the
    system after the spectral mesh changes.  ``free`` is None until
    :func:`apply_dirichlet` marks the constrained boundary modes.
    """

    mesh2d: Mesh2D
    spectral_mesh: SpectralMesh1D
    fe_ops: FEOperators
    se_ops: SEOperators
    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    load: np.ndarray
    theta_dirichlet: Optional[float] = None
    free: Optional[np.ndarray] = None
    stiffness_free: Optional[sparse.csr_matrix] = None
    mass_free: Optional[sparse.csr_matrix] = None
    load_free: Optional[np.ndarray] = None
    _steppers: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.stiffness.shape[0]

    @property
    def num_fe_nodes(self) -> int:
        return self.mesh2d.num_nodes

    def constrained_indices(self) -> np.ndarray:
        """Flat indices of the two Dirichlet boundary z-modes."""
        j = self.num_fe_nodes
        last = self.spectral_mesh.num_modes - 1
        return np.concatenate([np.arange(j), last * j + np.arange(j)])

    def stepper(self, dt: float, method: str = "direct") -> BackwardEulerStepper:
        key = (float(dt), method)
        if key not in self._steppers:
            self._steppers[key] = BackwardEulerStepper(
                self.mass_free, self.stiffness_free, dt, method)
        return self._steppers[key]


def assemble_q3d(mesh2d: Mesh2D, fe_ops: FEOperators, se_ops: SEOperators) -> Q3DSystem:
    """Tensor-product assembly of the unconstrained Q3D system."""
    if fe_ops.mesh is not mesh2d:
        raise ValueError("FE operators were assembled on a different mesh")
    if se_ops.load is None:
        raise ValueError("SE operators carry no load; assemble with a source")
    stiffness = (sparse.kron(se_ops.mass, fe_ops.stiffness, format="csr")
                 + sparse.kron(se_ops.stiffness, fe_ops.mass_conductivity, format="csr"))
    mass = sparse.kron(se_ops.mass, fe_ops.mass_heat_capacity, format="csr")
    load = np.kron(se_ops.load, fe_ops.load)
    return Q3DSystem(mesh2d, se_ops.mesh, fe_ops, se_ops, stiffness, mass, load)


def apply_dirichlet(system: Q3DSystem, theta_dirichlet: float) -> Q3DSystem:
    """Eliminate the boundary z-modes (homogeneous in the rise variable).

    Returns a new system carrying the free-index set and the reduced
    operators; the full operators stay available for diagnostics.
    """
    constrained = system.constrained_indices()
    free = free_indices(system.dim, constrained)
    stiffness_free = system.stiffness[free][:, free].tocsr()
    mass_free = system.mass[free][:, free].tocsr()
    load_free = system.load[free]
    return Q3DSystem(system.mesh2d, system.spectral_mesh, system.fe_ops,
                     system.se_ops, system.stiffness, system.mass, system.load,
                     theta_dirichlet=theta_dirichlet, free=free,
                     stiffness_free=stiffness_free, mass_free=mass_free,
                     load_free=load_free)


def _require_constrained(system: Q3DSystem):
    if system.free is None:
        raise ValueError("apply_dirichlet must be called before solving")


def _expand(system: Q3DSystem, u_free: np.ndarray) -> np.ndarray:
    full = np.zeros(system.dim)
    full[system.free] = u_free
    return full


def solve_steady(system: Q3DSystem, method: str = "direct") -> SpectralSolution:
    """Stationary solve K u = q on the free unknowns."""
    _require_constrained(system)
    u_free = solve_spd(system.stiffness_free, system.load_free, method=method)
    return SpectralSolution(_expand(system, u_free), system.mesh2d,
                            system.spectral_mesh, system.theta_dirichlet,
                            time=None)


def step_backward_euler(system: Q3DSystem, coefficients: np.ndarray, dt: float,
                        load: Optional[np.ndarray] = None,
                        method: str = "direct") -> np.ndarray:
    """Advance the rise coefficients by one implicit Euler step.

    ``load`` overrides the assembled source (full-length vector); the
    factorization of (M + dt K) is cached on the system per dt.
    """
    _require_constrained(system)
    stepper = system.stepper(dt, method)
    load_free = system.load_free if load is None else np.asarray(load)[system.free]
    u_free = stepper.step(coefficients[system.free], load_free)
    return _expand(system, u_free)


def initial_coefficients(system: Q3DSystem, theta_initial: float) -> np.ndarray:
    """Modal representation of a spatially uniform initial temperature.

    The uniform rise sits on the nodal z-modes (the constant lift); the
    Dirichlet boundary modes are clamped to zero, so an initial value
    different from theta_D jumps at the ends, as the strong problem does.
    """
    rise = theta_initial - system.theta_dirichlet
    u = rise * np.kron(constant_lift(system.spectral_mesh),
                       np.ones(system.num_fe_nodes))
    u[system.constrained_indices()] = 0.0
    return u


@dataclass(eq=False)
class TransientResult:
    """Probe history plus selected full snapshots of a transient run."""

    times: np.ndarray
    probe_temperatures: np.ndarray
    snapshots: list
    events: list
    final: SpectralSolution
    system: Q3DSystem


def probe_matrix(mesh2d: Mesh2D, spectral_mesh: SpectralMesh1D,
                 points: Iterable) -> sparse.csr_matrix:
    """Rows mapping rise coefficients to point values of the rise.

    Each probe row is the tensor product of the z-mode values at its z
    with the barycentric weights of its cross-section location.
    """
    points = list(points)
    j = mesh2d.num_nodes
    dim = j * spectral_mesh.num_modes
    rows, cols, data = [], [], []
    for p, (x, y, z) in enumerate(points):
        tri, bary = locate_point(mesh2d, x, y)
        z_row = z_mode_rows(spectral_mesh, [z])[0]
        modes = np.flatnonzero(z_row)
        for g in modes:
            for v in range(3):
                rows.append(p)
                cols.append(g * j + mesh2d.triangles[tri, v])
                data.append(z_row[g] * bary[v])
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(points), dim))


def solve_transient(system: Q3DSystem, theta_initial: float, t_end: float,
                    dt: float, probe_points: Iterable = (),
                    adapt_times: Iterable = (), adapt_fn: Optional[Callable] = None,
                    snapshot_times: Iterable = (),
                    method: str = "direct") -> TransientResult:
    """Backward-Euler transient with probes, snapshots and adaptation.

    ``adapt_fn(system, solution, time) -> (system, solution, event)`` is
    invoked once per entry of ``adapt_times`` after the first step whose
    time reaches it; the returned system replaces the current one (probe
    rows are rebuilt, the step factorization is re-cached).
    """
    _require_constrained(system)
    if t_end < 0.0 or dt <= 0.0:
        raise ValueError("need t_end >= 0 and dt > 0")
    num_steps = int(round(t_end / dt)) if t_end > 0.0 else 0
    if num_steps > 0 and not math.isclose(num_steps * dt, t_end, rel_tol=1e-9):
        raise ValueError("t_end must be an integer multiple of dt")

    probe_points = list(probe_points)
    probes = probe_matrix(system.mesh2d, system.spectral_mesh, probe_points)
    snapshot_queue = sorted(float(t) for t in snapshot_times)
    adapt_queue = sorted(float(t) for t in adapt_times)
    if adapt_queue and adapt_fn is None:
        raise ValueError("adapt_times given without an adapt_fn")

    u = initial_coefficients(system, theta_initial)
    times = [0.0]
    history = [system.theta_dirichlet + probes @ u]
    snapshots = []
    events = []

    def as_solution(t):
        return SpectralSolution(u.copy(), system.mesh2d, system.spectral_mesh,
                                system.theta_dirichlet, time=t)

    for n in range(1, num_steps + 1):
        t = n * dt
        u = step_backward_euler(system, u, dt, method=method)
        while adapt_queue and t >= adapt_queue[0] - 1e-12 * max(t_end, dt):
            adapt_queue.pop(0)
            system, solution, event = adapt_fn(system, as_solution(t), t)
            u = solution.coefficients
            probes = probe_matrix(system.mesh2d, system.spectral_mesh, probe_points)
            events.append(event)
        times.append(t)
        history.append(system.theta_dirichlet + probes @ u)
        while snapshot_queue and t >= snapshot_queue[0] - 1e-12 * max(t_end, dt):
            snapshot_queue.pop(0)
            snapshots.append(as_solution(t))

    final = as_solution(times[-1])
    return TransientResult(np.array(times), np.array(history), snapshots,
                           events, final, system)


def evaluate_nodal_profile(solution: SpectralSolution, z_values) -> np.ndarray:
    """Temperatures at every FE node for each z sample, shape (len(z), J)."""
    rows = z_mode_rows(solution.spectral_mesh, z_values)
    return solution.theta_dirichlet + rows @ solution.coefficient_matrix()


def evaluate_solution(solution: SpectralSolution, x: float, y: float, z: float) -> float:
    """Temperature at one physical point."""
    tri, bary = locate_point(solution.mesh2d, x, y)
    rows = z_mode_rows(solution.spectral_mesh, [z])
    nodal = rows @ solution.coefficient_matrix()[:, solution.mesh2d.triangles[tri]]
    return float(solution.theta_dirichlet + nodal[0] @ bary)


def evaluate_line(solution: SpectralSolution, x: float, y: float, z_values) -> np.ndarray:
    """Temperature along a longitudinal line at fixed (x, y)."""
    tri, bary = locate_point(solution.mesh2d, x, y)
    rows = z_mode_rows(solution.spectral_mesh, z_values)
    nodal = rows @ solution.coefficient_matrix()[:, solution.mesh2d.triangles[tri]]
    return solution.theta_dirichlet + nodal @ bary
