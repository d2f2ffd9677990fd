"""Adaptive longitudinal meshing: quench-front detection, interface
placement around the moving fronts, and conservative remapping of the
modal solution onto the new mesh.

The element count and polynomial degrees never change; only the
interface positions move, so the system dimension is invariant under
adaptation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .q3d import Q3DSystem, SpectralSolution, apply_dirichlet, assemble_q3d, evaluate_line
from .spectral import SpectralMesh1D, assemble_se_global, get_basis, z_mode_rows


@dataclass(frozen=True)
class FrontEstimate:
    """Outermost positions where the rise exceeds a fraction of its peak.

    ``gradient_left``/``gradient_right`` hold |d theta / dz| at the two
    positions as a confidence measure; a degenerate (non-positive) field
    yields ``found = False``.
    """

    found: bool
    z_left: float = 0.0
    z_right: float = 0.0
    gradient_left: float = 0.0
    gradient_right: float = 0.0
    peak_rise: float = 0.0


def detect_quench_fronts(solution: SpectralSolution, x: float, y: float,
                         num_samples: int = 1001,
                         threshold: float = 0.05) -> FrontEstimate:
    """Scan the temperature along a longitudinal line for the quench zone.

    The line is sampled uniformly; the fronts are the outermost samples
    whose rise reaches ``threshold`` times the peak rise.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must be in (0, 1]")
    if num_samples < 3:
        raise ValueError("need at least three samples")
    mesh = solution.spectral_mesh
    z = np.linspace(mesh.interfaces[0], mesh.interfaces[-1], num_samples)
    rise = evaluate_line(solution, x, y, z) - solution.theta_dirichlet
    peak = float(rise.max())
    if peak <= 0.0:
        return FrontEstimate(found=False)
    hot = np.flatnonzero(rise >= threshold * peak)
    gradient = np.gradient(rise, z)
    left, right = int(hot[0]), int(hot[-1])
    return FrontEstimate(found=True, z_left=float(z[left]), z_right=float(z[right]),
                         gradient_left=abs(float(gradient[left])),
                         gradient_right=abs(float(gradient[right])),
                         peak_rise=peak)


def propose_interfaces(front: Optional[FrontEstimate], num_elements: int,
                       length: float, degrees,
                       min_length_factor: float = 1e-3
                       ) -> Tuple[SpectralMesh1D, bool]:
    """Interface positions concentrating elements around the quench zone.

    The zone [z_left, z_right] becomes one element, padded by one element
    of half the zone width on each side; remaining elements split the
    outer cold regions proportionally.  Returns (mesh, fallback): the
    fallback flag is True when the placement could not honour the minimum
    element length and a uniform mesh is returned instead.  Without a
    detected front the uniform mesh is the regular (non-fallback) result.
    """
    if num_elements < 3:
        raise ValueError("adaptive placement needs at least three elements")
    if length <= 0.0:
        raise ValueError("length must be positive")
    degrees = np.broadcast_to(np.asarray(degrees, dtype=int), (num_elements,)).copy()
    uniform = SpectralMesh1D(np.linspace(0.0, length, num_elements + 1), degrees)
    if front is None or not front.found:
        return uniform, False

    min_length = min_length_factor * length
    a = max(front.z_left, min_length)
    b = min(front.z_right, length - min_length)
    if b - a < min_length:
        mid = np.clip(0.5 * (a + b), min_length, length - min_length)
        a, b = mid - 0.5 * min_length, mid + 0.5 * min_length

    margin = 0.5 * (b - a)
    interior = [a, b]
    slots = num_elements - 1
    if len(interior) + 1 <= slots and a - margin >= min_length:
        interior.insert(0, a - margin)
    if len(interior) + 1 <= slots and b + margin <= length - min_length:
        interior.append(b + margin)

    extras = slots - len(interior)
    if extras > 0:
        left_len = interior[0]
        right_len = length - interior[-1]
        total = left_len + right_len
        n_left = int(round(extras * (left_len / total))) if total > 0.0 else 0
        n_left = min(max(n_left, 0), extras)
        n_right = extras - n_left
        left_pts = list(np.linspace(0.0, interior[0], n_left + 2)[1:-1])
        right_pts = list(np.linspace(interior[-1], length, n_right + 2)[1:-1])
        interior = left_pts + interior + right_pts

    interfaces = np.concatenate(([0.0], np.sort(interior), [length]))
    for i in range(1, interfaces.size):
        interfaces[i] = max(interfaces[i], interfaces[i - 1] + min_length)
    if interfaces[-1] > length + 1e-12 * length or np.any(np.diff(interfaces) <= 0):
        return uniform, True
    interfaces[-1] = length
    if interfaces[-1] - interfaces[-2] < 0.5 * min_length:
        return uniform, True
    return SpectralMesh1D(interfaces, degrees), False


def build_remap_operator(old_mesh: SpectralMesh1D,
                         new_mesh: SpectralMesh1D) -> np.ndarray:
    """Matrix taking old global z-mode coefficients to new ones.

    The old piecewise polynomial is evaluated at the GLL points of every
    new element and transformed forward; fields of degree <= N are
    reproduced exactly, and shared interface modes are written once per
    side with identical values (the old field is C0).
    """
    if not np.isclose(old_mesh.length, new_mesh.length, rtol=1e-12, atol=0.0):
        raise ValueError("remap requires meshes on the same interval")
    operator = np.zeros((new_mesh.num_modes, old_mesh.num_modes))
    new_offsets = new_mesh.mode_offsets
    for k in range(new_mesh.num_elements):
        basis = get_basis(int(new_mesh.degrees[k]))
        z0, z1 = new_mesh.interfaces[k], new_mesh.interfaces[k + 1]
        z = 0.5 * (z0 + z1) + 0.5 * (z1 - z0) * basis.nodes
        values_rows = z_mode_rows(old_mesh, z)
        block = basis.vandermonde_inv @ values_rows
        operator[new_offsets[k]:new_offsets[k] + basis.num_modes, :] = block
    return operator


def remap_solution(solution: SpectralSolution,
                   new_mesh: SpectralMesh1D) -> SpectralSolution:
    """Re-express the solution on a new spectral mesh (same FE mesh)."""
    operator = build_remap_operator(solution.spectral_mesh, new_mesh)
    coefficients = (operator @ solution.coefficient_matrix()).ravel()
    return SpectralSolution(coefficients, solution.mesh2d, new_mesh,
                            solution.theta_dirichlet, time=solution.time)


@dataclass(frozen=True)
class AdaptationEvent:
    """Record of one adaptation: what moved and why."""

    time: float
    front: FrontEstimate
    old_interfaces: np.ndarray
    new_interfaces: np.ndarray
    fallback: bool
    changed: bool


def adapt_and_reassemble(system: Q3DSystem, solution: SpectralSolution,
                         x: float, y: float, num_samples: int = 1001,
                         threshold: float = 0.05):
    """Detect fronts, move the interfaces, remap, and rebuild the system.

    Remapping happens on the old operators' solution first; assembly of
    the new operators follows.  With no detected front, or an unchanged
    proposal, the inputs are returned untouched (the event records it).
    """
    mesh = system.spectral_mesh
    front = detect_quench_fronts(solution, x, y, num_samples=num_samples,
                                 threshold=threshold)
    new_mesh, fallback = propose_interfaces(front, mesh.num_elements,
                                            mesh.length, mesh.degrees)
    event = AdaptationEvent(time=solution.time if solution.time is not None else 0.0,
                            front=front, old_interfaces=mesh.interfaces.copy(),
                            new_interfaces=new_mesh.interfaces.copy(),
                            fallback=fallback,
                            changed=not new_mesh.equals(mesh))
    if not front.found or not event.changed:
        return system, solution, event
    remapped = remap_solution(solution, new_mesh)
    se_ops = assemble_se_global(new_mesh, system.se_ops.longitudinal)
    new_system = apply_dirichlet(assemble_q3d(system.mesh2d, system.fe_ops, se_ops),
                                 system.theta_dirichlet)
    return new_system, remapped, event
