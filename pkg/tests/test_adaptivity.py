"""Front detection, interface proposal and solution remapping."""

import numpy as np
import pytest

from q3dtherm.adaptivity import (
    FrontEstimate,
    adapt_and_reassemble,
    detect_quench_fronts,
    propose_interfaces,
    remap_solution,
)
from q3dtherm.q3d import (
    SpectralSolution,
    evaluate_line,
    solve_transient,
    step_backward_euler,
)
from q3dtherm.spectral import SpectralMesh1D, get_basis

THETA_D = 2.0
PROBE = (0.85e-3, 7.6e-3)


def modal_profile(se_mesh, profile):
    """Global modal coefficients interpolating a continuous z-profile."""
    coeffs = np.zeros(se_mesh.num_modes)
    offsets = se_mesh.mode_offsets
    for k in range(se_mesh.num_elements):
        degree = int(se_mesh.degrees[k])
        basis = get_basis(degree)
        a, b = se_mesh.interfaces[k], se_mesh.interfaces[k + 1]
        z = 0.5 * (a + b) + 0.5 * (b - a) * basis.nodes
        coeffs[offsets[k]:offsets[k] + degree + 1] = basis.forward(profile(z))
    return coeffs


def separable_solution(mesh2d, se_mesh, profile, time=0.0):
    coeffs = np.kron(modal_profile(se_mesh, profile), np.ones(mesh2d.num_nodes))
    return SpectralSolution(coeffs, mesh2d, se_mesh, THETA_D, time=time)


class TestDetect:
    def test_zero_field_reports_no_front(self, coarse_mesh):
        se_mesh = SpectralMesh1D.uniform(1.0, 5, 8)
        solution = separable_solution(coarse_mesh, se_mesh, np.zeros_like)
        front = detect_quench_fronts(solution, *PROBE)
        assert not front.found

    def test_gaussian_fronts_are_symmetric(self, coarse_mesh):
        se_mesh = SpectralMesh1D.uniform(1.0, 5, 10)
        center = 0.5
        solution = separable_solution(
            coarse_mesh, se_mesh,
            lambda z: np.exp(-((z - center) / 0.07) ** 2))
        front = detect_quench_fronts(solution, *PROBE)
        assert front.found
        assert front.z_left < center < front.z_right
        # symmetric profile: fronts mirror about the center up to the
        # sampling resolution
        assert abs(0.5 * (front.z_left + front.z_right) - center) <= 1.5e-3
        assert front.peak_rise == pytest.approx(1.0, rel=1e-3)
        assert front.gradient_left > 0.0 and front.gradient_right > 0.0

    def test_full_threshold_collapses_to_argmax(self, coarse_mesh):
        se_mesh = SpectralMesh1D.uniform(1.0, 5, 10)
        solution = separable_solution(
            coarse_mesh, se_mesh,
            lambda z: np.exp(-((z - 0.33) / 0.05) ** 2))
        front = detect_quench_fronts(solution, *PROBE, threshold=1.0)
        assert front.z_left == front.z_right
        assert front.z_left == pytest.approx(0.33, abs=2e-3)

    def test_threshold_bounds_enforced(self, coarse_mesh):
        se_mesh = SpectralMesh1D.uniform(1.0, 3, 4)
        solution = separable_solution(coarse_mesh, se_mesh,
                                      lambda z: z * (1 - z))
        with pytest.raises(ValueError, match="threshold"):
            detect_quench_fronts(solution, *PROBE, threshold=0.0)
        with pytest.raises(ValueError, match="threshold"):
            detect_quench_fronts(solution, *PROBE, threshold=1.5)
        with pytest.raises(ValueError, match="samples"):
            detect_quench_fronts(solution, *PROBE, num_samples=2)


class TestPropose:
    def test_bracketing_interfaces_for_known_front(self):
        front = FrontEstimate(found=True, z_left=0.23, z_right=0.43,
                              peak_rise=1.0)
        mesh, fallback = propose_interfaces(front, 5, 1.0, 8)
        assert not fallback
        np.testing.assert_allclose(mesh.interfaces,
                                   [0.0, 0.13, 0.23, 0.43, 0.53, 1.0],
                                   atol=1e-12)
        np.testing.assert_array_equal(mesh.degrees, [8] * 5)

    def test_no_front_yields_uniform_mesh(self):
        # the uniform mesh is the regular result here, not a warning
        mesh, fallback = propose_interfaces(FrontEstimate(found=False), 5, 1.0, 8)
        assert not fallback
        np.testing.assert_allclose(mesh.interfaces, np.linspace(0.0, 1.0, 6),
                                   atol=1e-15)
        none_mesh, none_fallback = propose_interfaces(None, 5, 1.0, 8)
        assert not none_fallback
        assert none_mesh.equals(mesh)

    def test_proposal_is_idempotent(self):
        front = FrontEstimate(found=True, z_left=0.23, z_right=0.43,
                              peak_rise=1.0)
        first, _ = propose_interfaces(front, 5, 1.0, 8)
        second, _ = propose_interfaces(front, 5, 1.0, 8)
        assert first.equals(second)

    def test_needs_at_least_three_elements(self):
        front = FrontEstimate(found=True, z_left=0.4, z_right=0.6,
                              peak_rise=1.0)
        with pytest.raises(ValueError, match="three"):
            propose_interfaces(front, 2, 1.0, 8)

    def test_infeasible_minimum_length_falls_back(self):
        front = FrontEstimate(found=True, z_left=0.4, z_right=0.6,
                              peak_rise=1.0)
        mesh, fallback = propose_interfaces(front, 5, 1.0, 8,
                                            min_length_factor=0.3)
        assert fallback
        np.testing.assert_allclose(mesh.interfaces, np.linspace(0.0, 1.0, 6),
                                   atol=1e-15)

    def test_interfaces_strictly_monotone_for_edge_fronts(self):
        # a front hugging the boundary still yields a valid mesh
        front = FrontEstimate(found=True, z_left=0.01, z_right=0.05,
                              peak_rise=1.0)
        mesh, fallback = propose_interfaces(front, 5, 1.0, 8)
        assert np.all(np.diff(mesh.interfaces) > 0.0)
        assert mesh.interfaces[0] == 0.0 and mesh.interfaces[-1] == 1.0
        assert mesh.num_elements == 5


class TestRemap:
    def test_identity_remap(self, coarse_mesh):
        se_mesh = SpectralMesh1D.uniform(1.0, 4, 6)
        rng = np.random.default_rng(71)
        coeffs = np.kron(rng.standard_normal(se_mesh.num_modes),
                         rng.standard_normal(coarse_mesh.num_nodes))
        solution = SpectralSolution(coeffs, coarse_mesh, se_mesh, THETA_D,
                                    time=0.0)
        same = SpectralMesh1D.uniform(1.0, 4, 6)
        remapped = remap_solution(solution, same)
        np.testing.assert_allclose(remapped.coefficients, coeffs, rtol=0.0,
                                   atol=1e-12 * np.abs(coeffs).max())

    def test_polynomial_field_remaps_exactly(self, coarse_mesh):
        # a global polynomial of degree <= N is reproduced on any mesh
        rng = np.random.default_rng(72)
        poly = np.polynomial.Polynomial(rng.standard_normal(7))
        old = SpectralMesh1D.uniform(1.0, 4, 6)
        new = SpectralMesh1D(np.array([0.0, 0.13, 0.5, 0.77, 1.0]),
                             np.array([6, 6, 6, 6]))
        solution = separable_solution(coarse_mesh, old, poly)
        remapped = remap_solution(solution, new)
        z = np.linspace(0.0, 1.0, 500)
        want = THETA_D + poly(z)
        got = evaluate_line(remapped, *PROBE, z)
        assert np.max(np.abs(got - want)) <= 1e-11 * max(1.0, np.abs(want).max())

    def test_endpoints_never_change(self, coarse_mesh):
        old = SpectralMesh1D.uniform(1.0, 4, 5)
        new = SpectralMesh1D(np.array([0.0, 0.2, 0.3, 0.9, 1.0]),
                             np.array([5, 5, 5, 5]))
        solution = separable_solution(coarse_mesh, old,
                                      lambda z: np.sin(2.3 * z) + 0.2)
        remapped = remap_solution(solution, new)
        ends = np.array([0.0, 1.0])
        np.testing.assert_allclose(evaluate_line(remapped, *PROBE, ends),
                                   evaluate_line(solution, *PROBE, ends),
                                   rtol=0.0, atol=1e-13)

    def test_mismatched_domain_rejected(self, coarse_mesh):
        old = SpectralMesh1D.uniform(1.0, 4, 5)
        solution = separable_solution(coarse_mesh, old, lambda z: z)
        with pytest.raises(ValueError):
            remap_solution(solution, SpectralMesh1D.uniform(2.0, 4, 5))

    def test_transient_field_remap_error_and_ringing(self, coarse_system):
        # remap of a diffused quench profile onto the proposed interfaces:
        # interpolation across old breakpoints is the only error source
        result = solve_transient(coarse_system, THETA_D, 1e-3, 1e-4)
        solution = result.final
        front = detect_quench_fronts(solution, *PROBE, threshold=0.2)
        new_mesh, fallback = propose_interfaces(
            front, solution.spectral_mesh.num_elements,
            solution.spectral_mesh.length, solution.spectral_mesh.degrees)
        assert not fallback
        remapped = remap_solution(solution, new_mesh)
        z = np.linspace(0.0, 1.0, 1000)
        before = evaluate_line(solution, *PROBE, z)
        after = evaluate_line(remapped, *PROBE, z)
        peak = before.max() - THETA_D
        assert np.max(np.abs(after - before)) <= 0.01 * peak
        # no spectral ringing below the cold baseline
        assert after.min() >= THETA_D - 1e-3 * peak


class TestAdaptAndReassemble:
    def test_adaptation_moves_interfaces_and_keeps_size(self, coarse_system):
        result = solve_transient(coarse_system, THETA_D, 1e-3, 1e-4)
        system, solution, event = adapt_and_reassemble(
            coarse_system, result.final, *PROBE)
        assert event.changed and not event.fallback
        assert event.front.found
        assert system is not coarse_system
        assert system.dim == coarse_system.dim
        # transversal operators are reused, only the SE factors change
        assert system.fe_ops is coarse_system.fe_ops
        assert not system.spectral_mesh.equals(coarse_system.spectral_mesh)
        np.testing.assert_allclose(event.old_interfaces,
                                   coarse_system.spectral_mesh.interfaces)
        np.testing.assert_allclose(event.new_interfaces,
                                   system.spectral_mesh.interfaces)

    def test_unchanged_proposal_returns_inputs(self, coarse_system):
        result = solve_transient(coarse_system, THETA_D, 1e-3, 1e-4)
        once_system, once_solution, _ = adapt_and_reassemble(
            coarse_system, result.final, *PROBE)
        again_system, again_solution, event = adapt_and_reassemble(
            once_system, once_solution, *PROBE)
        assert not event.changed
        assert again_system is once_system
        assert again_solution is once_solution

    def test_remap_is_continuous_at_the_probe(self, coarse_system):
        result = solve_transient(coarse_system, THETA_D, 1e-3, 1e-4)
        _, solution, event = adapt_and_reassemble(coarse_system, result.final,
                                                  *PROBE)
        assert event.changed
        z_q = np.array([0.33])
        before = evaluate_line(result.final, *PROBE, z_q)[0]
        after = evaluate_line(solution, *PROBE, z_q)[0]
        assert abs(after - before) <= 1e-6 * (before - THETA_D)

    def test_stepping_continues_after_adaptation(self, coarse_system):
        result = solve_transient(coarse_system, THETA_D, 1e-3, 1e-4)
        system, solution, _ = adapt_and_reassemble(coarse_system, result.final,
                                                   *PROBE)
        dt = 1e-4
        advanced = step_backward_euler(system, solution.coefficients, dt)
        free = system.free
        matrix = system.mass_free + dt * system.stiffness_free
        rhs = (system.mass_free @ solution.coefficients[free]
               + dt * system.load_free)
        rel = np.linalg.norm(matrix @ advanced[free] - rhs) / np.linalg.norm(rhs)
        assert rel <= 1e-10

    def test_zero_field_is_a_no_op(self, coarse_system):
        zero = SpectralSolution(np.zeros(coarse_system.dim),
                                coarse_system.mesh2d,
                                coarse_system.spectral_mesh, THETA_D, time=0.0)
        system, solution, event = adapt_and_reassemble(coarse_system, zero,
                                                       *PROBE)
        assert system is coarse_system
        assert solution is zero
        assert not event.front.found
