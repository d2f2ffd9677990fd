"""Cross-section description and structured triangulation."""

import numpy as np
import pytest

from q3dtherm.geometry import (
    INSULATION,
    CrossSectionSpec,
    MaterialProps,
    build_benchmark_cross_section,
    cable_region,
    locate_point,
    triangulate_structured,
)

CABLE = MaterialProps(thermal_conductivity=235.6, volumetric_heat_capacity=314.1)
INS = MaterialProps(thermal_conductivity=0.01, volumetric_heat_capacity=750.0)


def benchmark_spec(**overrides):
    kwargs = dict(cable_width=1.5e-3, cable_height=15.0e-3,
                  insulation_thickness=0.1e-3, n_cables=3,
                  cable=CABLE, insulation=INS)
    kwargs.update(overrides)
    return CrossSectionSpec(**kwargs)


class TestCrossSectionSpec:
    def test_benchmark_dimensions(self):
        spec = benchmark_spec()
        assert spec.total_width == pytest.approx(4.9e-3, rel=1e-14)
        assert spec.total_height == pytest.approx(15.2e-3, rel=1e-14)

    def test_region_names(self):
        spec = benchmark_spec()
        assert set(spec.region_names) == {INSULATION, cable_region(1),
                                          cable_region(2), cable_region(3)}

    def test_material_lookup_tables(self):
        spec = benchmark_spec()
        conductivity = spec.conductivity_by_region()
        assert conductivity[INSULATION] == 0.01
        assert conductivity[cable_region(2)] == 235.6
        capacity = spec.heat_capacity_by_region()
        assert capacity[cable_region(1)] == 314.1
        assert capacity[INSULATION] == 750.0

    def test_cable_centers(self):
        spec = benchmark_spec()
        assert spec.cable_center(1) == pytest.approx((0.85e-3, 7.6e-3), rel=1e-14)
        assert spec.cable_center(2)[0] == pytest.approx(2.45e-3, rel=1e-14)
        assert spec.cable_center(3)[0] == pytest.approx(4.05e-3, rel=1e-14)

    @pytest.mark.parametrize("field, value", [
        ("cable_width", 0.0),
        ("cable_height", -1.0),
        ("insulation_thickness", -1e-6),
        ("n_cables", 0),
    ])
    def test_invalid_parameters_rejected(self, field, value):
        with pytest.raises(ValueError):
            benchmark_spec(**{field: value})

    def test_cable_center_out_of_range(self):
        with pytest.raises(ValueError):
            benchmark_spec().cable_center(4)

    def test_zero_insulation_degenerates_to_bare_stack(self):
        spec = benchmark_spec(insulation_thickness=0.0)
        assert spec.total_width == pytest.approx(4.5e-3, rel=1e-14)
        geometry = build_benchmark_cross_section(spec)
        assert geometry.region_area(INSULATION) == 0.0
        assert geometry.region_area(cable_region(1)) == pytest.approx(
            22.5e-6, rel=1e-13)


class TestGeometry:
    def test_region_areas(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        cable_area = 1.5e-3 * 15.0e-3
        for i in (1, 2, 3):
            assert geometry.region_area(cable_region(i)) == pytest.approx(
                cable_area, rel=1e-13)
        total = 4.9e-3 * 15.2e-3
        assert geometry.region_area(INSULATION) == pytest.approx(
            total - 3 * cable_area, rel=1e-13)

    def test_source_region_is_first_cable(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        assert geometry.source_region == cable_region(1)


class TestTriangulation:
    @pytest.mark.parametrize("level, nodes, triangles", [
        (0, 104, 168),
        (1, 253, 440),
    ])
    def test_mesh_sizes_pinned(self, level, nodes, triangles):
        geometry = build_benchmark_cross_section(benchmark_spec())
        mesh = triangulate_structured(geometry, refinement_level=level)
        assert mesh.num_nodes == nodes
        assert mesh.num_triangles == triangles

    def test_all_triangles_counterclockwise(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        mesh = triangulate_structured(geometry, refinement_level=0)
        assert np.all(mesh.triangle_areas() > 0.0)

    def test_mesh_region_areas_exact(self):
        # tensor-grid triangulation resolves region boundaries exactly
        geometry = build_benchmark_cross_section(benchmark_spec())
        for level in (0, 1):
            mesh = triangulate_structured(geometry, refinement_level=level)
            for name in geometry.region_names:
                assert mesh.region_area(name) == pytest.approx(
                    geometry.region_area(name), rel=1e-12)

    def test_total_area(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        mesh = triangulate_structured(geometry, refinement_level=1)
        assert mesh.triangle_areas().sum() == pytest.approx(
            4.9e-3 * 15.2e-3, rel=1e-12)

    def test_boundary_edges_trace_the_hull(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        mesh = triangulate_structured(geometry, refinement_level=0)
        width, height = 4.9e-3, 15.2e-3
        total = 0.0
        for a, b in mesh.boundary_edges:
            pa, pb = mesh.nodes[a], mesh.nodes[b]
            on_side = (
                (pa[0] == 0.0 and pb[0] == 0.0)
                or (pa[1] == 0.0 and pb[1] == 0.0)
                or (np.isclose(pa[0], width, rtol=1e-14)
                    and np.isclose(pb[0], width, rtol=1e-14))
                or (np.isclose(pa[1], height, rtol=1e-14)
                    and np.isclose(pb[1], height, rtol=1e-14)))
            assert on_side
            total += float(np.hypot(*(pb - pa)))
        assert total == pytest.approx(2.0 * (width + height), rel=1e-12)

    def test_node_set_is_y_symmetric(self):
        # the diagonal flip across the midline makes the triangulation
        # mirror-symmetric, which the physics tests rely on
        geometry = build_benchmark_cross_section(benchmark_spec())
        mesh = triangulate_structured(geometry, refinement_level=1)
        height = 15.2e-3
        order = np.lexsort((mesh.nodes[:, 1], mesh.nodes[:, 0]))
        mirror_order = np.lexsort((height - mesh.nodes[:, 1], mesh.nodes[:, 0]))
        mirrored = mesh.nodes[mirror_order]
        np.testing.assert_allclose(mesh.nodes[order, 0], mirrored[:, 0],
                                   atol=1e-15)
        np.testing.assert_allclose(mesh.nodes[order, 1],
                                   height - mirrored[:, 1], atol=1e-15)

    def test_refinement_level_must_be_nonnegative(self):
        geometry = build_benchmark_cross_section(benchmark_spec())
        with pytest.raises(ValueError):
            triangulate_structured(geometry, refinement_level=-1)


@pytest.fixture(scope="module")
def located_mesh():
    geometry = build_benchmark_cross_section(benchmark_spec())
    return triangulate_structured(geometry, refinement_level=0)


class TestLocatePoint:
    @pytest.fixture()
    def mesh(self, located_mesh):
        return located_mesh

    def test_centroids_locate_their_triangle(self, mesh):
        rng = np.random.default_rng(17)
        for tri in rng.choice(mesh.num_triangles, 25, replace=False):
            cx, cy = mesh.nodes[mesh.triangles[tri]].mean(axis=0)
            found, bary = locate_point(mesh, cx, cy)
            assert found == tri
            np.testing.assert_allclose(bary, [1 / 3, 1 / 3, 1 / 3], atol=1e-9)

    def test_barycentric_reconstruction(self, mesh):
        rng = np.random.default_rng(18)
        for _ in range(25):
            tri = rng.integers(mesh.num_triangles)
            w = rng.dirichlet(np.ones(3))
            x, y = w @ mesh.nodes[mesh.triangles[tri]]
            found, bary = locate_point(mesh, x, y)
            rebuilt = bary @ mesh.nodes[mesh.triangles[found]]
            np.testing.assert_allclose(rebuilt, [x, y], atol=1e-12)

    def test_shared_edge_resolves_to_lowest_index(self, mesh):
        # midpoint of an interior edge belongs to two triangles
        tri = 0
        a, b = mesh.triangles[tri][0], mesh.triangles[tri][1]
        x, y = mesh.nodes[[a, b]].mean(axis=0)
        found, _ = locate_point(mesh, x, y)
        candidates = [
            t for t in range(mesh.num_triangles)
            if {a, b} <= set(mesh.triangles[t])]
        assert found == min(candidates)

    def test_outside_point_raises(self, mesh):
        with pytest.raises(ValueError, match="outside"):
            locate_point(mesh, -1.0, 0.5)
