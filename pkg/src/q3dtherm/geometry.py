"""Cable-stack cross-section geometry and structured triangulation.

The cross-section is a horizontal stack of rectangular cables separated
and wrapped by insulation strips.  It is described as an axis-aligned
grid of material cells (the macro grid), which a structured, conforming
triangulation refines deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INSULATION = "insulation"


def cable_region(index: int) -> str:
    """Region name of the ``index``-th cable (1-based)."""
    return f"cable{index}"


@dataclass(frozen=True)
class MaterialProps:
    """Isotropic material data: conductivity in W/m/K, volumetric heat
    capacity in J/m^3/K."""

    thermal_conductivity: float
    volumetric_heat_capacity: float

    def __post_init__(self):
        if self.thermal_conductivity <= 0.0:
            raise ValueError("thermal conductivity must be positive")
        if self.volumetric_heat_capacity <= 0.0:
            raise ValueError("volumetric heat capacity must be positive")


@dataclass(frozen=True)
class CrossSectionSpec:
    """Parameters of the insulated cable stack.

    ``insulation_thickness`` may be zero, in which case the insulation
    strips collapse and the cables touch.
    """

    cable_width: float
    cable_height: float
    insulation_thickness: float
    n_cables: int
    cable: MaterialProps
    insulation: MaterialProps

    def __post_init__(self):
        if self.cable_width <= 0.0 or self.cable_height <= 0.0:
            raise ValueError("cable dimensions must be positive")
        if self.insulation_thickness < 0.0:
            raise ValueError("insulation thickness must be non-negative")
        if self.n_cables < 1:
            raise ValueError("need at least one cable")

    @property
    def total_width(self) -> float:
        return (self.n_cables * self.cable_width
                + (self.n_cables + 1) * self.insulation_thickness)

    @property
    def total_height(self) -> float:
        return self.cable_height + 2.0 * self.insulation_thickness

    @property
    def region_names(self) -> tuple:
        return (INSULATION,) + tuple(cable_region(i + 1) for i in range(self.n_cables))

    def conductivity_by_region(self) -> dict:
        values = {INSULATION: self.insulation.thermal_conductivity}
        for i in range(self.n_cables):
            values[cable_region(i + 1)] = self.cable.thermal_conductivity
        return values

    def heat_capacity_by_region(self) -> dict:
        values = {INSULATION: self.insulation.volumetric_heat_capacity}
        for i in range(self.n_cables):
            values[cable_region(i + 1)] = self.cable.volumetric_heat_capacity
        return values

    def cable_center(self, index: int) -> tuple:
        """Centroid (x, y) of the ``index``-th cable (1-based)."""
        if not 1 <= index <= self.n_cables:
            raise ValueError(f"cable index {index} outside 1..{self.n_cables}")
        left = (index * self.insulation_thickness
                + (index - 1) * self.cable_width)
        return (left + 0.5 * self.cable_width, 0.5 * self.total_height)


@dataclass(frozen=True, eq=False)
class Geometry2D:
    """Axis-aligned macro grid of tagged material cells.

    ``region_grid[row, col]`` indexes ``region_names`` for the rectangle
    x_breaks[col]..x_breaks[col+1] times y_breaks[row]..y_breaks[row+1].
    """

    x_breaks: np.ndarray
    y_breaks: np.ndarray
    region_grid: np.ndarray
    region_names: tuple
    source_region: str

    def __post_init__(self):
        x_breaks = np.asarray(self.x_breaks, dtype=float)
        y_breaks = np.asarray(self.y_breaks, dtype=float)
        grid = np.asarray(self.region_grid, dtype=int)
        if not (np.all(np.diff(x_breaks) > 0) and np.all(np.diff(y_breaks) > 0)):
            raise ValueError("breaks must be strictly increasing")
        if grid.shape != (y_breaks.size - 1, x_breaks.size - 1):
            raise ValueError("region grid shape does not match the breaks")
        if grid.min() < 0 or grid.max() >= len(self.region_names):
            raise ValueError("region grid references unknown region names")
        if self.source_region not in self.region_names:
            raise ValueError(f"unknown source region '{self.source_region}'")
        object.__setattr__(self, "x_breaks", x_breaks)
        object.__setattr__(self, "y_breaks", y_breaks)
        object.__setattr__(self, "region_grid", grid)

    @property
    def width(self) -> float:
        return float(self.x_breaks[-1] - self.x_breaks[0])

    @property
    def height(self) -> float:
        return float(self.y_breaks[-1] - self.y_breaks[0])

    def region_area(self, name: str) -> float:
        region_id = self.region_names.index(name)
        widths = np.diff(self.x_breaks)
        heights = np.diff(self.y_breaks)
        cell_areas = np.outer(heights, widths)
        return float(cell_areas[self.region_grid == region_id].sum())


def build_benchmark_cross_section(spec: CrossSectionSpec) -> Geometry2D:
    """Macro grid of the insulated stack: insulation strips between,
    left/right of, and above/below the cables.

    The source support is the first (left) cable.
    """
    ins = spec.insulation_thickness
    x_breaks = [0.0]
    col_cable = []          # cable index per column, None for insulation
    for i in range(spec.n_cables):
        if ins > 0.0:
            x_breaks.append(x_breaks[-1] + ins)
            col_cable.append(None)
        x_breaks.append(x_breaks[-1] + spec.cable_width)
        col_cable.append(i + 1)
    if ins > 0.0:
        x_breaks.append(x_breaks[-1] + ins)
        col_cable.append(None)

    y_breaks = [0.0]
    row_is_cable = []
    if ins > 0.0:
        y_breaks.append(ins)
        row_is_cable.append(False)
    y_breaks.append(y_breaks[-1] + spec.cable_height)
    row_is_cable.append(True)
    if ins > 0.0:
        y_breaks.append(y_breaks[-1] + ins)
        row_is_cable.append(False)

    names = spec.region_names
    grid = np.zeros((len(row_is_cable), len(col_cable)), dtype=int)
    for r, cable_row in enumerate(row_is_cable):
        for c, cable_idx in enumerate(col_cable):
            if cable_row and cable_idx is not None:
                grid[r, c] = names.index(cable_region(cable_idx))
            else:
                grid[r, c] = names.index(INSULATION)
    return Geometry2D(np.array(x_breaks), np.array(y_breaks), grid, names,
                      cable_region(1))


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """Conforming P1 triangle mesh with per-triangle region tags.

    ``boundary_edges`` lists the hull edges (each owned by exactly one
    triangle); the hull is adiabatic, so they carry no assembly terms and
    exist for inspection and export.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    region_ids: np.ndarray
    region_names: tuple
    boundary_edges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=int))
        object.__setattr__(self, "region_ids", np.asarray(self.region_ids, dtype=int))
        object.__setattr__(self, "boundary_edges", np.asarray(self.boundary_edges, dtype=int))

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    def triangle_areas(self) -> np.ndarray:
        """Signed areas; positive for the counter-clockwise orientation
        the generator guarantees."""
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def region_area(self, name: str) -> float:
        region_id = self.region_names.index(name)
        return float(self.triangle_areas()[self.region_ids == region_id].sum())


def triangulate_structured(geometry: Geometry2D, refinement_level: int) -> Mesh2D:
    """Deterministic structured triangulation of the macro grid.

    Every macro cell is subdivided into roughly square cells of target
    size ``h = h_base / 2**refinement_level`` (at least one across every
    strip), where ``h_base`` is the largest inscribed cell dimension of
    the macro grid.  Each quad is split into two triangles; the diagonal
    flips across the horizontal mid-line so that a mirror-symmetric
    geometry yields a mirror-symmetric triangulation.
    """
    if refinement_level < 0:
        raise ValueError("refinement level must be >= 0")
    widths = np.diff(geometry.x_breaks)
    heights = np.diff(geometry.y_breaks)
    h_base = min(widths.max(), heights.max())
    h = h_base / 2 ** refinement_level

    def subdivide(breaks, sizes):
        cuts = [np.array([breaks[0]])]
        counts = []
        for left, size in zip(breaks[:-1], sizes):
            n = max(1, math.ceil(size / h - 1e-12))
            counts.append(n)
            cuts.append(np.linspace(left, left + size, n + 1)[1:])
        return np.concatenate(cuts), np.array(counts, dtype=int)

    x_cuts, nx = subdivide(geometry.x_breaks, widths)
    y_cuts, ny = subdivide(geometry.y_breaks, heights)
    num_x, num_y = x_cuts.size - 1, y_cuts.size - 1

    # map fine cells back to their macro column/row
    col_of = np.repeat(np.arange(nx.size), nx)
    row_of = np.repeat(np.arange(ny.size), ny)

    xx, yy = np.meshgrid(x_cuts, y_cuts)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    ix, iy = np.meshgrid(np.arange(num_x), np.arange(num_y))
    ix, iy = ix.ravel(), iy.ravel()
    stride = num_x + 1
    n00 = iy * stride + ix
    n10 = n00 + 1
    n01 = n00 + stride
    n11 = n01 + 1

    mid_y = 0.5 * (geometry.y_breaks[0] + geometry.y_breaks[-1])
    center_y = 0.5 * (y_cuts[iy] + y_cuts[iy + 1])
    lower = center_y < mid_y

    tri_a = np.where(lower[:, None], np.column_stack([n00, n10, n11]),
                     np.column_stack([n00, n10, n01]))
    tri_b = np.where(lower[:, None], np.column_stack([n00, n11, n01]),
                     np.column_stack([n10, n11, n01]))
    triangles = np.empty((2 * ix.size, 3), dtype=int)
    triangles[0::2] = tri_a
    triangles[1::2] = tri_b

    cell_region = geometry.region_grid[row_of[iy], col_of[ix]]
    region_ids = np.repeat(cell_region, 2)

    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]],
                            triangles[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    boundary_edges = uniq[counts == 1]

    return Mesh2D(nodes, triangles, region_ids, geometry.region_names,
                  boundary_edges)


def locate_point(mesh: Mesh2D, x: float, y: float):
    """Triangle index and barycentric coordinates of a point.

    Points on shared edges resolve to the lowest triangle index; points
    outside the mesh raise ValueError.
    """
    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    diam = float(np.hypot(*(hi - lo)))
    tol = 1e-12 * diam
    if not (lo[0] - tol <= x <= hi[0] + tol and lo[1] - tol <= y <= hi[1] + tol):
        raise ValueError(f"point ({x}, {y}) outside the mesh bounding box")

    p = mesh.nodes[mesh.triangles]
    areas2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
              - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    lam = np.empty((mesh.num_triangles, 3))
    for i in range(3):
        a = p[:, (i + 1) % 3]
        b = p[:, (i + 2) % 3]
        lam[:, i] = ((b[:, 0] - a[:, 0]) * (y - a[:, 1])
                     - (b[:, 1] - a[:, 1]) * (x - a[:, 0])) / areas2

    bary_tol = 1e-12
    inside = np.all(lam >= -bary_tol, axis=1)
    hits = np.flatnonzero(inside)
    if hits.size == 0:
        raise ValueError(f"point ({x}, {y}) not contained in any triangle")
    tri = int(hits[0])
    bary = np.clip(lam[tri], 0.0, 1.0)
    return tri, bary / bary.sum()
