"""Legacy ASCII VTK writers for the cross-section mesh and 3D field
snapshots.

Both discretizations are exported on the same evaluation grid (the
triangle nodes extruded over a common set of z-samples, wedge cells), so
their snapshots can be diffed point by point in any VTK viewer.  Output
is deterministic: 17 significant digits, ``\\n`` line endings and a fixed
field order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Mesh2D


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _write_lines(path, lines) -> None:
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _header(title: str) -> list:
    # the title line doubles as the config-hash carrier (max 256 chars)
    return ["# vtk DataFile Version 3.0", title[:255], "ASCII",
            "DATASET UNSTRUCTURED_GRID"]


def write_mesh_vtk(path, mesh: Mesh2D, title: str) -> None:
    """Cross-section triangulation with per-cell region ids and names."""
    lines = _header(title)
    lines.append(f"POINTS {mesh.num_nodes} double")
    for x, y in mesh.nodes:
        lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {mesh.num_triangles} {4 * mesh.num_triangles}")
    for tri in mesh.triangles:
        lines.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    lines.append(f"CELL_TYPES {mesh.num_triangles}")
    lines.extend(["5"] * mesh.num_triangles)
    lines.append(f"CELL_DATA {mesh.num_triangles}")
    lines.append("SCALARS region_id int 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(str(int(r)) for r in mesh.region_ids)
    _write_lines(path, lines)


def write_field_vtk(path, mesh: Mesh2D, z_samples, values: np.ndarray,
                    title: str, name: str = "theta_K") -> None:
    """Wedge-cell snapshot of a field sampled layer-major on
    ``z_samples`` x triangle nodes; ``values`` has shape (len(z), J)."""
    z_samples = np.asarray(z_samples, dtype=float)
    values = np.asarray(values, dtype=float)
    num_z = z_samples.size
    j = mesh.num_nodes
    if values.shape != (num_z, j):
        raise ValueError(f"field shape {values.shape} != ({num_z}, {j})")
    num_cells = (num_z - 1) * mesh.num_triangles

    lines = _header(title)
    lines.append(f"POINTS {num_z * j} double")
    for z in z_samples:
        z_text = _fmt(z)
        for x, y in mesh.nodes:
            lines.append(f"{_fmt(x)} {_fmt(y)} {z_text}")
    lines.append(f"CELLS {num_cells} {7 * num_cells}")
    for layer in range(num_z - 1):
        lo, hi = layer * j, (layer + 1) * j
        for a, b, c in mesh.triangles:
            lines.append(f"6 {lo + a} {lo + b} {lo + c} {hi + a} {hi + b} {hi + c}")
    lines.append(f"CELL_TYPES {num_cells}")
    lines.extend(["13"] * num_cells)
    lines.append(f"POINT_DATA {num_z * j}")
    lines.append(f"SCALARS {name} double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(_fmt(v) for v in values.ravel())
    _write_lines(path, lines)


def write_csv(path, comment: str, names, columns) -> None:
    """Curve output: one comment line, a header row, then 17-digit rows."""
    columns = [np.asarray(col, dtype=float) for col in columns]
    if len({col.size for col in columns}) > 1:
        raise ValueError("csv columns must have equal length")
    lines = [f"# {comment}", ",".join(names)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row))
    _write_lines(path, lines)
