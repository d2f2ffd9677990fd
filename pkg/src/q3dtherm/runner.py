"""Benchmark orchestration: builds the discrete problems from a config
and produces the artifacts of the run, validation and sweep modes.

All file outputs are deterministic for a given config (the wall-clock
entries of the metadata JSON are the single intended exception).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import q3d as q3d_mod
from . import reference3d as ref3d_mod
from .adaptivity import FrontEstimate, adapt_and_reassemble, propose_interfaces
from .config import BenchmarkConfig, config_hash, write_resolved
from .fem2d import assemble_fe_operators
from .geometry import (CrossSectionSpec, MaterialProps, Mesh2D,
                       build_benchmark_cross_section, cable_region,
                       triangulate_structured)
from .spectral import SpectralMesh1D, assemble_se_global
from .vtk_io import write_csv, write_field_vtk, write_mesh_vtk

# shared longitudinal evaluation grid for profiles and VTK snapshots
NUM_Z_SAMPLES = 101

VALIDATION_THRESHOLD_PLAIN = 0.03
VALIDATION_THRESHOLD_ADAPTED = 0.02
VALIDATION_AGREEMENT = 0.01
SWEEP_ERROR_MATCH = 0.10
SWEEP_DIMENSION_RATIO = 0.15


def cross_section(config: BenchmarkConfig) -> CrossSectionSpec:
    return CrossSectionSpec(
        cable_width=config.cable_width, cable_height=config.cable_height,
        insulation_thickness=config.insulation_thickness,
        n_cables=config.n_cables,
        cable=MaterialProps(config.cable_conductivity,
                            config.cable_heat_capacity),
        insulation=MaterialProps(config.insulation_conductivity,
                                 config.insulation_heat_capacity))


def transversal_mesh(config: BenchmarkConfig,
                     refinement_level: Optional[int] = None) -> Mesh2D:
    level = (config.refinement_level if refinement_level is None
             else refinement_level)
    return triangulate_structured(
        build_benchmark_cross_section(cross_section(config)), level)


def source_density(config: BenchmarkConfig) -> dict:
    density = {name: 0.0 for name in cross_section(config).region_names}
    density[cable_region(config.quenched_cable)] = config.q_hat
    return density


def longitudinal_source(config: BenchmarkConfig):
    z_q, sigma = config.z_q, config.sigma

    def gaussian(z):
        return np.exp(-(((np.asarray(z, dtype=float) - z_q) / sigma) ** 2))

    return gaussian


def neighbor_cable(config: BenchmarkConfig) -> int:
    if config.quenched_cable < config.n_cables:
        return config.quenched_cable + 1
    return max(config.quenched_cable - 1, 1)


def probe_points(config: BenchmarkConfig) -> list:
    """Hot-spot and neighbor probes: cable centroids at the quench z."""
    spec = cross_section(config)
    points = []
    for index in (config.quenched_cable, neighbor_cable(config)):
        x, y = spec.cable_center(index)
        points.append((x, y, config.z_q))
    return points


def source_front(config: BenchmarkConfig) -> FrontEstimate:
    """Quench-zone estimate straight from the source parameters (2 sigma)."""
    return FrontEstimate(found=True,
                         z_left=config.z_q - 2.0 * config.sigma,
                         z_right=config.z_q + 2.0 * config.sigma,
                         peak_rise=1.0)


def uniform_spectral_mesh(config: BenchmarkConfig) -> SpectralMesh1D:
    return SpectralMesh1D.uniform(config.length, config.num_elements,
                                  config.degree)


def assemble_q3d_system(config: BenchmarkConfig, mesh: Optional[Mesh2D] = None,
                        spectral_mesh: Optional[SpectralMesh1D] = None):
    mesh = transversal_mesh(config) if mesh is None else mesh
    spectral_mesh = (uniform_spectral_mesh(config) if spectral_mesh is None
                     else spectral_mesh)
    spec = cross_section(config)
    fe_ops = assemble_fe_operators(mesh, spec.conductivity_by_region(),
                                   spec.heat_capacity_by_region(),
                                   source_density(config))
    se_ops = assemble_se_global(spectral_mesh, longitudinal_source(config))
    return q3d_mod.apply_dirichlet(q3d_mod.assemble_q3d(mesh, fe_ops, se_ops),
                                   config.theta_dirichlet)


def assemble_ref3d_system(config: BenchmarkConfig,
                          mesh: Optional[Mesh2D] = None):
    mesh = transversal_mesh(config) if mesh is None else mesh
    spec = cross_section(config)
    mesh3d = ref3d_mod.extrude(mesh, config.length, config.oracle_layers)
    system = ref3d_mod.assemble_3d(mesh3d, spec.conductivity_by_region(),
                                   spec.heat_capacity_by_region(),
                                   source_density(config),
                                   longitudinal_source(config))
    return ref3d_mod.apply_dirichlet_3d(system, config.theta_dirichlet)


def make_adapt_fn(config: BenchmarkConfig):
    """Interface adaptation hook scanning along the quenched cable."""
    x, y = cross_section(config).cable_center(config.quenched_cable)

    def adapt_fn(system, solution, t):
        return adapt_and_reassemble(system, solution, x, y,
                                    threshold=config.adapt_threshold)

    return adapt_fn


def _event_record(event) -> dict:
    return {
        "time_s": event.time,
        "changed": event.changed,
        "fallback": event.fallback,
        "front_found": event.front.found,
        "front_z_left_m": event.front.z_left,
        "front_z_right_m": event.front.z_right,
        "front_peak_rise_K": event.front.peak_rise,
        "old_interfaces_m": [float(v) for v in event.old_interfaces],
        "new_interfaces_m": [float(v) for v in event.new_interfaces],
    }


def _rise_normalized_diff(theta, theta_ref, theta_dirichlet):
    """|theta - theta_ref| / (theta_ref - theta_dirichlet), 0 where the
    reference rise vanishes (both solutions start on the bath value)."""
    theta = np.asarray(theta, dtype=float)
    theta_ref = np.asarray(theta_ref, dtype=float)
    rise = theta_ref - theta_dirichlet
    out = np.zeros_like(rise)
    mask = rise > 0.0
    out[mask] = np.abs(theta - theta_ref)[mask] / rise[mask]
    return out


def _profile_times(config: BenchmarkConfig) -> list:
    wanted = config.profile_times if config.profile_times else (config.t_end,)
    return sorted(set(float(t) for t in wanted))


def _at_time(states: dict, t: float):
    """Snapshot lookup tolerant of accumulated float step times."""
    for key, state in states.items():
        if abs(key - t) <= 1e-9 * max(1.0, abs(t)):
            return state
    raise KeyError(f"no snapshot stored at t={t}")


class _Phases:
    """Accumulates wall-clock per phase for the metadata JSON."""

    def __init__(self):
        self.seconds = {}
        self._t0 = None
        self._name = None

    def start(self, name: str):
        self.stop()
        self._name, self._t0 = name, time.perf_counter()

    def stop(self):
        if self._name is not None:
            self.seconds[self._name] = (self.seconds.get(self._name, 0.0)
                                        + time.perf_counter() - self._t0)
            self._name = None


@dataclass(eq=False)
class RunArtifacts:
    """Paths and in-memory results of one benchmark run."""

    solver: str
    output_dir: Path
    files: dict
    metadata: dict
    result: object = field(repr=False, default=None)


def _prepare_output(config: BenchmarkConfig, output_dir) -> Path:
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_resolved(config, out / "config_resolved.txt")
    return out


def _write_meta(path: Path, metadata: dict) -> None:
    path.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def run_benchmark(config: BenchmarkConfig, solver: str = "q3d",
                  output_dir=None) -> RunArtifacts:
    """Transient benchmark run producing probe/profile CSVs, a VTK field
    snapshot at t_end and a metadata JSON."""
    if solver not in ("q3d", "ref3d"):
        raise ValueError(f"unknown solver '{solver}'")
    out = _prepare_output(config, output_dir)
    comment = f"config sha256 {config_hash(config)}"
    phases = _Phases()
    points = probe_points(config)
    profile_wanted = _profile_times(config)
    snapshot_times = sorted(set(t for t in profile_wanted if t > 0.0)
                            | ({config.t_end} if config.t_end > 0 else set()))
    mesh = transversal_mesh(config)
    x_hot, y_hot = cross_section(config).cable_center(config.quenched_cable)
    z_samples = np.linspace(0.0, config.length, NUM_Z_SAMPLES)

    phases.start("assemble")
    if solver == "q3d":
        system = assemble_q3d_system(config, mesh=mesh)
        phases.start("solve")
        adapt_times = [] if config.adapt_time is None else [config.adapt_time]
        result = q3d_mod.solve_transient(
            system, config.theta_initial, config.t_end, config.dt,
            probe_points=points, adapt_times=adapt_times,
            adapt_fn=make_adapt_fn(config) if adapt_times else None,
            snapshot_times=snapshot_times, method="auto")
        solutions = {0.0: q3d_mod.SpectralSolution(
            q3d_mod.initial_coefficients(system, config.theta_initial),
            system.mesh2d, system.spectral_mesh, config.theta_dirichlet,
            time=0.0)}
        solutions.update({s.time: s for s in result.snapshots})
        solutions[result.final.time] = result.final

        def line_at(t):
            return q3d_mod.evaluate_line(_at_time(solutions, t), x_hot, y_hot,
                                         z_samples)

        field_values = q3d_mod.evaluate_nodal_profile(result.final, z_samples)
        events = result.events
        system = result.system  # adaptation may have replaced it
        extra = {"num_z_modes": system.spectral_mesh.num_modes}
    else:
        system = assemble_ref3d_system(config, mesh=mesh)
        phases.start("solve")
        result = ref3d_mod.solve_3d_transient(
            system, config.theta_initial, config.t_end, config.dt,
            probe_points=points, snapshot_times=snapshot_times,
            method="auto")
        initial = np.full(system.dim,
                          config.theta_initial - config.theta_dirichlet)
        initial[system.constrained_indices()] = 0.0
        fields = {0.0: ref3d_mod.NodalField3D(initial, system.mesh3d,
                                              config.theta_dirichlet, time=0.0)}
        fields.update({s.time: s for s in result.snapshots})
        fields[result.final.time] = result.final

        def line_at(t):
            return ref3d_mod.evaluate_field_line(_at_time(fields, t), x_hot,
                                                 y_hot, z_samples)

        layers = result.final.layer_matrix()
        field_values = (config.theta_dirichlet
                        + np.stack([np.interp(z_samples, system.mesh3d.z_grid,
                                              layers[:, node])
                                    for node in range(mesh.num_nodes)], axis=1))
        events = []
        extra = {"num_z_layers": system.mesh3d.num_layers}

    phases.start("output")
    files = {"config": out / "config_resolved.txt"}
    files["probes"] = out / f"{solver}_probes.csv"
    write_csv(files["probes"], comment,
              ("time_s", "theta_hotspot_K", "theta_neighbor_K"),
              (result.times, result.probe_temperatures[:, 0],
               result.probe_temperatures[:, 1]))

    times_col, z_col, theta_col = [], [], []
    for t in profile_wanted:
        theta = line_at(t)
        times_col.append(np.full(z_samples.size, t))
        z_col.append(z_samples)
        theta_col.append(theta)
    files["profile"] = out / f"{solver}_profile.csv"
    write_csv(files["profile"], comment, ("time_s", "z_m", "theta_K"),
              (np.concatenate(times_col), np.concatenate(z_col),
               np.concatenate(theta_col)))

    files["field"] = out / f"{solver}_field.vtk"
    write_field_vtk(files["field"], mesh, z_samples, field_values,
                    title=f"{solver} temperature at t_end, {comment}")
    phases.stop()

    metadata = {
        "solver": solver,
        "config_sha256": config_hash(config),
        "dimension": int(system.dim),
        "free_dimension": int(system.free.size),
        "stiffness_nonzeros": int(system.stiffness.nnz),
        "mass_nonzeros": int(system.mass.nnz),
        "num_triangles": int(mesh.num_triangles),
        "num_fe_nodes": int(mesh.num_nodes),
        "final_time_s": float(result.times[-1]),
        "adaptation_events": [_event_record(e) for e in events],
        "wall_clock_s": {k: round(v, 6) for k, v in phases.seconds.items()},
    }
    metadata.update(extra)
    files["meta"] = out / f"{solver}_meta.json"
    _write_meta(files["meta"], metadata)
    return RunArtifacts(solver, out, {k: str(v) for k, v in files.items()},
                        metadata, result)


@dataclass(eq=False)
class ValidationReport:
    """Hot-spot curves of the three validation runs and their verdict."""

    times: np.ndarray
    theta_plain: np.ndarray
    theta_adapted: np.ndarray
    theta_ref: np.ndarray
    rel_plain: np.ndarray
    rel_adapted: np.ndarray
    max_rel_plain: float
    max_rel_adapted: float
    end_rel_plain: float
    end_rel_adapted: float
    adaptation_events: list
    passed: bool
    agreement: bool
    files: dict


def run_validation(config: BenchmarkConfig, output_dir=None) -> ValidationReport:
    """Hot-spot comparison: plain Q3D, half-time-adapted Q3D, 3D oracle.

    ``passed`` reflects the pinned thresholds (3% plain, 2% adapted,
    adapted not worse than plain); ``agreement`` records whether all
    differences stay below 1%, the level at which a threshold failure is
    an investigation trigger rather than a rejection.
    """
    out = _prepare_output(config, output_dir)
    comment = f"config sha256 {config_hash(config)}"
    mesh = transversal_mesh(config)
    points = probe_points(config)
    adapt_time = (config.adapt_time if config.adapt_time is not None
                  else 0.5 * config.t_end)

    plain = q3d_mod.solve_transient(
        assemble_q3d_system(config, mesh=mesh), config.theta_initial,
        config.t_end, config.dt, probe_points=points, method="auto")
    adapted = q3d_mod.solve_transient(
        assemble_q3d_system(config, mesh=mesh), config.theta_initial,
        config.t_end, config.dt, probe_points=points,
        adapt_times=[adapt_time] if config.t_end > 0 else [],
        adapt_fn=make_adapt_fn(config), method="auto")
    oracle = ref3d_mod.solve_3d_transient(
        assemble_ref3d_system(config, mesh=mesh), config.theta_initial,
        config.t_end, config.dt, probe_points=points, method="auto")

    hot_plain = plain.probe_temperatures[:, 0]
    hot_adapted = adapted.probe_temperatures[:, 0]
    hot_ref = oracle.probe_temperatures[:, 0]
    rel_plain = _rise_normalized_diff(hot_plain, hot_ref,
                                      config.theta_dirichlet)
    rel_adapted = _rise_normalized_diff(hot_adapted, hot_ref,
                                        config.theta_dirichlet)

    max_plain, max_adapted = float(rel_plain.max()), float(rel_adapted.max())
    passed = (max_plain <= VALIDATION_THRESHOLD_PLAIN
              and max_adapted <= VALIDATION_THRESHOLD_ADAPTED
              and max_adapted <= max_plain)
    agreement = max(max_plain, max_adapted) < VALIDATION_AGREEMENT

    files = {"config": str(out / "config_resolved.txt")}
    path = out / "validation.csv"
    write_csv(path, comment,
              ("time_s", "theta_q3d_plain_K", "theta_q3d_adapted_K",
               "theta_ref3d_K", "rel_diff_plain", "rel_diff_adapted"),
              (plain.times, hot_plain, hot_adapted, hot_ref, rel_plain,
               rel_adapted))
    files["validation"] = str(path)

    meta = {
        "config_sha256": config_hash(config),
        "adapt_time_s": adapt_time,
        "max_rel_diff_plain": max_plain,
        "max_rel_diff_adapted": max_adapted,
        "end_rel_diff_plain": float(rel_plain[-1]),
        "end_rel_diff_adapted": float(rel_adapted[-1]),
        "threshold_plain": VALIDATION_THRESHOLD_PLAIN,
        "threshold_adapted": VALIDATION_THRESHOLD_ADAPTED,
        "adaptation_events": [_event_record(e) for e in adapted.events],
        "passed": passed,
        "agreement_below_1_percent": agreement,
    }
    meta_path = out / "validation_meta.json"
    _write_meta(meta_path, meta)
    files["meta"] = str(meta_path)

    return ValidationReport(
        times=plain.times, theta_plain=hot_plain, theta_adapted=hot_adapted,
        theta_ref=hot_ref, rel_plain=rel_plain, rel_adapted=rel_adapted,
        max_rel_plain=max_plain, max_rel_adapted=max_adapted,
        end_rel_plain=float(rel_plain[-1]),
        end_rel_adapted=float(rel_adapted[-1]),
        adaptation_events=adapted.events, passed=passed, agreement=agreement,
        files=files)


@dataclass(eq=False)
class SweepReport:
    """Steady-state error-vs-dimension data over refinement levels."""

    levels: list
    num_triangles: list
    q3d_dimensions: list
    ref3d_dimensions: list
    q3d_hotspots: list
    ref3d_hotspots: list
    q3d_errors: list
    ref3d_errors: list
    reference_hotspot: float
    interfaces: np.ndarray
    matched_levels: list
    matched_ratio_ok: bool
    ref_errors_decreasing: bool
    files: dict


def run_efficiency_sweep(config: BenchmarkConfig, levels=(0, 1, 2),
                         output_dir=None) -> SweepReport:
    """Steady hot-spot error vs system dimension across refinement levels.

    The Q3D runs use the interface proposal for the known source zone
    (the same placement rule the adaptive transient applies), the oracle
    its configured layer count; errors are rise-normalized against the
    finest oracle run.
    """
    levels = sorted(int(level) for level in levels)
    if len(levels) < 2:
        raise ValueError("sweep needs at least two refinement levels")
    out = _prepare_output(config, output_dir)
    comment = f"config sha256 {config_hash(config)}"
    spec = cross_section(config)
    x_hot, y_hot = spec.cable_center(config.quenched_cable)
    spectral_mesh, fallback = propose_interfaces(
        source_front(config), config.num_elements, config.length,
        config.degree)

    triangles, dims_q, dims_3, hots_q, hots_3 = [], [], [], [], []
    for level in levels:
        mesh = transversal_mesh(config, refinement_level=level)
        system_q = assemble_q3d_system(config, mesh=mesh,
                                       spectral_mesh=spectral_mesh)
        solution = q3d_mod.solve_steady(system_q, method="auto")
        hots_q.append(q3d_mod.evaluate_solution(solution, x_hot, y_hot,
                                                config.z_q))
        system_3 = assemble_ref3d_system(config, mesh=mesh)
        field3 = ref3d_mod.solve_3d_steady(system_3, method="auto")
        probe = ref3d_mod.probe_matrix_3d(system_3.mesh3d,
                                          [(x_hot, y_hot, config.z_q)])
        hots_3.append(float(config.theta_dirichlet + (probe @ field3.values)[0]))
        triangles.append(mesh.num_triangles)
        dims_q.append(system_q.dim)
        dims_3.append(system_3.dim)

    reference = hots_3[-1]
    rise = reference - config.theta_dirichlet
    errors_q = [abs(h - reference) / rise for h in hots_q]
    errors_3 = [abs(h - reference) / rise for h in hots_3]

    matched = [level for level, eq, e3 in zip(levels, errors_q, errors_3)
               if max(eq, e3) > 0.0
               and abs(eq - e3) <= SWEEP_ERROR_MATCH * max(eq, e3)]
    ratio_ok = all(dims_q[levels.index(level)]
                   <= SWEEP_DIMENSION_RATIO * dims_3[levels.index(level)]
                   for level in matched)
    decreasing = all(errors_3[i] > errors_3[i + 1]
                     for i in range(len(errors_3) - 1))

    files = {"config": str(out / "config_resolved.txt")}
    path = out / "sweep.csv"
    write_csv(path, comment,
              ("refinement_level", "num_triangles", "q3d_dimension",
               "ref3d_dimension", "q3d_hotspot_K", "ref3d_hotspot_K",
               "q3d_rel_error", "ref3d_rel_error"),
              (levels, triangles, dims_q, dims_3, hots_q, hots_3,
               errors_q, errors_3))
    files["sweep"] = str(path)

    meta = {
        "config_sha256": config_hash(config),
        "interfaces_m": [float(v) for v in spectral_mesh.interfaces],
        "interface_fallback": fallback,
        "reference_hotspot_K": reference,
        "matched_levels": matched,
        "matched_dimension_ratio_ok": ratio_ok,
        "ref3d_errors_decreasing": decreasing,
    }
    meta_path = out / "sweep_meta.json"
    _write_meta(meta_path, meta)
    files["meta"] = str(meta_path)

    return SweepReport(
        levels=levels, num_triangles=triangles, q3d_dimensions=dims_q,
        ref3d_dimensions=dims_3, q3d_hotspots=hots_q, ref3d_hotspots=hots_3,
        q3d_errors=errors_q, ref3d_errors=errors_3,
        reference_hotspot=reference, interfaces=spectral_mesh.interfaces,
        matched_levels=matched, matched_ratio_ok=ratio_ok,
        ref_errors_decreasing=decreasing, files=files)


def export_mesh(config: BenchmarkConfig, output_dir=None) -> dict:
    """Write the cross-section triangulation as a legacy VTK file."""
    out = _prepare_output(config, output_dir)
    mesh = transversal_mesh(config)
    path = out / "mesh.vtk"
    write_mesh_vtk(path, mesh,
                   title=f"cross-section mesh, config sha256 {config_hash(config)}")
    return {"mesh": str(path), "config": str(out / "config_resolved.txt"),
            "num_triangles": mesh.num_triangles, "num_nodes": mesh.num_nodes}
