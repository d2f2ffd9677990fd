"""Quasi-3D thermal solver for quench propagation in stacks of insulated
superconducting cables.

The temperature field is discretized by 2D P1 finite elements over the
cable cross-section, tensorized with a modal spectral-element expansion
along the cable axis; the coupled operators are Kronecker products of
the two factors.  A conventional 3D prism FEM solver on the same
cross-section serves as the validation reference, and an interface
adaptation scheme tracks the quench front with a fixed number of
longitudinal elements.
"""

from .config import BenchmarkConfig, ConfigError, config_hash, parse_config
from .geometry import (CrossSectionSpec, Geometry2D, MaterialProps, Mesh2D,
                       build_benchmark_cross_section, triangulate_structured)
from .spectral import ModalBasis, SpectralMesh1D, assemble_se_global, get_basis
from .fem2d import FEOperators, assemble_fe_operators
from .q3d import (Q3DSystem, SpectralSolution, apply_dirichlet, assemble_q3d,
                  solve_steady, solve_transient)
from .adaptivity import (FrontEstimate, adapt_and_reassemble,
                         detect_quench_fronts, propose_interfaces,
                         remap_solution)
from .reference3d import (PrismMesh3D, Ref3DSystem, apply_dirichlet_3d,
                          assemble_3d, extrude, solve_3d_steady,
                          solve_3d_transient)
from .solving import SolverError, solve_spd
from .runner import (run_benchmark, run_efficiency_sweep, run_validation,
                     export_mesh)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkConfig", "ConfigError", "config_hash", "parse_config",
    "CrossSectionSpec", "Geometry2D", "MaterialProps", "Mesh2D",
    "build_benchmark_cross_section", "triangulate_structured",
    "ModalBasis", "SpectralMesh1D", "assemble_se_global", "get_basis",
    "FEOperators", "assemble_fe_operators",
    "Q3DSystem", "SpectralSolution", "apply_dirichlet", "assemble_q3d",
    "solve_steady", "solve_transient",
    "FrontEstimate", "adapt_and_reassemble", "detect_quench_fronts",
    "propose_interfaces", "remap_solution",
    "PrismMesh3D", "Ref3DSystem", "apply_dirichlet_3d", "assemble_3d",
    "extrude", "solve_3d_steady", "solve_3d_transient",
    "SolverError", "solve_spd",
    "run_benchmark", "run_efficiency_sweep", "run_validation", "export_mesh",
    "__version__",
]
