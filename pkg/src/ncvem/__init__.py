"""Nonconforming virtual element method of order k for convection-diffusion-reaction on polygons."""
from .dofs import GlobalDofMap, interpolate, local_dof_count
from .errors import ConfigError, MeshError, SolverError
from .expr import Function2, parse, parse_polynomial
from .forms import CoefficientField, local_forms
from .mesh import PolygonalMesh, build_topology, read_poly2, validate_mesh, write_poly2
from .meshgen import builtin_mesh
from .poly import Poly2
from .postproc import ConvergenceTable, ManufacturedProblem, broken_error, convergence_study, jump_diagnostic
from .projectors import ElementProjectors, build_element_projectors
from .system import Discretization, apply_dirichlet, assemble, coercivity_diagnostic, solve, solve_problem

__version__ = "0.1.0"
