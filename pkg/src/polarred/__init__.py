"""Classical and quantum reduction of geodesic motion under polar actions."""

from .catalog import CATALOG, build, build_conjugation, build_hermann, build_twisted, derive_sutherland
from .classical import (
    ReducedState,
    compare_flows,
    inertia_gram,
    integrate_reduced,
    reduced_hamiltonian,
    solve_constraint,
)
from .lie import LieAlgebraModel, su
from .polar import PolarActionModel, RegularityError, project_to_section, validate_section
from .quantum import assemble_reduced_operator, make_grid, make_rep, measure_term, spectrum

__all__ = [
    "CATALOG", "build", "build_conjugation", "build_hermann", "build_twisted", "derive_sutherland",
    "ReducedState", "compare_flows", "inertia_gram", "integrate_reduced", "reduced_hamiltonian",
    "solve_constraint", "LieAlgebraModel", "su", "PolarActionModel", "RegularityError",
    "project_to_section", "validate_section", "assemble_reduced_operator", "make_grid",
    "make_rep", "measure_term", "spectrum",
]

__version__ = "0.1.0"
