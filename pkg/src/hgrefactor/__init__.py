"""Multigrid hierarchical refactoring of structured-grid data.

Data on a (possibly nonuniform) tensor-product grid is decomposed into
coefficient classes, coarsest first; any prefix of classes reconstructs an
approximation, and the full set reconstructs the input.
"""

from .grid import GridHierarchy, build_hierarchy, level_spacings, uniform_hierarchy
from .transforms import (
    apply_coefficients,
    compute_coefficients,
    interpolate_to_fine,
    node_classes,
)
from .correction import (
    compute_correction,
    mass_apply,
    masstrans_apply,
    thomas_solve,
    transfer_apply,
)
from .refactor import ErrorReport, RefactoredArray, decompose, error_report, recompose
from .storage import info, read_prefix, write_file

__all__ = [
    "GridHierarchy",
    "build_hierarchy",
    "uniform_hierarchy",
    "level_spacings",
    "interpolate_to_fine",
    "compute_coefficients",
    "apply_coefficients",
    "node_classes",
    "mass_apply",
    "transfer_apply",
    "masstrans_apply",
    "thomas_solve",
    "compute_correction",
    "RefactoredArray",
    "ErrorReport",
    "decompose",
    "recompose",
    "error_report",
    "write_file",
    "read_prefix",
    "info",
]

__version__ = "0.1.0"
