"""Conjugate and focal points of Morse-Sturm systems, their Maslov index, and
the spectral flow of the Galerkin-discretized index form."""

from .bilinear import (
    Inertia,
    MatrixPath,
    Subspace,
    SymForm,
    b_orthogonal,
    inertia,
    relative_dimension,
    relative_index,
    spectral_flow,
)
from .focal import FocalBoundary, focal_identity_check, initial_lagrangian, p_maslov_index
from .index_form import BasisSpec, assemble, assemble_focal, path_spectral_flow, relative_index_numeric
from .maslov import LagrangianFrame, concatenation_check, crossing_form, maslov_index, maslov_index_geodesic
from .morse_sturm import (
    ConjugateInstant,
    CurvatureCurve,
    MetricForm,
    MorseSturmSystem,
    classify_instant,
    find_conjugate_instants,
    integrate_flow,
)
from .pipeline import AnalysisReport, RunOptions, emit, run
from .scenarios import Scenario, builtin, builtin_scenarios

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "BasisSpec",
    "ConjugateInstant",
    "CurvatureCurve",
    "FocalBoundary",
    "Inertia",
    "LagrangianFrame",
    "MatrixPath",
    "MetricForm",
    "MorseSturmSystem",
    "RunOptions",
    "Scenario",
    "Subspace",
    "SymForm",
    "assemble",
    "assemble_focal",
    "b_orthogonal",
    "builtin",
    "builtin_scenarios",
    "classify_instant",
    "concatenation_check",
    "crossing_form",
    "emit",
    "find_conjugate_instants",
    "focal_identity_check",
    "inertia",
    "initial_lagrangian",
    "integrate_flow",
    "maslov_index",
    "maslov_index_geodesic",
    "p_maslov_index",
    "path_spectral_flow",
    "relative_dimension",
    "relative_index",
    "relative_index_numeric",
    "run",
    "spectral_flow",
]
