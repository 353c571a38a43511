"""Worst-case entanglement-witness values when the detectors are untrusted and lossy."""

from .critical import CriticalResult, find_critical_eta
from .model import (
    ASSIGNMENT,
    DISCARD,
    ConicProgram,
    build_assignment_program,
    build_discard_program,
    build_program,
    witness_value,
)
from .oracle import (
    appendix_params,
    bell_closed_form,
    build_appendix_ensemble,
    exact_certificate,
    verify_feasibility,
)
from .solver import SolveReport, solve
from .witness import Witness, bell_witness, build_target_state, build_theta_witness

__all__ = [
    "ASSIGNMENT",
    "DISCARD",
    "ConicProgram",
    "CriticalResult",
    "SolveReport",
    "Witness",
    "appendix_params",
    "bell_closed_form",
    "bell_witness",
    "build_appendix_ensemble",
    "build_assignment_program",
    "build_discard_program",
    "build_program",
    "build_target_state",
    "build_theta_witness",
    "exact_certificate",
    "find_critical_eta",
    "solve",
    "verify_feasibility",
    "witness_value",
]
