"""Effective adiabatic generators for strongly driven open quantum systems.

Given a generator g*B + C with a strong part B and weak part C, the package
computes the spectral data of B, solves the adiabatic Bloch equations
nonperturbatively, assembles leakage-free effective generators (one-sided
and symmetrized) with Newton-Kantorovich existence certificates, checks
their physical structure (HP/TP/CCP, GKLS form), and verifies the
uniform-in-time error bounds against exact propagation.
"""

from .bloch import (
    BlochSolution,
    KantorovichReport,
    SeriesCoefficients,
    bracket,
    generator_series,
    kantorovich_report,
    omega_from_wave,
    omega_series,
    schrieffer_wolff_series,
    solve_block,
    solve_blocks,
    solve_omega,
    solve_omega_conjugate,
    solve_wave,
    solve_wave_conjugate,
    sum_correction_series,
    wave_from_omega,
)
from .effective import (
    BoundReport,
    EffectiveGenerators,
    build_effective,
    eternal_bound,
    multiset_spectral_distance,
    perturbed_projection,
    verify_similarity,
)
from .errors import AdiablochError
from .liouville import (
    GKLSForm,
    LindbladModel,
    Superoperator,
    build_superop,
    check_ccp,
    check_hp,
    check_tp,
    coherence_rep,
    gkls_decompose,
    hermitian_basis,
    unvec,
    vec,
)
from .spectral import (
    EigenspaceData,
    SpectralDecomposition,
    decompose,
    decompose_from_user,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "AdiablochError",
    "BlochSolution",
    "BoundReport",
    "EffectiveGenerators",
    "EigenspaceData",
    "GKLSForm",
    "KantorovichReport",
    "LindbladModel",
    "SeriesCoefficients",
    "SpectralDecomposition",
    "Superoperator",
    "bracket",
    "build_effective",
    "build_superop",
    "check_ccp",
    "check_hp",
    "check_tp",
    "coherence_rep",
    "decompose",
    "decompose_from_user",
    "eternal_bound",
    "generator_series",
    "gkls_decompose",
    "hermitian_basis",
    "kantorovich_report",
    "multiset_spectral_distance",
    "omega_from_wave",
    "omega_series",
    "perturbed_projection",
    "schrieffer_wolff_series",
    "solve_block",
    "solve_blocks",
    "solve_omega",
    "solve_omega_conjugate",
    "solve_wave",
    "solve_wave_conjugate",
    "sum_correction_series",
    "wave_from_omega",
    "unvec",
    "validate",
    "vec",
]
