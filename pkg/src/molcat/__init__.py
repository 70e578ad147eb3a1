"""Macroscopic entangled cat states in a frequency-modulated molecular cavity-QED system."""

__version__ = "0.1.0"

from .analysis import (
    ProjectionResult, WignerGrid, detection_probabilities, fidelity_mixed, fidelity_pure, joint_wigner,
    log_negativity, log_negativity_pure, log_negativity_svd, mean_excitations, project_electronic,
)
from .analytic import (
    AnalyticState, analytic_state, cat_state, detection_prob_analytic, detection_time, full_state_analytic,
    magnus_unitary, mean_excitations_analytic,
)
from .dynamics import IntegratorOptions, Trajectory, evolve_lindblad, evolve_schrodinger, plus_vacuum_state
from .hilbert import (
    CompositeSpace, DensityMatrix, FockCutoffs, StateVector, annihilation, coherent_state, creation,
    partial_trace, partial_transpose,
)
from .model import EffectiveParams, ModelParams, bessel_j, derive_effective, full_hamiltonian, rwa_hamiltonian
