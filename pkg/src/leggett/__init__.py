"""Simulation and analysis of single-photon spin-orbit Leggett-inequality tests."""
from .correlations import (
    CorrelationValue,
    E3Point,
    e3_from_correlations,
    e3_quantum,
    ideal_violation_window,
    leggett_bound,
    quantum_correlation,
)
from .counting import CountTable, ExperimentConfig, estimate_correlation, run_sweep, simulate_counts
from .hvmodel import HiddenModel, HiddenState, maximize_e3, model_e3
from .settings import SettingsTriad, build_triad, sweep_grid, validate_triad
from .statespace import (
    InvalidInputError,
    PoincareVector,
    QPlate,
    QubitState,
    SpinOrbitState,
    apply_qplate,
    prepare_phi_plus,
)

__version__ = "0.1.0"
