"""Tomography schemes: Pauli basis measurements, MUB linear inversion and the
k-outcome scheme built on eta-simulation."""

from mictomo.tomography.mub import (
    Algorithm1Result,
    FrequencyVector,
    MubFamily,
    algorithm1_run,
    build_mub,
    k_eq_d_copies_needed,
    mub_ls_estimate,
    pls_estimate,
)
from mictomo.tomography.pauli_scheme import (
    TallySheet,
    expected_hs_bound,
    pauli_copies_needed,
    pauli_estimate,
    pauli_tomography_run,
)
from mictomo.tomography.simulation import (
    KOutcomeResult,
    SimMessage,
    eta_sim_budget,
    eta_simulate,
    exact_conditional_law,
    k_outcome_run,
)

__all__ = [
    "Algorithm1Result",
    "FrequencyVector",
    "KOutcomeResult",
    "MubFamily",
    "SimMessage",
    "TallySheet",
    "algorithm1_run",
    "build_mub",
    "eta_sim_budget",
    "eta_simulate",
    "exact_conditional_law",
    "expected_hs_bound",
    "k_eq_d_copies_needed",
    "k_outcome_run",
    "mub_ls_estimate",
    "pauli_copies_needed",
    "pauli_estimate",
    "pauli_tomography_run",
    "pls_estimate",
]
