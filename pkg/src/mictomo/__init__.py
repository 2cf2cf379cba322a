"""Quantum state tomography under restricted measurements.

Subpackages and modules:

* :mod:`mictomo.linalg` -- Hermitian linear algebra, norms, density projection.
* :mod:`mictomo.pauli` -- Pauli strings, Pauli basis measurements, Born sampling.
* :mod:`mictomo.measurement` -- POVMs and the measurement information channel.
* :mod:`mictomo.hardness` -- hard-instance construction and lower-bound calculators.
* :mod:`mictomo.tomography` -- Pauli, MUB/PLS and k-outcome estimators.
* :mod:`mictomo.harness` -- seeded Monte Carlo sweeps and CSV/JSON emission.
"""

from mictomo.errors import NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = ["NumericalError", "ValidationError", "__version__"]
