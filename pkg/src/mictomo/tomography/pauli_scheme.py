"""Pauli-basis tomography with outcome reinterpretation.

Every setting ``B`` in ``{X, Y, Z}^N`` is measured ``m`` times.  Each outcome
of ``B`` is read as a +-1 sample of every Pauli string ``Q`` that corresponds
to ``B`` (``Q`` agrees with ``B`` wherever ``Q`` is not the identity), so a
weight-``w`` string collects ``m * 3**(N - w)`` samples.  The estimator is

    sigma = sum_P  mu_P / (m 3^(N - w(P)) 2^N) * P

with ``mu_P`` the signed tally, the identity term included (``mu_I`` equals the
shot count, giving trace one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mictomo.errors import ValidationError
from mictomo.linalg import check_density, project_to_density
from mictomo.pauli import MAX_QUBITS, PauliString, all_settings, all_strings, born_vector, matrix_of, sample_from, sign_table

COPY_CONSTANT = 3 + 2 * math.sqrt(2)


@dataclass
class TallySheet:
    """Signed tallies ``mu`` and sample counts, both indexed by Pauli-string code."""

    n_qubits: int
    shots_per_setting: int
    mu: np.ndarray
    counts: np.ndarray

    @classmethod
    def empty(cls, n_qubits: int, shots_per_setting: int) -> "TallySheet":
        size = 4 ** n_qubits
        return cls(n_qubits, shots_per_setting, np.zeros(size, np.int64), np.zeros(size, np.int64))

    def mu_of(self, q) -> int:
        return int(self.mu[_code(q)])

    def count_of(self, q) -> int:
        return int(self.counts[_code(q)])

    @property
    def copies(self) -> int:
        return self.shots_per_setting * 3 ** self.n_qubits

    def expected_counts(self) -> np.ndarray:
        weights = np.array([p.weight for p in _strings(self.n_qubits)])
        return self.shots_per_setting * 3 ** (self.n_qubits - weights)

    def is_complete(self) -> bool:
        return bool(np.array_equal(self.counts, self.expected_counts()))


def _code(q) -> int:
    return PauliString.parse(q).code if isinstance(q, str) else q.code


@lru_cache(maxsize=None)
def _strings(n: int) -> tuple[PauliString, ...]:
    out = tuple(all_strings(n, include_identity=True))
    assert all(p.code == i for i, p in enumerate(out))
    return out


@lru_cache(maxsize=None)
def _pauli_stack(n: int) -> np.ndarray:
    stack = np.stack([matrix_of(p) for p in _strings(n)])
    stack.setflags(write=False)
    return stack


@lru_cache(maxsize=None)
def _setting_tables(n: int):
    out = []
    for b in all_settings(n):
        strings, table = sign_table(b)
        out.append((b, np.array([q.code for q in strings]), table))
    return tuple(out)


def pauli_copies_needed(n_qubits: int, eps: float, delta: float) -> tuple[int, int]:
    """Copies for trace-distance accuracy ``eps`` with failure probability ``delta``.

    Returns ``(n, m)`` with ``m`` the shots per setting and ``n = m 3^N``.
    Trace error ``eps`` is reached through HS error ``eps / sqrt(2^N)``, so
    ``n`` is about ``(3 + 2 sqrt 2) 10^N ln(1/delta) / eps^2``.
    """
    if n_qubits < 1 or n_qubits > MAX_QUBITS:
        raise ValidationError(f"N must lie in [1, {MAX_QUBITS}]")
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")
    if not 0 < delta < 1 / 3:
        raise ValidationError("delta must lie in (0, 1/3)")
    m = shots_for_hs_accuracy(n_qubits, eps / math.sqrt(2 ** n_qubits), delta)
    return m * 3 ** n_qubits, m


def shots_for_hs_accuracy(n_qubits: int, eps_hs: float, delta: float) -> int:
    """``ceil((3 + 2 sqrt 2) 5^N ln(1/delta) / (3^N eps_hs^2))`` shots per setting.

    Enough for HS error ``eps_hs`` with probability ``1 - delta``; no range
    checks beyond positivity.
    """
    if eps_hs <= 0 or not 0 < delta < 1:
        raise ValidationError("need eps_hs > 0 and delta in (0, 1)")
    m = COPY_CONSTANT * 5 ** n_qubits * math.log(1 / delta) / (3 ** n_qubits * eps_hs ** 2)
    return int(math.ceil(m))


def expected_hs_bound(n_qubits: int, m: int) -> float:
    """``sqrt(5^N / (m 3^N))``, the bound on the expected HS error."""
    return math.sqrt(5 ** n_qubits / (m * 3 ** n_qubits))


def pauli_tomography_run(rho, n_qubits: int, m: int, rng: np.random.Generator) -> TallySheet:
    """Measure ``m`` copies of ``rho`` in each of the ``3**N`` settings and tally."""
    if m < 1:
        raise ValidationError("m must be at least 1")
    rho = check_density(rho)
    if rho.shape[0] != 2 ** n_qubits:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match N={n_qubits}")
    sheet = TallySheet.empty(n_qubits, m)
    d = 2 ** n_qubits
    for b, codes, table in _setting_tables(n_qubits):
        x = sample_from(born_vector(rho, b, validate=False), m, rng)
        hist = np.bincount(x, minlength=d)
        sheet.mu[codes] += table @ hist
        sheet.counts[codes] += m
    return sheet


def pauli_estimate(sheet: TallySheet, project: bool = False) -> np.ndarray:
    """Unbiased reconstruction from a complete tally sheet (optionally projected)."""
    if not sheet.is_complete():
        raise ValidationError("tally sheet is incomplete: sample counts differ from m * 3^(N - w)")
    n = sheet.n_qubits
    coeff = sheet.mu / (sheet.counts * 2.0 ** n)
    sigma = np.einsum("k,kij->ij", coeff, _pauli_stack(n))
    return project_to_density(sigma) if project else sigma
