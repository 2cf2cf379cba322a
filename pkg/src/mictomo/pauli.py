"""Pauli strings, Pauli basis measurements and Born-rule sampling.

A Pauli string on ``N`` qubits is stored as a base-4 integer, two bits per
qubit with ``I=0, Z=1, Y=2, X=3`` and the first qubit in the most
significant position.  Integer order on the code is therefore the
lexicographic order on letters with ``I < Z < Y < X``, which is the
tie-break used by :func:`enumerate_by_weight`.

Outcomes of a basis measurement are integers ``x`` in ``[0, 2**N)``.  Bit
``N-1-j`` of ``x`` refers to qubit ``j``; a 0 bit is the ``+1`` eigenvalue
and a 1 bit the ``-1`` eigenvalue.  With this convention the outcome index
of a ``Z...Z`` measurement is the computational basis index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from mictomo.errors import ValidationError
from mictomo.linalg import check_density, kron_all

MAX_QUBITS = 8

_LETTER_CODE = {"I": 0, "Z": 1, "Y": 2, "X": 3}
_CODE_LETTER = "IZYX"

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# columns: eigenvector for +1, then for -1
_EIGVECS = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
    "Z": np.eye(2, dtype=complex),
}


def _group_mask(n: int) -> int:
    # 0b0101...01: low bit of every 2-bit group
    return int("01" * n, 2) if n else 0


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. ``PauliString.parse("XIYZ")``."""

    n: int
    code: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise ValidationError(f"qubit count must be in [1, {MAX_QUBITS}], got {self.n}")
        if not 0 <= self.code < 4 ** self.n:
            raise ValidationError(f"code {self.code} out of range for {self.n} qubits")

    @classmethod
    def parse(cls, letters: str) -> "PauliString":
        letters = letters.strip().upper()
        if not letters or any(c not in _LETTER_CODE for c in letters):
            raise ValidationError(f"invalid Pauli string {letters!r}")
        code = 0
        for c in letters:
            code = (code << 2) | _LETTER_CODE[c]
        return cls(len(letters), code)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0)

    @property
    def letters(self) -> str:
        return "".join(_CODE_LETTER[(self.code >> (2 * (self.n - 1 - j))) & 3] for j in range(self.n))

    def __str__(self) -> str:
        return self.letters

    @property
    def nonzero_groups(self) -> int:
        """Low bit of each 2-bit group set iff that qubit carries a non-identity letter."""
        c = self.code
        return (c | (c >> 1)) & _group_mask(self.n)

    @property
    def weight(self) -> int:
        return bin(self.nonzero_groups).count("1")

    @property
    def support_mask(self) -> int:
        """Outcome-bit mask of the qubits where the string is not the identity."""
        nz = self.nonzero_groups
        mask = 0
        for j in range(self.n):
            if (nz >> (2 * (self.n - 1 - j))) & 1:
                mask |= 1 << (self.n - 1 - j)
        return mask

    @property
    def is_identity(self) -> bool:
        return self.code == 0

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def matrix(self) -> np.ndarray:
        return matrix_of(self)


class BasisSetting(PauliString):
    """A Pauli basis measurement: one of X, Y, Z on every qubit (no identity)."""

    def __post_init__(self):
        super().__post_init__()
        if self.weight != self.n:
            raise ValidationError(f"basis setting {self.letters!r} must not contain I")


def as_pauli(p) -> PauliString:
    return p if isinstance(p, PauliString) else PauliString.parse(p)


def as_setting(b) -> BasisSetting:
    if isinstance(b, BasisSetting):
        return b
    p = as_pauli(b)
    return BasisSetting(p.n, p.code)


# --------------------------------------------------------------------------
# outcome strings


def outcome_signs(x: int, n: int) -> tuple[int, ...]:
    return tuple(-1 if (x >> (n - 1 - j)) & 1 else 1 for j in range(n))


def outcome_index(signs) -> int:
    x = 0
    for s in signs:
        if s not in (1, -1):
            raise ValidationError(f"outcome entries must be +1 or -1, got {s!r}")
        x = (x << 1) | (1 if s == -1 else 0)
    return x


def format_outcome(x: int, n: int) -> str:
    return "".join("+" if s == 1 else "-" for s in outcome_signs(x, n))


def parse_outcome(text: str) -> int:
    if not text or any(c not in "+-" for c in text):
        raise ValidationError(f"invalid outcome string {text!r}")
    return outcome_index([1 if c == "+" else -1 for c in text])


def _as_outcome(x, n: int) -> int:
    if isinstance(x, (int, np.integer)):
        if not 0 <= x < 2 ** n:
            raise ValidationError(f"outcome index {x} out of range for {n} qubits")
        return int(x)
    if isinstance(x, str):
        x = parse_outcome(x)
        if x >= 2 ** n:
            raise ValidationError("outcome string length mismatch")
        return x
    signs = tuple(x)
    if len(signs) != n:
        raise ValidationError(f"outcome has length {len(signs)}, expected {n}")
    return outcome_index(signs)


# --------------------------------------------------------------------------
# matrices and decompositions


@lru_cache(maxsize=4096)
def _matrix_cached(n: int, code: int) -> np.ndarray:
    p = PauliString(n, code)
    m = kron_all(SIGMA[c] for c in p.letters)
    m.setflags(write=False)
    return m


def matrix_of(p) -> np.ndarray:
    """Dense ``2**N x 2**N`` matrix of a Pauli string (read-only, cached)."""
    p = as_pauli(p)
    return _matrix_cached(p.n, p.code)


def all_strings(n: int, include_identity: bool = False) -> list[PauliString]:
    start = 0 if include_identity else 1
    return [PauliString(n, c) for c in range(start, 4 ** n)]


def all_settings(n: int) -> list[BasisSetting]:
    return [as_setting("".join(t)) for t in itertools.product("XYZ", repeat=n)]


def enumerate_by_weight(n: int, descending: bool = False) -> list[PauliString]:
    """All ``4**n - 1`` non-identity strings ordered by weight.

    Ties within a weight class are broken by ascending code, i.e.
    lexicographically with ``Z < Y < X`` at each position.
    """
    if not 1 <= n <= MAX_QUBITS:
        raise ValidationError(f"enumerate_by_weight supports 1 <= N <= {MAX_QUBITS}")
    strings = all_strings(n)
    sign = -1 if descending else 1
    return sorted(strings, key=lambda p: (sign * p.weight, p.code))


def decompose(rho) -> dict[PauliString, float]:
    """Coefficients ``alpha_P = Tr[rho P] / d`` for every non-identity ``P``."""
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    n = d.bit_length() - 1
    if 2 ** n != d:
        raise ValidationError(f"dimension {d} is not a power of two")
    return {p: float(np.real(np.trace(rho @ matrix_of(p)))) / d for p in all_strings(n)}


def reconstruct(alpha: dict, n: int) -> np.ndarray:
    d = 2 ** n
    out = np.eye(d, dtype=complex) / d
    for p, a in alpha.items():
        out = out + a * matrix_of(p)
    return out


# --------------------------------------------------------------------------
# basis measurements


@lru_cache(maxsize=1024)
def _basis_unitary(n: int, code: int) -> np.ndarray:
    b = BasisSetting(n, code)
    u = kron_all(_EIGVECS[c] for c in b.letters)
    u.setflags(write=False)
    return u


def basis_unitary(b) -> np.ndarray:
    """Unitary whose column ``x`` is the eigenvector selected by outcome ``x``."""
    b = as_setting(b)
    return _basis_unitary(b.n, b.code)


def basis_effect(b, x) -> np.ndarray:
    """Effect ``M_x = (x) (I + x_j sigma_j) / 2`` of a Pauli basis measurement."""
    b = as_setting(b)
    signs = outcome_signs(_as_outcome(x, b.n), b.n)
    return kron_all((SIGMA["I"] + s * SIGMA[c]) / 2 for c, s in zip(b.letters, signs))


def basis_effects(b) -> list[np.ndarray]:
    b = as_setting(b)
    u = basis_unitary(b)
    return [np.outer(u[:, x], u[:, x].conj()) for x in range(2 ** b.n)]


def born_vector(rho, b, validate: bool = True) -> np.ndarray:
    """Outcome probabilities ``Tr[rho M_x]`` for a Pauli basis measurement.

    Round-off negatives down to ``-1e-10`` are clipped and the vector is
    renormalized when the total is within ``1e-8`` of one.
    """
    b = as_setting(b)
    if validate:
        rho = check_density(rho)
    u = basis_unitary(b)
    if rho.shape[0] != u.shape[0]:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match setting {b}")
    p = np.real(np.einsum("ix,ij,jx->x", u.conj(), rho, u))
    return _clean_probabilities(p)


def _clean_probabilities(p: np.ndarray) -> np.ndarray:
    if np.any(p < -1e-10):
        raise ValidationError(f"invalid state: negative outcome probability {p.min():.3e}")
    total = p.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValidationError(f"invalid state: outcome probabilities sum to {total!r}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def sample_from(p: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF sampling of ``shots`` indices from probability vector ``p``."""
    if shots < 0:
        raise ValidationError("shots must be non-negative")
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(shots), side="right").astype(np.int64)


def sample_outcomes(rho, b, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` i.i.d. outcome indices of measuring ``rho`` in setting ``b``.

    Use :func:`format_outcome` / :func:`outcome_signs` to convert indices to
    ``+-`` strings or sign tuples.
    """
    return sample_from(born_vector(rho, b), shots, rng)


# --------------------------------------------------------------------------
# reinterpreting outcomes


def corresponds(q, b) -> bool:
    """True iff every non-identity letter of ``q`` equals the letter of ``b`` there."""
    q, b = as_pauli(q), as_pauli(b)
    if q.n != b.n:
        raise ValidationError("Pauli string and setting have different qubit counts")
    nz = q.nonzero_groups
    return ((q.code ^ b.code) & (nz | (nz << 1))) == 0


def sign_for(q, x) -> int:
    """Product of the outcome signs on the support of ``q`` (``+1`` for identity)."""
    q = as_pauli(q)
    x = _as_outcome(x, q.n)
    return -1 if bin(x & q.support_mask).count("1") % 2 else 1


def corresponding_strings(b) -> list[PauliString]:
    """The ``2**N`` strings (identity included) readable from setting ``b``."""
    b = as_setting(b)
    out = []
    for keep in itertools.product((False, True), repeat=b.n):
        letters = "".join(c if k else "I" for c, k in zip(b.letters, keep))
        out.append(PauliString.parse(letters))
    return out


@lru_cache(maxsize=1024)
def _sign_table(n: int, code: int) -> tuple[tuple[PauliString, ...], np.ndarray]:
    b = BasisSetting(n, code)
    strings = tuple(corresponding_strings(b))
    xs = np.arange(2 ** n)
    table = np.empty((len(strings), 2 ** n), dtype=np.int64)
    for k, q in enumerate(strings):
        parity = np.array([bin(int(x) & q.support_mask).count("1") & 1 for x in xs])
        table[k] = 1 - 2 * parity
    table.setflags(write=False)
    return strings, table


def sign_table(b) -> tuple[tuple[PauliString, ...], np.ndarray]:
    """Corresponding strings of ``b`` and the matrix ``S[k, x] = sign_for(q_k, x)``."""
    b = as_setting(b)
    return _sign_table(b.n, b.code)
