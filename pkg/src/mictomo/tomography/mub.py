"""Complete sets of mutually unbiased bases and MUB linear-inversion tomography.

For ``d = 2**N`` the ``d + 1`` bases come from the standard partition of the
non-identity Pauli strings into ``d + 1`` commuting classes of size ``d - 1``.
In symplectic notation a string is a pair ``(a, b)`` of bit vectors (X part
and Z part); the classes are

    {(0, b)}                       (Z type)
    {(a, S_alpha a)}  alpha in GF(2^N)

with ``S_alpha[i, j] = Tr(alpha e_i e_j)`` the trace form of ``GF(2^N)`` in
the polynomial basis.  Each basis is the joint eigenbasis of one class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from mictomo.errors import NumericalError, ValidationError
from mictomo.linalg import check_density, eig_herm, hermitize, project_to_density
from mictomo.pauli import PauliString, matrix_of, sample_from

# primitive polynomials x^N + ... as bit masks (bit i = coefficient of x^i)
IRREDUCIBLE = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011}
INVARIANT_TOL = 1e-9


# --------------------------------------------------------------------------
# GF(2^N)


def gf_mul(a: int, b: int, n: int) -> int:
    poly = IRREDUCIBLE[n]
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return out


def gf_trace(a: int, n: int) -> int:
    """Absolute trace ``a + a^2 + ... + a^(2^(n-1))``, an element of GF(2)."""
    t, x = 0, a
    for _ in range(n):
        t ^= x
        x = gf_mul(x, x, n)
    if t not in (0, 1):
        raise NumericalError(f"trace of {a} in GF(2^{n}) is not in GF(2)")  # pragma: no cover
    return t


def trace_form(alpha: int, n: int) -> np.ndarray:
    """Symmetric GF(2) matrix ``S[i, j] = Tr(alpha x^i x^j)``."""
    s = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            s[i, j] = gf_trace(gf_mul(alpha, gf_mul(1 << i, 1 << j, n), n), n)
    return s


def _bits(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.int64)


def _symplectic_to_pauli(a: np.ndarray, b: np.ndarray) -> PauliString:
    letters = "".join("IZXY"[int(x) * 2 + int(z)] for x, z in zip(a, b))
    return PauliString.parse(letters)


def commuting_classes(n: int) -> list[list[PauliString]]:
    """The ``2**n + 1`` classes of mutually commuting Pauli strings."""
    if n not in IRREDUCIBLE:
        raise ValidationError(f"no field tables for N={n}")
    d = 2 ** n
    classes = [[_symplectic_to_pauli(np.zeros(n, np.int64), _bits(v, n)) for v in range(1, d)]]
    for alpha in range(d):
        s = trace_form(alpha, n)
        cls = []
        for v in range(1, d):
            a = _bits(v, n)
            cls.append(_symplectic_to_pauli(a, (s @ a) % 2))
        classes.append(cls)
    return classes


# --------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class MubFamily:
    """``bases[k][:, x]`` is the ``x``-th vector of basis ``k``; shape ``(d + 1, d, d)``."""

    bases: np.ndarray
    classes: tuple = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return self.bases.shape[1]

    def projectors(self) -> np.ndarray:
        """Stack ``Pi[k, x] = |psi_x^k><psi_x^k|`` of shape ``(d + 1, d, d, d)``."""
        b = self.bases
        return np.einsum("kix,kjx->kxij", b, b.conj())

    def probabilities(self, rho) -> np.ndarray:
        """``p[k, x] = <psi_x^k| rho |psi_x^k>``, cleaned of round-off."""
        rho = np.asarray(rho, dtype=complex)
        p = np.real(np.einsum("kix,ij,kjx->kx", self.bases.conj(), rho, self.bases))
        if np.any(p < -1e-10):
            raise ValidationError("invalid state: negative MUB outcome probability")
        p = np.clip(p, 0.0, None)
        return p / p.sum(axis=1, keepdims=True)

    def invariant_errors(self) -> dict[str, float]:
        d = self.dim
        b = self.bases
        gram = np.einsum("kix,liy->klxy", b.conj(), b)
        overlaps = np.abs(gram) ** 2
        eye = np.eye(d)
        orth = max(float(np.max(np.abs(gram[k, k] - eye))) for k in range(d + 1))
        unbiased = 0.0
        for k in range(d + 1):
            for l in range(d + 1):
                if k != l:
                    unbiased = max(unbiased, float(np.max(np.abs(overlaps[k, l] - 1.0 / d))))
        pis = self.projectors()
        complete = float(np.max(np.abs(pis.sum(axis=(0, 1)) - (d + 1) * eye)))
        return {"orthonormality": orth, "unbiasedness": unbiased, "completeness": complete}

    def validate(self, tol: float = INVARIANT_TOL) -> None:
        errs = self.invariant_errors()
        bad = {k: v for k, v in errs.items() if v > tol}
        if bad:
            raise NumericalError(f"MUB invariants violated: {bad}")


def _qubit_mub() -> np.ndarray:
    s = 1 / math.sqrt(2)
    z = np.eye(2, dtype=complex)
    x = np.array([[s, s], [s, -s]], dtype=complex)
    y = np.array([[s, s], [1j * s, -1j * s]], dtype=complex)
    return np.stack([x, y, z])


@lru_cache(maxsize=None)
def _build_mub_cached(d: int) -> MubFamily:
    if d == 2:
        fam = MubFamily(_qubit_mub(), ())
        fam.validate()
        return fam
    n = d.bit_length() - 1
    classes = commuting_classes(n)
    rng = np.random.default_rng(20240611 + d)
    bases = []
    for cls in classes:
        mats = np.stack([matrix_of(p) for p in cls])
        for _ in range(20):
            h = np.einsum("k,kij->ij", rng.standard_normal(len(cls)), mats)
            lam, u = eig_herm(hermitize(h))
            if np.min(np.abs(np.diff(lam))) < 1e-6:
                continue
            # each class member must be diagonal in the new basis
            diag = np.einsum("ix,kij,jy->kxy", u.conj(), mats, u)
            off = diag - np.einsum("kxx->kx", diag)[:, :, None] * np.eye(d)
            if np.max(np.abs(off)) < 1e-10:
                break
        else:  # pragma: no cover - generic combination always separates
            raise NumericalError(f"could not diagonalize a commuting class at d={d}")
        bases.append(u)
    fam = MubFamily(np.stack(bases), tuple(tuple(p.letters for p in c) for c in classes))
    fam.validate()
    return fam


SUPPORTED_DIMS = (2, 4, 8, 16)


def build_mub(d: int) -> MubFamily:
    """Complete MUB family for ``d`` in ``{2, 4, 8, 16}``."""
    if d not in SUPPORTED_DIMS:
        raise ValidationError(f"MUB construction supports d in {SUPPORTED_DIMS}, got d={d}")
    fam = _build_mub_cached(d)
    fam.bases.setflags(write=False)
    return fam


# --------------------------------------------------------------------------
# estimators


@dataclass(frozen=True)
class FrequencyVector:
    """Per-basis empirical frequencies ``f[k, x]`` and the sample sizes behind them."""

    f: np.ndarray
    sizes: np.ndarray

    @property
    def empty_rows(self) -> np.ndarray:
        return np.flatnonzero(self.sizes == 0)

    @classmethod
    def from_counts(cls, counts) -> "FrequencyVector":
        """Normalize each row; an empty row becomes uniform ``1/d``."""
        counts = np.asarray(counts, dtype=float)
        sizes = counts.sum(axis=1)
        d = counts.shape[1]
        f = np.full_like(counts, 1.0 / d)
        nz = sizes > 0
        f[nz] = counts[nz] / sizes[nz, None]
        return cls(f, sizes.astype(np.int64))


def mub_ls_estimate(freqs, family: MubFamily) -> np.ndarray:
    """Linear inversion ``sum_{k,x} f[k, x] Pi_x^k - I``."""
    f = freqs.f if isinstance(freqs, FrequencyVector) else np.asarray(freqs, dtype=float)
    d = family.dim
    if f.shape != (d + 1, d):
        raise ValidationError(f"frequencies must have shape {(d + 1, d)}, got {f.shape}")
    b = family.bases
    est = np.einsum("kx,kix,kjx->ij", f, b, b.conj()) - np.eye(d)
    return hermitize(est)


def pls_estimate(freqs, family: MubFamily) -> np.ndarray:
    """Linear inversion followed by Frobenius projection onto density matrices."""
    return project_to_density(mub_ls_estimate(freqs, family))


def k_eq_d_copies_needed(d: int, eps: float) -> int:
    """``ceil(172 d^3 ln(200 d) / eps^2)``."""
    if d < 2 or eps <= 0:
        raise ValidationError("need d >= 2 and eps > 0")
    return int(math.ceil(172 * d ** 3 * math.log(200 * d) / eps ** 2))


@dataclass
class Algorithm1Result:
    estimate: np.ndarray
    frequencies: FrequencyVector
    group_size: int
    labels: np.ndarray
    used: np.ndarray
    leftover: int

    @property
    def truncated(self) -> np.ndarray:
        """Bases where the label count exceeded the available group size."""
        return np.flatnonzero(self.labels > self.group_size)

    def counters(self) -> dict:
        return {
            "group_size": self.group_size,
            "label_counts": self.labels.tolist(),
            "used_per_basis": self.used.tolist(),
            "truncated_bases": self.truncated.tolist(),
            "leftover_copies": self.leftover,
            "empty_bases": self.frequencies.empty_rows.tolist(),
        }


def frequencies_from_groups(groups, labels) -> tuple[FrequencyVector, np.ndarray]:
    """Keep the first ``min(len(group_j), labels_j)`` outcomes of each group."""
    rows, used = [], []
    for g, m in zip(groups, labels):
        g = np.asarray(g, dtype=np.int64)
        k = min(len(g), int(m))
        used.append(k)
        rows.append(g[:k])
    d = len(groups) - 1
    counts = np.stack([np.bincount(r, minlength=d) for r in rows])
    return FrequencyVector.from_counts(counts), np.array(used, dtype=np.int64)


def algorithm1_run(rho, d: int, n: int, rng: np.random.Generator,
                   family: MubFamily | None = None) -> Algorithm1Result:
    """Split ``n`` copies into ``d + 1`` groups, measure group ``j`` in basis ``j``,
    subsample each group to a multinomial label count and return the PLS estimate."""
    rho = check_density(rho)
    if rho.shape[0] != d:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match d={d}")
    if n < 2 * (d + 1):
        raise ValidationError(f"need at least 2(d + 1) = {2 * (d + 1)} copies")
    family = build_mub(d) if family is None else family
    n0 = n // (d + 1)
    leftover = n - n0 * (d + 1)
    p = family.probabilities(rho)
    groups = [sample_from(p[j], n0, rng) for j in range(d + 1)]
    labels = np.bincount(rng.integers(0, d + 1, size=n // 2), minlength=d + 1)
    freqs, used = frequencies_from_groups(groups, labels)
    return Algorithm1Result(pls_estimate(freqs, family), freqs, n0, labels, used, leftover)
