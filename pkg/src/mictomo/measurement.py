"""POVMs and the measurement information channel (MIC).

For a POVM ``{M_x}`` the MIC is the superoperator

    H(A) = sum_x M_x Tr[M_x A] / Tr[M_x]

with matrix representation ``C = sum_x |M_x>><<M_x| / Tr[M_x]`` acting on
column-stacked vectors.  ``C`` is PSD, so its trace norm is its trace.
Effects with ``Tr[M_x] < 1e-12`` are the zero matrix up to round-off and are
dropped from every MIC sum.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from mictomo.errors import ValidationError
from mictomo.linalg import (
    as_square,
    check_hermitian,
    eig_herm,
    hermitize,
    matrix_from_json,
    matrix_to_json,
    vectorize,
)
from mictomo.pauli import all_settings, as_pauli, as_setting, basis_effects, corresponds

ZERO_TRACE = 1e-12
POVM_TOL = 1e-9
DENSE_MIC_MAX_DIM = 16


@dataclass(frozen=True)
class Povm:
    """A finite POVM: PSD effects summing to the identity."""

    effects: tuple
    labels: tuple | None = None

    def __post_init__(self):
        effects = tuple(np.asarray(as_square(e, "effect"), dtype=complex) for e in self.effects)
        if not effects:
            raise ValidationError("a POVM needs at least one effect")
        d = effects[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for i, e in enumerate(effects):
            if e.shape != (d, d):
                raise ValidationError(f"effect {i} has shape {e.shape}, expected {(d, d)}")
            check_hermitian(e, f"effect {i}", tol=POVM_TOL)
            lam_min = float(np.linalg.eigvalsh(hermitize(e))[0])
            if lam_min < -POVM_TOL:
                raise ValidationError(f"effect {i} is not PSD (min eigenvalue {lam_min:.3e})")
            total += e
        dev = float(np.max(np.abs(total - np.eye(d))))
        if dev > POVM_TOL:
            raise ValidationError(f"effects do not sum to the identity (max deviation {dev:.3e})")
        if self.labels is not None and len(self.labels) != len(effects):
            raise ValidationError("labels and effects have different lengths")
        object.__setattr__(self, "effects", effects)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def num_outcomes(self) -> int:
        return len(self.effects)

    def stack(self) -> np.ndarray:
        return np.stack(self.effects)

    def _nonzero(self) -> tuple[np.ndarray, np.ndarray]:
        e = self.stack()
        tr = np.real(np.einsum("kii->k", e))
        keep = tr >= ZERO_TRACE
        return e[keep], tr[keep]

    def probabilities(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return np.real(np.einsum("kij,ji->k", self.stack(), rho))


# --------------------------------------------------------------------------
# constructors


def computational_basis_povm(d: int) -> Povm:
    effects = []
    for x in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[x, x] = 1.0
        effects.append(e)
    return Povm(tuple(effects), labels=tuple(str(x) for x in range(d)))


def pauli_basis_povm(b) -> Povm:
    from mictomo.pauli import format_outcome

    b = as_setting(b)
    labels = tuple(format_outcome(x, b.n) for x in range(2 ** b.n))
    return Povm(tuple(basis_effects(b)), labels=labels)


def random_povm(d: int, k: int, rng: np.random.Generator) -> Povm:
    """Random ``k``-outcome POVM: ``S^{-1/2} G_i G_i^dagger S^{-1/2}`` with ``S = sum G_i G_i^dagger``."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    parts = []
    for _ in range(k):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        parts.append(g @ g.conj().T)
    s = sum(parts)
    lam, u = eig_herm(hermitize(s))
    s_inv_half = (u / np.sqrt(lam)) @ u.conj().T
    effects = tuple(hermitize(s_inv_half @ p @ s_inv_half) for p in parts)
    return Povm(effects)


# --------------------------------------------------------------------------
# channel


def mic_apply(m: Povm, a) -> np.ndarray:
    """``H_M(A) = sum_x M_x Tr[M_x A] / Tr[M_x]``."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (m.dim, m.dim):
        raise ValidationError(f"operand shape {a.shape} does not match POVM dimension {m.dim}")
    e, tr = m._nonzero()
    coeff = np.einsum("kij,ji->k", e, a) / tr
    return np.einsum("k,kij->ij", coeff, e)


def mic_matrix(m: Povm) -> np.ndarray:
    """Dense ``d^2 x d^2`` matrix ``C_M``; refused for ``d > 16``."""
    if m.dim > DENSE_MIC_MAX_DIM:
        raise ValidationError(
            f"dense MIC construction is limited to d <= {DENSE_MIC_MAX_DIM}; "
            "use mic_quadratic_form instead"
        )
    e, tr = m._nonzero()
    vecs = np.stack([vectorize(x) for x in e])  # (k, d^2)
    return np.einsum("k,ki,kj->ij", 1.0 / tr, vecs, vecs.conj())


def mic_quadratic_form(m: Povm, v) -> float:
    """``<<V|C_M|V>> = sum_x |Tr[M_x V]|^2 / Tr[M_x]`` without forming ``C_M``."""
    v = np.asarray(v, dtype=complex)
    if v.shape != (m.dim, m.dim):
        raise ValidationError(f"operand shape {v.shape} does not match POVM dimension {m.dim}")
    e, tr = m._nonzero()
    overlaps = np.einsum("kij,ij->k", e.conj(), v)  # Tr[M_x^dagger V]
    return float(np.sum(np.abs(overlaps) ** 2 / tr))


def mic_trace_norm(m: Povm) -> float:
    """``||H_M||_1 = Tr[C_M] = sum_x Tr[M_x^2] / Tr[M_x]``."""
    e, tr = m._nonzero()
    return float(np.sum(np.real(np.einsum("kij,kji->k", e, e)) / tr))


def mic_spectrum(m: Povm) -> np.ndarray:
    """Eigenvalues of ``C_M`` in descending order (dense path)."""
    lam, _ = eig_herm(hermitize(mic_matrix(m)), check=False)
    return lam


# --------------------------------------------------------------------------
# Pauli fast path


def pauli_mic_eigenvalue(b, q) -> int:
    """Eigenvalue of the Pauli string ``q`` under the MIC of setting ``b``: 1 or 0."""
    return 1 if corresponds(as_pauli(q), as_setting(b)) else 0


def uniform_ensemble_eigenvalue(w: int) -> float:
    """Eigenvalue ``3**-w`` of a weight-``w`` string under the uniform Pauli ensemble."""
    if w < 0:
        raise ValidationError("weight must be non-negative")
    return 3.0 ** (-w)


def uniform_ensemble_average(q) -> float:
    """Average of :func:`pauli_mic_eigenvalue` over all ``3**N`` settings (by enumeration)."""
    q = as_pauli(q)
    settings = all_settings(q.n)
    return sum(pauli_mic_eigenvalue(b, q) for b in settings) / len(settings)


# --------------------------------------------------------------------------
# plug-and-play lower bounds


@dataclass(frozen=True)
class LowerBoundReport:
    """Order-of-magnitude copy-count lower bound (constant factor 1)."""

    d: int
    eps: float
    mic_trace_norm_sup: float
    body: float
    order_bound: bool = True
    eps_in_range: bool = True
    notes: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "eps": self.eps,
            "mic_trace_norm_sup": self.mic_trace_norm_sup,
            "n_lower_body": self.body,
            "order_bound": self.order_bound,
            "eps_in_range": self.eps_in_range,
            "notes": list(self.notes),
        }


def plug_play_lower_bound(d: int, eps: float, mic_trace_norm_sup: float) -> LowerBoundReport:
    """``d**4 / (eps**2 * sup ||H_M||_1)``, reported as an Omega(.) body."""
    if d < 1 or eps <= 0:
        raise ValidationError("d must be positive and eps > 0")
    if mic_trace_norm_sup < 1:
        raise ValidationError("the MIC trace norm of any POVM is at least 1")
    notes = []
    in_range = eps <= 1 / 200
    if not in_range:
        notes.append("eps outside (0, 1/200]: the lower bound is not guaranteed in this regime")
        warnings.warn(notes[-1], stacklevel=2)
    body = d ** 4 / (eps ** 2 * mic_trace_norm_sup)
    return LowerBoundReport(d, eps, float(mic_trace_norm_sup), float(body), True, in_range, tuple(notes))


def k_outcome_lower_bound(d: int, eps: float, k: int) -> LowerBoundReport:
    return plug_play_lower_bound(d, eps, float(min(k, d)))


# --------------------------------------------------------------------------
# file format


def povm_to_json(m: Povm) -> dict:
    out = {"effects": [matrix_to_json(e) for e in m.effects]}
    if m.labels is not None:
        out["labels"] = list(m.labels)
    return out


def povm_from_json(obj) -> Povm:
    """Accepts a bare list of matrix objects or ``{"effects": [...], "labels": [...]}``."""
    if isinstance(obj, list):
        effects, labels = obj, None
    elif isinstance(obj, dict) and "effects" in obj:
        effects, labels = obj["effects"], obj.get("labels")
    else:
        raise ValidationError("POVM file must be a list of matrices or an object with 'effects'")
    return Povm(tuple(matrix_from_json(e) for e in effects), labels)


def load_povm(path) -> Povm:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read POVM file {path}: {exc}") from exc
    return povm_from_json(obj)
