"""Assouad-type hard instances and the lower-bound calculators built on them.

The hard family perturbs the maximally mixed state along ``ell`` orthonormal
traceless directions ``V_i``::

    Delta_z    = (c * eps / sqrt(d)) * (1 / sqrt(ell)) * sum_i z_i V_i
    Delta_bar  = Delta_z * min(1, 1 / (2 d ||Delta_z||_op))
    sigma_z    = I/d + Delta_bar

For Pauli measurements the directions are the normalized Pauli strings of
largest weight.  Everything here is either exact combinatorics, a closed-form
evaluator, or a Monte Carlo check at small ``N``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from mictomo.errors import NumericalError, ValidationError
from mictomo.linalg import (
    check_density,
    maximally_mixed,
    op_norm,
    op_norms_herm,
    trace_norm,
    trace_norms_herm,
)
from mictomo.measurement import mic_quadratic_form, pauli_basis_povm
from mictomo.pauli import PauliString, all_settings, corresponds, enumerate_by_weight, matrix_of

DEFAULT_C = 10 * math.sqrt(2)
THEOREM_EPS_MAX = 1 / 200
DECODE_MAX_ELL = 12


def binary_entropy(p: float) -> float:
    """Binary entropy in bits; ``h(0) = h(1) = 0``."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary entropy needs p in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


# --------------------------------------------------------------------------
# combinatorics


def g_of_w(n: int, w: int) -> int:
    """Number of Pauli strings of weight at least ``n - w``: ``sum_{m<=w} C(n, n-m) 3^(n-m)``."""
    if not 0 <= w <= n:
        raise ValidationError(f"need 0 <= w <= N, got w={w}, N={n}")
    return sum(math.comb(n, n - m) * 3 ** (n - m) for m in range(w + 1))


def matching_count(n: int, w: int) -> int:
    """``sum_{m<=w} C(n, m)``: top-weight strings readable from any one Pauli setting."""
    return sum(math.comb(n, m) for m in range(w + 1))


def weight_threshold(n: int) -> int:
    """``ceil(n / 4)``; guarantees ``g_of_w(n, w) >= 4**n / 2``."""
    if n < 1:
        raise ValidationError("N must be at least 1")
    w = -(-n // 4)
    if 2 * g_of_w(n, w) < 4 ** n:
        raise NumericalError(f"g({w}) < d^2/2 at N={n}")  # pragma: no cover - median fact
    return w


def default_ell(n: int) -> int:
    """``g(ceil(N/4))`` capped at ``4**N - 1`` (the identity is never a direction)."""
    return min(g_of_w(n, weight_threshold(n)), 4 ** n - 1)


def binomial_cdf(n: int, p: float, w: int) -> float:
    return sum(math.comb(n, m) * p ** m * (1 - p) ** (n - m) for m in range(w + 1))


# --------------------------------------------------------------------------
# perturbation bases and instances


@dataclass(frozen=True)
class PerturbationBasis:
    """``ell`` orthonormal traceless Hermitian directions, stacked as ``(ell, d, d)``."""

    directions: np.ndarray
    descriptor: str = "custom"
    strings: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.directions, dtype=complex)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ValidationError(f"directions must have shape (ell, d, d), got {v.shape}")
        ell, d = v.shape[0], v.shape[1]
        if not d * d / 2 <= ell <= d * d - 1:
            raise ValidationError(f"ell={ell} outside [d^2/2, d^2-1] for d={d}")
        traces = np.einsum("kii->k", v)
        if np.max(np.abs(traces)) > 1e-10:
            raise ValidationError("perturbation directions must be traceless")
        gram = np.einsum("aij,bij->ab", v.conj(), v)
        if np.max(np.abs(gram - np.eye(ell))) > 1e-10:
            raise ValidationError("perturbation directions must be orthonormal")
        v.setflags(write=False)
        object.__setattr__(self, "directions", v)

    @property
    def ell(self) -> int:
        return self.directions.shape[0]

    @property
    def dim(self) -> int:
        return self.directions.shape[1]

    def combine(self, z) -> np.ndarray:
        """``W_z = sum_i z_i V_i``; ``z`` may be a stack ``(..., ell)``."""
        return np.tensordot(np.asarray(z, dtype=float), self.directions, axes=(-1, 0))


def pauli_top_weight_basis(n: int, ell: int) -> PerturbationBasis:
    """The ``ell`` highest-weight Pauli strings, each scaled to unit HS norm."""
    d = 2 ** n
    if not d * d / 2 <= ell <= d * d - 1:
        raise ValidationError(f"ell={ell} outside [d^2/2, d^2-1] for N={n}")
    strings = tuple(enumerate_by_weight(n, descending=True)[:ell])
    dirs = np.stack([matrix_of(p) for p in strings]) / math.sqrt(d)
    return PerturbationBasis(dirs, descriptor="pauli-top-weight", strings=strings)


@dataclass(frozen=True)
class HardnessParams:
    eps: float
    c: float = DEFAULT_C
    alpha: float = 1.0
    kappa: float | None = None

    def __post_init__(self):
        if self.c <= 0 or self.eps <= 0 or self.alpha <= 0:
            raise ValidationError("c, eps and alpha must be positive")
        if self.kappa is not None and self.kappa <= 0:
            raise ValidationError("kappa must be positive")


@dataclass(frozen=True)
class HardInstance:
    z: np.ndarray
    delta: np.ndarray
    state: np.ndarray
    clamp_factor: float
    basis: PerturbationBasis = field(repr=False, compare=False, default=None)


def raw_perturbation(basis: PerturbationBasis, z, params: HardnessParams) -> np.ndarray:
    """Unclamped ``Delta_z``; accepts a stack of sign vectors."""
    d, ell = basis.dim, basis.ell
    return (params.c * params.eps / math.sqrt(d * ell)) * basis.combine(z)


def clamp_factors(deltas: np.ndarray) -> np.ndarray:
    """``min(1, 1 / (2 d ||Delta||_op))`` for a stack of perturbations."""
    d = deltas.shape[-1]
    norms = op_norms_herm(deltas)
    with np.errstate(divide="ignore"):
        return np.minimum(1.0, np.where(norms > 0, 1.0 / (2 * d * norms), np.inf))


def instance_from_z(basis: PerturbationBasis, z, params: HardnessParams) -> HardInstance:
    z = np.asarray(z, dtype=np.int8)
    if z.shape != (basis.ell,) or not np.all(np.abs(z) == 1):
        raise ValidationError(f"z must be a length-{basis.ell} vector of +-1")
    raw = raw_perturbation(basis, z, params)
    norm = op_norm(raw)
    clamp = 1.0 if norm == 0 else min(1.0, 1.0 / (2 * basis.dim * norm))
    delta = raw * clamp
    state = maximally_mixed(basis.dim) + delta
    return HardInstance(z.copy(), delta, state, float(clamp), basis)


def sample_instance(basis: PerturbationBasis, params: HardnessParams,
                    rng: np.random.Generator) -> HardInstance:
    """Draw ``z`` uniformly from ``{-1, 1}^ell`` and build ``sigma_z``."""
    if params.eps > THEOREM_EPS_MAX:
        warnings.warn(f"eps={params.eps} exceeds 1/200; outside the validity regime", stacklevel=2)
    z = rng.choice(np.array([-1, 1], dtype=np.int8), size=basis.ell)
    return instance_from_z(basis, z, params)


def sample_distances(basis: PerturbationBasis, params: HardnessParams, count: int,
                     rng: np.random.Generator, batch: int = 2048) -> dict:
    """Trace distances ``||sigma_z - rho_mm||_1`` and clamp factors for ``count`` draws.

    Batched version of repeated :func:`sample_instance` calls using the same
    random stream layout (one ``rng.choice`` per instance), so results match a
    loop over :func:`sample_instance` draw for draw.
    """
    dists, clamps, min_eigs = [], [], []
    signs = np.array([-1, 1], dtype=np.int8)
    done = 0
    while done < count:
        k = min(batch, count - done)
        z = np.stack([rng.choice(signs, size=basis.ell) for _ in range(k)])
        raw = raw_perturbation(basis, z, params)
        cf = clamp_factors(raw)
        deltas = raw * cf[:, None, None]
        lam = np.linalg.eigvalsh(deltas)
        dists.append(np.sum(np.abs(lam), axis=-1))
        clamps.append(cf)
        min_eigs.append(lam[:, 0] + 1.0 / basis.dim)
        done += k
    return {
        "trace_distance": np.concatenate(dists),
        "clamp_factor": np.concatenate(clamps),
        "min_eigenvalue": np.concatenate(min_eigs),
    }


# --------------------------------------------------------------------------
# operator-norm concentration and Hamming separation


def empirical_kappa(basis: PerturbationBasis, trials: int, rng: np.random.Generator,
                    quantile: float = 0.999) -> float:
    """Empirical ``quantile`` of ``||W_z||_op / sqrt(d)`` over uniform ``z``."""
    if trials < 1000:
        raise ValidationError("empirical_kappa needs at least 1000 trials")
    if not 0 < quantile < 1:
        raise ValidationError("quantile must lie in (0, 1)")
    z = rng.choice(np.array([-1.0, 1.0]), size=(trials, basis.ell))
    ratios = op_norms_herm(basis.combine(z)) / math.sqrt(basis.dim)
    return float(np.quantile(ratios, quantile))


def in_good_set(basis: PerturbationBasis, z, kappa: float) -> bool:
    """``||W_z||_op <= kappa * sqrt(d)``."""
    return op_norm(basis.combine(z)) <= kappa * math.sqrt(basis.dim)


def constant_tension(c: float, kappa: float) -> bool:
    """True when ``c < 10 * kappa`` (the decoding argument wants ``c >= 10 kappa``)."""
    return c < 10 * kappa


@dataclass(frozen=True)
class SeparationCheck:
    lhs: float
    rhs: float
    hamming: int
    in_regime: bool

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


def hamming_separation_margin(inst: HardInstance, z2, params: HardnessParams,
                              kappa: float) -> SeparationCheck:
    """Evaluate ``||sigma_z - sigma_z2||_1`` against ``c eps Ham(z, z2) / (2 kappa ell)``.

    ``in_regime`` reports whether ``inst.z`` lies in the concentration set;
    outside it the inequality is not claimed and the result is informational.
    """
    basis = inst.basis
    if basis is None:
        raise ValidationError("instance does not carry its perturbation basis")
    other = instance_from_z(basis, z2, params)
    ham = int(np.sum(inst.z != other.z))
    lhs = trace_norm(inst.state - other.state)
    rhs = params.c * params.eps * ham / (2 * kappa * basis.ell)
    return SeparationCheck(lhs, rhs, ham, in_good_set(basis, inst.z, kappa))


# --------------------------------------------------------------------------
# mutual-information evaluators


@dataclass(frozen=True)
class MiBound:
    partial: float
    tracenorm: float
    tail: float
    d_ge_1024: bool


def assouad_mi_upper(n: float, eps: float, ell: int, sup_quadform_sum: float, c: float,
                     alpha: float, d: int, mic_trace_norm_sup: float | None = None) -> MiBound:
    """Upper bounds on the average mutual information ``(1/ell) sum_i I(z_i; x^n)``.

    ``partial``   = 8 n c^2 eps^2 / ell^2 * sup_quadform_sum + 16 exp(-alpha d) n c^2 eps^2
    ``tracenorm`` = 16 n c^2 eps^2 / ell^2 * mic_trace_norm_sup

    ``mic_trace_norm_sup`` defaults to ``d``, the value for any basis
    measurement.  The ``d >= 1024`` hypothesis is echoed, not enforced.
    """
    if min(n, eps, ell, c, alpha, d) <= 0 or sup_quadform_sum < 0:
        raise ValidationError("assouad_mi_upper needs positive inputs")
    scale = n * c * c * eps * eps
    tail = 16 * math.exp(-alpha * d) * scale
    partial = 8 * scale / ell ** 2 * sup_quadform_sum + tail
    tn = float(d if mic_trace_norm_sup is None else mic_trace_norm_sup)
    tracenorm = 16 * scale / ell ** 2 * tn
    return MiBound(float(partial), float(tracenorm), float(tail), d >= 1024)


def mi_error_floor(avg_error: float) -> float:
    """``1 - h(min(avg_error, 1/2))``: mutual information forced by a decoding error rate."""
    if not 0.0 <= avg_error <= 1.0:
        raise ValidationError("average error must lie in [0, 1]")
    return 1.0 - binary_entropy(min(avg_error, 0.5))


def pauli_quadform_sums(n: int, ell: int | None = None) -> dict[str, int]:
    """``sum_i <<V_i|C_B|V_i>>`` over the top-weight basis, for every Pauli setting ``B``.

    Computed with the dense quadratic form (not the correspondence rule),
    rounded to the nearest integer after checking it is integral.
    """
    if ell is None:
        ell = default_ell(n)
    basis = pauli_top_weight_basis(n, ell)
    out = {}
    for b in all_settings(n):
        povm = pauli_basis_povm(b)
        s = sum(mic_quadratic_form(povm, v) for v in basis.directions)
        if abs(s - round(s)) > 1e-9:
            raise NumericalError(f"non-integral quadratic-form sum {s} for setting {b}")
        out[b.letters] = int(round(s))
    return out


def pauli_lowerbound_certificate(n: int, eps: float) -> dict:
    """Numbers behind the ``Omega(2^((4 - h(1/4)) N) / eps^2)`` Pauli lower bound."""
    if n < 1 or eps <= 0:
        raise ValidationError("need N >= 1 and eps > 0")
    h14 = binary_entropy(0.25)
    base = 2.0 ** (4 - h14)
    w = weight_threshold(n)
    d = 2 ** n
    g = g_of_w(n, w)
    msum = matching_count(n, w)
    entropy_bound = 2.0 ** (n * h14)
    return {
        "N": n,
        "eps": eps,
        "h_quarter": h14,
        "exponent_base": base,
        "n_lower_body": base ** n / eps ** 2,
        "order_bound": True,
        "eps_in_range": eps <= THEOREM_EPS_MAX,
        "intermediate": {
            "w": w,
            "ell": default_ell(n),
            "g_of_w": g,
            "half_d_squared": d * d / 2,
            "g_ge_half_d_squared": 2 * g >= d * d,
            "matching_sum": msum,
            "entropy_bound": entropy_bound,
            "matching_sum_le_entropy_bound": msum <= entropy_bound,
            "matching_sum_le_twice_entropy_bound": msum <= 2 * entropy_bound,
            "mi_coefficient": msum / g ** 2,
        },
    }


# --------------------------------------------------------------------------
# decoding experiment


@dataclass
class DecodeReport:
    avg_hamming_error: float
    mi_floor: float
    ell: int
    trials: int
    per_trial_errors: np.ndarray
    estimator_trace_errors: np.ndarray
    below_041: bool

    def to_dict(self) -> dict:
        return {
            "avg_hamming_error": self.avg_hamming_error,
            "mi_floor": self.mi_floor,
            "ell": self.ell,
            "trials": self.trials,
            "below_0.41": self.below_041,
            "mean_estimator_trace_error": float(np.mean(self.estimator_trace_errors)),
        }


Estimator = Callable[[np.ndarray, np.random.Generator], np.ndarray]


def _builtin_estimator(name: str, n_qubits: int, copies: int) -> Estimator:
    if name == "identity":
        return lambda state, rng: state
    if name in ("mixed", "constant-mm"):
        d = 2 ** n_qubits
        return lambda state, rng: maximally_mixed(d)
    if name == "pauli":
        from mictomo.tomography.pauli_scheme import pauli_estimate, pauli_tomography_run

        m = max(1, copies // 3 ** n_qubits)
        return lambda state, rng: pauli_estimate(pauli_tomography_run(state, n_qubits, m, rng))
    raise ValidationError(f"unknown estimator {name!r}")


def all_sign_vectors(ell: int) -> np.ndarray:
    return np.array(list(itertools.product((-1, 1), repeat=ell)), dtype=np.int8)


def assouad_decode_experiment(n_qubits: int, eps: float, n: int, estimator, trials: int,
                              rng: np.random.Generator, ell: int | None = None,
                              c: float = DEFAULT_C) -> DecodeReport:
    """Nearest-``sigma_z`` decoding of an estimator's output over all ``2**ell`` candidates.

    ``estimator`` is a callable ``(state, rng) -> rho_hat`` or one of the
    names ``"identity"``, ``"mixed"``, ``"pauli"`` (the latter uses ``n``
    copies split evenly over the ``3**N`` settings).
    """
    if n_qubits > 2:
        raise ValidationError("decoding experiment is limited to N <= 2")
    d = 2 ** n_qubits
    if ell is None:
        ell = max(-(-d * d // 2), 1)
    if ell > DECODE_MAX_ELL:
        raise ValidationError(f"ell={ell} exceeds the enumeration guard {DECODE_MAX_ELL}")
    if isinstance(estimator, str):
        estimator = _builtin_estimator(estimator, n_qubits, n)
    basis = pauli_top_weight_basis(n_qubits, ell)
    params = HardnessParams(eps=eps, c=c)
    cands_z = all_sign_vectors(ell)
    raw = raw_perturbation(basis, cands_z, params)
    cands = maximally_mixed(d) + raw * clamp_factors(raw)[:, None, None]

    errors = np.empty(trials)
    est_err = np.empty(trials)
    signs = np.array([-1, 1], dtype=np.int8)
    for t in range(trials):
        z = rng.choice(signs, size=ell)
        inst = instance_from_z(basis, z, params)
        rho_hat = np.asarray(estimator(inst.state, rng), dtype=complex)
        dist = trace_norms_herm(cands - rho_hat)
        z_hat = cands_z[int(np.argmin(dist))]
        errors[t] = np.mean(z_hat != z)
        est_err[t] = trace_norm(rho_hat - inst.state)
    avg = float(np.mean(errors))
    return DecodeReport(avg, mi_error_floor(avg), ell, trials, errors, est_err, avg < 0.41)


def check_instance(inst: HardInstance) -> None:
    """Raise unless the instance satisfies the documented invariants."""
    d = inst.state.shape[0]
    check_density(inst.state, "sigma_z")
    if np.max(np.abs(inst.state - maximally_mixed(d) - inst.delta)) > 1e-12:
        raise ValidationError("state != rho_mm + delta")
    if op_norm(inst.delta) > 1 / (2 * d) + 1e-12:
        raise ValidationError("clamped perturbation exceeds 1/(2d) in operator norm")


__all__ = [
    "DEFAULT_C",
    "DecodeReport",
    "HardInstance",
    "HardnessParams",
    "MiBound",
    "PauliString",
    "PerturbationBasis",
    "SeparationCheck",
    "assouad_decode_experiment",
    "assouad_mi_upper",
    "binary_entropy",
    "check_instance",
    "constant_tension",
    "default_ell",
    "corresponds",
    "empirical_kappa",
    "g_of_w",
    "hamming_separation_margin",
    "in_good_set",
    "instance_from_z",
    "matching_count",
    "mi_error_floor",
    "pauli_lowerbound_certificate",
    "pauli_quadform_sums",
    "pauli_top_weight_basis",
    "sample_distances",
    "sample_instance",
    "weight_threshold",
]
