"""Simulating one sample of a ``d``-outcome distribution with ``w``-bit players,
and the k-outcome tomography scheme built on it.

Protocol (one round, ``2B`` players, ``B = ceil(d / (2^w - 1))``):

* the symbols ``0..d-1`` are split into consecutive blocks of size
  ``s = 2^w - 1``;
* index player ``j`` sends ``1 + (x mod s)`` if its own sample ``x`` lies in
  block ``j`` and ``0`` otherwise;
* flag player ``i`` sends ``1`` if its sample lies in block ``i``;
* the referee accepts iff exactly one index player ``j`` is non-zero and flag
  player ``j`` sent ``0``, and outputs index player ``j``'s symbol.

Symbol ``x`` in block ``j`` is output with probability
``p_x * prod_i (1 - p(B_i))``, the same factor for every ``x``, so the
accepted output is distributed exactly as ``p``.  Rounds repeat until one
accepts or the round budget runs out (output ``None``, i.e. bottom).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from mictomo.errors import ValidationError
from mictomo.linalg import check_density
from mictomo.tomography.mub import (
    FrequencyVector,
    MubFamily,
    build_mub,
    frequencies_from_groups,
    pls_estimate,
)
from mictomo.pauli import sample_from


class DegenerateDistributionWarning(UserWarning):
    """The simulation protocol cannot accept: some block carries all the mass."""


@dataclass(frozen=True)
class SimMessage:
    player_id: int
    payload: int
    w_bits: int

    def __post_init__(self):
        if not 0 <= self.payload < 2 ** self.w_bits:
            raise ValidationError(f"payload {self.payload} does not fit in {self.w_bits} bits")


def block_layout(d: int, w_bits: int) -> tuple[int, int]:
    """``(B, s)``: number of blocks and block size ``2^w - 1``."""
    if w_bits < 1:
        raise ValidationError("w_bits must be at least 1")
    if d < 2:
        raise ValidationError("d must be at least 2")
    s = 2 ** w_bits - 1
    return -(-d // s), s


def block_masses(p, w_bits: int) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    b, s = block_layout(p.size, w_bits)
    padded = np.zeros(b * s)
    padded[: p.size] = p
    return padded.reshape(b, s).sum(axis=1)


def acceptance_probability(p, w_bits: int) -> float:
    """``prod_i (1 - p(B_i))``: chance that a single round accepts."""
    return float(np.prod(1.0 - block_masses(p, w_bits)))


def is_degenerate(p, w_bits: int) -> bool:
    return acceptance_probability(p, w_bits) <= 0.0


def eta_sim_budget(d: int, w_bits: int, eta: float) -> int:
    """``40 * ceil(log2(1/eta)) * ceil(d / (2^w - 1))`` players."""
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    b, _ = block_layout(d, w_bits)
    return 40 * math.ceil(math.log2(1 / eta) - 1e-12) * b


def rounds_for_eta(eta: float) -> int:
    """Rounds needed for a bottom rate <= ``eta`` when every block mass is <= 1/2.

    Under that condition a round accepts with probability at least 1/4.
    """
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    return max(1, math.ceil(math.log(1 / eta) / math.log(4 / 3) - 1e-12))


# --------------------------------------------------------------------------
# players and referee


def player_message(player_id: int, sample: int, d: int, w_bits: int) -> SimMessage:
    """Message of player ``player_id`` (``0..2B-1``) within a round."""
    b, s = block_layout(d, w_bits)
    if not 0 <= sample < d:
        raise ValidationError(f"sample {sample} outside [0, {d})")
    if player_id < b:
        payload = 1 + sample % s if sample // s == player_id else 0
    elif player_id < 2 * b:
        payload = 1 if sample // s == player_id - b else 0
    else:
        raise ValidationError(f"player {player_id} outside a round of {2 * b} players")
    return SimMessage(player_id, payload, w_bits)


def referee_decode(messages, d: int, w_bits: int) -> int | None:
    """Decode one round of ``2B`` messages; ``None`` when the round rejects."""
    b, s = block_layout(d, w_bits)
    if len(messages) != 2 * b:
        raise ValidationError(f"a round needs {2 * b} messages, got {len(messages)}")
    payloads = [m.payload for m in messages]
    hits = [j for j in range(b) if payloads[j] != 0]
    if len(hits) != 1:
        return None
    j = hits[0]
    if payloads[b + j] != 0:
        return None
    return j * s + payloads[j] - 1


def eta_simulate(samples, d: int, w_bits: int, rounds: int,
                 rng: np.random.Generator | None = None) -> int | None:
    """Run up to ``rounds`` rounds on the players' samples; ``None`` is bottom.

    ``samples[i]`` is the private sample of player ``i``; round ``r`` uses
    players ``2Br .. 2B(r+1)-1``.  ``rng`` is accepted for interface symmetry;
    the protocol uses no shared randomness.
    """
    b, _ = block_layout(d, w_bits)
    if rounds < 1:
        raise ValidationError("rounds must be at least 1")
    samples = [int(x) for x in samples]
    if len(samples) < rounds * 2 * b:
        raise ValidationError(f"insufficient samples: {rounds} rounds need {rounds * 2 * b} players")
    for r in range(rounds):
        base = r * 2 * b
        msgs = [player_message(i, samples[base + i], d, w_bits) for i in range(2 * b)]
        out = referee_decode(msgs, d, w_bits)
        if out is not None:
            return out
    return None


def decode_rounds(samples: np.ndarray, d: int, w_bits: int) -> np.ndarray:
    """Vectorized referee over a ``(rounds, 2B)`` sample array; ``-1`` marks rejection."""
    b, s = block_layout(d, w_bits)
    samples = np.asarray(samples, dtype=np.int64)
    if samples.ndim != 2 or samples.shape[1] != 2 * b:
        raise ValidationError(f"samples must have shape (rounds, {2 * b})")
    owner = np.arange(b)
    idx_hit = samples[:, :b] // s == owner
    flag_hit = samples[:, b:] // s == owner
    ok = idx_hit.sum(axis=1) == 1
    j = np.argmax(idx_hit, axis=1)
    rows = np.arange(samples.shape[0])
    ok &= ~flag_hit[rows, j]
    return np.where(ok, samples[rows, j], -1)


def exact_conditional_law(p, w_bits: int) -> tuple[np.ndarray | None, float]:
    """Brute-force law of one round: enumerate every tuple of player samples.

    Returns ``(conditional law of the output given acceptance, acceptance
    probability)``.  The law is ``None`` (with a warning) when no tuple is
    accepted with positive probability.
    """
    p = np.asarray(p, dtype=float)
    d = p.size
    b, _ = block_layout(d, w_bits)
    if d ** (2 * b) > 2 ** 20:
        raise ValidationError("instance too large for exhaustive enumeration")
    out = np.zeros(d)
    for tup in itertools.product(range(d), repeat=2 * b):
        weight = float(np.prod(p[list(tup)]))
        if weight == 0.0:
            continue
        msgs = [player_message(i, x, d, w_bits) for i, x in enumerate(tup)]
        sym = referee_decode(msgs, d, w_bits)
        if sym is not None:
            out[sym] += weight
    accept = float(out.sum())
    if accept <= 0.0:
        warnings.warn("degenerate distribution: the protocol never accepts", DegenerateDistributionWarning,
                      stacklevel=2)
        return None, 0.0
    return out / accept, accept


@dataclass
class StreamSimulation:
    accepted: np.ndarray
    rounds: int
    bottoms: int
    degenerate: bool


def simulate_stream(p, n_players: int, w_bits: int, rounds_per_sim: int,
                    rng: np.random.Generator) -> StreamSimulation:
    """Run consecutive simulations over ``n_players`` players holding samples of ``p``.

    Every accepted round ends a simulation with one exact sample.  A run of
    ``g`` rejected rounds before an acceptance contains ``g // rounds_per_sim``
    simulations that ended in bottom.
    """
    p = np.asarray(p, dtype=float)
    d = p.size
    b, _ = block_layout(d, w_bits)
    rounds = n_players // (2 * b)
    x = sample_from(p, rounds * 2 * b, rng).reshape(rounds, 2 * b)
    out = decode_rounds(x, d, w_bits)
    hit = np.flatnonzero(out >= 0)
    gaps = np.diff(np.concatenate(([-1], hit))) - 1
    bottoms = int(np.sum(gaps // rounds_per_sim))
    tail = rounds - 1 - (hit[-1] if hit.size else -1)
    bottoms += tail // rounds_per_sim
    return StreamSimulation(out[hit], rounds, bottoms, hit.size == 0 and rounds > 0)


# --------------------------------------------------------------------------
# k-outcome tomography


@dataclass
class KOutcomeResult:
    estimate: np.ndarray
    frequencies: FrequencyVector
    w_bits: int
    simulated: np.ndarray
    labels: np.ndarray
    used: np.ndarray
    bottoms: np.ndarray
    rounds: int
    players_per_round: int
    leftover: int
    degenerate_bases: np.ndarray

    def counters(self) -> dict:
        return {
            "w_bits": self.w_bits,
            "simulated_per_basis": self.simulated.tolist(),
            "label_counts": self.labels.tolist(),
            "used_per_basis": self.used.tolist(),
            "bottoms_per_basis": self.bottoms.tolist(),
            "rounds_per_basis": self.rounds,
            "players_per_round": self.players_per_round,
            "leftover_copies": self.leftover,
            "degenerate_bases": self.degenerate_bases.tolist(),
            "empty_bases": self.frequencies.empty_rows.tolist(),
        }


def k_outcome_copies_body(d: int, k: int, eps: float) -> float:
    """``d^4 ln d / (k eps^2)``, the order of the copy count (constants dropped)."""
    return d ** 4 * math.log(d) / (k * eps ** 2)


def effective_bits(k: int) -> int:
    if k < 2:
        raise ValidationError("k must be at least 2")
    w = k.bit_length() - 1
    if 2 ** w != k:
        warnings.warn(f"k={k} is not a power of two; using k={2 ** w}", stacklevel=3)
    return w


def k_outcome_run(rho, d: int, k: int, n: int, rng: np.random.Generator, eta: float = 0.01,
                  family: MubFamily | None = None) -> KOutcomeResult:
    """MUB tomography where every copy's outcome is compressed to ``log2 k`` bits.

    The ``n`` copies are split into ``d + 1`` groups; group ``j`` measures in
    MUB basis ``j`` and its players run consecutive simulations, producing
    ``n_j`` exact samples (the accepted rounds).  The MUB resampling step
    then draws ``sum_j n_j / 2`` uniform labels and keeps the first
    ``min(n_j, m_j)`` simulated samples of each group before PLS.
    """
    rho = check_density(rho)
    if rho.shape[0] != d:
        raise ValidationError(f"state dimension {rho.shape[0]} does not match d={d}")
    w = effective_bits(k)
    if 2 ** w >= d:
        raise ValidationError(f"k={k} must be smaller than d={d}")
    family = build_mub(d) if family is None else family
    b, _ = block_layout(d, w)
    n0 = n // (d + 1)
    if n0 < 2 * b:
        raise ValidationError(f"n={n} leaves fewer than {2 * b} players per basis")
    r_sim = rounds_for_eta(eta)
    p = family.probabilities(rho)
    groups, bottoms, degenerate = [], [], []
    rounds = n0 // (2 * b)
    for j in range(d + 1):
        sim = simulate_stream(p[j], n0, w, r_sim, rng)
        groups.append(sim.accepted)
        bottoms.append(sim.bottoms)
        if sim.degenerate or is_degenerate(p[j], w):
            degenerate.append(j)
    simulated = np.array([len(g) for g in groups], dtype=np.int64)
    labels = np.bincount(rng.integers(0, d + 1, size=int(simulated.sum()) // 2), minlength=d + 1)
    freqs, used = frequencies_from_groups(groups, labels)
    leftover = n - (d + 1) * rounds * 2 * b
    return KOutcomeResult(
        pls_estimate(freqs, family), freqs, w, simulated, labels, used,
        np.array(bottoms, dtype=np.int64), rounds, 2 * b, leftover, np.array(degenerate, dtype=np.int64),
    )
