import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mictomo.errors import ValidationError
from mictomo.linalg import is_density, maximally_mixed, random_density, trace_norm
from mictomo.measurement import Povm
from mictomo.pauli import matrix_of
from mictomo.tomography import mub

# decimal evaluations of ceil(172 d^3 ln(200 d) / eps^2), frozen
K_EQ_D_4_025 = 1177348  # pre-rounding 1177347.294
K_EQ_D_2_05 = 32978  # pre-rounding 32977.021


def overlaps(fam):
    b = fam.bases
    return np.abs(np.einsum("kix,liy->klxy", b.conj(), b)) ** 2


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_mub_invariants_by_direct_inner_products(d):
    fam = mub.build_mub(d)
    assert fam.bases.shape == (d + 1, d, d)
    ov = overlaps(fam)
    for k in range(d + 1):
        for l in range(d + 1):
            target = np.eye(d) if k == l else np.full((d, d), 1 / d)
            assert np.max(np.abs(ov[k, l] - target)) < 1e-9


def test_qubit_family_is_xyz():
    fam = mub.build_mub(2)
    for k, letter in enumerate("XYZ"):
        p = matrix_of(letter)
        for x in range(2):
            v = fam.bases[k][:, x]
            assert np.allclose(p @ v, (1 if x == 0 else -1) * v)


def test_mub_povm_is_valid():
    fam = mub.build_mub(4)
    pis = fam.projectors().reshape(-1, 4, 4) / 5
    povm = Povm(tuple(pis))
    assert povm.num_outcomes == 20


def test_commuting_classes_partition():
    for n in (2, 3):
        classes = mub.commuting_classes(n)
        flat = [p.letters for c in classes for p in c]
        assert len(classes) == 2 ** n + 1 and len(flat) == len(set(flat)) == 4 ** n - 1
        for c in classes:
            for p in c:
                for q in c:
                    a, b = matrix_of(p), matrix_of(q)
                    assert np.allclose(a @ b, b @ a)


def test_gf_arithmetic():
    # GF(4): x * x = x + 1; GF(8): x^7 = 1
    assert mub.gf_mul(2, 2, 2) == 3
    x = 1
    for _ in range(7):
        x = mub.gf_mul(x, 2, 3)
    assert x == 1
    assert [mub.gf_trace(a, 2) for a in range(4)] == [0, 0, 1, 1]


def test_unsupported_dimension():
    for d in (3, 6, 32):
        with pytest.raises(ValidationError):
            mub.build_mub(d)


@pytest.mark.parametrize("d", [2, 4, 8])
def test_reconstruction_identity(d):
    fam = mub.build_mub(d)
    rng = np.random.default_rng(d)
    for _ in range(5):
        rho = random_density(d, rng)
        freqs = mub.FrequencyVector(fam.probabilities(rho), np.ones(d + 1, dtype=int))
        assert np.max(np.abs(mub.mub_ls_estimate(freqs, fam) - rho)) < 1e-9
    exact_mm = np.full((d + 1, d), 1 / d)
    assert np.allclose(mub.mub_ls_estimate(exact_mm, fam), maximally_mixed(d))


@given(st.integers(0, 2**32 - 1))
def test_ls_trace_one_for_any_frequencies(seed):
    fam = mub.build_mub(4)
    counts = np.random.default_rng(seed).integers(0, 50, size=(5, 4))
    est = mub.mub_ls_estimate(mub.FrequencyVector.from_counts(counts), fam)
    assert abs(np.trace(est) - 1) < 1e-12
    assert is_density(mub.pls_estimate(mub.FrequencyVector.from_counts(counts), fam))


def test_frequency_vector_empty_row():
    fv = mub.FrequencyVector.from_counts([[2, 2], [0, 0], [1, 3]])
    assert np.allclose(fv.f, [[0.5, 0.5], [0.5, 0.5], [0.25, 0.75]])
    assert list(fv.empty_rows) == [1]


def test_copies_needed():
    assert mub.k_eq_d_copies_needed(4, 0.25) == K_EQ_D_4_025
    assert mub.k_eq_d_copies_needed(2, 0.5) == K_EQ_D_2_05
    pre = 172 * 8 * math.log(400) / 0.25 ** 2
    assert mub.k_eq_d_copies_needed(2, 0.25) == math.ceil(pre)


def test_algorithm1_truncation_counters():
    rng = np.random.default_rng(0)
    rho = random_density(4, rng)
    res = mub.algorithm1_run(rho, 4, 1003, rng)
    assert res.group_size == 200 and res.leftover == 3
    assert res.labels.sum() == 501
    assert np.array_equal(res.used, np.minimum(res.labels, 200))
    assert np.array_equal(res.frequencies.sizes, res.used)
    assert is_density(res.estimate)
    c = res.counters()
    assert c["leftover_copies"] == 3 and len(c["used_per_basis"]) == 5


def test_algorithm1_truncation_bites_when_labels_exceed_group():
    # with n = 2(d+1) each group holds 2 copies while n/2 = d+1 labels land unevenly
    rng = np.random.default_rng(1)
    hit = False
    for _ in range(50):
        res = mub.algorithm1_run(np.eye(2) / 2, 2, 6, rng)
        assert np.all(res.used <= 2)
        if res.truncated.size:
            hit = True
            assert np.all(res.used[res.truncated] == 2)
    assert hit


def test_algorithm1_mixed_state_accuracy():
    rng = np.random.default_rng(7)
    ok = sum(trace_norm(mub.algorithm1_run(np.eye(2) / 2, 2, 60000, rng).estimate - np.eye(2) / 2) <= 0.05
             for _ in range(50))
    assert ok >= 49


def test_algorithm1_rejects_small_n(rng):
    with pytest.raises(ValidationError):
        mub.algorithm1_run(np.eye(4) / 4, 4, 9, rng)
