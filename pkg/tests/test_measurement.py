import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mictomo import measurement as ms
from mictomo.errors import ValidationError
from mictomo.linalg import random_hermitian, unvectorize, vectorize
from mictomo.pauli import all_settings, all_strings, as_setting, matrix_of
from oracles import mic_dense


def test_povm_validation():
    with pytest.raises(ValidationError):
        ms.Povm((np.eye(2) / 2,))
    with pytest.raises(ValidationError):
        ms.Povm((np.diag([1.5, 0]), np.diag([-0.5, 1])))
    with pytest.raises(ValidationError):
        ms.Povm((np.eye(2),), labels=("a", "b"))


def test_mic_apply_equals_matrix_action(rng):
    povm = ms.random_povm(3, 4, rng)
    a = random_hermitian(3, rng)
    via_matrix = unvectorize(ms.mic_matrix(povm) @ vectorize(a))
    assert np.allclose(ms.mic_apply(povm, a), via_matrix, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6))
def test_mic_matrix_matches_oracle_and_is_psd(seed, d, k):
    r = np.random.default_rng(seed)
    povm = ms.random_povm(d, k, r)
    c = ms.mic_matrix(povm)
    assert np.allclose(c, mic_dense(povm.effects), atol=1e-12)
    assert np.allclose(c, c.conj().T, atol=1e-12)
    lam = ms.mic_spectrum(povm)
    assert lam[-1] > -1e-10
    assert abs(ms.mic_trace_norm(povm) - lam.sum()) < 1e-9
    v = random_hermitian(d, r)
    qf = np.vdot(vectorize(v), c @ vectorize(v)).real
    assert abs(ms.mic_quadratic_form(povm, v) - qf) < 1e-9


def test_identity_is_fixed_point(rng):
    povm = ms.random_povm(4, 3, rng)
    assert np.allclose(ms.mic_apply(povm, np.eye(4)), np.eye(4), atol=1e-12)


def test_trivial_povm_mic_projects_onto_identity():
    povm = ms.Povm((np.eye(3, dtype=complex),))
    assert ms.mic_trace_norm(povm) == pytest.approx(1.0)
    z = np.diag([1.0, -1.0, 0.0])
    assert np.allclose(ms.mic_apply(povm, z), 0)


def test_zero_effect_dropped():
    povm = ms.Povm((np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.zeros((2, 2))))
    assert ms.mic_trace_norm(povm) == pytest.approx(2.0)


def test_dense_guard():
    big = ms.computational_basis_povm(32)
    with pytest.raises(ValidationError):
        ms.mic_matrix(big)
    assert ms.mic_trace_norm(big) == pytest.approx(32)


@pytest.mark.parametrize("n", [1, 2])
def test_pauli_eigenstructure_exhaustive(n):
    for b in all_settings(n):
        povm = ms.pauli_basis_povm(b)
        for q in all_strings(n):
            lam = ms.pauli_mic_eigenvalue(b, q)
            assert np.allclose(ms.mic_apply(povm, matrix_of(q)), lam * matrix_of(q), atol=1e-10)


def test_pauli_mic_eigenvalue_examples():
    assert ms.pauli_mic_eigenvalue("XY", "XI") == 1
    assert ms.pauli_mic_eigenvalue("XY", "XY") == 1
    assert ms.pauli_mic_eigenvalue("XY", "ZI") == 0


def test_uniform_ensemble():
    for n in (1, 2, 3):
        for q in all_strings(n):
            assert ms.uniform_ensemble_average(q) == pytest.approx(ms.uniform_ensemble_eigenvalue(q.weight))
    assert ms.uniform_ensemble_eigenvalue(2) == pytest.approx(1 / 9)
    with pytest.raises(ValidationError):
        ms.uniform_ensemble_eigenvalue(-1)


@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3, 4, 8]), st.sampled_from([2, 3, 4, 16]))
def test_trace_norm_at_most_min_k_d(seed, d, k):
    povm = ms.random_povm(d, k, np.random.default_rng(seed))
    tn = ms.mic_trace_norm(povm)
    assert 1 - 1e-9 <= tn <= min(k, d) + 1e-8


def test_trace_norm_rank_one_bases():
    for d in (2, 4, 8):
        assert ms.mic_trace_norm(ms.computational_basis_povm(d)) == pytest.approx(d, abs=1e-8)
    assert ms.mic_trace_norm(ms.pauli_basis_povm(as_setting("XYZ"))) == pytest.approx(8, abs=1e-8)


def test_plug_play_bound():
    rep = ms.plug_play_lower_bound(4, 0.001, 4)
    assert rep.body == pytest.approx(4 ** 4 / (1e-6 * 4))
    assert rep.eps_in_range
    with pytest.warns(UserWarning):
        rep = ms.plug_play_lower_bound(4, 0.1, 4)
    assert not rep.eps_in_range and rep.to_dict()["notes"]
    assert ms.k_outcome_lower_bound(8, 0.001, 2).mic_trace_norm_sup == 2
    with pytest.raises(ValidationError):
        ms.plug_play_lower_bound(4, 0.001, 0.5)


def test_povm_json_roundtrip(tmp_path, rng):
    povm = ms.random_povm(3, 2, rng)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(ms.povm_to_json(povm)))
    back = ms.load_povm(path)
    assert all(np.allclose(a, b) for a, b in zip(back.effects, povm.effects))
    bare = [e for e in ms.povm_to_json(ms.computational_basis_povm(2))["effects"]]
    assert ms.povm_from_json(bare).num_outcomes == 2
    with pytest.raises(ValidationError):
        ms.povm_from_json({"foo": 1})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        ms.load_povm(bad)


def test_probabilities(rng):
    povm = ms.random_povm(3, 5, rng)
    rho = np.eye(3) / 3
    assert povm.probabilities(rho).sum() == pytest.approx(1.0)
