import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_basis, random_marginal
from edr.measurement import ProjectiveBasis, marginals, mix
from edr.metrics import (
    Metric, Observable, calibration_error, hofmann_check, joint_errors, marginal_error, reevaluate_witness,
    variation_error, variation_error_state_lower_bound,
)
from edr.mub import fourier_pair
from edr.operators import PAULI_I, PAULI_X, PAULI_Z, random_pure_state, random_unitary
from edr.optimizer import random_povm
from edr.qubit import P_PLUS, canonical_pair, optimal_calibration_povm, optimal_variation_povm


def calibration_oracle(effects, basis):
    return max(1 - np.vdot(v, e @ v).real for v, e in zip(basis.vectors, effects))


def variation_oracle(effects, basis):
    n = basis.dim
    best = 0.0
    for r in range(n + 1):
        for xs in itertools.combinations(range(n), r):
            d = sum((effects[a] - basis.projectors[a] for a in xs), np.zeros((n, n)))
            best = max(best, np.linalg.norm(d, 2))
    return best


def bloch_basis(angle):
    """Qubit basis whose first vector sits at polar angle ``angle`` on the Bloch sphere."""
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return ProjectiveBasis(np.array([[c, s], [-s, c]]))


def test_calibration_examples():
    basis = ProjectiveBasis.computational(3)
    assert calibration_error(basis.projectors, basis)[0] == 0.0
    assert calibration_error(np.stack([np.eye(3) / 3] * 3), basis)[0] == pytest.approx(2 / 3)
    m = np.stack([P_PLUS, np.eye(2) - P_PLUS])
    assert calibration_error(m, bloch_basis(np.pi / 3))[0] == pytest.approx(0.25, abs=1e-12)


def test_variation_examples():
    basis = ProjectiveBasis.computational(2)
    assert variation_error(basis.projectors, basis) == (0.0, [])
    pair = canonical_pair(np.pi / 4)
    val, _ = variation_error(pair.barred.projectors, pair.unbarred)
    assert val == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
    m, _ = marginals(optimal_variation_povm(np.pi / 6))
    val, _ = variation_error(m, canonical_pair(np.pi / 6).unbarred)
    assert val == pytest.approx(0.5 * (np.sin(np.pi / 4 + np.pi / 6) - np.sqrt(2) / 2), abs=1e-12)
    assert val == pytest.approx(0.12941, abs=1e-5)


def test_joint_error_examples():
    for theta in (0.0, 0.3, np.pi / 4):
        rep = joint_errors(optimal_calibration_povm(theta), canonical_pair(theta), "calibration")
        assert rep.epsilon == pytest.approx(np.sin(theta / 2) ** 2, abs=1e-12)
        assert rep.epsilon_bar == pytest.approx(np.sin(theta / 2) ** 2, abs=1e-12)
        rep = joint_errors(optimal_variation_povm(theta), canonical_pair(theta), "variation")
        expected = 0.5 * (np.sin(np.pi / 4 + theta) - np.sqrt(2) / 2)
        assert rep.epsilon == pytest.approx(expected, abs=1e-12)
        assert rep.epsilon_bar == pytest.approx(expected, abs=1e-12)


def test_report_json_is_one_based():
    rep = joint_errors(random_povm(3, 4), fourier_pair(3), "variation")
    doc = json.loads(json.dumps(rep.to_json()))
    assert doc["metric"] == "variation"
    for key in ("first", "second"):
        assert all(1 <= a <= 3 for a in doc["witness"][key]["subset"])
    rep = joint_errors(random_povm(3, 4), fourier_pair(3), "calibration")
    assert 1 <= rep.witness["first"]["outcome"] <= 3


def test_state_lower_bound_examples(rng):
    n = 3
    basis = random_basis(n, rng)
    m = random_marginal(n, rng)
    eig_states = [np.outer(v, v.conj()) for v in basis.vectors]
    # on eigenstates the largest total-variation distance is the calibration error
    lb = variation_error_state_lower_bound(m, basis, eig_states)
    assert lb == pytest.approx(calibration_error(m, basis)[0], abs=1e-12)
    assert variation_error_state_lower_bound(basis.projectors, basis, [np.eye(n) / n]) == pytest.approx(0.0)
    states = [random_pure_state(n, rng) for _ in range(1000)]
    exact = variation_error(m, basis)[0]
    sampled = variation_error_state_lower_bound(m, basis, states)
    assert sampled <= exact + 1e-12
    assert sampled > 0.5 * exact


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.integers(0, 10**6))
def test_oracles_and_ordering(n, seed):
    rng = np.random.default_rng(seed)
    m = random_marginal(n, rng)
    basis = random_basis(n, rng)
    dc, _ = calibration_error(m, basis)
    dv, _ = variation_error(m, basis)
    assert dc == pytest.approx(calibration_oracle(m, basis), abs=1e-12)
    assert dv == pytest.approx(variation_oracle(m, basis), abs=1e-12)
    assert 0 <= dc <= dv + 1e-10 <= 1 + 1e-10


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6), st.sampled_from(list(Metric)))
def test_unitary_invariance(n, seed, metric):
    rng = np.random.default_rng(seed)
    m = random_marginal(n, rng)
    basis = random_basis(n, rng)
    s = random_unitary(n, rng)
    lhs = marginal_error(s.conj().T @ m @ s, basis, metric)[0]
    rotated = ProjectiveBasis((s @ basis.vectors.T).T)
    assert lhs == pytest.approx(marginal_error(m, rotated, metric)[0], abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6), st.sampled_from(list(Metric)))
def test_witness_reproduces_value_exactly(n, seed, metric):
    povm = random_povm(n, seed)
    pair = fourier_pair(n)
    rep = joint_errors(povm, pair, metric)
    assert reevaluate_witness(rep, povm, pair) == (rep.epsilon, rep.epsilon_bar)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 4), st.integers(0, 10**6), st.floats(0, 1), st.sampled_from(list(Metric)))
def test_mixing_is_convex(n, seed, alpha, metric):
    pair = fourier_pair(n)
    f1, f2 = random_povm(n, seed), random_povm(n, seed + 7)
    r1, r2 = joint_errors(f1, pair, metric), joint_errors(f2, pair, metric)
    r3 = joint_errors(mix(f1, f2, alpha), pair, metric)
    assert r3.epsilon <= alpha * r1.epsilon + (1 - alpha) * r2.epsilon + 1e-10
    assert r3.epsilon_bar <= alpha * r1.epsilon_bar + (1 - alpha) * r2.epsilon_bar + 1e-10


def test_hofmann_examples():
    basis = ProjectiveBasis.computational(2)
    x_basis = ProjectiveBasis(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    a = Observable(basis, (1.0, -1.0))
    a_bar = Observable(x_basis, (1.0, -1.0))
    assert np.allclose(a.matrix(), PAULI_Z) and np.allclose(a_bar.matrix(), PAULI_X)
    recs = hofmann_check(basis.projectors, a, a_bar)
    assert all(r.epsilon == pytest.approx(0) and r.rhs == pytest.approx(0) and r.satisfied for r in recs)
    recs = hofmann_check([PAULI_I], a, a_bar)
    assert len(recs) == 1 and recs[0].rhs == pytest.approx(0) and recs[0].satisfied
    zero = np.stack([basis.projectors[0], basis.projectors[1], np.zeros((2, 2))])
    assert len(hofmann_check(zero, a, a_bar)) == 2
    with pytest.raises(ValueError):
        Observable(basis, (1.0, 1.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_hofmann_relation_holds(seed, outcomes):
    rng = np.random.default_rng(seed)
    effects = random_marginal(2, rng, outcomes)
    a = Observable(random_basis(2, rng), tuple(rng.normal(size=2)))
    a_bar = Observable(random_basis(2, rng), tuple(rng.normal(size=2)))
    assert all(r.satisfied for r in hofmann_check(effects, a, a_bar))
