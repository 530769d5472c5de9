import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdisc import DomainError
from symdisc.me_measure import (ProbabilityTable, dft_matrix, embed_state, embed_states,
                                me_measurement, optimality_certificate, outcome_table,
                                p_correct, success_probability)
from symdisc.qudit_core import (CascadeParams, SymmetricSetSpec, cascade_coeffs,
                                hyperspherical_coeffs, make_symmetric_set, random_coeffs)

from conftest import random_spec


def qubit(theta, N):
    return SymmetricSetSpec(2, N, hyperspherical_coeffs([theta]))


def helstrom(spec):
    psi = make_symmetric_set(spec)
    return (1 + math.sqrt(1 - abs(np.vdot(psi[0], psi[1])) ** 2)) / 2


def brute_table(spec):
    N, w = spec.N, cmath.exp(2j * math.pi / spec.N)
    out = np.zeros((N, N))
    for k in range(N):
        for j in range(N):
            amp = sum(spec.c[n] * w ** (n * (j - k)) for n in range(spec.D)) / math.sqrt(N)
            out[k, j] = abs(amp) ** 2
    return out


class TestMeasurement:
    def test_qubit_vectors(self):
        V = me_measurement(2).vectors
        np.testing.assert_allclose(V[:, 0], [2**-0.5, 2**-0.5], atol=1e-15)
        np.testing.assert_allclose(V[:, 1], [2**-0.5, -(2**-0.5)], atol=1e-15)

    @pytest.mark.parametrize("N", [2, 3, 5, 11, 23])
    def test_complete_and_orthonormal(self, N):
        m = me_measurement(N)
        np.testing.assert_allclose(m.projectors.sum(axis=0), np.eye(N), atol=1e-12)
        np.testing.assert_allclose(m.vectors.conj().T @ m.vectors, np.eye(N), atol=1e-12)

    def test_dft_entries(self):
        F = dft_matrix(4)
        assert abs(F[1, 3] - cmath.exp(2j * math.pi * 3 / 4) / 2) < 1e-15

    def test_n5_matches_brute_force(self):
        spec = SymmetricSetSpec(3, 5, random_coeffs(3, 42))
        m = me_measurement(5)
        probs = m.probabilities(embed_states(make_symmetric_set(spec), 5))
        np.testing.assert_allclose(probs, brute_table(spec), atol=1e-14)

    def test_too_small(self):
        with pytest.raises(DomainError):
            me_measurement(1)


class TestEmbed:
    def test_identity_when_square(self):
        v = np.array([0.6, 0.8j])
        np.testing.assert_array_equal(embed_state(v, 2), v)

    def test_pads_with_zeros(self):
        np.testing.assert_array_equal(embed_state([0.6, 0.8], 3), [0.6, 0.8, 0])

    def test_rejects_smaller_n(self):
        with pytest.raises(DomainError):
            embed_state([1, 0, 0], 2)

    def test_restricted_completeness(self):
        P = me_measurement(7).projectors.sum(axis=0)
        E = np.eye(7)[:, :3]
        np.testing.assert_allclose(E.T @ P @ E, np.eye(3), atol=1e-12)


class TestOutcomeTable:
    def test_qubit_reference(self):
        t = outcome_table(qubit(math.pi / 3, 2)).entries
        assert abs(t[0, 0] - 0.93301) < 1e-5
        assert abs(t[1, 0] - 0.06699) < 1e-5
        assert abs(t[0, 0] - helstrom(qubit(math.pi / 3, 2))) < 1e-12

    def test_orthogonal_identity(self):
        spec = SymmetricSetSpec(4, 4, np.full(4, 0.5))
        np.testing.assert_allclose(outcome_table(spec).entries, np.eye(4), atol=1e-14)

    def test_matches_independent_matrix_path(self):
        spec = SymmetricSetSpec(3, 5, random_coeffs(3, 17))
        F = dft_matrix(5)
        states = embed_states(make_symmetric_set(spec), 5)
        np.testing.assert_allclose(outcome_table(spec).entries, np.abs(F.conj().T @ states.T) ** 2,
                                   atol=1e-14)

    @settings(max_examples=40)
    @given(st.integers(0, 2**32))
    def test_table_invariants(self, seed):
        spec = random_spec(seed, d_max=21, n_max=23)
        t = outcome_table(spec).entries
        assert np.all((t >= -1e-15) & (t <= 1 + 1e-15))
        np.testing.assert_allclose(t.sum(axis=0), 1, atol=1e-9)
        np.testing.assert_allclose(np.roll(np.roll(t, 1, 0), 1, 1), t, atol=1e-12)

    def test_csv_roundtrip(self):
        table = outcome_table(SymmetricSetSpec(2, 3, hyperspherical_coeffs([1.0])))
        text = table.to_csv()
        assert text.splitlines()[0] == "j\\k,0,1,2"
        np.testing.assert_array_equal(ProbabilityTable.from_csv(text).entries, table.entries)

    def test_csv_missing_header(self):
        with pytest.raises(DomainError):
            ProbabilityTable.from_csv("0,1,0\n1,0,1\n")


class TestPCorrect:
    @pytest.mark.parametrize("theta", np.linspace(0, np.pi, 13))
    def test_qubit_helstrom(self, theta):
        spec = qubit(theta, 2)
        pc = p_correct(spec)
        assert abs(pc.closed_form - (1 + math.sin(theta)) / 2) < 1e-12
        assert abs(pc.trace_form - helstrom(spec)) < 1e-12

    def test_trine(self):
        assert abs(p_correct(qubit(math.pi / 2, 3)).closed_form - 2 / 3) < 1e-12

    def test_seven_states(self):
        pc = p_correct(qubit(math.pi / 2, 7))
        assert abs(pc.closed_form - 2 / 7) < 1e-12
        assert abs(pc.p_err - 5 / 7) < 1e-12

    def test_forms_agree_on_many_specs(self):
        for i in range(1000):
            spec = random_spec(10_000 + i, d_max=21, n_max=23)
            pc = p_correct(spec)
            assert abs(pc.trace_form - pc.closed_form) < 1e-10


class TestCertificate:
    def test_orthogonal_set(self):
        cert = optimality_certificate(SymmetricSetSpec(3, 3, np.full(3, 3**-0.5)))
        assert cert.passed
        assert abs(cert.min_eigenvalue) < 1e-12

    def test_random_specs_pass(self):
        for i in range(200):
            spec = random_spec(20_000 + i, d_max=9, n_max=13)
            assert optimality_certificate(spec).passed, spec

    def test_swapped_outcomes_fail(self):
        spec = qubit(math.pi / 3, 3)
        F = dft_matrix(3)
        swapped = F[:, [1, 0, 2]]
        states = embed_states(make_symmetric_set(spec), 3)
        assert success_probability(swapped, states) < success_probability(F, states) - 1e-3
        cert = optimality_certificate(spec, vectors=swapped)
        assert not cert.passed
        assert cert.min_eigenvalue < -1e-3


def _random_unitary(rng, N):
    z = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _greedy_assignment(probs):
    probs = probs.copy()
    N = probs.shape[0]
    assignment = np.empty(N, dtype=int)
    for _ in range(N):
        k, j = np.unravel_index(np.argmax(probs), probs.shape)
        assignment[j] = k
        probs[k, :] = -1
        probs[:, j] = -1
    return assignment


def test_me_beats_random_bases(rng):
    for i in range(100):
        spec = random_spec(30_000 + i, d_max=9, n_max=13)
        states = embed_states(make_symmetric_set(spec), spec.N)
        best = p_correct(spec).trace_form
        for _ in range(10):
            U = _random_unitary(rng, spec.N)
            probs = np.abs(U.conj().T @ states.T) ** 2
            assert success_probability(U, states, _greedy_assignment(probs)) <= best + 1e-12


@pytest.mark.parametrize("D", [4, 5, 6, 7, 8, 9])
def test_success_nonincreasing_in_alpha(D):
    for j0 in range(1, D):
        p = [p_correct(SymmetricSetSpec(D, D, cascade_coeffs(D, CascadeParams(j0, a)))).closed_form
             for a in np.linspace(0, 1, 101)]
        assert np.all(np.diff(p) <= 1e-12)
