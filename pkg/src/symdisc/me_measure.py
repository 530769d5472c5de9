"""Minimum-error measurement for equiprobable symmetric states.

The optimal measurement projects onto the columns ``|mu_k>`` of the N-point
discrete Fourier transform. When ``N > D`` the D-dimensional states are
embedded into the first ``D`` modes of an N-dimensional space, where the
Fourier projectors realize the optimal POVM.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DomainError, check_int, check_vector
from .qudit_core import make_symmetric_set

CERTIFICATE_TOL = 1e-8


def dft_matrix(N):
    """Unitary DFT with entries ``exp(2 pi i m n / N) / sqrt(N)``."""
    N = check_int(N, "N", minimum=1)
    m = np.arange(N)
    return np.exp(2j * np.pi * (np.outer(m, m) % N) / N) / np.sqrt(N)


@dataclass(frozen=True, eq=False)
class MEMeasurement:
    """Orthonormal outcome vectors stored as the columns of ``vectors``."""

    N: int
    vectors: np.ndarray = field(repr=False)

    @property
    def projectors(self):
        """Array of shape ``(N, N, N)``; ``projectors[k]`` is ``|mu_k><mu_k|``."""
        v = self.vectors
        return np.einsum("ik,jk->kij", v, v.conj())

    def probabilities(self, states):
        """``P[k, j] = |<mu_k|psi_j>|^2`` for embedded states given as rows."""
        states = np.atleast_2d(np.asarray(states, dtype=complex))
        return np.abs(self.vectors.conj().T @ states.T) ** 2


def me_measurement(N):
    N = check_int(N, "N", minimum=2)
    return MEMeasurement(N, dft_matrix(N))


def embed_state(state, N):
    """Pad a D-dimensional state with ``N - D`` vacuum modes."""
    state = check_vector(state, "state", dtype=complex)
    N = check_int(N, "N")
    D = state.shape[0]
    if N < D:
        raise DomainError(f"cannot embed dimension {D} into N={N} < D")
    out = np.zeros(N, dtype=complex)
    out[:D] = state
    return out


def embed_states(states, N):
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    if N < states.shape[1]:
        raise DomainError(f"cannot embed dimension {states.shape[1]} into N={N}")
    out = np.zeros((states.shape[0], N), dtype=complex)
    out[:, : states.shape[1]] = states
    return out


@dataclass(eq=False)
class ProbabilityTable:
    """Conditional probabilities ``entries[k, j] = P(delta_k | psi_j)``.

    ``degenerate`` lists the input-state columns that carried no signal and
    were replaced by a uniform distribution.
    """

    entries: np.ndarray
    degenerate: list = field(default_factory=list)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=float)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise DomainError(f"table must be square, got shape {self.entries.shape}")

    @property
    def N(self):
        return self.entries.shape[0]

    def p_correct(self):
        """Average of the diagonal, i.e. the success probability."""
        return float(np.trace(self.entries) / self.N)

    def to_csv(self):
        """CSV text with one row per input state ``j`` and one column per ``k``."""
        lines = ["j\\k," + ",".join(str(k) for k in range(self.N))]
        for j in range(self.N):
            lines.append(str(j) + "," + ",".join(format(v, ".17g") for v in self.entries[:, j]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text):
        rows = [line.split(",") for line in text.strip().splitlines()]
        if not rows or not rows[0][0].startswith("j"):
            raise DomainError("missing 'j\\k' header row")
        body = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
        return cls(body.T.copy())


def outcome_table(spec):
    """Exact theoretical ``ProbabilityTable`` for the ME measurement."""
    N = spec.N
    n = np.arange(spec.D)
    # <mu_k|psi_j> = (1/sqrt N) sum_n c_n omega^{n (j - k)}
    shift = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
    phases = np.exp(2j * np.pi * ((shift[:, :, None] * n[None, None, :]) % N) / N)
    amps = phases @ spec.c / np.sqrt(N)
    return ProbabilityTable(np.abs(amps) ** 2)


@dataclass(frozen=True)
class PCorrect:
    trace_form: float
    closed_form: float

    @property
    def p_err(self):
        return 1.0 - self.closed_form


def p_correct(spec):
    """Success probability from the table diagonal and from ``(sum c)^2 / N``."""
    trace_form = outcome_table(spec).p_correct()
    closed_form = float(np.sum(spec.c) ** 2 / spec.N)
    return PCorrect(trace_form, closed_form)


def success_probability(vectors, states, assignment=None):
    """Average success of measuring ``states`` with orthonormal columns ``vectors``.

    ``assignment[j]`` is the outcome that declares state ``j``; the identity
    by default.
    """
    probs = np.abs(np.asarray(vectors).conj().T @ np.asarray(states).T) ** 2
    N = probs.shape[1]
    if assignment is None:
        assignment = np.arange(N)
    return float(np.mean(probs[np.asarray(assignment), np.arange(N)]))


@dataclass(frozen=True)
class OptimalityCertificate:
    min_eigenvalue: float
    passed: bool
    tol: float


def optimality_certificate(spec, vectors=None, tol=CERTIFICATE_TOL):
    """Check the ME optimality conditions for a measurement on ``spec``.

    With ``Gamma = (1/N) sum_j Pi_j rho_j`` (Hermitian part), a measurement
    is optimal iff ``Gamma - rho_j / N`` is positive semidefinite for all
    ``j``. ``vectors`` defaults to the DFT measurement; pass other
    orthonormal columns (outcome ``j`` declares state ``j``) to test them.
    """
    N = spec.N
    if vectors is None:
        vectors = dft_matrix(N)
    vectors = np.asarray(vectors, dtype=complex)
    states = embed_states(make_symmetric_set(spec), N)
    rhos = np.einsum("ji,jk->jik", states, states.conj())
    projectors = np.einsum("ij,kj->jik", vectors, vectors.conj())
    gamma = np.einsum("jab,jbc->ac", projectors, rhos) / N
    gamma = 0.5 * (gamma + gamma.conj().T)
    min_eig = min(float(np.linalg.eigvalsh(gamma - rho / N)[0]) for rho in rhos)
    return OptimalityCertificate(min_eig, min_eig >= -tol, tol)


class MinimumErrorDiscriminator(ClassifierMixin, BaseEstimator):
    """Fourier-basis discriminator with a scikit-learn classifier interface.

    ``fit`` takes the candidate states as rows of ``X`` (they need not be
    symmetric, but the measurement is only optimal when they are);
    ``predict_proba`` returns ``P(delta_k | x)`` per sample and ``score``
    returns the mean probability of the correct outcome, which equals
    ``P_corr`` when scored on the fitted set itself.

    Parameters
    ----------
    n_outcomes : int or None
        Measurement size ``N``; defaults to the number of fitted states.
    """

    def __init__(self, n_outcomes=None):
        self.n_outcomes = n_outcomes

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        N = self.n_outcomes if self.n_outcomes is not None else X.shape[0]
        N = check_int(N, "n_outcomes", minimum=max(2, X.shape[1]))
        self.classes_ = np.arange(N) if y is None else np.unique(y)
        if len(self.classes_) != N:
            raise DomainError(f"expected {N} classes, got {len(self.classes_)}")
        self.n_features_in_ = X.shape[1]
        self.measurement_ = me_measurement(N)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "measurement_")
        X = np.atleast_2d(np.asarray(X, dtype=complex))
        if X.shape[1] != self.n_features_in_:
            raise DomainError(f"expected {self.n_features_in_} amplitudes per sample")
        return self.measurement_.probabilities(embed_states(X, self.measurement_.N)).T

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def score(self, X, y, sample_weight=None):
        proba = self.predict_proba(X)
        idx = np.searchsorted(self.classes_, np.asarray(y))
        return float(np.average(proba[np.arange(len(idx)), idx], weights=sample_weight))
