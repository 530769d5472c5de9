"""Characterization of prepared states.

Qubits: three mutually unbiased two-outcome bases read at four focal-plane
and two image-plane positions, inverted linearly and refined by maximum
likelihood. Qudits: slit moduli from the image plane, relative phases by
least-squares fitting of the focal-plane pattern.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._rng import Xoshiro256
from ._validation import DomainError, check_probability_rows, check_vector
from .optics import fresnel_amplitude, focal_plane_amplitude

SQRT_HALF = np.sqrt(0.5)

# rows: |b_{mu j}> for (mu, j) in (0,0), (0,1), (1,0), (1,1), (2,0), (2,1)
MUB_VECTORS = np.array([
    [SQRT_HALF, SQRT_HALF],
    [SQRT_HALF, -SQRT_HALF],
    [SQRT_HALF, 1j * SQRT_HALF],
    [SQRT_HALF, -1j * SQRT_HALF],
    [1, 0],
    [0, 1],
], dtype=complex)


@dataclass(frozen=True)
class MUBPosition:
    basis: int
    outcome: int
    plane: str
    x: float


def mub_positions(g):
    """Detector positions realizing the three qubit MUBs.

    Focal plane: ``x_{0j} = j pi f / (k d)`` and
    ``x_{1j} = (j - 1/2) pi f / (k d)``, where the two-slit relative phase
    ``k d x / f`` equals ``j pi`` and ``(j - 1/2) pi`` respectively. Image
    plane: ``x_{2j} = -(j - 1/2) d``, the inverted image of slit ``j``.
    """
    unit = np.pi * g.focal_length / (g.k * g.slit_separation)
    out = []
    for j in (0, 1):
        out.append(MUBPosition(0, j, "focal", j * unit))
    for j in (0, 1):
        out.append(MUBPosition(1, j, "focal", (j - 0.5) * unit))
    for j in (0, 1):
        out.append(MUBPosition(2, j, "image", -(j - 0.5) * g.slit_separation))
    return out


def mub_intensities(t, g):
    """Noiseless qubit intensities at :func:`mub_positions`, shape ``(3, 2)``.

    Focal-plane readings are divided by the single-slit envelope
    ``sinc^2(k a x / f)``, as for the discrimination detectors.
    """
    t = check_vector(t, "t", dtype=complex, length=2)
    out = np.empty(6)
    for i, pos in enumerate(mub_positions(g)):
        if pos.plane == "focal":
            amp = focal_plane_amplitude(t, g, pos.x)
            eta = np.sinc(2 * g.slit_half_width * pos.x / (g.wavelength * g.focal_length)) ** 2
            out[i] = np.abs(amp) ** 2 / eta
        else:
            out[i] = np.abs(fresnel_amplitude(t, g, pos.x, 2 * g.focal_length)[0]) ** 2
    return out.reshape(3, 2)


def intensities_to_probabilities(intensities):
    """``p_{mu j} = I_{mu j} / (I_{mu 0} + I_{mu 1})``."""
    intensities = np.asarray(intensities, dtype=float)
    return intensities / intensities.sum(axis=1, keepdims=True)


def mub_linear_inversion(p):
    """``rho = sum_{mu j} p_{mu j} |b_{mu j}><b_{mu j}| - I``.

    Hermitian with unit trace by construction, but not necessarily
    positive on noisy data.
    """
    p = check_probability_rows(p, "p", shape=(3, 2))
    projectors = np.einsum("ia,ib->iab", MUB_VECTORS, MUB_VECTORS.conj())
    return np.einsum("i,iab->ab", p.ravel(), projectors) - np.eye(2)


def project_to_states(rho):
    """Nearest-by-eigenvalue-clipping density matrix (PSD, trace one)."""
    rho = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    if w.sum() == 0:
        w = np.ones_like(w)
    w = w / w.sum()
    return (v * w) @ v.conj().T


def _log_likelihood(rho, p, bases):
    q = np.real(np.einsum("ia,ab,ib->i", bases.conj(), rho, bases))
    mask = p > 0
    with np.errstate(divide="ignore"):
        return float(np.sum(p[mask] * np.log(np.clip(q[mask], 0, None))))


@dataclass(eq=False)
class MLEResult:
    rho: np.ndarray
    log_likelihood: float
    converged: bool
    iterations: int


def _tril_unpack(params, dim):
    T = np.zeros((dim, dim), dtype=complex)
    T[np.diag_indices(dim)] = params[:dim]
    rows, cols = np.tril_indices(dim, -1)
    m = rows.size
    T[rows, cols] = params[dim:dim + m] + 1j * params[dim + m:]
    return T


def _tril_pack(T):
    dim = T.shape[0]
    rows, cols = np.tril_indices(dim, -1)
    return np.concatenate([T.diagonal().real, T[rows, cols].real, T[rows, cols].imag])


def mle_refine(p, start, bases=MUB_VECTORS, max_iter=2000, tol=1e-10):
    """Maximum-likelihood density matrix for observed frequencies ``p``.

    Maximizes ``sum_i p_i log <b_i|rho|b_i>`` with ``rho = T T^dag / tr``,
    ``T`` lower triangular, starting from the eigenvalue-clipped ``start``.
    Frequencies act as weights, so relative intensities can be passed
    directly. Stops when the relative change of the objective falls below
    ``tol`` or after ``max_iter`` iterations; the result never has lower
    likelihood than the clipped start.
    """
    p = np.asarray(p, dtype=float).ravel()
    bases = np.asarray(bases, dtype=complex)
    if p.shape[0] != bases.shape[0] or np.any(p < 0):
        raise DomainError("need one nonnegative weight per measurement vector")
    dim = bases.shape[1]
    rho0 = project_to_states(np.asarray(start, dtype=complex))
    ll0 = _log_likelihood(rho0, p, bases)
    G = np.einsum("ia,ib->iab", bases, bases.conj())
    total = p.sum()

    def objective(params):
        T = _tril_unpack(params, dim)
        M = T @ T.conj().T
        s = np.trace(M).real
        q = np.real(np.einsum("iab,ba->i", G, M))
        q = np.clip(q, 1e-300, None)
        value = -np.sum(p * np.log(q)) + total * np.log(s)
        grad_T = -2 * np.einsum("i,iab,bc->ac", p / q, G, T) + 2 * total * T / s
        # real and imaginary parts of grad_T are d/dRe T and d/dIm T
        return value, _tril_pack(grad_T)

    T0 = np.linalg.cholesky(rho0 + 1e-9 * np.eye(dim))
    res = optimize.minimize(objective, _tril_pack(T0), jac=True, method="L-BFGS-B",
                            options={"maxiter": max_iter, "ftol": tol, "gtol": 1e-12})
    T = _tril_unpack(res.x, dim)
    rho = T @ T.conj().T
    rho = rho / np.trace(rho).real
    ll = _log_likelihood(rho, p, bases)
    if not ll >= ll0:
        rho, ll = rho0, ll0
    return MLEResult(0.5 * (rho + rho.conj().T), ll, bool(res.success), int(res.nit))


def fidelity(a, b):
    """``|<a|b>|^2`` for a state vector ``a``, ``<b|a|b>`` for a density matrix."""
    a = np.asarray(a, dtype=complex)
    b = check_vector(b, "b", dtype=complex)
    b = b / np.linalg.norm(b)
    if a.ndim == 1:
        if a.shape != b.shape:
            raise DomainError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
        value = abs(np.vdot(a / np.linalg.norm(a), b)) ** 2
    elif a.ndim == 2 and a.shape == (b.shape[0], b.shape[0]):
        value = np.real(np.vdot(b, a @ b))
    else:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(value, 0.0, 1.0))


@dataclass(eq=False)
class PhaseRetrievalResult:
    estimate: np.ndarray
    phases: np.ndarray
    residual: float
    scale: float
    restarts_used: int
    underdetermined: bool = False
    candidates: list = field(default_factory=list)
    restart_residuals: list = field(default_factory=list)


def _canonical_phases(phases, ref):
    return np.mod(phases - phases[ref], 2 * np.pi)


def phase_retrieval(image_intensities, pattern, g, n_restarts=20, seed=0,
                    stop_residual=1e-13, xatol=1e-9, max_iter=None):
    """Least-squares phase retrieval from a focal-plane intensity pattern.

    The model intensity at each recorded ``x`` is
    ``I_max |sum_j sqrt(I_j) exp(i phi_j) exp(i k j d x / f) sinc(k a x / f)|^2``.
    ``I_max`` enters quadratically in the squared residual and is eliminated
    in closed form; the phases are fitted by Nelder-Mead from
    ``n_restarts`` uniform random starts, stopping early once the residual
    relative to ``sum I_exp^2`` drops below ``stop_residual``.

    Palindromic moduli admit a conjugate-reflected twin with an identical
    pattern. Both are listed in ``candidates`` and the lexicographically
    smaller phase vector is returned.
    """
    I = check_vector(image_intensities, "image_intensities")
    D = I.shape[0]
    if D < 2:
        raise DomainError("need at least two slits")
    if np.any(I < 0):
        raise DomainError("image intensities must be nonnegative")
    x = np.asarray(pattern.positions, dtype=float)
    e = np.asarray(pattern.intensities, dtype=float)
    if x.size < D:
        raise DomainError(f"need at least D={D} pattern samples, got {x.size}")
    scale = float(np.max(np.abs(e))) or 1.0
    e_n = e / scale
    ee = float(e_n @ e_n)

    moduli = np.sqrt(I / I.sum())
    active = np.flatnonzero(moduli > 0)
    ref = int(active[0])
    free = active[1:]
    envelope = np.sinc(2 * g.slit_half_width * x / (g.wavelength * g.focal_length))
    basis = (np.exp(1j * g.k * g.slit_separation * np.outer(x, np.arange(D)) / g.focal_length)
             * (envelope[:, None] * moduli[None, :]))

    def fit(phases):
        m = np.abs(basis @ np.exp(1j * phases)) ** 2
        mm = m @ m
        imax = max(0.0, (m @ e_n) / mm) if mm > 0 else 0.0
        r = imax * m - e_n
        return float(r @ r), imax

    def full(sub):
        phases = np.zeros(D)
        phases[free] = sub
        return phases

    underdetermined = active.size < D
    if free.size == 0:
        residual, imax = fit(np.zeros(D))
        best = np.zeros(D)
        restart_residuals = [residual]
        used = 0
        underdetermined = True
    else:
        rng = Xoshiro256(seed)
        max_iter = max_iter or 2000 * free.size
        best, residual, restart_residuals, used = None, np.inf, [], 0
        for _ in range(n_restarts):
            x0 = 2 * np.pi * rng.uniform(free.size)
            res = optimize.minimize(lambda s: fit(full(s))[0], x0, method="Nelder-Mead",
                                    options={"xatol": xatol, "fatol": 1e-16 * ee,
                                             "maxiter": max_iter, "maxfev": 2 * max_iter,
                                             "adaptive": free.size > 4})
            used += 1
            restart_residuals.append(float(res.fun))
            if res.fun < residual:
                residual, best = float(res.fun), full(res.x)
            if residual <= stop_residual * ee:
                break
        residual, imax = fit(best)

    best = _canonical_phases(best, ref)
    candidates = [best]
    if np.allclose(moduli, moduli[::-1], rtol=1e-9, atol=1e-12):
        twin = -best[::-1]
        twin_ref = int(np.flatnonzero(moduli[::-1] > 0)[0])
        twin = _canonical_phases(twin, twin_ref)
        candidates = sorted([best, twin], key=lambda v: tuple(np.round(v, 9)))
    chosen = candidates[0]
    estimate = moduli * np.exp(1j * chosen)
    return PhaseRetrievalResult(
        estimate=estimate,
        phases=chosen,
        residual=residual * scale**2,
        scale=imax * scale,
        restarts_used=used,
        underdetermined=bool(underdetermined),
        candidates=candidates,
        restart_residuals=[r * scale**2 for r in restart_residuals],
    )


class MUBTomography(BaseEstimator):
    """Qubit tomography from three two-outcome MUB measurements.

    ``fit`` takes a ``(3, 2)`` array of probabilities or raw intensities
    (rows are normalized) and stores ``linear_`` and, when ``mle`` is set,
    the maximum-likelihood refinement in ``density_matrix_``.
    """

    def __init__(self, mle=True, max_iter=2000, tol=1e-10):
        self.mle = mle
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        p = intensities_to_probabilities(np.asarray(X, dtype=float).reshape(3, 2))
        self.linear_ = mub_linear_inversion(p)
        if self.mle:
            self.mle_result_ = mle_refine(p, self.linear_, max_iter=self.max_iter, tol=self.tol)
            self.density_matrix_ = self.mle_result_.rho
        else:
            self.density_matrix_ = self.linear_
        return self

    def score(self, target):
        """Fidelity of the fitted density matrix with the target pure state."""
        check_is_fitted(self, "density_matrix_")
        return fidelity(self.density_matrix_, target)


class PhaseRetriever(BaseEstimator):
    """Estimator wrapper around :func:`phase_retrieval`.

    ``fit(pattern, image_intensities)`` stores ``result_`` and the estimated
    state in ``state_``.
    """

    def __init__(self, geometry=None, n_restarts=20, random_state=0):
        self.geometry = geometry
        self.n_restarts = n_restarts
        self.random_state = random_state

    def fit(self, X, y):
        from .optics import OpticalGeometry

        g = self.geometry if self.geometry is not None else OpticalGeometry()
        self.result_ = phase_retrieval(y, X, g, n_restarts=self.n_restarts,
                                       seed=self.random_state)
        self.state_ = self.result_.estimate
        return self

    def score(self, target):
        check_is_fitted(self, "state_")
        return max(fidelity(c_est, target) for c_est in (
            np.abs(self.state_) * np.exp(1j * ph) for ph in self.result_.candidates))
