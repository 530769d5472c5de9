"""Symmetric pure-state sets and their coefficient parametrizations.

A set of ``N`` symmetric states in dimension ``D`` is fixed by a real,
nonnegative, unit-norm coefficient vector ``c``::

    psi_j = sum_n c_n * omega**(j*n) |n>,    omega = exp(2 pi i / N)

State vectors are plain 1-D complex numpy arrays; a whole set is an
``(N, D)`` array whose row ``j`` is ``psi_j``.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ._rng import Xoshiro256
from ._validation import DomainError, check_int, check_vector

NORM_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class SymmetricSetSpec:
    """Dimension ``D``, set size ``N`` and fiducial coefficients ``c``."""

    D: int
    N: int
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        D = check_int(self.D, "D", minimum=2)
        N = check_int(self.N, "N", minimum=D)
        c = check_vector(self.c, "c", dtype=float, length=D)
        if np.any(c < 0):
            raise DomainError("coefficients must be nonnegative")
        if abs(float(np.sum(c**2)) - 1.0) > NORM_ATOL:
            raise DomainError(f"coefficients must satisfy sum c^2 = 1, got {np.sum(c**2)!r}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "c", c)

    @classmethod
    def normalized(cls, D, N, c):
        """Build a spec after rescaling ``c`` to unit norm."""
        c = np.abs(np.asarray(c, dtype=float))
        return cls(D, N, c / np.linalg.norm(c))

    @property
    def omega(self):
        return np.exp(2j * np.pi / self.N)

    def __eq__(self, other):
        if not isinstance(other, SymmetricSetSpec):
            return NotImplemented
        return self.D == other.D and self.N == other.N and np.array_equal(self.c, other.c)

    def __repr__(self):
        coeffs = ", ".join(f"{v:.6g}" for v in self.c)
        return f"SymmetricSetSpec(D={self.D}, N={self.N}, c=[{coeffs}])"


@dataclass(frozen=True)
class CascadeParams:
    j0: int
    alpha: float


def _check_angles(angles):
    angles = check_vector(angles, "angles")
    if angles.size < 1:
        raise DomainError("at least one angle is required")
    if np.any(angles < 0) or np.any(angles > np.pi):
        raise DomainError("hyperspherical angles must lie in [0, pi]")
    return angles


def hyperspherical_coeffs(angles):
    """Coefficients from ``D - 1`` hyperspherical angles in ``[0, pi]``.

    ``D = 2`` is the Bloch form ``(cos(t/2), sin(t/2))``. For ``D >= 3`` the
    first angle peels off the last coefficient, ``c[D-1] = cos(t1/2)``, and
    the remaining ``D - 1`` coefficients are ``sin(t1/2)`` times the
    ``(D-1)``-dimensional vector built from the remaining angles. For
    ``D = 3`` this gives ``(sin(t1/2)cos(t2/2), sin(t1/2)sin(t2/2), cos(t1/2))``.
    """
    angles = _check_angles(angles)
    half = angles / 2.0
    # innermost pair first, then prepend a cosine-terminated shell per angle
    c = np.array([np.cos(half[-1]), np.sin(half[-1])])
    for h in half[-2::-1]:
        c = np.append(np.sin(h) * c, np.cos(h))
    return c


def cascade_transmissions(D, params):
    """Unnormalized slit transmissions of the two-parameter cascade family."""
    D = check_int(D, "D", minimum=2)
    j0 = check_int(params.j0, "j0", minimum=1, maximum=D - 1)
    alpha = float(params.alpha)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    j = np.arange(D)
    ratio = np.clip((j - j0 + 1) / (D - j0), 0.0, None) * alpha
    t = np.sqrt(np.clip(1.0 - ratio ** (1.0 / D), 0.0, None))
    t[j < j0] = 1.0
    return t


def cascade_coeffs(D, params):
    t = cascade_transmissions(D, params)
    return t / np.sqrt(np.sum(t**2))


def random_coeffs(D, seed):
    """Coefficients ``|g| / ||g||`` for ``D`` standard normals ``g``.

    Drawn from the portable xoshiro256** stream of ``seed`` (see
    :mod:`symdisc._rng`), so the vector is reproducible across platforms.
    """
    D = check_int(D, "D", minimum=2)
    g = np.abs(Xoshiro256(seed).normal(D))
    return g / np.sqrt(np.sum(g**2))


def make_symmetric_set(spec):
    """Return the ``(N, D)`` array whose row ``j`` is ``psi_j``."""
    j = np.arange(spec.N)[:, None]
    n = np.arange(spec.D)[None, :]
    return spec.c[None, :] * np.exp(2j * np.pi * ((j * n) % spec.N) / spec.N)


def symmetry_operator(spec):
    """Diagonal unitary ``U = sum_l omega**l |l><l|`` as a D x D matrix."""
    return np.diag(np.exp(2j * np.pi * np.arange(spec.D) / spec.N))


def symmetry_shift(state, spec, steps=1):
    """Apply ``U**steps`` to a D-dimensional state."""
    state = check_vector(state, "state", dtype=complex, length=spec.D)
    steps = check_int(steps, "steps")
    n = np.arange(spec.D)
    return state * np.exp(2j * np.pi * ((n * steps) % spec.N) / spec.N)


def gram_matrix(states):
    """Inner products ``G[j, l] = <psi_j|psi_l>`` of the rows of ``states``."""
    states = np.asarray(states, dtype=complex)
    return states.conj() @ states.T


def coeffs_to_json(c):
    """JSON array of 17-significant-digit decimal strings."""
    return json.dumps([format(float(v), ".17g") for v in c])


def coeffs_from_json(text):
    return np.array([float(v) for v in json.loads(text)])
