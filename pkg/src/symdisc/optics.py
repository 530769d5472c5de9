"""Slit-array preparation, lens propagation and camera readout.

A qudit is encoded in ``D`` slits of width ``2a`` centred at
``xi_l * d`` with ``xi_l = l - (D - 1)/2``. The slit plane sits ``2f`` in
front of a thin lens of focal length ``f``; the detector plane is a
distance ``z`` in ``[f, 2f]`` behind it. At ``z = f`` the field is the
Fourier transform of the aperture, at ``z = 2f`` an inverted unit image.

Sign convention: fields carry ``exp(+i w t)`` time dependence, so the
free-space propagator is ``exp(-i k r)`` and the lens maps the slit
coordinate ``x'`` to the focal coordinate ``x`` with kernel
``exp(+i k x x' / f)``. With this choice a point detector at
``x_k = -lambda f m_k / (d N)`` postselects the k-th column of the N-point
DFT, so simulated outcome labels coincide with :mod:`symdisc.me_measure`.
Only intensities are physical; constant phase factors are dropped.
"""

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import integrate
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import DomainError, check_int, check_positive, check_vector
from .me_measure import ProbabilityTable

READOUT_MODES = ("point", "pixel")


@dataclass(frozen=True)
class OpticalGeometry:
    """Lengths in metres.

    ``window`` is ``(x_min, x_max, samples)`` for the recorded focal-plane
    range; ``None`` spans the first zeros of the single-slit envelope,
    ``+-lambda f / (2a)``, where the background reference is read.
    """

    wavelength: float = 691e-9
    focal_length: float = 0.30
    slit_separation: float = 100e-6
    slit_half_width: float = 25e-6
    slit_length: float = 2e-3
    pixel_pitch: float = 5.2e-6
    window: tuple = None

    def __post_init__(self):
        for name in ("wavelength", "focal_length", "slit_separation",
                     "slit_half_width", "slit_length", "pixel_pitch"):
            check_positive(getattr(self, name), name)
        if 2 * self.slit_half_width > self.slit_separation:
            raise DomainError("slits overlap: 2a must not exceed d")
        if self.window is not None:
            lo, hi, n = self.window
            if not hi > lo or int(n) < 2:
                raise DomainError(f"invalid window {self.window!r}")
            object.__setattr__(self, "window", (float(lo), float(hi), int(n)))

    @property
    def k(self):
        return 2 * np.pi / self.wavelength

    @property
    def envelope_zero(self):
        """First zero of the single-slit envelope in the focal plane."""
        return self.wavelength * self.focal_length / (2 * self.slit_half_width)

    def sample_window(self):
        if self.window is not None:
            return self.window
        x = self.envelope_zero
        return (-x, x, 2001)

    def to_dict(self):
        return {
            "lambda": self.wavelength,
            "f": self.focal_length,
            "d": self.slit_separation,
            "a": self.slit_half_width,
            "L": self.slit_length,
            "pixel_pitch": self.pixel_pitch,
            "window": None if self.window is None else list(self.window),
        }

    @classmethod
    def from_dict(cls, data):
        keys = {"lambda": "wavelength", "f": "focal_length", "d": "slit_separation",
                "a": "slit_half_width", "L": "slit_length", "pixel_pitch": "pixel_pitch",
                "window": "window"}
        unknown = set(data) - set(keys)
        if unknown:
            raise DomainError(f"unknown geometry fields {sorted(unknown)}")
        kwargs = {keys[k]: v for k, v in data.items()}
        if kwargs.get("window") is not None:
            kwargs["window"] = tuple(kwargs["window"])
        return cls(**kwargs)


@dataclass(frozen=True)
class NoiseModel:
    """Imperfections applied by :func:`capture_pattern`.

    ``background`` and ``readout_sigma`` are fractions of the noiseless
    pattern peak; ``prep_amp_sigma`` is a relative error on each slit
    modulus and ``prep_phase_sigma`` an absolute phase error in radians.
    ``quantization_bits = 0`` disables digitization.
    """

    background: float = 0.0
    readout_sigma: float = 0.0
    prep_amp_sigma: float = 0.0
    prep_phase_sigma: float = 0.0
    quantization_bits: int = 0
    frames: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("background", "readout_sigma", "prep_amp_sigma", "prep_phase_sigma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise DomainError(f"{name} must be >= 0, got {value!r}")
        check_int(self.quantization_bits, "quantization_bits", minimum=0, maximum=32)
        check_int(self.frames, "frames", minimum=1)
        check_int(self.seed, "seed", minimum=0)

    @classmethod
    def calibrated(cls, seed=0):
        """Noise levels calibrated to give percent-level table deviations."""
        return cls(background=0.02, readout_sigma=0.025, prep_amp_sigma=0.04,
                   prep_phase_sigma=0.08, quantization_bits=8, frames=3, seed=seed)

    @property
    def is_noiseless(self):
        return (self.readout_sigma == 0 and self.prep_amp_sigma == 0
                and self.prep_phase_sigma == 0 and self.quantization_bits == 0)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


@dataclass(eq=False)
class IntensityPattern:
    """One-dimensional intensity record.

    ``pixel_pitch`` is ``None`` for point samples; otherwise ``positions``
    are pixel centres and each intensity is the pixel-averaged value.
    """

    positions: np.ndarray
    intensities: np.ndarray
    plane: str = "focal"
    pixel_pitch: float = None
    prepared: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.intensities = np.asarray(self.intensities, dtype=float)
        if self.positions.shape != self.intensities.shape or self.positions.ndim != 1:
            raise DomainError("positions and intensities must be matching 1-D arrays")

    def to_csv(self):
        rows = ["x_meters,intensity"]
        rows += [f"{x:.17g},{v:.17g}" for x, v in zip(self.positions, self.intensities)]
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text, plane="focal", pixel_pitch=None):
        data = np.loadtxt(text.splitlines(), delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], plane=plane, pixel_pitch=pixel_pitch)

    def value_at(self, x):
        """Recorded value at ``x``: the exact sample or the pixel containing it."""
        if self.pixel_pitch is None:
            idx = np.flatnonzero(np.abs(self.positions - x) <= 1e-15 + 1e-12 * abs(x))
            if idx.size == 0:
                raise DomainError(f"pattern has no sample at x = {x!r}")
            return float(self.intensities[idx[0]])
        idx = int(np.floor((x - self.positions[0]) / self.pixel_pitch + 0.5))
        if not 0 <= idx < self.positions.size:
            raise DomainError(f"x = {x!r} lies outside the recorded pixels")
        return float(self.intensities[idx])


def slit_offsets(D):
    """Slit centres in units of ``d``: ``l - (D - 1) / 2``."""
    return np.arange(D) - (D - 1) / 2.0


def transmission_coefficients(c, phases):
    """Complex slit transmissions ``(c_l / max|c|) * exp(i phase_l)``."""
    c = check_vector(c, "c")
    phases = check_vector(phases, "phases", length=c.shape[0])
    cmax = np.max(np.abs(c))
    if cmax == 0:
        raise DomainError("coefficient vector is identically zero")
    return np.abs(c) / cmax * np.exp(1j * phases)


def state_transmissions(spec, j):
    """Transmissions preparing the j-th member of a symmetric set."""
    n = np.arange(spec.D)
    return transmission_coefficients(spec.c, 2 * np.pi * ((j * n) % spec.N) / spec.N)


def focal_plane_amplitude(t, g, x):
    """Field at the back focal plane, ``(2a / sqrt(lambda f)) sinc * sum``."""
    t = np.asarray(t, dtype=complex)
    x = np.asarray(x, dtype=float)
    xi = slit_offsets(t.shape[0])
    f = g.focal_length
    # np.sinc is sin(pi u)/(pi u); u = 2 a x / (lambda f) gives sinc(k a x / f)
    envelope = np.sinc(2 * g.slit_half_width * x / (g.wavelength * f))
    phase = np.exp(1j * g.k * g.slit_separation * np.multiply.outer(x, xi) / f)
    pref = 2 * g.slit_half_width / np.sqrt(g.wavelength * f)
    return pref * envelope * (phase @ t)


def _fresnel_coefficients(g, z):
    """Quadratic-form coefficients of the slit-to-detector kernel."""
    f = g.focal_length
    s = 2 * f
    A = 1 / s - 1 / f + 1 / z
    alpha = 1 / s - 1 / (s * s * A)
    beta = 1 / (s * z * A)
    gamma = 1 / z - 1 / (z * z * A)
    pref = 1 / np.sqrt(g.wavelength * s * z * A)
    return alpha, beta, gamma, pref


def fresnel_amplitude(t, g, x, z, rtol=1e-8):
    """Field at distance ``z`` in ``[f, 2f]`` behind the lens.

    Each slit contributes ``int exp(-i k/2 (alpha x'^2 - 2 beta x x'))`` over
    its aperture, evaluated by adaptive Gauss-Kronrod quadrature. ``z = 2f``
    is the imaging condition, where the kernel collapses to the inverted
    aperture ``t(-x)`` and is returned in closed form.
    """
    f = g.focal_length
    if not f * (1 - 1e-12) <= z <= 2 * f * (1 + 1e-12):
        raise DomainError(f"z must lie in [f, 2f], got {z!r}")
    t = np.asarray(t, dtype=complex)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = slit_offsets(t.shape[0])
    a, d, k = g.slit_half_width, g.slit_separation, g.k
    if abs(z - 2 * f) <= 1e-12 * f:
        out = np.zeros(x.shape, dtype=complex)
        for t_l, centre in zip(t, -xi * d):
            inside = np.abs(x - centre) <= a
            out[inside] += t_l
        return out * np.exp(-1j * k * x**2 / (2 * f))

    alpha, beta, gamma, pref = _fresnel_coefficients(g, z)
    out = np.empty(x.shape, dtype=complex)
    for i, xv in enumerate(x):
        def kernel(xp):
            return np.exp(-0.5j * k * (alpha * xp * xp - 2 * beta * xv * xp))

        total = 0j
        for t_l, centre in zip(t, xi * d):
            if t_l == 0:
                continue
            val, _ = integrate.quad(kernel, centre - a, centre + a, complex_func=True,
                                    epsabs=1e-2 * rtol * 2 * a, epsrel=rtol, limit=200)
            total += t_l * val
        out[i] = pref * total * np.exp(-0.5j * k * gamma * xv * xv)
    return out


def detector_labels(N):
    """Signed labels ``m_k``: ``k`` for ``k <= N/2``, else ``k - N``."""
    N = check_int(N, "N", minimum=2)
    k = np.arange(N)
    return np.where(2 * k <= N, k, k - N)


def detector_positions(N, g):
    return -g.wavelength * g.focal_length * detector_labels(N) / (g.slit_separation * N)


def efficiency_compensation(N, g):
    """Diffraction efficiencies ``sinc^2(k a x_k / f) = sinc^2(2 pi a m_k / (d N))``."""
    m = detector_labels(N)
    return np.sinc(2 * g.slit_half_width * m / (g.slit_separation * N)) ** 2


def _field(t, g, x, plane):
    if plane == "focal":
        return focal_plane_amplitude(t, g, x)
    if plane == "image":
        return fresnel_amplitude(t, g, x, 2 * g.focal_length)
    return fresnel_amplitude(t, g, x, float(plane))


def capture_pattern(t, g, noise=None, *, readout="pixel", plane="focal",
                    include=None, subsamples=5, rng=None):
    """Simulate a summed camera record of the intensity produced by ``t``.

    Parameters
    ----------
    t : array of complex
        Target slit transmissions; preparation noise is applied on top.
    g : OpticalGeometry
    noise : NoiseModel, optional
        Defaults to a noiseless model.
    readout : {"pixel", "point"}
        ``"pixel"`` averages ``|E|^2`` over each pixel of width
        ``g.pixel_pitch`` (composite midpoint rule with ``subsamples``
        nodes); pixel centres lie on integer multiples of the pitch.
        ``"point"`` samples the window grid plus the ``include`` positions.
    plane : "focal", "image" or a distance ``z`` in metres.
    include : array of float, optional
        Extra point-mode sample positions (e.g. detector positions).
    rng : numpy Generator, optional
        Overrides the generator seeded from ``noise.seed``.

    Returns
    -------
    IntensityPattern
        Intensities are in units of the noiseless peak (or in summed ADC
        counts when quantization is on). ``prepared`` holds the
        transmissions actually realized.
    """
    if readout not in READOUT_MODES:
        raise DomainError(f"readout must be one of {READOUT_MODES}, got {readout!r}")
    noise = noise or NoiseModel()
    rng = rng if rng is not None else np.random.default_rng(noise.seed)
    t = np.asarray(t, dtype=complex)

    amp_err = rng.standard_normal(t.shape[0])
    phase_err = rng.standard_normal(t.shape[0])
    prepared = (np.abs(t) * np.clip(1 + noise.prep_amp_sigma * amp_err, 0, None)
                * np.exp(1j * (np.angle(t) + noise.prep_phase_sigma * phase_err)))
    prepared[np.abs(t) == 0] = 0

    lo, hi, n = g.sample_window()
    if readout == "point":
        x = np.linspace(lo, hi, n)
        if include is not None:
            x = np.union1d(x, np.asarray(include, dtype=float))
        intensity = np.abs(_field(prepared, g, x, plane)) ** 2
        pitch = None
    else:
        pitch = g.pixel_pitch
        x = pitch * np.arange(np.ceil(lo / pitch), np.floor(hi / pitch) + 1)
        offsets = pitch * ((np.arange(subsamples) + 0.5) / subsamples - 0.5)
        nodes = (x[:, None] + offsets[None, :]).ravel()
        intensity = (np.abs(_field(prepared, g, nodes, plane)) ** 2).reshape(x.size, subsamples)
        intensity = intensity.mean(axis=1)

    peak = float(np.max(intensity))
    norm = intensity / peak if peak > 0 else intensity
    total = np.zeros_like(norm)
    full_scale = 1.0 + noise.background + 4 * noise.readout_sigma
    levels = 2 ** noise.quantization_bits - 1
    for _ in range(noise.frames):
        frame = norm + noise.background
        if noise.readout_sigma > 0:
            frame = frame + noise.readout_sigma * rng.standard_normal(norm.shape)
        frame = np.clip(frame, 0, None)
        if noise.quantization_bits:
            frame = np.clip(np.rint(frame / full_scale * levels), 0, levels)
        total += frame
    return IntensityPattern(x, total, plane=str(plane), pixel_pitch=pitch, prepared=prepared)


def estimate_probabilities(patterns, N, g, compensate=True):
    """Estimated ``P(delta_k | psi_j)`` from one focal pattern per input state.

    Each pattern has its global minimum subtracted (background reference),
    is read at the detector positions, divided by the diffraction
    efficiencies and normalized per column. Columns with no remaining
    signal are marked degenerate and replaced by a uniform distribution.
    """
    N = check_int(N, "N", minimum=2)
    if len(patterns) != N:
        raise DomainError(f"expected {N} patterns, got {len(patterns)}")
    xk = detector_positions(N, g)
    eta = efficiency_compensation(N, g) if compensate else np.ones(N)
    entries = np.empty((N, N))
    degenerate = []
    for j, pattern in enumerate(patterns):
        floor = float(np.min(pattern.intensities))
        raw = np.array([pattern.value_at(x) for x in xk]) - floor
        col = np.clip(raw, 0, None) / eta
        total = col.sum()
        if not total > 0:
            degenerate.append(j)
            col = np.full(N, 1.0 / N)
        else:
            col = col / total
        entries[:, j] = col
    return ProbabilityTable(entries, degenerate)


class ProbabilityEstimator(TransformerMixin, BaseEstimator):
    """Intensity patterns to a conditional-probability table.

    ``transform`` takes the list of N focal patterns of one set and returns
    the ``(N, N)`` matrix ``P[k, j]``; the full table with degenerate flags
    is kept in ``table_``.
    """

    def __init__(self, n_states=None, geometry=None, compensate=True):
        self.n_states = n_states
        self.geometry = geometry
        self.compensate = compensate

    def fit(self, X, y=None):
        self.n_states_ = self.n_states if self.n_states is not None else len(X)
        self.geometry_ = self.geometry if self.geometry is not None else OpticalGeometry()
        return self

    def transform(self, X):
        self.table_ = estimate_probabilities(X, self.n_states_, self.geometry_, self.compensate)
        return self.table_.entries
