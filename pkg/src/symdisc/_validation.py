"""Input validation helpers and the package exception types."""

import numbers

import numpy as np


class DomainError(ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ValueError):
    """A campaign or CLI configuration is malformed."""


def check_int(value, name, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise DomainError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_vector(x, name, dtype=float, length=None):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DomainError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr


def check_state(psi, name="state", atol=1e-10):
    """Return ``psi`` as a complex vector, checking unit norm."""
    psi = check_vector(psi, name, dtype=complex)
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > atol:
        raise DomainError(f"{name} is not normalized (norm^2 = {norm2!r})")
    return psi


def check_probability_rows(p, name, shape=None, atol=1e-6):
    p = np.asarray(p, dtype=float)
    if shape is not None and p.shape != shape:
        raise DomainError(f"{name} must have shape {shape}, got {p.shape}")
    if np.any(p < -atol) or not np.all(np.isfinite(p)):
        raise DomainError(f"{name} has negative or non-finite entries")
    sums = p.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > atol):
        raise DomainError(f"rows of {name} must sum to 1, got {sums}")
    return p


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value
