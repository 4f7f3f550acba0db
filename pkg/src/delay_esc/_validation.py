"""Input validation helpers shared by every module."""

import numbers

import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


def check_vector(x, name, n=None, positive=False, nonnegative=False):
    """Return ``x`` as a finite 1-D float array, optionally of length ``n``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a vector, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidInputError(f"{name} must have length {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    if positive and not np.all(arr > 0):
        raise InvalidInputError(f"{name} must be strictly positive")
    if nonnegative and not np.all(arr >= 0):
        raise InvalidInputError(f"{name} must be nonnegative")
    return arr


def check_square(x, name, n=None):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InvalidInputError(f"{name} must be {n}x{n}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    return arr


def check_positive_scalar(x, name, allow_zero=False):
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise InvalidInputError(f"{name} must be a real number, got {x!r}")
    x = float(x)
    if not np.isfinite(x) or x < 0 or (x == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise InvalidInputError(f"{name} must be {bound}, got {x}")
    return x


def steps_for(duration, dt, name="duration", rtol=1e-9):
    """Number of ``dt`` steps spanning ``duration``; reject off-grid values."""
    k = round(duration / dt)
    if abs(k * dt - duration) > rtol * max(1.0, abs(duration)):
        raise InvalidInputError(
            f"{name}={duration!r} is not an integer multiple of dt={dt!r}"
        )
    return int(k)


def check_negative_definite(H, name="hessian"):
    H = check_square(H, name)
    if not np.allclose(H, H.T, rtol=0.0, atol=1e-12):
        raise InvalidInputError(f"{name} must be symmetric")
    eig = np.linalg.eigvalsh(H)
    if not np.all(eig < 0):
        raise InvalidInputError(f"{name} must be negative definite, eigenvalues {eig}")
    return H
