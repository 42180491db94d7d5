"""Input checks shared by the estimators and functions."""

import numbers

import numpy as np

from .exceptions import DimensionError


def check_channel_array(H):
    """Return ``H`` as a finite 2-D complex128 array with M <= N."""
    H = np.asarray(getattr(H, "entries", H))
    if H.ndim != 2:
        raise DimensionError(f"channel must be 2-D (M, N), got shape {H.shape}")
    M, N = H.shape
    if M < 1 or N < 1:
        raise DimensionError(f"channel must be non-empty, got shape {H.shape}")
    if M > N:
        raise DimensionError(f"need num_users <= num_antennas, got M={M}, N={N}")
    H = H.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(H)):
        raise ValueError("channel contains non-finite entries")
    return H


def check_symbols(u, num_users, allow_2d=False):
    """Return scaled symbols as complex128 of length ``num_users``.

    With ``allow_2d`` a (n_samples, num_users) batch is accepted as well.
    """
    u = np.asarray(getattr(u, "scaled_symbols", u))
    u = u.astype(np.complex128, copy=False)
    if u.ndim == 1 or not allow_2d:
        if u.ndim != 1 or u.shape[0] != num_users:
            raise DimensionError(f"expected {num_users} symbols, got shape {u.shape}")
    elif u.ndim != 2 or u.shape[1] != num_users:
        raise DimensionError(f"expected (n_samples, {num_users}) symbols, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("symbols contain non-finite entries")
    return u


def check_phases(theta, num_antennas):
    theta = np.asarray(getattr(theta, "phases", theta), dtype=float)
    if theta.ndim != 1 or theta.shape[0] != num_antennas:
        raise DimensionError(f"expected {num_antennas} phases, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("phases contain non-finite entries")
    return theta


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value}")
    return value
