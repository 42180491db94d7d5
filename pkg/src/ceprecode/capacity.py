"""Cooperative upper bound on the broadcast sum capacity.

Letting the M users cooperate turns the downlink into an M x N
point-to-point channel whose capacity under a total power budget follows
from water-filling over the eigenvalues of ``H H^H``.
"""

from dataclasses import dataclass

import numpy as np

from ._parallel import map_trials
from ._search import bisect_increasing
from ._util import db_to_linear
from ._validation import check_channel_array, check_positive, check_positive_int
from .channel import PowerConfig, trial_channel
from .params import MonteCarloParams

__all__ = [
    "WaterfillSolution",
    "waterfill",
    "cooperative_capacity",
    "channel_eigenvalues",
    "ergodic_capacity",
    "min_power_for_rate_bound",
    "eigenvalue_draws",
]

# Eigenvalues below this fraction of the largest are treated as zero modes.
ZERO_MODE_RTOL = 1e-12


@dataclass(frozen=True)
class WaterfillSolution:
    eigenvalues: np.ndarray
    allocations: np.ndarray
    water_level: float
    capacity_bits: float


def waterfill(eigenvalues, total_power, noise_variance=1.0):
    """Water-filling over parallel modes with gains ``eigenvalues``.

    Exact active-set sweep: modes are sorted by decreasing gain and the
    number of active modes is the largest n whose water level
    ``mu = (P + sigma^2 * sum_{i<n} 1/lambda_i) / n`` stays above the
    n-th mode's floor ``sigma^2 / lambda_n``.

    Returns a :class:`WaterfillSolution` with modes in descending order.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    P = float(total_power)
    s2 = float(noise_variance)
    alloc = np.zeros_like(lam)
    if lam.size == 0 or lam[0] <= 0:
        return WaterfillSolution(lam, alloc, 0.0, 0.0)
    active = lam > ZERO_MODE_RTOL * lam[0]
    floors = s2 / lam[active]
    n_active = 1
    csum = np.cumsum(floors)
    for n in range(floors.size, 0, -1):
        mu = (P + csum[n - 1]) / n
        if mu > floors[n - 1]:
            n_active = n
            break
    mu = (P + csum[n_active - 1]) / n_active
    # mu - floor_i written as (P + sum_j (floor_j - floor_i)) / n, which
    # avoids cancellation when the floors dwarf the budget
    f = floors[:n_active]
    alloc[:n_active] = (P + np.sum(f[None, :] - f[:, None], axis=1)) / n_active
    capacity = float(np.sum(np.log2(1.0 + alloc[:n_active] * lam[:n_active] / s2)))
    return WaterfillSolution(lam, alloc, float(mu), capacity)


def channel_eigenvalues(channel):
    H = check_channel_array(channel)
    lam = np.linalg.eigvalsh(H @ H.conj().T)
    return np.clip(lam[::-1], 0.0, None)


def cooperative_capacity(channel, power):
    """``max_{Q >= 0, tr Q <= P_T} log2 det(I + H Q H^H / sigma^2)`` in bits."""
    if not isinstance(power, PowerConfig):
        raise TypeError("power must be a PowerConfig")
    return waterfill(channel_eigenvalues(channel), power.total_power, power.noise_variance)


def eigenvalue_draws(channel_model, num_users, num_antennas, num_channels, seed, workers=None):
    """Eigenvalues of ``H H^H`` for channel draws ``(seed, 0..num_channels-1)``,
    shape (num_channels, M), descending."""
    return _eigen_draws(channel_model, num_users, num_antennas, num_channels, seed, workers)


def _eigen_draws(channel_model, M, N, num_channels, seed, workers):
    return np.stack(
        map_trials(lambda c: channel_eigenvalues(trial_channel(channel_model, M, N, seed, c)),
                   num_channels, workers)
    )


def ergodic_capacity(channel_model, num_users, num_antennas, power, mc=None, eigenvalues=None):
    """Average cooperative capacity (bits) over the channel draws of ``mc``."""
    if eigenvalues is None:
        mc = mc if mc is not None else MonteCarloParams()
        eigenvalues = _eigen_draws(channel_model, num_users, num_antennas, mc.num_channels, mc.seed, mc.workers)
    caps = [waterfill(lam, power.total_power, power.noise_variance).capacity_bits for lam in eigenvalues]
    return float(np.mean(caps))


def min_power_for_rate_bound(target_per_user_rate, channel_model, num_users, num_antennas, mc=None,
                             bracket_db=(-30.0, 30.0), resolution_db=0.05, eigenvalues=None):
    """Smallest P_T/sigma^2 (dB) at which the ergodic cooperative capacity
    divided by M reaches ``target_per_user_rate``.

    Eigenvalues are computed once (or taken from ``eigenvalues``, one row
    per channel draw); bisection then only re-runs water-filling.
    """
    check_positive(target_per_user_rate, "target_per_user_rate")
    M = check_positive_int(num_users, "num_users")
    mc = mc if mc is not None else MonteCarloParams()
    lam = eigenvalues
    if lam is None:
        lam = _eigen_draws(channel_model, M, num_antennas, mc.num_channels, mc.seed, mc.workers)

    def per_user(snr_db):
        return ergodic_capacity(None, M, num_antennas, PowerConfig(db_to_linear(snr_db)), eigenvalues=lam) / M

    hi, lo = bisect_increasing(per_user, target_per_user_rate, bracket_db[0], bracket_db[1], resolution_db,
                               what="capacity-bound minimum power")
    return 0.5 * (lo + hi)
