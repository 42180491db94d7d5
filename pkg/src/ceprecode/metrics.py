"""Residual-interference energy, SINR and achievable-rate estimation.

Everything here is driven by one quantity: the per-user residual energy
``|s_k|^2`` left by the coordinate-descent precoder, averaged over symbol
vectors for each channel draw. It does not depend on the transmit power, so
a single table of residual energy against the common symbol energy E
serves every power level (see :class:`MuiTable`).

Per-channel SINR and rate follow::

    gamma_k = E_k / (E_u|s_k|^2 + sigma^2 / P_T)
    R_k     = max(0, log2(gamma_k))

and ergodic figures average ``R_k`` over channel draws.
"""

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _kernels, _rng
from ._parallel import map_trials
from ._search import bisect_increasing, golden_section_max
from ._util import db_to_linear
from ._validation import check_channel_array, check_phases, check_positive, check_positive_int
from .alphabet import Alphabet, EnergyAllocation, sample_raw_symbols
from .channel import trial_channel
from .exceptions import BracketError, DimensionError
from .params import MonteCarloParams
from .precoder import PrecoderConfig, best_zf_scale

__all__ = [
    "MonteCarloParams",
    "MuiEstimate",
    "RateReport",
    "EStarQuery",
    "MuiTable",
    "MinPowerResult",
    "UnboundedEnergyWarning",
    "simulate_received",
    "mui_table",
    "estimate_mui",
    "sinr",
    "rate_from_sinr",
    "ergodic_rate",
    "optimize_energy",
    "optimize_energy_table",
    "e_star",
    "e_star_search",
    "min_power_for_rate",
    "min_power_for_rate_table",
    "zf_min_power_for_rate",
    "default_energy_grid",
]

SNR_BRACKET_DB = (-30.0, 30.0)
POWER_RESOLUTION_DB = 0.05


class UnboundedEnergyWarning(UserWarning):
    """The rate-maximising symbol energy sits at the edge of the search grid."""


@dataclass(frozen=True)
class MuiEstimate:
    per_user_mui: np.ndarray
    std_error: np.ndarray
    num_symbol_draws: int
    num_channel_draws: int

    @property
    def mean(self):
        """Average over users."""
        return float(np.mean(self.per_user_mui))

    @property
    def mean_std_error(self):
        return float(np.sqrt(np.sum(self.std_error**2))) / self.std_error.size


@dataclass(frozen=True)
class RateReport:
    """Achievable rates at one (energy, power) operating point.

    ``per_user_sinr`` is the effective SINR ``2 ** per_user_rate``; for a
    single channel this is ``max(gamma_k, 1)``.
    """

    per_user_sinr: np.ndarray
    per_user_rate: np.ndarray
    sum_rate: float
    energy_used: EnergyAllocation
    snr_db: float
    rate_std_error: np.ndarray = field(default_factory=lambda: np.zeros(0))
    at_bracket_edge: bool = False

    @property
    def per_user_mean_rate(self):
        return self.sum_rate / self.per_user_rate.size


@dataclass(frozen=True)
class EStarQuery:
    target_mui: float
    search_bracket: tuple = (0.01, 1000.0)
    tolerance: float = 1e-3

    def __post_init__(self):
        check_positive(self.target_mui, "target_mui")
        check_positive(self.tolerance, "tolerance")
        lo, hi = self.search_bracket
        if not 0 < lo < hi:
            raise ValueError(f"search_bracket must satisfy 0 < lo < hi, got {self.search_bracket}")


@dataclass(frozen=True)
class MinPowerResult:
    snr_db: float
    energy: float
    bracket_db: tuple
    at_bracket_edge: bool = False


def _mc(mc):
    return mc if mc is not None else MonteCarloParams()


def default_energy_grid(num_users, num_antennas, mc=None):
    mc = _mc(mc)
    lo, hi = mc.energy_grid_span
    scale = num_antennas / num_users
    return np.logspace(np.log10(lo * scale), np.log10(hi * scale), mc.energy_grid_size)


def simulate_received(channel, phases, power, noise_seed, count=None):
    """Received samples ``y_k = sqrt(P_T/N) sum_i h_ki e^{j theta_i} + w_k``.

    ``w_k`` is CN(0, sigma^2) from the stream of ``noise_seed``. Returns
    shape (M,), or (count, M) for ``count`` independent noise draws.
    """
    H = check_channel_array(channel)
    M, N = H.shape
    theta = check_phases(phases, N)
    clean = np.sqrt(power.total_power / N) * (H @ np.exp(1j * theta))
    rng = _rng.make_generator(noise_seed)
    shape = (M,) if count is None else (int(count), M)
    return clean + np.sqrt(power.noise_variance) * _rng.complex_normal(rng, shape)


@dataclass(frozen=True)
class MuiTable:
    """Per-channel residual energy on a grid of common symbol energies.

    Attributes
    ----------
    energies : ndarray (n_e,)
        Ascending common symbol energies E.
    mean : ndarray (C, n_e, M)
        Per-channel, per-user average of ``|s_k|^2`` over symbol draws.
    mean_sq : ndarray (C, n_e, M)
        Matching average of ``|s_k|^4`` (for standard errors).
    num_symbols : int
    """

    energies: np.ndarray
    mean: np.ndarray
    mean_sq: np.ndarray
    num_symbols: int = 1

    @property
    def num_channels(self):
        return self.mean.shape[0]

    @property
    def num_users(self):
        return self.mean.shape[2]

    @cached_property
    def _interp(self):
        C, n_e, M = self.mean.shape
        y = np.moveaxis(self.mean, 1, 0).reshape(n_e, C * M)
        return PchipInterpolator(np.log(self.energies), y, axis=0, extrapolate=False)

    def mui_at(self, energy):
        """Residual energy (C, M) at ``energy``, by monotone cubic interpolation
        in log E. Exact at grid points."""
        energy = float(energy)
        idx = np.flatnonzero(self.energies == energy)
        if idx.size:
            return self.mean[:, idx[0], :]
        if not self.energies[0] <= energy <= self.energies[-1]:
            raise ValueError(f"energy {energy} outside table range [{self.energies[0]}, {self.energies[-1]}]")
        out = self._interp(np.log(energy)).reshape(self.num_channels, self.num_users)
        return np.maximum(out, 0.0)

    def estimate_at(self, index):
        return _summarise(self.mean[:, index, :], self.mean_sq[:, index, :], self.num_symbols)

    def channel_rates(self, energy, inverse_snr, clamp=True):
        gamma = energy / (self.mui_at(energy) + inverse_snr)
        r = np.log2(gamma)
        return np.maximum(r, 0.0) if clamp else r

    def mean_rate(self, energy, inverse_snr, clamp=True):
        """Ergodic rate per user (average over channels and users)."""
        return float(np.mean(self.channel_rates(energy, inverse_snr, clamp)))


def _summarise(mean, mean_sq, num_symbols):
    """Collapse per-channel (C, M) moments into a :class:`MuiEstimate`."""
    C, M = mean.shape
    per_user = mean.mean(axis=0)
    if C > 1:
        se = mean.std(axis=0, ddof=1) / np.sqrt(C)
    elif num_symbols > 1:
        var = np.maximum(mean_sq[0] - mean[0] ** 2, 0.0) * num_symbols / (num_symbols - 1)
        se = np.sqrt(var / num_symbols)
    else:
        se = np.zeros(M)
    return MuiEstimate(per_user, se, int(num_symbols), int(C))


def _channel_moments(channel_model, M, N, alphabet, sqrt_energies, config, num_symbols, seed):
    """Per-trial worker: residual moments for channel ``c`` and its symbols."""
    tol = config.tolerance_for(M)

    def one(c):
        H = trial_channel(channel_model, M, N, seed, c).entries
        G = np.ascontiguousarray(H / np.sqrt(N))
        raw = sample_raw_symbols(alphabet, M, _rng.trial_seed(seed, _rng.SYMBOLS, c), count=num_symbols)
        mean = np.empty(sqrt_energies.shape)
        sq = np.empty(sqrt_energies.shape)
        _kernels.mui_moments(G, np.ascontiguousarray(raw), sqrt_energies, config.max_outer_iterations, tol, mean, sq)
        return mean, sq

    return one


def _check_dims(M, N):
    M = check_positive_int(M, "num_users")
    N = check_positive_int(N, "num_antennas")
    if M > N:
        raise DimensionError(f"need num_users <= num_antennas, got M={M}, N={N}")
    return M, N


def _moments(channel_model, M, N, alphabet, energy_rows, precoder_config, num_channels, num_symbols, seed, workers):
    M, N = _check_dims(M, N)
    config = precoder_config or PrecoderConfig()
    if config.initial_phases is not None:
        raise ValueError("Monte Carlo residual estimates always start from all-zero phases")
    alphabet = Alphabet.parse(alphabet)
    sqrt_e = np.ascontiguousarray(np.sqrt(np.asarray(energy_rows, dtype=float)))
    fn = _channel_moments(
        channel_model, M, N, alphabet, sqrt_e, config, check_positive_int(num_symbols, "num_symbols"), seed
    )
    parts = map_trials(fn, check_positive_int(num_channels, "num_channels"), workers)
    mean = np.stack([p[0] for p in parts])
    sq = np.stack([p[1] for p in parts])
    return mean, sq


def mui_table(channel_model, num_users, num_antennas, alphabet="gaussian", energies=None,
              precoder_config=None, mc=None):
    """Residual-energy table over common symbol energies.

    Channel draw ``c`` and its symbol block are fixed by ``(mc.seed, c)``,
    so every grid point sees the same channels and the same raw symbols.
    """
    mc = _mc(mc)
    M, N = _check_dims(num_users, num_antennas)
    grid = default_energy_grid(M, N, mc) if energies is None else np.asarray(energies, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
        raise ValueError("energy grid must be positive and strictly increasing")
    rows = np.repeat(grid[:, None], M, axis=1)
    mean, sq = _moments(channel_model, M, N, alphabet, rows, precoder_config,
                        mc.num_channels, mc.num_symbols, mc.seed, mc.workers)
    return MuiTable(grid, mean, sq, mc.num_symbols)


def estimate_mui(channel_model, num_users, num_antennas, alphabet, energies, precoder_config=None,
                 num_channels=200, num_symbols=200, seed=0, workers=None):
    """Ergodic per-user residual energy ``E_H E_u |s_k|^2``.

    Outer loop over channel draws, inner loop over symbol vectors; each pair
    is precoded from scratch. With one channel draw the standard error is
    taken over symbols, otherwise over per-channel averages.
    """
    M, N = _check_dims(num_users, num_antennas)
    if not isinstance(energies, EnergyAllocation):
        energies = EnergyAllocation(np.broadcast_to(np.asarray(energies, dtype=float), (M,)))
    if energies.num_users != M:
        raise DimensionError(f"energy allocation has {energies.num_users} entries for {M} users")
    mean, sq = _moments(channel_model, M, N, alphabet, energies.energies[None, :], precoder_config,
                        num_channels, num_symbols, seed, workers)
    return _summarise(mean[:, 0, :], sq[:, 0, :], num_symbols)


def sinr(per_user_mui, energies, power):
    """``gamma_k = E_k / (mui_k + sigma^2 / P_T)``."""
    mui = np.asarray(getattr(per_user_mui, "per_user_mui", per_user_mui), dtype=float)
    e = np.asarray(getattr(energies, "energies", energies), dtype=float)
    if np.any(mui < 0):
        raise ValueError("residual energies must be non-negative")
    return e / (mui + power.inverse_snr)


def rate_from_sinr(gamma):
    """``max(0, log2(gamma))`` in bits per channel use."""
    return np.maximum(np.log2(np.asarray(gamma, dtype=float)), 0.0)


def _report(table_rates, energy, num_users, snr_db, at_edge=False):
    # table_rates: (C, M) clamped per-channel rates
    per_user = table_rates.mean(axis=0)
    C = table_rates.shape[0]
    se = table_rates.std(axis=0, ddof=1) / np.sqrt(C) if C > 1 else np.zeros(num_users)
    return RateReport(
        per_user_sinr=2.0**per_user,
        per_user_rate=per_user,
        sum_rate=float(per_user.sum()),
        energy_used=EnergyAllocation.equal(energy, num_users),
        snr_db=float(snr_db),
        rate_std_error=se,
        at_bracket_edge=at_edge,
    )


def ergodic_rate(channel_model, num_users, num_antennas, energy, power, mc=None, alphabet="gaussian",
                 precoder_config=None):
    """Ergodic achievable rates at a common symbol energy ``energy``."""
    mc = _mc(mc)
    M, N = _check_dims(num_users, num_antennas)
    energy = check_positive(energy, "energy")
    table = mui_table(channel_model, M, N, alphabet, [energy], precoder_config, mc)
    return _report(table.channel_rates(energy, power.inverse_snr), energy, M, power.snr_db)


def optimize_energy_table(table, inverse_snr, iterations=60):
    """Maximise the ergodic rate over the table's energy range.

    The grid points are scored exactly, then a golden-section search runs
    (in log E) between the neighbours of the best grid point. The search
    objective is the unclamped rate so that flat zero-rate regions cannot
    stall it. Returns ``(energy, mean_rate_per_user, at_edge)``.
    """
    logs = np.log(table.energies)
    scores = np.array([table.mean_rate(e, inverse_snr, clamp=False) for e in table.energies])
    i = int(np.argmax(scores))
    lo, hi = logs[max(i - 1, 0)], logs[min(i + 1, logs.size - 1)]
    best_log, best = golden_section_max(
        lambda t: table.mean_rate(float(np.exp(t)), inverse_snr, clamp=False), lo, hi, iterations
    )
    if scores[i] >= best:
        best_log, best = logs[i], scores[i]
    energy = float(np.clip(np.exp(best_log), table.energies[0], table.energies[-1]))
    span = logs[-1] - logs[0]
    at_edge = bool(min(best_log - logs[0], logs[-1] - best_log) <= 1e-6 * span)
    return energy, table.mean_rate(energy, inverse_snr), at_edge


def optimize_energy(channel_model, num_users, num_antennas, power, mc=None, alphabet="gaussian",
                    precoder_config=None, table=None):
    """Common symbol energy maximising the ergodic sum-rate.

    Returns ``(best_energy, RateReport)``; ``report.at_bracket_edge`` is set
    when the maximum is not interior to the energy grid.
    """
    M, N = _check_dims(num_users, num_antennas)
    if table is None:
        table = mui_table(channel_model, M, N, alphabet, None, precoder_config, mc)
    energy, _, at_edge = optimize_energy_table(table, power.inverse_snr)
    rates = table.channel_rates(energy, power.inverse_snr)
    return energy, _report(rates, energy, M, power.snr_db, at_edge)


def e_star_search(ergodic_mui, query):
    """Bisection for the energy at which ``ergodic_mui(p)`` reaches the target.

    ``ergodic_mui`` must be non-decreasing; the bracket is verified first.
    Returns the final interval ``(lo, hi)`` with ``mui(lo) <= target < mui(hi)``.
    """
    lo, hi = (float(v) for v in query.search_bracket)
    target = query.target_mui
    f_lo, f_hi = ergodic_mui(lo), ergodic_mui(hi)
    if not f_lo <= target:
        raise BracketError(f"residual energy {f_lo:.4g} at p={lo} already exceeds target {target}", lo, hi)
    if not f_hi > target:
        raise BracketError(f"residual energy {f_hi:.4g} at p={hi} stays below target {target}", lo, hi)
    while hi - lo > query.tolerance:
        mid = 0.5 * (lo + hi)
        if ergodic_mui(mid) <= target:
            lo = mid
        else:
            hi = mid
    return lo, hi


def e_star(query, channel_model, num_users, num_antennas, alphabet="qam16", precoder_config=None, mc=None,
           return_interval=False):
    """Largest common energy whose ergodic residual energy equals the target.

    Every evaluation reuses the same channel draws and raw symbols (common
    random numbers), averaging the residual over users and draws.
    """
    mc = _mc(mc)
    M, N = _check_dims(num_users, num_antennas)

    def mui(p):
        mean, _ = _moments(channel_model, M, N, alphabet, np.full((1, M), p), precoder_config,
                           mc.num_channels, mc.num_symbols, mc.seed, mc.workers)
        return float(mean.mean())

    lo, hi = e_star_search(mui, query)
    return (lo, hi) if return_interval else 0.5 * (lo + hi)


def min_power_for_rate_table(table, target_rate, energy=None, bracket_db=SNR_BRACKET_DB,
                             resolution_db=POWER_RESOLUTION_DB):
    """Smallest P_T/sigma^2 (dB) at which the per-user ergodic rate reaches
    ``target_rate``.

    With ``energy=None`` the rate is maximised over E at every probed power;
    otherwise E is held fixed (and must lie inside the table).
    """
    check_positive(target_rate, "target_rate")

    def best(snr_db):
        inv = 1.0 / db_to_linear(snr_db)
        if energy is None:
            e, _, edge = optimize_energy_table(table, inv)
        else:
            e, edge = float(energy), False
        return table.mean_rate(e, inv), e, edge

    hi, lo = bisect_increasing(lambda s: best(s)[0], target_rate, bracket_db[0], bracket_db[1],
                               resolution_db, what="CE minimum power")
    mid = 0.5 * (lo + hi)
    _, e, edge = best(mid)
    return MinPowerResult(snr_db=mid, energy=e, bracket_db=(lo, hi), at_bracket_edge=edge)


def min_power_for_rate(target_per_user_rate, channel_model, num_users, num_antennas, mc=None,
                       alphabet="gaussian", precoder_config=None, table=None):
    """Minimum P_T/sigma^2 in dB for the target ergodic per-user rate.

    Builds one residual-energy table (power-independent) and bisects on the
    power over [-30, 30] dB to 0.05 dB. Warns with
    :class:`UnboundedEnergyWarning` if the best energy sits on the grid edge.
    """
    M, N = _check_dims(num_users, num_antennas)
    if table is None:
        table = mui_table(channel_model, M, N, alphabet, None, precoder_config, mc)
    result = min_power_for_rate_table(table, target_per_user_rate)
    if result.at_bracket_edge:
        warnings.warn(
            f"rate-maximising energy {result.energy:.4g} is at the edge of the energy grid",
            UnboundedEnergyWarning,
            stacklevel=2,
        )
    return result.snr_db


def zf_min_power_for_rate(target_per_user_rate, moments, bracket_db=SNR_BRACKET_DB,
                          resolution_db=POWER_RESOLUTION_DB):
    """Minimum P_T/sigma^2 (dB) for the ZF phase-only precoder, re-optimising
    the receiver scale at every probed power."""
    check_positive(target_per_user_rate, "target_per_user_rate")

    def rate(snr_db):
        return best_zf_scale(moments, 1.0 / db_to_linear(snr_db))[1]

    hi, lo = bisect_increasing(rate, target_per_user_rate, bracket_db[0], bracket_db[1], resolution_db,
                               what="ZF minimum power")
    return 0.5 * (lo + hi)

