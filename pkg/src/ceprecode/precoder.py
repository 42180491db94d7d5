"""Per-antenna constant-envelope precoders.

Two precoders map a vector of scaled information symbols to N transmit
phases:

* the coordinate-descent precoder, which minimises the total residual
  energy ``g(theta, u) = sum_k |sum_i h_ki exp(j theta_i) / sqrt(N) - u_k|^2``
  one phase at a time, each step being the exact 1-D minimiser;
* the zero-forcing phase-only baseline, which keeps the phases of
  ``H^+ u`` and discards the amplitudes.

Both are available as plain functions and as scikit-learn style
estimators (:class:`CEPrecoder`, :class:`ZFPhaseOnlyPrecoder`) that are
fitted on a channel and then transform batches of symbol vectors.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels, _rng
from ._parallel import map_trials
from ._search import golden_section_max
from ._util import wrap_phase
from ._validation import check_channel_array, check_phases, check_positive_int, check_symbols
from .alphabet import Alphabet, sample_raw_symbols
from .channel import PowerConfig, trial_channel
from .exceptions import RankDeficiencyError

__all__ = [
    "PhaseVector",
    "PrecoderConfig",
    "PrecodeResult",
    "objective",
    "ce_phase_update",
    "ce_precode",
    "zf_pseudo_inverse",
    "zf_phase_only_precode",
    "ZFMoments",
    "zf_moments",
    "zf_receiver_scale",
    "CEPrecoder",
    "ZFPhaseOnlyPrecoder",
]

# Condition-number limit on H H^H for the pseudo-inverse.
ZF_CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class PhaseVector:
    """Transmit phases, canonicalised to [-pi, pi) on construction."""

    phases: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(wrap_phase(np.asarray(self.phases, dtype=float))).copy()
        theta.setflags(write=False)
        object.__setattr__(self, "phases", theta)

    def __len__(self):
        return self.phases.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.phases, dtype=dtype)

    @property
    def phasors(self):
        return np.exp(1j * self.phases)


@dataclass(frozen=True)
class PrecoderConfig:
    """Stopping rule and start point of the coordinate-descent precoder.

    ``objective_tolerance=None`` means ``1e-8 * M``, resolved per problem.
    ``initial_phases=None`` starts from all-zero phases.
    """

    max_outer_iterations: int = 10
    objective_tolerance: float | None = None
    initial_phases: PhaseVector | None = None

    def __post_init__(self):
        check_positive_int(self.max_outer_iterations, "max_outer_iterations")
        if self.objective_tolerance is not None and not self.objective_tolerance >= 0:
            raise ValueError(f"objective_tolerance must be >= 0, got {self.objective_tolerance}")
        if self.initial_phases is not None and not isinstance(self.initial_phases, PhaseVector):
            object.__setattr__(self, "initial_phases", PhaseVector(self.initial_phases))

    def tolerance_for(self, num_users):
        if self.objective_tolerance is None:
            return 1e-8 * num_users
        return float(self.objective_tolerance)


@dataclass(frozen=True)
class PrecodeResult:
    phases: PhaseVector
    residuals: np.ndarray
    objective: float
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    outer_iterations_used: int = 0


def _target(target, num_users):
    return check_symbols(target, num_users)


def objective(channel, phases, target):
    """Total residual energy ``g(theta, u)`` of a phase vector."""
    H = check_channel_array(channel)
    M, N = H.shape
    theta = check_phases(phases, N)
    u = _target(target, M)
    s = H @ np.exp(1j * theta) / np.sqrt(N) - u
    return float(np.sum(s.real**2 + s.imag**2))


def ce_phase_update(channel, phases, target, coordinate):
    """Optimal value of phase ``coordinate`` with all other phases held.

    Evaluates ``pi + arg(sum_k conj(h_kq)/sqrt(N) * (sum_{i != q} h_ki
    exp(j theta_i)/sqrt(N) - u_k))``. If the complex sum is exactly zero
    every angle is optimal and the current phase is returned.
    """
    H = check_channel_array(channel)
    M, N = H.shape
    theta = check_phases(phases, N)
    u = _target(target, M)
    q = int(coordinate)
    if not 0 <= q < N:
        raise IndexError(f"coordinate {q} out of range for {N} antennas")
    rootN = np.sqrt(N)
    others = np.delete(np.arange(N), q)
    partial = H[:, others] @ np.exp(1j * theta[others]) / rootN
    a = np.sum(H[:, q].conj() / rootN * (partial - u))
    if a == 0:
        return float(wrap_phase(theta[q]))
    return float(wrap_phase(np.pi + np.angle(a)))


def ce_precode(channel, target, config=None):
    """Minimise the residual energy by cyclic exact coordinate descent.

    Outer iterations sweep antennas ``0 .. N-1`` in order, replacing each
    phase by its single-coordinate minimiser. The loop ends after
    ``config.max_outer_iterations`` sweeps, or earlier once a sweep lowers
    the objective by less than the tolerance.

    Returns
    -------
    PrecodeResult
        Final phases, the exact residuals ``s_k`` recomputed from them, the
        objective and the objective after every sub-iteration.
    """
    config = config or PrecoderConfig()
    H = check_channel_array(channel)
    M, N = H.shape
    u = _target(target, M)
    if config.initial_phases is None:
        x = np.ones(N, dtype=np.complex128)
    else:
        x = np.exp(1j * check_phases(config.initial_phases, N)).astype(np.complex128)
    G = np.ascontiguousarray(H / np.sqrt(N))
    trace = np.empty(config.max_outer_iterations * N)
    _, _, outer, n_trace = _kernels.ce_descent(
        G, np.ascontiguousarray(u), x, config.max_outer_iterations, config.tolerance_for(M), trace
    )
    phases = PhaseVector(np.angle(x))
    residuals = H @ phases.phasors / np.sqrt(N) - u
    return PrecodeResult(
        phases=phases,
        residuals=residuals,
        objective=float(np.sum(residuals.real**2 + residuals.imag**2)),
        objective_trace=trace[:n_trace].copy(),
        outer_iterations_used=int(outer),
    )


def zf_pseudo_inverse(channel):
    """Right pseudo-inverse ``H^H (H H^H)^-1`` via the SVD.

    Raises RankDeficiencyError when cond(H H^H) exceeds 1e12.
    """
    H = check_channel_array(channel)
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s[-1] == 0 or (s[0] / s[-1]) ** 2 > ZF_CONDITION_LIMIT:
        cond = np.inf if s[-1] == 0 else (s[0] / s[-1]) ** 2
        raise RankDeficiencyError(f"H H^H is numerically singular (condition number {cond:.3g})")
    return (Vh.conj().T / s) @ U.conj().T


def zf_phase_only_precode(channel, target):
    """Phases of the zero-forcing vector ``x = H^+ u``.

    The constant amplitude ``sqrt(P_T / N)`` is applied by the caller.
    """
    H = check_channel_array(channel)
    u = _target(target, H.shape[0])
    return PhaseVector(np.angle(zf_pseudo_inverse(H) @ u))


@dataclass(frozen=True)
class ZFMoments:
    """Second-order statistics of the ZF phase-only received signal.

    With ``v_k`` the noise-free received sample (scaled down by
    ``sqrt(P_T)``) and ``u_k`` the unit-energy symbol, each array has shape
    (channels, users) and holds a per-channel average over symbols:
    ``signal = E|v_k|^2``, ``cross = E Re(v_k conj(u_k))`` and
    ``symbol = E|u_k|^2``.

    A receiver that divides by ``beta * sqrt(P_T)`` sees the error energy
    ``signal / beta^2 - 2 cross / beta + symbol + (sigma^2/P_T) / beta^2``;
    the achievable rate is minus its log2.
    """

    signal: np.ndarray
    cross: np.ndarray
    symbol: np.ndarray

    def rates(self, beta, inverse_snr):
        """Per-(channel, user) rate, unclamped, for receiver scale ``beta``."""
        err = (self.signal + inverse_snr) / beta**2 - 2.0 * self.cross / beta + self.symbol
        return -np.log2(err)

    def ergodic_rate(self, beta, inverse_snr):
        return float(np.mean(self.rates(beta, inverse_snr)))


def zf_moments(channel_model, num_users, num_antennas, num_channels, num_symbols, seed, workers=None):
    """Estimate :class:`ZFMoments` over ``num_channels`` channel draws.

    Symbols are unit-energy Gaussian. Channel ``c`` and its symbols come from
    the trial streams ``(seed, c)``.
    """
    M, N = num_users, num_antennas
    S = check_positive_int(num_symbols, "num_symbols")
    gaussian = Alphabet.parse("gaussian")

    def one(c):
        H = trial_channel(channel_model, M, N, seed, c).entries
        raw = sample_raw_symbols(gaussian, M, _rng.trial_seed(seed, _rng.SYMBOLS, c), count=S)
        X = raw @ zf_pseudo_inverse(H).T
        V = np.exp(1j * np.angle(X)) @ H.T / np.sqrt(N)
        return (
            np.mean(np.abs(V) ** 2, axis=0),
            np.mean((V * raw.conj()).real, axis=0),
            np.mean(np.abs(raw) ** 2, axis=0),
        )

    parts = map_trials(one, check_positive_int(num_channels, "num_channels"), workers)
    return ZFMoments(*(np.array([p[i] for p in parts]) for i in range(3)))


def best_zf_scale(moments, inverse_snr, log10_bounds=(-3.0, 3.0), iterations=60):
    """Golden-section search for the rate-maximising receiver scale."""
    lo, hi = log10_bounds
    x, value = golden_section_max(lambda t: moments.ergodic_rate(10.0**t, inverse_snr), lo, hi, iterations)
    return 10.0**x, value


def zf_receiver_scale(channel_model, num_users, num_antennas, power, trials, seed, num_symbols=64, workers=None):
    """Fixed receiver scale that maximises the ZF phase-only ergodic rate.

    The scale is found once from ``trials`` channel draws (each with
    ``num_symbols`` symbol vectors) by a 60-step golden-section search over
    ``beta`` in [1e-3, 1e3] on a log axis. It depends on the channel
    statistics, ``P_T / sigma^2``, N and M only.
    """
    if not isinstance(power, PowerConfig):
        raise TypeError("power must be a PowerConfig")
    moments = zf_moments(channel_model, num_users, num_antennas, trials, num_symbols, seed, workers)
    beta, _ = best_zf_scale(moments, power.inverse_snr)
    return beta


class CEPrecoder(BaseEstimator):
    """Coordinate-descent constant-envelope precoder.

    Parameters
    ----------
    max_outer_iterations : int, default=10
        Number of full sweeps over the antennas.
    objective_tolerance : float or None, default=None
        Stop once a sweep lowers the objective by less than this. ``None``
        uses ``1e-8 * M``.
    initial_phases : array-like of shape (N,) or None, default=None
        Starting phases; all-zero when None.

    Attributes
    ----------
    channel_ : ndarray of shape (M, N)
    n_users_, n_antennas_ : int
    last_result_ : PrecodeResult
        Result of the most recent single-vector :meth:`precode` call.

    Examples
    --------
    >>> from ceprecode import CEPrecoder, generate_channel
    >>> H = generate_channel(2, 16, seed=1)
    >>> pre = CEPrecoder().fit(H)
    >>> pre.transform([[1.0, -1.0j]]).shape
    (1, 16)
    """

    def __init__(self, max_outer_iterations=10, objective_tolerance=None, initial_phases=None):
        self.max_outer_iterations = max_outer_iterations
        self.objective_tolerance = objective_tolerance
        self.initial_phases = initial_phases

    def fit(self, X, y=None):
        self.channel_ = check_channel_array(X).copy()
        self.n_users_, self.n_antennas_ = self.channel_.shape
        init = self.initial_phases
        self.config_ = PrecoderConfig(
            max_outer_iterations=self.max_outer_iterations,
            objective_tolerance=self.objective_tolerance,
            initial_phases=None if init is None else PhaseVector(check_phases(init, self.n_antennas_)),
        )
        return self

    def precode(self, u):
        check_is_fitted(self, "channel_")
        self.last_result_ = ce_precode(self.channel_, u, self.config_)
        return self.last_result_

    def _batch(self, X):
        check_is_fitted(self, "channel_")
        U = check_symbols(X, self.n_users_, allow_2d=True)
        return np.atleast_2d(U)

    def transform(self, X):
        """Phases, shape (n_samples, N), for each row of scaled symbols."""
        return np.array([ce_precode(self.channel_, u, self.config_).phases.phases for u in self._batch(X)])

    def predict(self, X):
        """Noise-free received signal (scaled down by sqrt(P_T)) per row."""
        theta = self.transform(X)
        return np.exp(1j * theta) @ self.channel_.T / np.sqrt(self.n_antennas_)

    def score(self, X, y=None):
        """Negative mean residual energy over the rows of ``X``."""
        U = self._batch(X)
        return -float(np.mean([ce_precode(self.channel_, u, self.config_).objective for u in U]))


class ZFPhaseOnlyPrecoder(BaseEstimator):
    """Zero-forcing phase-only precoder: phases of ``H^+ u``.

    ``fit`` computes the pseudo-inverse once; ``transform`` maps rows of
    scaled symbols to phases.
    """

    def fit(self, X, y=None):
        self.channel_ = check_channel_array(X).copy()
        self.n_users_, self.n_antennas_ = self.channel_.shape
        self.pseudo_inverse_ = zf_pseudo_inverse(self.channel_)
        return self

    def transform(self, X):
        check_is_fitted(self, "pseudo_inverse_")
        U = np.atleast_2d(check_symbols(X, self.n_users_, allow_2d=True))
        return wrap_phase(np.angle(U @ self.pseudo_inverse_.T))

    def predict(self, X):
        theta = self.transform(X)
        return np.exp(1j * theta) @ self.channel_.T / np.sqrt(self.n_antennas_)

    def score(self, X, y=None):
        U = np.atleast_2d(check_symbols(X, self.n_users_, allow_2d=True))
        s = self.predict(U) - U
        return -float(np.mean(np.sum(np.abs(s) ** 2, axis=1)))

