"""Empirical checks on random-phase received vectors.

With i.i.d. uniform transmit phases the noise-free received vector
(scaled down by sqrt(P_T)) is

    z = (Re v_1, Im v_1, ..., Re v_M, Im v_M),  v_k = sum_i h_ki e^{j theta_i} / sqrt(N)

and for well-behaved channels it approaches a zero-mean Gaussian with
independent components of variance ``||h_k||^2 / (2N)`` as N grows. This
module samples z, measures that convergence, and estimates the
probability that z lands in a small box around a target symbol vector.
"""

from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import _rng
from ._validation import check_channel_array, check_positive, check_positive_int
from .channel import trial_channel
from .metrics import estimate_mui
from .params import MonteCarloParams

__all__ = [
    "BoxSpec",
    "LimitCheckRow",
    "sample_z",
    "row_energies",
    "gaussian_limit_check",
    "gaussian_box_probability",
    "matched_covariance",
    "matched_gaussian_box_probability",
    "box_probability",
    "box_probability_curve",
    "mui_decay_curve",
]

_CHUNK = 4096
# Asymptotic Kolmogorov critical value at the 1% level, times 1/sqrt(n).
KS_CRITICAL_1PCT = 1.628


@dataclass(frozen=True)
class BoxSpec:
    """Axis-aligned box of half-width ``half_width`` around ``center``
    (complex, one entry per user) in the 2M-dimensional real space."""

    center: np.ndarray
    half_width: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=np.complex128)))
        object.__setattr__(self, "half_width", check_positive(self.half_width, "half_width"))

    @property
    def real_center(self):
        return _interleave(self.center[None, :])[0]


def _interleave(v):
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1],))
    out[..., 0::2] = v.real
    out[..., 1::2] = v.imag
    return out


def sample_z(channel, seed, count):
    """Draw ``count`` random-phase received vectors.

    Returns an array of shape (count, 2M) with columns ordered
    ``(z_1^I, z_1^Q, ..., z_M^I, z_M^Q)``. Phases are consumed row-major
    from the stream of ``seed``.
    """
    H = check_channel_array(channel)
    M, N = H.shape
    count = check_positive_int(count, "count")
    rng = _rng.make_generator(seed)
    HT = H.T / np.sqrt(N)
    out = np.empty((count, 2 * M))
    for start in range(0, count, _CHUNK):
        stop = min(start + _CHUNK, count)
        theta = _rng.uniform_phases(rng, (stop - start, N))
        out[start:stop] = _interleave(np.exp(1j * theta) @ HT)
    return out


def row_energies(channel):
    """``||h_k||^2 / N`` per user."""
    H = check_channel_array(channel)
    return np.sum(np.abs(H) ** 2, axis=1) / H.shape[1]


@dataclass(frozen=True)
class LimitCheckRow:
    num_antennas: int
    ks_distances: np.ndarray
    correlations: np.ndarray
    row_energies: np.ndarray
    num_samples: int

    @property
    def max_ks(self):
        return float(self.ks_distances.max())

    @property
    def max_abs_correlation(self):
        C = self.correlations
        off = C[~np.eye(C.shape[0], dtype=bool)]
        return float(np.abs(off).max()) if off.size else 0.0

    @property
    def ks_critical(self):
        return KS_CRITICAL_1PCT / np.sqrt(self.num_samples)

    @property
    def non_gaussian(self):
        """Some marginal fails the 1%-level Kolmogorov-Smirnov test."""
        return self.max_ks > self.ks_critical


def gaussian_limit_check(channel_model, num_users, n_list, samples_per_n, seed):
    """Distance of sampled z from its Gaussian limit, for each N in ``n_list``.

    For each N a channel is drawn (stream ``(seed, N)``), z is sampled, and
    every marginal is compared with N(0, c_k / 2) by the Kolmogorov-Smirnov
    statistic, with ``c_k`` the finite-N row energy. Pairwise sample
    correlations are reported alongside.
    """
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    rows = []
    for N in n_list:
        if N < num_users:
            raise ValueError(f"N={N} is below the number of users {num_users}")
        H = trial_channel(channel_model, num_users, N, seed, N)
        z = sample_z(H, _rng.trial_seed(seed, _rng.PHASES, N), samples_per_n)
        c = row_energies(H)
        scales = np.sqrt(np.repeat(c, 2) / 2.0)
        ks = np.array([stats.kstest(z[:, j], "norm", args=(0.0, scales[j])).statistic for j in range(z.shape[1])])
        corr = np.atleast_2d(np.corrcoef(z, rowvar=False))
        rows.append(LimitCheckRow(N, ks, corr, c, int(samples_per_n)))
    return rows


def gaussian_box_probability(box, variances):
    """Box probability under independent N(0, c_k/2) components.

    ``variances`` holds ``c_k`` per user. Product over the 2M coordinates of
    ``Phi((b + D)/s) - Phi((b - D)/s)`` with ``s = sqrt(c_k / 2)``.
    """
    b = box.real_center
    s = np.sqrt(np.repeat(np.asarray(variances, dtype=float), 2) / 2.0)
    d = box.half_width
    upper = special.ndtr((b + d) / s)
    lower = special.ndtr((b - d) / s)
    return float(np.prod(upper - lower))


def matched_covariance(channel):
    """Covariance (2M, 2M) of z for one channel, in interleaved order.

    With ``C = H H^H / N`` and z circularly symmetric, ``E[x_k x_l] =
    E[y_k y_l] = Re C_kl / 2`` and ``E[x_k y_l] = -Im C_kl / 2``.
    """
    H = check_channel_array(channel)
    M, N = H.shape
    C = H @ H.conj().T / N
    S = np.empty((2 * M, 2 * M))
    S[0::2, 0::2] = C.real / 2
    S[1::2, 1::2] = C.real / 2
    S[0::2, 1::2] = -C.imag / 2
    S[1::2, 0::2] = C.imag / 2
    return S


def matched_gaussian_box_probability(channel, box, points=2**16):
    """Box probability under the Gaussian with the exact finite-N covariance.

    Unlike :func:`gaussian_box_probability` this keeps the cross-user
    correlation ``h_k^H h_l / N``, which at moderate N still shifts box
    probabilities by more than Monte Carlo noise.

    Integration is Genz's sequential conditioning over a scrambled Sobol
    set with a fixed scramble seed, so the value is reproducible to the
    last bit (scipy's own CDF draws from an unseedable generator).
    """
    S = matched_covariance(channel)
    lo = box.real_center - box.half_width
    hi = box.real_center + box.half_width
    L = np.linalg.cholesky(S + 1e-14 * np.trace(S) * np.eye(S.shape[0]))
    n = S.shape[0]
    w = stats.qmc.Sobol(n - 1, scramble=True, seed=0).random(points) if n > 1 else np.zeros((points, 0))
    y = np.zeros((points, n))
    f = np.ones(points)
    for i in range(n):
        shift = y[:, :i] @ L[i, :i]
        d = special.ndtr((lo[i] - shift) / L[i, i])
        e = special.ndtr((hi[i] - shift) / L[i, i])
        f *= e - d
        if i < n - 1:
            y[:, i] = special.ndtri(np.clip(d + w[:, i] * (e - d), 1e-300, 1 - 1e-16))
    return float(np.mean(f))


def _hits(z, center, half_width):
    return np.all(np.abs(z - center) <= half_width, axis=1)


def box_probability(channel, box, samples, seed):
    """Monte Carlo estimate of P(z in box) with its binomial standard error."""
    z = sample_z(channel, seed, samples)
    p = float(np.mean(_hits(z, box.real_center, box.half_width)))
    return p, float(np.sqrt(p * (1.0 - p) / z.shape[0]))


def box_probability_curve(channel, center, half_widths, samples, seed):
    """Box probabilities for several half-widths on one common sample set.

    Returns arrays ``(estimates, std_errors)``; estimates are non-decreasing
    in the half-width because the boxes are nested.
    """
    z = sample_z(channel, seed, samples)
    c = BoxSpec(center, 1.0).real_center
    est = np.array([np.mean(_hits(z, c, float(d))) for d in half_widths])
    return est, np.sqrt(est * (1.0 - est) / z.shape[0])


def mui_decay_curve(channel_model, num_users, alphabet, energies, n_list, mc=None, precoder_config=None):
    """Ergodic residual energy of the CE precoder for each N in ``n_list``.

    Returns a list of ``(N, MuiEstimate)``.
    """
    mc = mc if mc is not None else MonteCarloParams()
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    return [
        (N, estimate_mui(channel_model, num_users, N, alphabet, energies, precoder_config,
                         mc.num_channels, mc.num_symbols, mc.seed, mc.workers))
        for N in n_list
    ]

