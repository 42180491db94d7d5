"""Channel matrices, power budgets and channel-condition statistics."""

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _rng
from ._validation import check_channel_array, check_positive, check_positive_int
from .exceptions import DimensionError

__all__ = [
    "ChannelModel",
    "ChannelMatrix",
    "PowerConfig",
    "AssumptionReport",
    "generate_channel",
    "trial_channel",
    "check_assumptions",
    "load_channel",
    "save_channel",
]


class ChannelModel(enum.Enum):
    IID_RAYLEIGH = "iid_rayleigh"
    FIXED = "fixed"


@dataclass(frozen=True)
class ChannelMatrix:
    """M x N complex channel gains from N base-station antennas to M users.

    Row ``k`` holds the gains ``h_k`` seen by user ``k``.
    """

    entries: np.ndarray
    model_tag: ChannelModel = ChannelModel.FIXED
    seed: int = 0

    def __post_init__(self):
        H = check_channel_array(self.entries).copy()
        H.setflags(write=False)
        object.__setattr__(self, "entries", H)

    @property
    def num_users(self):
        return self.entries.shape[0]

    @property
    def num_antennas(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, ChannelMatrix):
            return NotImplemented
        return (
            self.model_tag == other.model_tag
            and self.seed == other.seed
            and np.array_equal(self.entries, other.entries)
        )

    __hash__ = None


@dataclass(frozen=True)
class PowerConfig:
    """Total transmit power P_T and receiver noise variance."""

    total_power: float
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "total_power", check_positive(self.total_power, "total_power"))
        object.__setattr__(self, "noise_variance", check_positive(self.noise_variance, "noise_variance"))

    @classmethod
    def from_snr_db(cls, snr_db, noise_variance=1.0):
        return cls(total_power=noise_variance * 10.0 ** (snr_db / 10.0), noise_variance=noise_variance)

    @property
    def snr(self):
        """P_T / sigma^2 on a linear scale."""
        return self.total_power / self.noise_variance

    @property
    def snr_db(self):
        return 10.0 * np.log10(self.snr)

    @property
    def inverse_snr(self):
        return self.noise_variance / self.total_power


@dataclass(frozen=True)
class AssumptionReport:
    """Finite-N statistics behind the three mild channel conditions.

    Attributes
    ----------
    cross_correlations : ndarray (M, M)
        ``|h_k^H h_l| / N`` off the diagonal, zero on it.
    fourth_moment_stat : float
        Max over user quadruples of ``sum_i |h_k1,i||h_l1,i||h_k2,i||h_l2,i| / N^2``.
    row_energies : ndarray (M,)
        ``||h_k||^2 / N``, the finite-N estimate of ``c_k``.
    """

    cross_correlations: np.ndarray
    fourth_moment_stat: float
    row_energies: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def max_cross_correlation(self):
        return float(self.cross_correlations.max()) if self.cross_correlations.size else 0.0


def generate_channel(num_users, num_antennas, seed):
    """Draw an i.i.d. CN(0, 1) Rayleigh channel.

    Entries are filled row-major from the PCG64 stream of ``seed`` using the
    Box-Muller rule documented in :mod:`ceprecode._rng`, so a given
    ``(num_users, num_antennas, seed)`` always yields the same matrix.
    """
    M = check_positive_int(num_users, "num_users")
    N = check_positive_int(num_antennas, "num_antennas")
    if M > N:
        raise DimensionError(f"need num_users <= num_antennas, got M={M}, N={N}")
    rng = _rng.make_generator(seed)
    H = _rng.complex_normal(rng, (M, N))
    return ChannelMatrix(H, ChannelModel.IID_RAYLEIGH, int(seed))


def trial_channel(channel_model, num_users, num_antennas, master_seed, index):
    """Channel used by Monte Carlo trial ``index``.

    ``channel_model`` is either a :class:`ChannelModel` (or its string
    value) for random draws, or a :class:`ChannelMatrix` that every trial
    reuses unchanged.
    """
    if isinstance(channel_model, ChannelMatrix):
        if channel_model.shape != (num_users, num_antennas):
            raise DimensionError(
                f"fixed channel has shape {channel_model.shape}, expected {(num_users, num_antennas)}"
            )
        return channel_model
    model = ChannelModel(channel_model)
    if model is ChannelModel.FIXED:
        raise ValueError("the fixed channel model needs a ChannelMatrix, not the enum tag")
    return generate_channel(num_users, num_antennas, _rng.trial_seed(master_seed, _rng.CHANNEL, index))


def check_assumptions(channel):
    H = check_channel_array(channel)
    M, N = H.shape
    gram = np.abs(H.conj() @ H.T) / N
    cross = gram.copy()
    np.fill_diagonal(cross, 0.0)
    A = np.abs(H)
    # sum_i a_k1 a_l1 a_k2 a_l2 is largest for k1=l1=k2=l2 by AM-GM, but
    # evaluate all quadruples to keep the statistic literal.
    pair = np.einsum("ki,li->kli", A, A).reshape(M * M, N)
    fourth = float((pair @ pair.T).max()) / N**2
    return AssumptionReport(cross, fourth, np.real(np.diag(gram)).copy())


def save_channel(channel, path):
    """Write ``channel`` in the plain-text fixed-channel format.

    First line ``"M N"``, then one line per user with N entries ``re+imj``
    printed with 17 significant digits (round-trips float64 exactly).
    """
    H = check_channel_array(channel)
    lines = [f"{H.shape[0]} {H.shape[1]}"]
    for row in H:
        lines.append(" ".join(f"{z.real:.17g}{z.imag:+.17g}j" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_channel(path):
    text = Path(path).read_text().split("\n")
    rows = [ln.split() for ln in text if ln.strip()]
    if not rows or len(rows[0]) != 2:
        raise ValueError(f"{path}: first line must be 'M N'")
    M, N = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != M or any(len(r) != N for r in body):
        raise DimensionError(f"{path}: expected {M} rows of {N} entries")
    H = np.array([[complex(tok) for tok in r] for r in body], dtype=np.complex128)
    return ChannelMatrix(H, ChannelModel.FIXED, 0)
