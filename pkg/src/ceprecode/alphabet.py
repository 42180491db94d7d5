"""Information alphabets, symbol energies and symbol-vector sampling."""

import enum
from dataclasses import dataclass

import numpy as np

from . import _rng

__all__ = [
    "AlphabetKind",
    "Alphabet",
    "EnergyAllocation",
    "SymbolVector",
    "qam16_points",
    "sample_symbols",
    "sample_raw_symbols",
]


class AlphabetKind(enum.Enum):
    QAM16 = "qam16"
    GAUSSIAN = "gaussian"


def qam16_points():
    """The 16 points ``(a + jb)/sqrt(10)``, ``a, b in {-3, -1, 1, 3}``.

    Ordered with the real part varying slowest. Average energy is exactly 1.
    """
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    re, im = np.meshgrid(levels, levels, indexing="ij")
    return ((re + 1j * im) / np.sqrt(10.0)).ravel()


@dataclass(frozen=True)
class Alphabet:
    kind: AlphabetKind

    @classmethod
    def parse(cls, value):
        if isinstance(value, Alphabet):
            return value
        if isinstance(value, AlphabetKind):
            return cls(value)
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for kind in AlphabetKind:
            if kind.value.replace("_", "") == key:
                return cls(kind)
        raise ValueError(f"unknown alphabet {value!r}; expected one of qam16, gaussian")

    @property
    def points(self):
        """Constellation points; empty for the continuous Gaussian alphabet."""
        if self.kind is AlphabetKind.QAM16:
            return qam16_points()
        return np.zeros(0, dtype=np.complex128)

    def sample(self, rng, shape):
        if self.kind is AlphabetKind.QAM16:
            return qam16_points()[rng.integers(0, 16, size=shape)]
        return _rng.complex_normal(rng, shape)


@dataclass(frozen=True)
class EnergyAllocation:
    """Per-user information symbol energies ``E_k``."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.atleast_1d(np.asarray(self.energies, dtype=float)).copy()
        if e.ndim != 1 or e.size == 0:
            raise ValueError("energy allocation must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise ValueError("symbol energies must be positive and finite")
        e.setflags(write=False)
        object.__setattr__(self, "energies", e)

    @classmethod
    def equal(cls, energy, num_users):
        return cls(np.full(int(num_users), float(energy)))

    @property
    def num_users(self):
        return self.energies.size

    @property
    def is_equal(self):
        return bool(np.all(self.energies == self.energies[0]))


@dataclass(frozen=True)
class SymbolVector:
    raw_symbols: np.ndarray
    energy_allocation: EnergyAllocation
    alphabet_kind: AlphabetKind = AlphabetKind.GAUSSIAN

    @property
    def scaled_symbols(self):
        return np.sqrt(self.energy_allocation.energies) * self.raw_symbols

    @property
    def num_users(self):
        return self.raw_symbols.shape[-1]


def sample_raw_symbols(alphabet, num_users, seed, count=None):
    """Unit-energy symbols from the stream of ``seed``.

    Returns shape ``(num_users,)`` or ``(count, num_users)``.
    """
    alphabet = Alphabet.parse(alphabet)
    rng = _rng.make_generator(seed)
    shape = (int(num_users),) if count is None else (int(count), int(num_users))
    return alphabet.sample(rng, shape)


def sample_symbols(alphabet, energies, seed):
    if not isinstance(energies, EnergyAllocation):
        energies = EnergyAllocation(energies)
    alphabet = Alphabet.parse(alphabet)
    raw = sample_raw_symbols(alphabet, energies.num_users, seed)
    return SymbolVector(raw, energies, alphabet.kind)
