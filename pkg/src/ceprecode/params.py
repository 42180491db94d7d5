from dataclasses import dataclass

from ._validation import check_positive_int

__all__ = ["MonteCarloParams"]


@dataclass(frozen=True)
class MonteCarloParams:
    """Monte Carlo sizes shared by the ergodic estimators.

    ``energy_grid_span`` is relative to N / M: the default residual-energy
    table covers E in ``[0.01, 10] * N / M`` with ``energy_grid_size``
    log-spaced points.
    """

    num_channels: int = 200
    num_symbols: int = 200
    seed: int = 0
    workers: int | None = None
    energy_grid_size: int = 32
    energy_grid_span: tuple = (0.01, 10.0)

    def __post_init__(self):
        check_positive_int(self.num_channels, "num_channels")
        check_positive_int(self.num_symbols, "num_symbols")
        check_positive_int(self.energy_grid_size, "energy_grid_size", minimum=2)
        lo, hi = self.energy_grid_span
        if not 0 < lo < hi:
            raise ValueError(f"energy_grid_span must satisfy 0 < lo < hi, got {self.energy_grid_span}")
