"""Per-antenna constant-envelope precoding for the multi-user MIMO downlink."""

from .alphabet import Alphabet, AlphabetKind, EnergyAllocation, SymbolVector, qam16_points, sample_symbols
from .capacity import WaterfillSolution, cooperative_capacity, min_power_for_rate_bound, waterfill
from .channel import (
    AssumptionReport,
    ChannelMatrix,
    ChannelModel,
    PowerConfig,
    check_assumptions,
    generate_channel,
    load_channel,
    save_channel,
)
from .exceptions import BracketError, DimensionError, RankDeficiencyError, SpecValidationError
from .metrics import (
    EStarQuery,
    MuiEstimate,
    MuiTable,
    RateReport,
    e_star,
    ergodic_rate,
    estimate_mui,
    min_power_for_rate,
    mui_table,
    optimize_energy,
    simulate_received,
    sinr,
)
from .params import MonteCarloParams
from .precoder import (
    CEPrecoder,
    PhaseVector,
    PrecodeResult,
    PrecoderConfig,
    ZFPhaseOnlyPrecoder,
    ce_phase_update,
    ce_precode,
    objective,
    zf_phase_only_precode,
    zf_receiver_scale,
)
from .stats import BoxSpec, box_probability, gaussian_limit_check, mui_decay_curve, sample_z

__version__ = "0.1.0"
