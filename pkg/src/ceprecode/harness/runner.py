"""Execute an :class:`ExperimentSpec` and collect its rows.

One row per sweep point. Monte Carlo quantities carry a ``*_se`` column
with their standard error across channel draws. A search that cannot
bracket its target does not abort the run: its cells are left empty and
the row's ``status`` column records the failure.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..alphabet import Alphabet, sample_raw_symbols
from ..capacity import eigenvalue_draws, min_power_for_rate_bound, waterfill
from ..channel import ChannelModel, PowerConfig, trial_channel
from ..exceptions import BracketError, SpecValidationError
from ..metrics import (
    EStarQuery,
    e_star,
    estimate_mui,
    min_power_for_rate_table,
    mui_table,
    optimize_energy_table,
    zf_min_power_for_rate,
)
from ..params import MonteCarloParams
from ..precoder import PrecoderConfig, zf_moments
from ..stats import BoxSpec, box_probability_curve, gaussian_limit_check, matched_gaussian_box_probability
from .spec import ExperimentKind, ExperimentSpec

__all__ = ["RunRecord", "run_experiment", "P0", "P1", "STATUS_OK"]

log = logging.getLogger("ceprecode.harness")

# Total-power scaling constants of the scaled-power scenario: P_T = P0 / N
# (M=12) and P_T = P1 / N (M=24).
P0 = 38.4
P1 = 72.3

STATUS_OK = "ok"


@dataclass(frozen=True)
class RunRecord:
    """Rows of one run. Cells are ints, finite floats, strings, or ``None``
    (an empty cell left by a failed search)."""

    spec_hash: str
    columns: tuple
    rows: tuple = ()
    wall_time_seconds: float = field(default=0.0, compare=False)
    spec_text: str = field(default="", compare=False)
    master_seed: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(dict(r) for r in self.rows))
        cols = set(self.columns)
        if len(cols) != len(self.columns):
            raise ValueError("duplicate column names")
        for i, row in enumerate(self.rows):
            if set(row) != cols:
                raise ValueError(f"row {i} has columns {sorted(row)}, expected {list(self.columns)}")
            for k, v in row.items():
                if isinstance(v, float) and not math.isfinite(v):
                    raise ValueError(f"row {i} column {k!r} is not finite: {v}")

    @property
    def failed_rows(self):
        return [r for r in self.rows if r.get("status", STATUS_OK) != STATUS_OK]

    def column(self, name):
        return [r[name] for r in self.rows]


def _mc(spec, workers):
    p = spec.parameters
    return MonteCarloParams(num_channels=p["num_channels"], num_symbols=p["num_symbols"],
                            seed=spec.master_seed, workers=workers)


def _config(spec):
    return PrecoderConfig(max_outer_iterations=spec["max_outer_iterations"])


def _se(per_channel):
    x = np.asarray(per_channel, dtype=float)
    return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


class _Row:
    """Row builder that turns search failures into an error status."""

    def __init__(self, columns, **fixed):
        self.cells = dict.fromkeys(columns)
        self.cells.update(fixed)
        self.errors = []

    def attempt(self, label, fn):
        try:
            return fn()
        except BracketError as exc:
            self.errors.append(f"{label}: {exc}")
            log.warning("%s failed: %s", label, exc)
            return None

    def done(self):
        self.cells["status"] = "; ".join(self.errors) if self.errors else STATUS_OK
        return self.cells


def _rate_se(table, energy, inverse_snr):
    return _se(table.channel_rates(energy, inverse_snr).mean(axis=1))


def _mui_vs_n(spec, workers):
    cols = ("alphabet", "M", "N", "energy", "mui", "mui_se", "status")
    rows = []
    p = spec.parameters
    for alphabet in p["alphabet"]:
        for N in p["N"]:
            log.info("mui-vs-n: alphabet=%s N=%d", alphabet, N)
            est = estimate_mui(ChannelModel.IID_RAYLEIGH, p["M"], N, alphabet, p["energy"], _config(spec),
                               p["num_channels"], p["num_symbols"], spec.master_seed, workers)
            r = _Row(cols, alphabet=alphabet, M=p["M"], N=N, energy=p["energy"],
                     mui=est.mean, mui_se=est.mean_std_error)
            rows.append(r.done())
    return cols, rows


def _e_star_vs_n(spec, workers):
    cols = ("alphabet", "M", "N", "target_mui", "e_star", "e_star_over_n", "interval_width", "status")
    rows = []
    p = spec.parameters
    mc = _mc(spec, workers)
    for alphabet in p["alphabet"]:
        for target in p["target_mui"]:
            for N in p["N"]:
                log.info("e-star-vs-n: alphabet=%s target=%g N=%d", alphabet, target, N)
                scale = N / p["M"]
                query = EStarQuery(target, (p["bracket_lo"] * scale, p["bracket_hi"] * scale),
                                   p["relative_tolerance"] * scale)
                r = _Row(cols, alphabet=alphabet, M=p["M"], N=N, target_mui=target)
                found = r.attempt("e_star", lambda: e_star(query, ChannelModel.IID_RAYLEIGH, p["M"], N, alphabet,
                                                           _config(spec), mc, return_interval=True))
                if found is not None:
                    lo, hi = found
                    r.cells.update(e_star=0.5 * (lo + hi), e_star_over_n=0.5 * (lo + hi) / N,
                                   interval_width=hi - lo)
                rows.append(r.done())
    return cols, rows


def _bound_rate_se(eigs, M, snr_db):
    power = PowerConfig.from_snr_db(snr_db)
    caps = [waterfill(lam, power.total_power, power.noise_variance).capacity_bits / M for lam in eigs]
    return _se(caps)


def _min_power_vs_n(spec, workers):
    cols = ("M", "N", "target_rate", "ce_db", "ce_energy", "ce_energy_at_edge", "ce_rate_se",
            "bound_db", "bound_rate_se", "gap_db")
    p = spec.parameters
    if p["include_zf"]:
        cols += ("zf_db", "zf_gap_db")
    cols += ("status",)
    mc = _mc(spec, workers)
    M, target = p["M"], p["target_rate"]
    rows = []
    for N in p["N"]:
        log.info("min-power-vs-n: M=%d N=%d", M, N)
        r = _Row(cols, M=M, N=N, target_rate=target)
        table = mui_table(ChannelModel.IID_RAYLEIGH, M, N, "gaussian", None, _config(spec), mc)
        ce = r.attempt("ce", lambda: min_power_for_rate_table(table, target))
        if ce is not None:
            r.cells.update(ce_db=ce.snr_db, ce_energy=ce.energy, ce_energy_at_edge=int(ce.at_bracket_edge),
                           ce_rate_se=_rate_se(table, ce.energy, 10 ** (-ce.snr_db / 10)))
        eigs = eigenvalue_draws(ChannelModel.IID_RAYLEIGH, M, N, mc.num_channels, mc.seed, workers)
        bound = r.attempt("bound", lambda: min_power_for_rate_bound(target, None, M, N, mc, eigenvalues=eigs))
        if bound is not None:
            r.cells.update(bound_db=bound, bound_rate_se=_bound_rate_se(eigs, M, bound))
        if ce is not None and bound is not None:
            r.cells["gap_db"] = ce.snr_db - bound
        if p["include_zf"]:
            moments = zf_moments(ChannelModel.IID_RAYLEIGH, M, N, mc.num_channels, mc.num_symbols, mc.seed, workers)
            zf = r.attempt("zf", lambda: zf_min_power_for_rate(target, moments))
            if zf is not None:
                r.cells["zf_db"] = zf
                if bound is not None:
                    r.cells["zf_gap_db"] = zf - bound
        rows.append(r.done())
    return cols, rows


def _power_gap_vs_rate(spec, workers):
    cols = ("M", "N", "target_rate", "bound_db", "ce_db", "ce_energy", "ce_rate_se", "zf_db",
            "ce_gap_db", "zf_gap_db", "status")
    p = spec.parameters
    mc = _mc(spec, workers)
    M, N = p["M"], p["N"]
    log.info("power-gap-vs-rate: building tables for M=%d N=%d", M, N)
    table = mui_table(ChannelModel.IID_RAYLEIGH, M, N, "gaussian", None, _config(spec), mc)
    eigs = eigenvalue_draws(ChannelModel.IID_RAYLEIGH, M, N, mc.num_channels, mc.seed, workers)
    moments = zf_moments(ChannelModel.IID_RAYLEIGH, M, N, mc.num_channels, mc.num_symbols, mc.seed, workers)
    rows = []
    for target in p["rates"]:
        log.info("power-gap-vs-rate: rate=%g", target)
        r = _Row(cols, M=M, N=N, target_rate=target)
        bound = r.attempt("bound", lambda: min_power_for_rate_bound(target, None, M, N, mc, eigenvalues=eigs))
        ce = r.attempt("ce", lambda: min_power_for_rate_table(table, target))
        zf = r.attempt("zf", lambda: zf_min_power_for_rate(target, moments))
        r.cells.update(bound_db=bound, zf_db=zf)
        if ce is not None:
            r.cells.update(ce_db=ce.snr_db, ce_energy=ce.energy,
                           ce_rate_se=_rate_se(table, ce.energy, 10 ** (-ce.snr_db / 10)))
        if bound is not None:
            if ce is not None:
                r.cells["ce_gap_db"] = ce.snr_db - bound
            if zf is not None:
                r.cells["zf_gap_db"] = zf - bound
        rows.append(r.done())
    return cols, rows


def _rate_vs_n_scaled_power(spec, workers):
    cols = ("M", "N", "p0", "snr_db", "ce_rate", "ce_rate_se", "ce_energy", "ce_energy_at_edge",
            "bound_rate", "bound_rate_se", "status")
    p = spec.parameters
    mc = _mc(spec, workers)
    M = p["M"]
    rows = []
    for N in p["N"]:
        log.info("rate-vs-n-scaled-power: M=%d N=%d", M, N)
        power = PowerConfig(p["p0"] / N)
        table = mui_table(ChannelModel.IID_RAYLEIGH, M, N, "gaussian", None, _config(spec), mc)
        energy, rate, edge = optimize_energy_table(table, power.inverse_snr)
        eigs = eigenvalue_draws(ChannelModel.IID_RAYLEIGH, M, N, mc.num_channels, mc.seed, workers)
        caps = [waterfill(lam, power.total_power, power.noise_variance).capacity_bits / M for lam in eigs]
        r = _Row(cols, M=M, N=N, p0=p["p0"], snr_db=power.snr_db, ce_rate=float(rate),
                 ce_rate_se=_rate_se(table, energy, power.inverse_snr), ce_energy=energy,
                 ce_energy_at_edge=int(edge), bound_rate=float(np.mean(caps)), bound_rate_se=_se(caps))
        rows.append(r.done())
    return cols, rows


def _clt_check(spec, workers):
    cols = ("M", "N", "samples", "max_ks", "ks_critical", "max_abs_corr", "mean_row_energy", "non_gaussian", "status")
    p = spec.parameters
    rows = []
    for row in gaussian_limit_check(ChannelModel.IID_RAYLEIGH, p["M"], p["N"], p["samples"], spec.master_seed):
        log.info("clt-check: N=%d max KS=%.4g", row.num_antennas, row.max_ks)
        r = _Row(cols, M=p["M"], N=row.num_antennas, samples=row.num_samples, max_ks=row.max_ks,
                 ks_critical=float(row.ks_critical), max_abs_corr=row.max_abs_correlation,
                 mean_row_energy=float(np.mean(row.row_energies)), non_gaussian=int(row.non_gaussian))
        rows.append(r.done())
    return cols, rows


def _box_prob(spec, workers):
    cols = ("M", "N", "half_width", "probability", "probability_se", "gaussian_limit", "status")
    p = spec.parameters
    M = p["M"]
    raw = sample_raw_symbols(Alphabet.parse(p["alphabet"]), M, _rng.trial_seed(spec.master_seed, _rng.SYMBOLS, 0))
    center = np.sqrt(p["energy"]) * raw
    rows = []
    for N in p["N"]:
        log.info("box-prob: N=%d", N)
        H = trial_channel(ChannelModel.IID_RAYLEIGH, M, N, spec.master_seed, N)
        est, se = box_probability_curve(H, center, p["delta"], p["samples"],
                                        _rng.trial_seed(spec.master_seed, _rng.PHASES, N))
        for d, e, s in zip(p["delta"], est, se):
            r = _Row(cols, M=M, N=N, half_width=float(d), probability=float(e), probability_se=float(s),
                     gaussian_limit=matched_gaussian_box_probability(H, BoxSpec(center, d)))
            rows.append(r.done())
    return cols, rows


_DISPATCH = {
    ExperimentKind.MUI_VS_N: _mui_vs_n,
    ExperimentKind.E_STAR_VS_N: _e_star_vs_n,
    ExperimentKind.MIN_POWER_VS_N: _min_power_vs_n,
    ExperimentKind.POWER_GAP_VS_RATE: _power_gap_vs_rate,
    ExperimentKind.RATE_VS_N_SCALED_POWER: _rate_vs_n_scaled_power,
    ExperimentKind.CLT_CHECK: _clt_check,
    ExperimentKind.BOX_PROB: _box_prob,
}


def run_experiment(spec, workers=None):
    """Run ``spec`` and return its :class:`RunRecord`.

    ``workers`` only changes wall time; rows are identical for any value.
    """
    if not isinstance(spec, ExperimentSpec):
        raise SpecValidationError("run_experiment needs an ExperimentSpec (see build_spec)")
    start = time.perf_counter()
    columns, rows = _DISPATCH[spec.kind](spec, workers)
    return RunRecord(spec.spec_hash, columns, rows, time.perf_counter() - start,
                     spec_text=spec.canonical_text(), master_seed=spec.master_seed)
