"""Scalar searches used by the rate and power routines."""

import math

from .exceptions import BracketError

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f, lo, hi, iterations=60):
    """Maximise a unimodal ``f`` on [lo, hi] with a fixed iteration count.

    Returns ``(x_best, f_best)`` over every point evaluated, so the result
    never scores worse than an interior probe.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc >= fd else (d, fd)
    for _ in range(iterations):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            if fc > best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            if fd > best[1]:
                best = (d, fd)
    return best


def bisect_increasing(f, target, lo, hi, resolution, what="value"):
    """Smallest x in [lo, hi] (to ``resolution``) with ``f(x) >= target``.

    ``f`` is assumed non-decreasing. Returns ``(x_hi, x_lo)`` where
    ``f(x_hi) >= target > f(x_lo)`` both hold for evaluated points.
    """
    f_lo, f_hi = f(lo), f(hi)
    if f_hi < target:
        raise BracketError(f"{what}: target {target} not reached at upper end {hi} (got {f_hi})", lo, hi)
    if f_lo >= target:
        raise BracketError(f"{what}: target {target} already exceeded at lower end {lo} (got {f_lo})", lo, hi)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if f(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi, lo
