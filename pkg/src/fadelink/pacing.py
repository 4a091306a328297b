"""Adaptive inter-packet delay (network congestion avoidance).

The sender counts transmissions and retransmissions; every
`n_pkt_update` transmissions the resend ratio decides the update:

    ratio > t_high  ->  delay *= alpha_incr   (back off)
    ratio < t_low   ->  delay *= alpha_decr   (speed up)

and both counters clear. Comparisons use integer cross-multiplication
and the delay is kept as an exact rational number of nanoseconds, so
update sequences are bit-reproducible and k consecutive one-sided
windows multiply the delay by exactly alpha**k (up to the clamps).
Conversions to integer nanoseconds (pacing) floor; the microsecond
value embedded in DATA frames rounds half up.

Two parameter presets ship as "set1" and "set2"; both adapt reliably,
set2 reacting in coarser steps over longer windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

INITIAL_DELAY_NS = 200_000   # transmission starts deliberately slow
MIN_DELAY_NS = 1_000         # clamp floor: zero-loss runs stop here
MAX_DELAY_NS = 10_000_000    # clamp ceiling keeps recovery alive


@dataclass(frozen=True)
class PacingParams:
    n_pkt_update: int
    t_high: Fraction
    t_low: Fraction
    alpha_incr: Fraction
    alpha_decr: Fraction
    initial_delay_ns: int = INITIAL_DELAY_NS
    min_delay_ns: int = MIN_DELAY_NS
    max_delay_ns: int = MAX_DELAY_NS

    def __post_init__(self):
        if self.n_pkt_update <= 0:
            raise ValueError("n_pkt_update must be positive")
        if not self.t_low < self.t_high:
            raise ValueError("t_low must be below t_high")
        if not self.alpha_decr < 1 < self.alpha_incr:
            raise ValueError("need alpha_decr < 1 < alpha_incr")
        if not self.min_delay_ns <= self.initial_delay_ns <= self.max_delay_ns:
            raise ValueError("initial delay outside [min_delay, max_delay]")


PRESETS = {
    "set1": PacingParams(
        n_pkt_update=3000,
        t_high=Fraction(1, 16),
        t_low=Fraction(1, 64),
        alpha_incr=Fraction(5, 4),
        alpha_decr=Fraction(15, 16),
    ),
    "set2": PacingParams(
        n_pkt_update=10000,
        t_high=Fraction(1, 8),
        t_low=Fraction(1, 32),
        alpha_incr=Fraction(5, 4),
        alpha_decr=Fraction(3, 4),
    ),
}


def apply_window(delay: Fraction, params: PacingParams, rsnt: int, sent: int) -> Fraction:
    """One end-of-window update: compare ratio, scale, clamp.

    Pure function over exact rationals; shared by both engines. The
    threshold comparisons are integer cross-multiplications.
    """
    if rsnt * params.t_high.denominator > sent * params.t_high.numerator:
        delay = delay * params.alpha_incr
    elif rsnt * params.t_low.denominator < sent * params.t_low.numerator:
        delay = delay * params.alpha_decr
    if delay < params.min_delay_ns:
        return Fraction(params.min_delay_ns)
    if delay > params.max_delay_ns:
        return Fraction(params.max_delay_ns)
    return delay


def round_half_up_us(delay: Fraction) -> int:
    """Exact round-half-up of a nanosecond delay to whole microseconds."""
    return (2 * delay.numerator + 1000 * delay.denominator) // (
        2000 * delay.denominator
    )


class DelayController:
    """Pacing state owned by one sender core.

    Tracks the exact delay, the two window counters, and the history of
    per-window resend counts (for post-run analysis of adaptation).
    """

    __slots__ = (
        "params",
        "delay",
        "delay_ns",
        "delay_us",
        "c_pkt_sent",
        "c_pkt_rsnt",
        "window_rsnt",
    )

    def __init__(self, params: PacingParams):
        self.params = params
        self.reset()

    def reset(self):
        self.delay = Fraction(self.params.initial_delay_ns)
        self._cache()
        self.c_pkt_sent = 0
        self.c_pkt_rsnt = 0
        self.window_rsnt: list[int] = []

    def _cache(self):
        self.delay_ns = self.delay.numerator // self.delay.denominator
        self.delay_us = round_half_up_us(self.delay)

    def record_transmission(self, is_resend: bool):
        """Count one (re)transmission; run the window update when due."""
        self.c_pkt_sent += 1
        if is_resend:
            self.c_pkt_rsnt += 1
        if self.c_pkt_sent >= self.params.n_pkt_update:
            self.window_rsnt.append(self.c_pkt_rsnt)
            self.delay = apply_window(
                self.delay, self.params, self.c_pkt_rsnt, self.c_pkt_sent
            )
            self._cache()
            self.c_pkt_sent = 0
            self.c_pkt_rsnt = 0

    def earliest_next_transmit(self, last_transmit_ns: int) -> int:
        return last_transmit_ns + self.delay_ns

    def reported_delay_us(self) -> int:
        """Current delay in whole microseconds, for the DATA frame field."""
        return self.delay_us

    def snapshot(self):
        return (self.delay, self.c_pkt_sent, self.c_pkt_rsnt)
