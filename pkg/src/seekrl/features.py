"""Source features derived from the normalized light reading c.

The filter keeps a low-pass state c_f and on every update computes
    c_f <- 0.9 * c_f + 0.1 * c
    s1 = (c - c_f) / c_f        (low-pass-normalized gradient over time)
    s2 = 2 * c_f - 1            (smoothed intensity rescaled to [-1, 1])
with s1 and s2 evaluated at the post-update c_f. s1 is deliberately not
clamped; its magnitude carries the gradient information.

RawDifferenceFeatures is the unfiltered variant used for ablation runs: s1
becomes the raw one-step difference and s2 is computed from the raw reading.
"""

from __future__ import annotations

DEFAULT_ALPHA = 0.9
EPSILON_DIV = 1e-6


def _check_unit_interval(c: float) -> None:
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"normalized reading must be in [0, 1], got {c}")


class FeatureFilter:
    """Stateful low-pass feature pipeline. One instance per agent per episode."""

    __slots__ = ("c_f", "alpha", "epsilon_div")

    def __init__(self, first_c: float, alpha: float = DEFAULT_ALPHA, epsilon_div: float = EPSILON_DIV):
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must be in [0, 1), got {alpha}")
        _check_unit_interval(first_c)
        self.c_f = first_c
        self.alpha = alpha
        self.epsilon_div = epsilon_div

    def reset(self, first_c: float) -> None:
        """Re-seed the filter state with the first reading of a new episode."""
        _check_unit_interval(first_c)
        self.c_f = first_c

    def update(self, c: float) -> tuple[float, float]:
        """Advance the filter with a new reading and return (s1, s2)."""
        _check_unit_interval(c)
        self.c_f = self.alpha * self.c_f + (1.0 - self.alpha) * c
        # In darkness the clamped reading can be exactly 0; the real sensor
        # never reads exact zero, so guard the division instead of raising.
        s1 = (c - self.c_f) / max(self.c_f, self.epsilon_div)
        s2 = 2.0 * self.c_f - 1.0
        return s1, s2


class RawDifferenceFeatures:
    """Ablation variant: s1 = c - c_prev with no low-pass stage, s2 from raw c."""

    __slots__ = ("c_prev",)

    def __init__(self, first_c: float):
        _check_unit_interval(first_c)
        self.c_prev = first_c

    def reset(self, first_c: float) -> None:
        _check_unit_interval(first_c)
        self.c_prev = first_c

    def update(self, c: float) -> tuple[float, float]:
        _check_unit_interval(c)
        s1 = c - self.c_prev
        self.c_prev = c
        return s1, 2.0 * c - 1.0
