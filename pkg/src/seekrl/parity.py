"""Dual-implementation check between the trainer's forward pass and the
standalone inference kernel.

Both routes receive the same raw sensor stream (four laser ranges in meters
plus a normalized light reading) and build their own features, so the check
covers the full sensor-to-action path, not just the matrix math. Inputs are
grouped into synthetic episodes with the filter state reset between them,
mirroring deployment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tinyinfer
from .dqn import Mlp, forward
from .features import FeatureFilter

EPISODE_LENGTH = 50
MAX_DEVIATION = 1e-6
# Argmax agreement is only demanded when the top-2 gap exceeds twice the
# permitted deviation; inside that band a tie flip would be legitimate.
TIE_GAP = 2e-6


@dataclass(frozen=True, slots=True)
class ParityReport:
    cases: int
    max_deviation: float
    off_tie_cases: int
    off_tie_mismatches: int

    @property
    def passed(self) -> bool:
        return self.max_deviation <= MAX_DEVIATION and self.off_tie_mismatches == 0


def run_parity(net: Mlp, ctx: tinyinfer.InferenceContext, n_cases: int, seed: int) -> ParityReport:
    """Drive both implementations over n_cases random sensor inputs."""
    rng = np.random.default_rng(seed)
    max_dev = 0.0
    off_tie = 0
    mismatches = 0
    filt: FeatureFilter | None = None

    for case in range(n_cases):
        if case % EPISODE_LENGTH == 0:
            ctx.reset()
            filt = None
        lasers = rng.uniform(0.0, tinyinfer.LASER_MAX_RANGE, size=4)
        c = float(rng.uniform(0.0, 1.0))

        action_kernel = ctx.infer(lasers[0], lasers[1], lasers[2], lasers[3], c)
        q_kernel = ctx.q

        if filt is None:
            filt = FeatureFilter(c)
            s1, s2 = 0.0, 2.0 * c - 1.0
        else:
            s1, s2 = filt.update(c)
        r = tinyinfer.LASER_MAX_RANGE
        obs = (lasers[0] / r, lasers[1] / r, lasers[2] / r, lasers[3] / r, s1, s2)
        q_ref = forward(net, obs)
        action_ref = int(np.argmax(q_ref))

        dev = float(np.max(np.abs(q_ref.astype(np.float64) - q_kernel.astype(np.float64))))
        max_dev = max(max_dev, dev)

        top2 = np.sort(q_ref)[-2:]
        if float(top2[1] - top2[0]) > TIE_GAP:
            off_tie += 1
            if action_ref != action_kernel:
                mismatches += 1

    return ParityReport(
        cases=n_cases,
        max_deviation=max_dev,
        off_tie_cases=off_tie,
        off_tie_mismatches=mismatches,
    )
