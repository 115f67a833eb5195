"""Point-source intensity model: Gaussian falloff with additive sensor noise.

The intensity at distance d is a * exp(-(d - b)^2 / (2 c^2)). It is finite at
d = 0 and vanishes as d grows, which is what makes it usable as a generic
point-source proxy. Raw readings are normalized to [0, 1] before they enter
the feature pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, slots=True)
class SourceParams:
    """Fitted intensity curve constants plus the injected noise level.

    normalizer defaults to the peak amplitude a, so a noise-free reading next
    to the source maps close to 1 after normalization.
    """

    a: float = 399.0
    b: float = -2.6
    c: float = 5.1
    noise_sigma: float = 4.0
    normalizer: float = 399.0

    def __post_init__(self) -> None:
        if self.a <= 0.0:
            raise ValueError("source amplitude a must be positive")
        if self.c == 0.0:
            raise ValueError("source width c must be nonzero")
        if self.noise_sigma < 0.0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.normalizer <= 0.0:
            raise ValueError("normalizer must be positive")


def intensity(params: SourceParams, dist: float) -> float:
    """Noise-free intensity at a given distance from the source."""
    if dist < 0.0:
        raise ValueError(f"distance must be nonnegative, got {dist}")
    delta = dist - params.b
    return params.a * math.exp(-(delta * delta) / (2.0 * params.c * params.c))


def sample(params: SourceParams, dist: float, rng: np.random.Generator) -> float:
    """Noisy reading: intensity plus one N(0, noise_sigma^2) draw.

    Exactly one draw is consumed per call, even when noise_sigma is 0, so the
    noise stream advances uniformly regardless of the configured level. The
    uniform-to-normal transform is numpy's Generator.normal (ziggurat); it is
    part of this module's reproducibility contract and must not change within
    a major version.
    """
    return intensity(params, dist) + rng.normal(0.0, params.noise_sigma)


def normalize(params: SourceParams, raw: float) -> float:
    """Map a raw reading to [0, 1]. Noise-driven negatives clamp to 0."""
    c = raw / params.normalizer
    if c < 0.0:
        return 0.0
    if c > 1.0:
        return 1.0
    return c
