"""Photon counting: calibration, Poisson sampling, coincidence accidentals.

Model rates come out of the expectation engine in arbitrary |K|^2 units;
calibration pins the fringe-baseline singles rates of both detectors to
configured counts/s and everything else scales along.  Sampling is
counter-based: each scan point gets its own Philox stream keyed by
(seed, point index), so results are bit-identical no matter how points are
scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .expectation import RatePrediction

_U64 = 0xFFFFFFFFFFFFFFFF
_MAX_MEAN = float(2**62)


@dataclass(frozen=True)
class CountingConfig:
    """Detector calibration rates, coincidence window, dwell time, RNG seed.

    ``baseline_a``/``baseline_b`` hold the model-unit fringe baselines once
    :func:`calibrate` has run; sampling requires them.
    """

    rate_a_cal: float = 42_000.0
    rate_b_cal: float = 110_000.0
    window: float = 2e-9
    dwell: float = 0.5
    seed: int = 20260810
    baseline_a: float | None = None
    baseline_b: float | None = None

    def __post_init__(self) -> None:
        if self.rate_a_cal <= 0 or self.rate_b_cal <= 0:
            raise ValueError("calibration rates must be positive")
        if self.window <= 0 or self.dwell <= 0:
            raise ValueError("window and dwell must be positive")

    @property
    def calibrated(self) -> bool:
        return self.baseline_a is not None and self.baseline_b is not None

    def detected_rates(self, rates: RatePrediction) -> tuple[float, float, float]:
        """Counts/s at detector A, detector B, and true coincidences.

        Coincidences share detector A's scale: every detected signal photon
        belongs to a pair whose idler feeds the detected-idler pool, so the
        coincidence baseline is the A rate reduced by the model's own
        coincidence-to-singles ratio.  A zero model baseline (zero gain)
        degenerates to flat calibrated singles with no true coincidences.
        """
        if not self.calibrated:
            raise ValueError("counting config not calibrated; call calibrate() first")
        assert self.baseline_a is not None and self.baseline_b is not None
        if self.baseline_a > 0:
            r_a = self.rate_a_cal * rates.p_a / self.baseline_a
            r_ab = self.rate_a_cal * rates.p_ab / self.baseline_a
        else:
            r_a, r_ab = self.rate_a_cal, 0.0
        if self.baseline_b > 0:
            r_b = self.rate_b_cal * rates.p_b / self.baseline_b
        else:
            r_b = self.rate_b_cal
        return r_a, r_b, r_ab


def calibrate(cc: CountingConfig, baseline: RatePrediction) -> CountingConfig:
    """Record the model-unit fringe baselines the calibration rates map to."""
    return replace(cc, baseline_a=baseline.p_a, baseline_b=baseline.p_b)


@dataclass(frozen=True)
class CountSample:
    """Counts collected at one scan point; coincidences include accidentals."""

    counts_a: int
    counts_b: int
    coincidences: int
    accidentals_expected: float


def accidental_rate(r_a: float, r_b: float, window: float) -> float:
    """Uncorrelated coincidence rate r_a * r_b * window."""
    if r_a < 0 or r_b < 0 or window < 0:
        raise ValueError("rates and window must be non-negative")
    return r_a * r_b * window


def double_pair_probability(pair_rate: float, window: float) -> float:
    """P(two or more pairs in one window) for Poisson pair generation.

    With mu = pair_rate * window this is 1 - exp(-mu)(1 + mu).
    """
    if pair_rate < 0 or window < 0:
        raise ValueError("pair rate and window must be non-negative")
    mu = pair_rate * window
    return -math.expm1(-mu) - mu * math.exp(-mu)


def point_rng(seed: int, point_index: int) -> np.random.Generator:
    """Independent counter-based stream for one scan point."""
    if point_index < 0:
        raise ValueError("point_index must be >= 0")
    key = np.array([seed & _U64, point_index & _U64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_counts(rates: RatePrediction, cc: CountingConfig, point_index: int) -> CountSample:
    """Draw one scan point's counts.

    Detector counts and true coincidences are independent Poisson variates
    with means rate * dwell; accidental coincidences are drawn on top with
    mean accidental_rate * dwell.  Deterministic in (seed, point_index)
    regardless of evaluation order.
    """
    r_a, r_b, r_true = cc.detected_rates(rates)
    acc = accidental_rate(r_a, r_b, cc.window)
    means = (r_a * cc.dwell, r_b * cc.dwell, r_true * cc.dwell, acc * cc.dwell)
    if any(m > _MAX_MEAN for m in means):
        raise OverflowError(f"expected counts {max(means):.3g} exceed representable integers")
    rng = point_rng(cc.seed, point_index)
    counts_a = int(rng.poisson(means[0]))
    counts_b = int(rng.poisson(means[1]))
    true_coinc = int(rng.poisson(means[2]))
    accidentals = int(rng.poisson(means[3]))
    return CountSample(
        counts_a=counts_a,
        counts_b=counts_b,
        coincidences=true_coinc + accidentals,
        accidentals_expected=means[3],
    )
