"""Simulated live experiments: delayed, noisy north-star metrics.

A trial's true effect is fixed when the experiment is allocated:

- reward trials: metric1 is proportional to the gain in correlation
  between the candidate reward and latent satisfaction, relative to the
  control reward;
- model trials: metric1 is proportional to the relative validation-loss
  improvement over the control model.

Observed values add noise that shrinks as 1/sqrt(traffic x ticks), and
nothing is observable before ``delay_ticks`` have elapsed. metric3 is a
guardrail trap: rewards leaning on watch_time beyond a share threshold
silently degrade it, which the outer loop must catch and abort.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evoloop.configspace import RewardSpec
from .logs import LogTable
from .rewards import latent_correlation

METRIC1_SCALE = 0.02   # metric1 delta per unit correlation gain
METRIC2_RATIO = 0.5
WATCH_TRAP_SHARE = 0.6
TRAP_METRIC3 = 0.02    # +2% guardrail metric regression when trapped
CONFIDENCE_Z = 1.96


@dataclass
class OnlineMetricsReport:
    metric1: float
    metric2: float
    metric3: float
    confidence_halfwidth: float
    ticks_observed: int

    def to_json(self) -> dict:
        return {
            "metric1": self.metric1,
            "metric2": self.metric2,
            "metric3": self.metric3,
            "confidence_halfwidth": self.confidence_halfwidth,
            "ticks_observed": self.ticks_observed,
        }


def watch_time_share(spec: RewardSpec) -> float:
    total = sum(abs(t.weight) for t in spec.terms)
    if total == 0:
        return 0.0
    watch = sum(abs(t.weight) for t in spec.terms if t.signal == "watch_time")
    return watch / total


def reward_trial_truth(candidate: RewardSpec, control: RewardSpec,
                       table: LogTable) -> tuple[float, float]:
    """(true metric1, true metric3) for a reward change."""
    gain = latent_correlation(candidate, table) - latent_correlation(control, table)
    metric1 = METRIC1_SCALE * gain
    metric3 = TRAP_METRIC3 if watch_time_share(candidate) > WATCH_TRAP_SHARE else 0.0
    return metric1, metric3


def model_trial_truth(candidate_loss: float, control_loss: float) -> tuple[float, float]:
    """(true metric1, true metric3) for an optimizer/architecture change."""
    if not np.isfinite(candidate_loss):
        return -METRIC1_SCALE, 0.0
    rel = (control_loss - candidate_loss) / max(control_loss, 1e-12)
    return METRIC1_SCALE * float(np.clip(rel, -1.0, 1.0)), 0.0


class OnlineExperiment:
    """One trial's traffic slice. Advance with :meth:`tick`; reports are
    empty until delay_ticks have elapsed."""

    def __init__(self, true_metric1: float, true_metric3: float,
                 delay_ticks: int, noise_sigma: float,
                 traffic_fraction: float, seed: int):
        if not 0.0 < traffic_fraction <= 1.0:
            raise ValueError("traffic_fraction must be in (0, 1]")
        self.true_metric1 = true_metric1
        self.true_metric3 = true_metric3
        self.delay_ticks = delay_ticks
        self.noise_sigma = noise_sigma
        self.traffic_fraction = traffic_fraction
        self._rng = np.random.default_rng(seed)
        self.ticks = 0

    def tick(self) -> OnlineMetricsReport | None:
        """Advance one tick; returns the report once observable."""
        self.ticks += 1
        if self.ticks < self.delay_ticks:
            return None
        sigma = self.noise_sigma / np.sqrt(self.traffic_fraction * self.ticks)
        return OnlineMetricsReport(
            metric1=self.true_metric1 + sigma * self._rng.standard_normal(),
            metric2=METRIC2_RATIO * self.true_metric1
            + sigma * self._rng.standard_normal(),
            metric3=self.true_metric3 + sigma * self._rng.standard_normal(),
            confidence_halfwidth=CONFIDENCE_Z * sigma,
            ticks_observed=self.ticks,
        )


def simulate_online(true_metric1: float, true_metric3: float, ticks: int,
                    seed: int, delay_ticks: int = 7, noise_sigma: float = 0.003,
                    traffic_fraction: float = 0.33):
    """Run a whole experiment; yields one report per observable tick."""
    exp = OnlineExperiment(true_metric1, true_metric3, delay_ticks,
                           noise_sigma, traffic_fraction, seed)
    for _ in range(ticks):
        report = exp.tick()
        if report is not None:
            yield report
