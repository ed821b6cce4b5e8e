"""Structure-state identification from reference-point displacement.

The decision statistic is the information-weighted displacement
(r_hat - r0)^T F(r_hat) (r_hat - r0).  Under the no-change hypothesis an
efficient estimator makes the statistic chi-square with three degrees of
freedom, which is how the constant-false-alarm threshold is calibrated;
a Monte-Carlo calibration mode and a raw-displacement threshold domain
(meters) are also supported.

Two evaluation modes exist: "bound" draws position estimates from the
inverse information matrix (efficient-estimator idealization), "signal"
runs the signal-level estimator on synthesized noisy snapshots.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import chi2

from .fisher import position_fim
from .geometry import as_vec3
from .scenario import Scenario
from .utils import rng_stream, wilson_interval


class StructureState(enum.Enum):
    UNCHANGED = "U"
    DAMAGED = "D"


@dataclass(frozen=True)
class DetectionConfig:
    """Test configuration: false-alarm rate, thresholding, priors."""

    p_fa: float = 1e-2
    threshold_mode: str = "chi2_analytic"
    threshold_domain: str = "wald"
    displacement_threshold_m: float = 0.05
    trials: int = 2000
    threshold_trials: int = 20000
    deformation: Optional[np.ndarray] = None
    prior_u: float = 0.5
    prior_d: float = 0.5
    mode: str = "bound"

    def __post_init__(self):
        if not (0.0 < self.p_fa < 1.0):
            raise ValueError("p_fa must lie in (0, 1)")
        if self.threshold_mode not in ("chi2_analytic", "monte_carlo"):
            raise ValueError(f"unknown threshold mode {self.threshold_mode!r}")
        if self.threshold_domain not in ("wald", "displacement"):
            raise ValueError(f"unknown threshold domain {self.threshold_domain!r}")
        if abs(self.prior_u + self.prior_d - 1.0) > 1e-12:
            raise ValueError("priors must sum to one")
        if min(self.prior_u, self.prior_d) < 0:
            raise ValueError("priors must be non-negative")
        if self.mode not in ("bound", "signal"):
            raise ValueError(f"unknown evaluation mode {self.mode!r}")
        if self.deformation is not None:
            object.__setattr__(self, "deformation", as_vec3(self.deformation))


@dataclass(frozen=True)
class PosteriorResult:
    p_u: float
    p_d: float
    underflow: bool = False


@dataclass(frozen=True)
class DetectionOutcome:
    """Single-test summary plus Monte-Carlo detection probability."""

    wald: float
    threshold: float
    decision: StructureState
    posterior_u: float
    posterior_d: float
    p_detect: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    trials: Optional[int] = None


def wald_statistic(r_hat: np.ndarray, r0: np.ndarray, fim_at_hat: np.ndarray) -> float:
    """Information-weighted squared displacement; zero iff r_hat == r0
    for positive definite information."""
    r_hat = as_vec3(r_hat)
    r0 = as_vec3(r0)
    fim = np.asarray(fim_at_hat, dtype=float)
    if fim.shape != (3, 3):
        raise ValueError("fim_at_hat must be 3x3")
    delta = r_hat - r0
    return float(delta @ fim @ delta)


def _pair_count(scenario: Scenario) -> int:
    return scenario.instants - 1


def _fim_at(scenario: Scenario, position: np.ndarray) -> np.ndarray:
    """Accumulated position FIM with the design frozen at the nominal pose."""
    displaced = scenario.displaced(ris_position=position)
    return _pair_count(scenario) * position_fim(displaced)


def calibrate_threshold(
    config: DetectionConfig,
    scenario: Scenario,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Decision threshold at the configured false-alarm rate.

    Analytic mode uses the chi-square(3) quantile of the asymptotic null
    law of the statistic; Monte-Carlo mode takes the empirical quantile
    over draws of the estimator under the no-change hypothesis.
    """
    if config.threshold_domain == "displacement":
        return config.displacement_threshold_m
    if config.threshold_mode == "chi2_analytic":
        return float(chi2.ppf(1.0 - config.p_fa, df=3))

    trials = config.threshold_trials
    if trials * config.p_fa < 10:
        raise ValueError("too few trials for the requested false-alarm quantile")
    if rng is None:
        rng = rng_stream(scenario.seed, 0xCA11B)
    base = scenario.resolved()
    r0 = base.ris.position
    f0 = _fim_at(base, r0)
    chol = np.linalg.cholesky(np.linalg.inv(f0))
    stats = np.empty(trials)
    for i in range(trials):
        r_hat = r0 + chol @ rng.standard_normal(3)
        stats[i] = wald_statistic(r_hat, r0, _fim_at(base, r_hat))
    return float(np.quantile(stats, 1.0 - config.p_fa))


def posterior(
    d: float,
    config: DetectionConfig,
    peb_at_r0: float,
    peb_at_hat: float,
) -> PosteriorResult:
    """Bayes update over {Unchanged, Damaged} from the weighted displacement.

    The no-change likelihood is a zero-mean Gaussian whose standard
    deviation is the no-change position error bound; the damage
    likelihood is a Gaussian centered at the observed displacement with
    the displaced-point bound as spread, evaluated at its own mode.
    """
    if min(peb_at_r0, peb_at_hat) <= 0:
        raise ValueError("position error bounds must be positive")
    var_u = peb_at_r0**2
    var_d = peb_at_hat**2
    like_u = np.exp(-0.5 * d * d / var_u) / np.sqrt(2.0 * np.pi * var_u)
    like_d = 1.0 / np.sqrt(2.0 * np.pi * var_d)
    num_u = config.prior_u * like_u
    num_d = config.prior_d * like_d
    total = num_u + num_d
    if total <= 0.0 or not np.isfinite(total):
        return PosteriorResult(config.prior_u, config.prior_d, underflow=True)
    return PosteriorResult(float(num_u / total), float(num_d / total))


def detection_probability(
    scenario: Scenario,
    deformation: np.ndarray,
    config: DetectionConfig,
    rng: Optional[np.random.Generator] = None,
) -> DetectionOutcome:
    """Monte-Carlo detection probability for a fixed deformation.

    Bound mode draws estimates from N(r_true, F^-1) with the information
    evaluated at the (displaced) true pose under the design frozen at
    the nominal pose; signal mode estimates each trial's position from a
    noisy snapshot.  Returns the detection fraction with a 95% Wilson
    interval and a representative single-test summary at the median
    statistic.
    """
    if config.trials < 100:
        raise ValueError("at least 100 trials are required")
    deformation = as_vec3(deformation)
    if rng is None:
        rng = rng_stream(scenario.seed, 0xDE7EC7)

    base = scenario.resolved()
    r0 = base.ris.position
    r_true = r0 + deformation
    kappa = calibrate_threshold(config, base, rng=rng)

    fim_true = _fim_at(base, r_true)
    if config.mode == "bound":
        chol = np.linalg.cholesky(np.linalg.inv(fim_true))

        def draw_estimate(i: int) -> np.ndarray:
            return r_true + chol @ rng.standard_normal(3)

    else:
        from .estimation import estimate_position  # deferred import

        strue = base.displaced(ris_position=r_true)

        def draw_estimate(i: int) -> np.ndarray:
            return estimate_position(strue, rng_stream(base.seed, 0x516, i))

    stats = np.empty(config.trials)
    displacements = np.empty(config.trials)
    detections = 0
    for i in range(config.trials):
        r_hat = draw_estimate(i)
        stats[i] = wald_statistic(r_hat, r0, _fim_at(base, r_hat))
        displacements[i] = float(np.linalg.norm(r_hat - r0))
        fired = displacements[i] > kappa if config.threshold_domain == "displacement" else stats[i] > kappa
        detections += bool(fired)

    p_detect = detections / config.trials
    ci_low, ci_high = wilson_interval(detections, config.trials)

    med = int(np.argsort(stats)[config.trials // 2])
    med_stat = float(stats[med])
    peb_r0 = float(np.sqrt(np.trace(np.linalg.inv(_fim_at(base, r0)))))
    peb_hat = float(np.sqrt(np.trace(np.linalg.inv(fim_true))))
    post = posterior(med_stat, config, peb_r0, peb_hat)
    fired = (
        displacements[med] > kappa
        if config.threshold_domain == "displacement"
        else med_stat > kappa
    )
    decision = StructureState.DAMAGED if fired else StructureState.UNCHANGED
    return DetectionOutcome(
        wald=med_stat,
        threshold=kappa,
        decision=decision,
        posterior_u=post.p_u,
        posterior_d=post.p_d,
        p_detect=p_detect,
        ci_low=ci_low,
        ci_high=ci_high,
        trials=config.trials,
    )
