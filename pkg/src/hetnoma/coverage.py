"""Coverage probability of a typical user served by a two-user small cell.

The decode chain depends on where the user lands relative to the cell's
already-paired partner at pair_distance: closer in, it must first strip the
partner's (higher-power) message at threshold tau_connected and then decode
its own at tau_typical; farther out, it decodes its own message while the
partner's near-user share remains as self-interference. Both events reduce to
a single serving-fade tail, so the conditional coverage is a noise factor
times the two interference Laplace transforms evaluated at one effective
threshold. Impossible power splits (share_far <= tau * share_near) force
coverage to exactly zero, not approximately.

Probabilities are clamped into [0, 1] only after they are formed; every
clamp is counted and readable via clamp_event_count() so silent numerical
trouble cannot hide.
"""

import math
from dataclasses import dataclass

from . import model
from .specfun import binomial_beta_mass, hyp2f1_coverage, integrate, macro_laplace_sum

_clamp_events = 0


def clamp_event_count():
    """How many computed probabilities needed clamping into [0, 1] so far."""
    return _clamp_events


def _clamp_unit(value):
    global _clamp_events
    if value < 0.0 or value > 1.0:
        _clamp_events += 1
        return min(max(value, 0.0), 1.0)
    return value


def small_interference_exponent(cfg, k, s, x):
    """Minus the log Laplace transform of all small-cell interference.

    Serving tier k at distance x; every small tier is excluded inside the
    radius where it would have won the association. Vanishing exclusion
    radii (tiny x at fixed s) are closed with the exact complete-integral
    limit instead of overflowing.
    """
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    total = 0.0
    eta = cfg.eta
    for i, tier in enumerate(cfg.small_tiers):
        if tier.density == 0.0:
            continue
        alpha = tier.path_loss_exponent
        delta = tier.delta
        w = model.exclusion_radius(cfg, k, i, x)
        try:
            y = s * tier.power * eta * w**-alpha
        except OverflowError:
            y = math.inf
        if math.isinf(y):
            # Exclusion radius ~ 0: the tail integral closes to pi/sin(pi*d).
            total += (
                tier.density
                * math.pi
                * delta
                * (math.pi / math.sin(math.pi * delta))
                * (s * tier.power * eta) ** delta
            )
        else:
            total += (
                tier.density
                * math.pi
                * (delta / (1.0 - delta))
                * w
                * w
                * y
                * hyp2f1_coverage(delta, y)
            )
    return total


def macro_interference_exponent(cfg, k, s, x):
    """Minus the log Laplace transform of the macro-tier interference."""
    if s < 0.0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    macro = cfg.macro
    w = model.exclusion_radius(cfg, k, None, x)
    s_scaled = s * macro.power * cfg.eta / macro.users_served
    return (
        macro.density
        * math.pi
        * macro.delta
        * macro_laplace_sum(s_scaled, w, macro.delta, macro.users_served)
    )


def laplace_small_interference(cfg, k, s, x):
    """Laplace transform of the summed small-cell interference at s."""
    return math.exp(-small_interference_exponent(cfg, k, s, x))


def laplace_macro_interference(cfg, k, s, x):
    """Laplace transform of the macro interference at s."""
    return math.exp(-macro_interference_exponent(cfg, k, s, x))


def _threshold_near(tier, targets):
    """Effective serving-fade threshold for the near position, or None if impossible."""
    gap = tier.share_far - targets.tau_connected * tier.share_near
    if gap <= 0.0:
        return None
    return max(targets.tau_connected / gap, targets.tau_typical / tier.share_near)


def _threshold_far(tier, targets):
    gap = tier.share_far - targets.tau_typical * tier.share_near
    if gap <= 0.0:
        return None
    return targets.tau_typical / gap


def _conditional_coverage(cfg, k, threshold, x):
    if threshold == 0.0:
        return 1.0
    tier = cfg.small_tiers[k]
    s = threshold * x**tier.path_loss_exponent / (tier.power * cfg.eta)
    exponent = (
        s * cfg.sigma2
        + small_interference_exponent(cfg, k, s, x)
        + macro_interference_exponent(cfg, k, s, x)
    )
    return math.exp(-exponent)


def conditional_coverage_near(cfg, k, targets, x):
    """P(decode partner at tau_connected, then own at tau_typical | served at x <= pair_distance)."""
    tier = cfg.small_tiers[k]
    if not 0.0 < x <= tier.pair_distance:
        raise ValueError("near case requires 0 < x <= pair_distance")
    threshold = _threshold_near(tier, targets)
    if threshold is None:
        return 0.0
    return _clamp_unit(_conditional_coverage(cfg, k, threshold, x))


def conditional_coverage_far(cfg, k, targets, x):
    """P(decode own message at tau_typical | served at x > pair_distance)."""
    tier = cfg.small_tiers[k]
    if not x > tier.pair_distance:
        raise ValueError("far case requires x > pair_distance")
    threshold = _threshold_far(tier, targets)
    if threshold is None:
        return 0.0
    return _clamp_unit(_conditional_coverage(cfg, k, threshold, x))


@dataclass(frozen=True)
class CoverageBreakdown:
    """Coverage split by the position the typical user ends up in."""

    total: float
    near_component: float
    far_component: float
    zero_by_power_split: bool


def coverage_probability(cfg, k, targets):
    """Coverage of the typical user given association with small tier k.

    Integrates the two conditional coverages against the serving-distance
    law, split exactly at pair_distance where the decode chain switches.
    """
    tier = cfg.small_tiers[k]
    if model.association_prob_small(cfg, k) == 0.0:
        raise ValueError("tier is never selected; coverage undefined")
    near_threshold = _threshold_near(tier, targets)
    far_threshold = _threshold_far(tier, targets)
    r = tier.pair_distance
    near = 0.0
    if near_threshold is not None:
        near = integrate(
            lambda x: _conditional_coverage(cfg, k, near_threshold, x)
            * model.serving_distance_pdf_small(cfg, k, x),
            0.0,
            r,
        )
    far = 0.0
    if far_threshold is not None:
        far = integrate(
            lambda x: _conditional_coverage(cfg, k, far_threshold, x)
            * model.serving_distance_pdf_small(cfg, k, x),
            r,
            math.inf,
            scale=model.void_length_scale(cfg, k),
        )
    near = _clamp_unit(near)
    far = _clamp_unit(far)
    return CoverageBreakdown(
        total=_clamp_unit(near + far),
        near_component=near,
        far_component=far,
        zero_by_power_split=near_threshold is None and far_threshold is None,
    )


def coverage_probability_closed(cfg, k, targets):
    """Shared-exponent, noise-free closed form of coverage_probability.

    Requires every tier to use one path-loss exponent and an explicit
    noise_power of zero; the serving law is then Rayleigh and both coverage
    integrals collapse to ratios of effective densities.
    """
    alpha = model.common_path_loss_exponent(cfg)
    if cfg.sigma2 != 0.0:
        raise ValueError("closed-form coverage requires noise_power=0")
    tier = cfg.small_tiers[k]
    macro = cfg.macro
    delta = 2.0 / alpha
    b_k = model.effective_density(cfg, k)
    r2 = tier.pair_distance**2

    def crowding(threshold):
        # Interference inflation of the effective density at this threshold.
        macro_term = (
            macro.density
            * delta
            * (threshold * macro.power / (tier.power * macro.users_served)) ** delta
            * binomial_beta_mass(
                threshold * tier.share_near * tier.bias / macro.array_gain,
                delta,
                macro.users_served,
            )
        )
        small_term = 0.0
        for other in cfg.small_tiers:
            if other.density == 0.0:
                continue
            bias_ratio = other.bias / tier.bias
            power_ratio = other.power / tier.power
            small_term += (
                other.density
                * delta
                / (1.0 - delta)
                * bias_ratio ** (delta - 1.0)
                * power_ratio**delta
                * threshold
                * hyp2f1_coverage(delta, threshold / bias_ratio)
            )
        return macro_term + small_term

    total = 0.0
    near_threshold = _threshold_near(tier, targets)
    if near_threshold is not None:
        if near_threshold == 0.0:
            total += -math.expm1(-math.pi * b_k * r2)
        else:
            dens = b_k + crowding(near_threshold)
            total += b_k * -math.expm1(-math.pi * dens * r2) / dens
    far_threshold = _threshold_far(tier, targets)
    if far_threshold is not None:
        if far_threshold == 0.0:
            total += math.exp(-math.pi * b_k * r2)
        else:
            dens = b_k + crowding(far_threshold)
            total += b_k * math.exp(-math.pi * dens * r2) / dens
    return _clamp_unit(total)
