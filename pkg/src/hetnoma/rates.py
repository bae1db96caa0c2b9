"""Ergodic rates for paired small-cell users and the multi-antenna bound.

Each small cell serves two users on the same resource: a cell-interior user
at the fixed pair distance and the randomly located user, with the power
split deciding who decodes first.  The mean pair throughput integrates the
SINR tail probability over thresholds, E[log2(1+g)] = int F(z)/(1+z) dz / ln 2,
with one tail function per pairing slot.  The macro tier instead uses a
Jensen-type lower bound built from the mean residual interference, which only
needs the first moment of the field outside each exclusion radius.

Tail functions are normalized by the tier association probability, so each is
the joint probability of the SINR exceeding z and the user falling on the
corresponding side of the pair distance, given association with the tier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import model
from .coverage import macro_interference_exponent, small_interference_exponent
from .specfun import QuadratureSettings, integrate

LN2 = math.log(2.0)

# Nested rate integrals: the inner distance integral runs tighter than the
# outer threshold integral so inner quadrature noise stays below the outer
# error budget.
OUTER_SETTINGS = QuadratureSettings(
    relative_tolerance=1e-6, absolute_tolerance=1e-9
)
INNER_SETTINGS = QuadratureSettings(
    relative_tolerance=1e-7, absolute_tolerance=1e-10
)


def interference_exponent_total(cfg, k, s, x):
    """Negative log of the joint interference Laplace transform.

    Sum of the single-antenna and multi-antenna tier exponents seen by a
    tier-k user at distance x, evaluated at transform argument s.
    """
    return small_interference_exponent(cfg, k, s, x) + macro_interference_exponent(
        cfg, k, s, x
    )


def _tail_prefactor(cfg, k):
    assoc = model.association_prob_small(cfg, k)
    if assoc <= 0.0:
        return 0.0
    return 2.0 * math.pi * cfg.small_tiers[k].density / assoc


def _check_threshold(z):
    if z < 0.0:
        raise ValueError("z: threshold must be nonnegative")


def sic_ccdf_far_partner(cfg, k, z):
    """Tail of the pair-distance far user's own-signal SINR at threshold z.

    The randomly located user is the near member (distance below the pair
    distance); the partner decodes its own message with the near-user signal
    still superimposed, so the tail vanishes for z >= share_far/share_near.
    """
    _check_threshold(z)
    tier = cfg.small_tiers[k]
    pref = _tail_prefactor(cfg, k)
    if pref == 0.0:
        return 0.0
    gap = tier.share_far - tier.share_near * z
    if gap <= 0.0:
        return 0.0
    r = tier.pair_distance
    s = z * r**tier.path_loss_exponent / (gap * tier.power * cfg.eta)
    noise = math.exp(-s * cfg.sigma2)

    def f(x):
        return x * math.exp(
            model.void_exponent(cfg, k, x) - interference_exponent_total(cfg, k, s, x)
        )

    return pref * noise * integrate(f, 0.0, r, INNER_SETTINGS)


def sic_ccdf_near_typical(cfg, k, z):
    """Tail of the randomly located near user's SINR after removing the
    partner signal, at threshold z."""
    _check_threshold(z)
    tier = cfg.small_tiers[k]
    pref = _tail_prefactor(cfg, k)
    if pref == 0.0:
        return 0.0
    alpha = tier.path_loss_exponent
    denom = tier.share_near * tier.power * cfg.eta

    def f(x):
        s = z * x**alpha / denom
        return x * math.exp(
            model.void_exponent(cfg, k, x)
            - s * cfg.sigma2
            - interference_exponent_total(cfg, k, s, x)
        )

    return pref * integrate(f, 0.0, tier.pair_distance, INNER_SETTINGS)


def sic_ccdf_far_typical(cfg, k, z):
    """Tail of the randomly located far user's own-signal SINR at z.

    The user lies beyond the pair distance and decodes with the partner
    signal superimposed; the tail vanishes for z >= share_far/share_near.
    """
    _check_threshold(z)
    tier = cfg.small_tiers[k]
    pref = _tail_prefactor(cfg, k)
    if pref == 0.0:
        return 0.0
    gap = tier.share_far - tier.share_near * z
    if gap <= 0.0:
        return 0.0
    alpha = tier.path_loss_exponent
    denom = gap * tier.power * cfg.eta

    def f(x):
        s = z * x**alpha / denom
        return x * math.exp(
            model.void_exponent(cfg, k, x)
            - s * cfg.sigma2
            - interference_exponent_total(cfg, k, s, x)
        )

    return pref * integrate(
        f,
        tier.pair_distance,
        math.inf,
        INNER_SETTINGS,
        scale=model.void_length_scale(cfg, k),
    )


def sic_ccdf_near_partner(cfg, k, z):
    """Tail of the pair-distance near user's SINR after removing the
    randomly located far user's signal, at threshold z."""
    _check_threshold(z)
    tier = cfg.small_tiers[k]
    pref = _tail_prefactor(cfg, k)
    if pref == 0.0:
        return 0.0
    r = tier.pair_distance
    s = z * r**tier.path_loss_exponent / (tier.share_near * tier.power * cfg.eta)
    noise = math.exp(-s * cfg.sigma2)

    def f(x):
        return x * math.exp(
            model.void_exponent(cfg, k, x) - interference_exponent_total(cfg, k, s, x)
        )

    return pref * noise * integrate(
        f, r, math.inf, INNER_SETTINGS, scale=model.void_length_scale(cfg, k)
    )


def _tail_scale(tail, z_limit=math.inf):
    """Doubling probe for the threshold where a tail function has decayed,
    used as the length scale of the semi-infinite outer integral."""
    base = tail(0.0)
    if base <= 0.0:
        return 1.0
    z = 1.0
    while z < 1e6 and tail(z) > 0.2 * base:
        z *= 8.0
        if z >= z_limit:
            return max(1.0, z_limit / 2.0)
    return z


def _threshold_integral(tail, upper, scale=None):
    def f(z):
        return tail(z) / (1.0 + z)

    if math.isinf(upper):
        return integrate(f, 0.0, math.inf, OUTER_SETTINGS, scale=scale)
    return integrate(f, 0.0, upper, OUTER_SETTINGS)


def ergodic_rate_near(cfg, k):
    """Mean pair throughput (bits/s/Hz) restricted to the event that the
    randomly located user is the near member of the pair."""
    if _tail_prefactor(cfg, k) == 0.0:
        return 0.0
    tier = cfg.small_tiers[k]
    z_cut = tier.share_far / tier.share_near
    partner = _threshold_integral(lambda z: sic_ccdf_far_partner(cfg, k, z), z_cut)
    own_tail = lambda z: sic_ccdf_near_typical(cfg, k, z)
    own = _threshold_integral(own_tail, math.inf, scale=_tail_scale(own_tail))
    return (partner + own) / LN2


def ergodic_rate_far(cfg, k):
    """Mean pair throughput (bits/s/Hz) restricted to the event that the
    randomly located user is the far member of the pair."""
    if _tail_prefactor(cfg, k) == 0.0:
        return 0.0
    tier = cfg.small_tiers[k]
    z_cut = tier.share_far / tier.share_near
    own = _threshold_integral(lambda z: sic_ccdf_far_typical(cfg, k, z), z_cut)
    partner_tail = lambda z: sic_ccdf_near_partner(cfg, k, z)
    partner = _threshold_integral(
        partner_tail, math.inf, scale=_tail_scale(partner_tail)
    )
    return (own + partner) / LN2


def ergodic_rate_small(cfg, k):
    """Mean tier-k pair throughput in bits/s/Hz (both pairing slots)."""
    return ergodic_rate_near(cfg, k) + ergodic_rate_far(cfg, k)


def average_macro_interference(cfg, x):
    """Mean received interference power for a macro user at distance x > 0.

    First moment of the field outside every exclusion radius: own-tier
    interferers beyond x plus each single-antenna tier beyond its own
    exclusion radius.  Serving-array fading averages to one per stream.
    """
    if x <= 0.0:
        raise ValueError("x: must be positive")
    macro = cfg.macro
    a1 = macro.path_loss_exponent
    total = (
        2.0 * math.pi * macro.density * macro.power * cfg.eta
        * x ** (2.0 - a1) / (a1 - 2.0)
    )
    for i, tier in enumerate(cfg.small_tiers):
        if tier.density == 0.0:
            continue
        w = model.exclusion_radius(cfg, None, i, x)
        ai = tier.path_loss_exponent
        total += (
            2.0 * math.pi * tier.density * tier.power * cfg.eta
            * w ** (2.0 - ai) / (ai - 2.0)
        )
    return total


def macro_rate_lower_bound(cfg):
    """Jensen lower bound on the per-stream macro ergodic rate (bits/s/Hz).

    Averages the mean interference plus noise over the serving distance and
    moves the expectation inside the logarithm, which can only lower it.
    """
    assoc = model.association_prob_macro(cfg)
    if assoc <= 0.0:
        return 0.0
    macro = cfg.macro
    a1 = macro.path_loss_exponent

    def f(x):
        if x == 0.0:
            return 0.0
        pdf = model.serving_distance_pdf_macro(cfg, x)
        if pdf == 0.0:
            return 0.0
        return (average_macro_interference(cfg, x) + cfg.sigma2) * x**a1 * pdf

    denom = integrate(
        f, 0.0, math.inf, scale=model.void_length_scale(cfg, None)
    )
    gain = macro.power * macro.array_gain * cfg.eta / macro.users_served
    return math.log2(1.0 + gain / denom)


def macro_rate_lower_bound_closed(cfg):
    """Closed form of `macro_rate_lower_bound` for a common path-loss
    exponent: the serving distance is then Rayleigh and both moments of the
    denominator are explicit."""
    alpha = model.common_path_loss_exponent(cfg)
    macro = cfg.macro
    b1 = model.effective_density(cfg, None)
    psi = 2.0 * math.pi * macro.density * macro.power * cfg.eta / (alpha - 2.0)
    entries = model._tier_entries(cfg, None)
    for (density, ratio, _), tier in zip(entries, cfg.small_tiers):
        if density == 0.0:
            continue
        psi += (
            2.0 * math.pi * density * tier.power * cfg.eta / (alpha - 2.0)
            * ratio ** (2.0 / alpha - 1.0)
        )
    denom = psi / (math.pi * b1) + cfg.sigma2 * math.gamma(
        alpha / 2.0 + 1.0
    ) / (math.pi * b1) ** (alpha / 2.0)
    gain = macro.power * macro.array_gain * cfg.eta / macro.users_served
    return math.log2(1.0 + gain / denom)


@dataclass(frozen=True)
class RateReport:
    """Per-tier ergodic rates and the association-weighted area bound."""

    small_rates: tuple
    macro_rate: float
    small_associations: tuple
    macro_association: float
    spectrum_efficiency: float


def spectrum_efficiency(cfg):
    """Network spectrum-efficiency lower bound in bits/s/Hz.

    Association-weighted sum: the macro tier counts once per simultaneously
    served stream, each small tier contributes its pair throughput.
    """
    small_rates = tuple(
        ergodic_rate_small(cfg, k) for k in range(len(cfg.small_tiers))
    )
    small_assoc = tuple(
        model.association_prob_small(cfg, k) for k in range(len(cfg.small_tiers))
    )
    macro_assoc = model.association_prob_macro(cfg)
    macro_rate = macro_rate_lower_bound(cfg)
    total = macro_assoc * cfg.macro.users_served * macro_rate
    total += sum(a * r for a, r in zip(small_assoc, small_rates))
    return RateReport(
        small_rates=small_rates,
        macro_rate=macro_rate,
        small_associations=small_assoc,
        macro_association=macro_assoc,
        spectrum_efficiency=total,
    )
