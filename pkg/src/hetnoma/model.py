"""Scenario model and user association for a multi-tier downlink network.

One macro tier of multi-antenna BSs runs zero-forcing to `users_served`
single-antenna users at once; each small-cell tier superposes two users in
the power domain (the near user carries the smaller share and cancels the far
user's signal before decoding its own). Every tier is a homogeneous Poisson
field. A user attaches to the BS with the strongest biased average received
power: small cells offer share_near * P * eta * d**-alpha * bias, the macro
tier offers array_gain * P * eta * d**-alpha / users_served. That single rule
fixes the association probabilities, the serving-distance laws, and the
closest distance at which any interferer can sit, so all of them live here.

Units: meters, watts, BS per square meter. Rates elsewhere are bits per
channel use.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

from .specfun import integrate

SPEED_OF_LIGHT = 299792458.0


def dbm_to_watts(value_dbm):
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watts_to_dbm(value_watts):
    if value_watts <= 0.0:
        raise ValueError("watts_to_dbm requires a positive power")
    return 10.0 * math.log10(value_watts) + 30.0


def free_space_reference_gain(carrier_frequency):
    """Path gain at 1 m of an isotropic link, (c / (4 pi f))**2."""
    if carrier_frequency <= 0.0:
        raise ValueError("carrier_frequency must be positive")
    return (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_frequency)) ** 2


def thermal_noise_watts(bandwidth, noise_figure_db):
    """Receiver noise over `bandwidth`: -170 dBm/Hz density plus noise figure."""
    if bandwidth <= 0.0:
        raise ValueError("bandwidth must be positive")
    return dbm_to_watts(-170.0 + 10.0 * math.log10(bandwidth) + noise_figure_db)


@dataclass(frozen=True)
class MacroTier:
    """Poisson field of zero-forcing macro BSs.

    `antennas` is the array size, `users_served` the number of simultaneous
    beams; the per-user array gain is antennas - users_served + 1.
    """

    density: float
    power: float
    path_loss_exponent: float
    antennas: int
    users_served: int

    def __post_init__(self):
        if not self.density > 0.0:
            raise ValueError("MacroTier.density must be positive")
        if not self.power > 0.0:
            raise ValueError("MacroTier.power must be positive")
        if not self.path_loss_exponent > 2.0:
            raise ValueError("MacroTier.path_loss_exponent must exceed 2")
        if self.users_served < 1:
            raise ValueError("MacroTier.users_served must be at least 1")
        if self.antennas < self.users_served:
            raise ValueError("MacroTier.antennas must be >= users_served")

    @property
    def array_gain(self):
        return self.antennas - self.users_served + 1

    @property
    def delta(self):
        return 2.0 / self.path_loss_exponent


@dataclass(frozen=True)
class SmallTier:
    """Poisson field of single-antenna small-cell BSs pairing two users.

    Each BS already serves one user at distance `pair_distance`; the tier
    admits a second (typical) user on the same resource. share_far and
    share_near split the transmit power between whichever user is farther
    respectively nearer, with share_far > share_near so the weak link gets
    the larger share. `bias` expands the tier's association region.
    """

    density: float
    power: float
    path_loss_exponent: float
    bias: float = 1.0
    pair_distance: float = 50.0
    share_far: float = 0.6
    share_near: float = 0.4

    def __post_init__(self):
        if self.density < 0.0:
            raise ValueError("SmallTier.density must be nonnegative")
        if not self.power > 0.0:
            raise ValueError("SmallTier.power must be positive")
        if not self.path_loss_exponent > 2.0:
            raise ValueError("SmallTier.path_loss_exponent must exceed 2")
        if not self.bias > 0.0:
            raise ValueError("SmallTier.bias must be positive")
        if not self.pair_distance > 0.0:
            raise ValueError("SmallTier.pair_distance must be positive")
        if abs(self.share_far + self.share_near - 1.0) > 1e-9:
            raise ValueError("SmallTier power shares must satisfy share_far + share_near = 1")
        if not self.share_far > self.share_near > 0.0:
            raise ValueError("SmallTier power shares must satisfy share_far > share_near > 0")

    @property
    def delta(self):
        return 2.0 / self.path_loss_exponent


@dataclass(frozen=True)
class NetworkConfig:
    """Full scenario: macro tier, small tiers, propagation and noise.

    `path_loss_factor` (eta) and `noise_power` (sigma^2, watts) may be given
    explicitly; left as None they are derived from the carrier frequency and
    from bandwidth + noise figure respectively. noise_power=0.0 is a valid
    explicit choice (interference-limited analysis).
    """

    macro: MacroTier
    small_tiers: tuple
    carrier_frequency: float = 1.0e9
    bandwidth: float = 1.0e7
    noise_figure_db: float = 10.0
    path_loss_factor: float = None
    noise_power: float = None

    def __post_init__(self):
        object.__setattr__(self, "small_tiers", tuple(self.small_tiers))
        if not self.small_tiers:
            raise ValueError("NetworkConfig.small_tiers must contain at least one tier")
        if not self.carrier_frequency > 0.0:
            raise ValueError("NetworkConfig.carrier_frequency must be positive")
        if not self.bandwidth > 0.0:
            raise ValueError("NetworkConfig.bandwidth must be positive")
        if self.path_loss_factor is not None and not self.path_loss_factor > 0.0:
            raise ValueError("NetworkConfig.path_loss_factor must be positive when given")
        if self.noise_power is not None and self.noise_power < 0.0:
            raise ValueError("NetworkConfig.noise_power must be nonnegative when given")

    @property
    def eta(self):
        if self.path_loss_factor is not None:
            return self.path_loss_factor
        return free_space_reference_gain(self.carrier_frequency)

    @property
    def sigma2(self):
        if self.noise_power is not None:
            return self.noise_power
        return thermal_noise_watts(self.bandwidth, self.noise_figure_db)

    @property
    def num_tiers(self):
        return 1 + len(self.small_tiers)


@dataclass(frozen=True)
class Targets:
    """Target rates in bits per channel use and the implied SINR thresholds.

    rate_typical is demanded by the user under study for its own message;
    rate_connected is demanded of the already-paired user's message during
    cancellation at the near position.
    """

    rate_typical: float
    rate_connected: float

    def __post_init__(self):
        if self.rate_typical < 0.0 or self.rate_connected < 0.0:
            raise ValueError("Targets rates must be nonnegative")

    @property
    def tau_typical(self):
        return 2.0 ** self.rate_typical - 1.0

    @property
    def tau_connected(self):
        return 2.0 ** self.rate_connected - 1.0

    @property
    def tau_orthogonal(self):
        """Threshold for a full-power user that must double its rate to
        deliver rate_typical from half the channel uses."""
        return 2.0 ** (2.0 * self.rate_typical) - 1.0


def biased_power_small(cfg, k, d):
    """Association offer of small tier k at distance d (watts)."""
    if not d > 0.0:
        raise ValueError("distance must be positive")
    tier = cfg.small_tiers[k]
    return tier.share_near * tier.power * cfg.eta * d ** -tier.path_loss_exponent * tier.bias


def biased_power_macro(cfg, d):
    """Association offer of the macro tier at distance d (watts)."""
    if not d > 0.0:
        raise ValueError("distance must be positive")
    macro = cfg.macro
    return macro.array_gain * macro.power * cfg.eta * d ** -macro.path_loss_exponent / macro.users_served


def _tier_entries(cfg, serving):
    """Per-tier (density, weight_ratio, alpha) relative to the serving tier.

    `serving` is a small-tier index, or None for the macro tier. Entries list
    the small tiers in order and the macro tier last. weight_ratio is the
    distance-free association weight of that tier divided by the serving
    tier's; it is the one number that fixes both the void-probability
    exponent and the exclusion radius. Small-to-small ratios compare
    power * bias only (the near-user share is common to the rule on both
    sides and drops out).
    """
    macro = cfg.macro
    beam_gain = macro.array_gain / macro.users_served
    entries = []
    if serving is None:
        reference = macro.power * beam_gain
        for tier in cfg.small_tiers:
            ratio = tier.share_near * tier.power * tier.bias / reference
            entries.append((tier.density, ratio, tier.path_loss_exponent))
        entries.append((macro.density, 1.0, macro.path_loss_exponent))
    else:
        own = cfg.small_tiers[serving]
        for tier in cfg.small_tiers:
            ratio = tier.power * tier.bias / (own.power * own.bias)
            entries.append((tier.density, ratio, tier.path_loss_exponent))
        macro_ratio = macro.power * beam_gain / (own.share_near * own.power * own.bias)
        entries.append((macro.density, macro_ratio, macro.path_loss_exponent))
    return entries


def _serving_alpha(cfg, serving):
    if serving is None:
        return cfg.macro.path_loss_exponent
    return cfg.small_tiers[serving].path_loss_exponent


def exclusion_radius(cfg, serving, interferer, x):
    """Closest an `interferer`-tier BS can be to a user served from distance x.

    Any closer interferer would have offered more biased power and won the
    association. Tier names: small-tier index or None for the macro tier.
    """
    if not x > 0.0:
        raise ValueError("distance must be positive")
    entries = _tier_entries(cfg, serving)
    _, ratio, alpha = entries[len(entries) - 1 if interferer is None else interferer]
    return ratio ** (1.0 / alpha) * x ** (_serving_alpha(cfg, serving) / alpha)


def void_exponent(cfg, serving, x):
    """Log of the probability that no tier beats the serving BS at distance x."""
    alpha_s = _serving_alpha(cfg, serving)
    total = 0.0
    for density, ratio, alpha in _tier_entries(cfg, serving):
        total -= math.pi * density * ratio ** (2.0 / alpha) * x ** (2.0 * alpha_s / alpha)
    return total


def void_length_scale(cfg, serving):
    """Distance where the tightest void term reaches unit exponent.

    Serves as the scale hint for every quadrature against the serving
    distance law of the given tier.
    """
    alpha_s = _serving_alpha(cfg, serving)
    scale = math.inf
    for d, ratio, alpha in _tier_entries(cfg, serving):
        if d > 0.0:
            coef = math.pi * d * ratio ** (2.0 / alpha)
            scale = min(scale, coef ** (-alpha / (2.0 * alpha_s)))
    return scale


@lru_cache(maxsize=None)
def _association_prob(cfg, serving):
    density = cfg.macro.density if serving is None else cfg.small_tiers[serving].density
    if density == 0.0:
        return 0.0
    scale = void_length_scale(cfg, serving)
    value = 2.0 * math.pi * density * integrate(
        lambda r: r * math.exp(void_exponent(cfg, serving, r)), 0.0, math.inf, scale=scale
    )
    return min(value, 1.0)


def association_prob_small(cfg, k):
    """Probability that the typical user attaches to small tier k."""
    return _association_prob(cfg, int(k))


def association_prob_macro(cfg):
    """Probability that the typical user attaches to the macro tier."""
    return _association_prob(cfg, None)


def common_path_loss_exponent(cfg):
    """The single shared exponent, or a ValueError where tiers differ."""
    alpha = cfg.macro.path_loss_exponent
    for tier in cfg.small_tiers:
        if tier.path_loss_exponent != alpha:
            raise ValueError("closed forms require one path_loss_exponent shared by every tier")
    return alpha


def effective_density(cfg, serving):
    """Equal-exponent reduction: density of the one-tier field with the same void law.

    With a shared alpha the serving-distance law is Rayleigh with parameter
    pi * effective_density and the association probability is the serving
    tier's density over this value.
    """
    alpha = common_path_loss_exponent(cfg)
    total = 0.0
    for density, ratio, _ in _tier_entries(cfg, serving):
        total += density * ratio ** (2.0 / alpha)
    return total


def association_prob_closed(cfg, k=None):
    """Equal-exponent association probability; k is a small-tier index or None for macro."""
    density = cfg.macro.density if k is None else cfg.small_tiers[k].density
    return density / effective_density(cfg, k)


def serving_distance_pdf_small(cfg, k, x):
    """Density of the distance to the serving BS, conditioned on small tier k."""
    if x < 0.0:
        raise ValueError("distance must be nonnegative")
    if x == 0.0:
        return 0.0
    a_k = association_prob_small(cfg, k)
    if a_k == 0.0:
        raise ValueError("tier is never selected; serving distance undefined")
    tier = cfg.small_tiers[k]
    return 2.0 * math.pi * tier.density * x * math.exp(void_exponent(cfg, k, x)) / a_k


def serving_distance_pdf_macro(cfg, x):
    """Density of the distance to the serving BS, conditioned on the macro tier."""
    if x < 0.0:
        raise ValueError("distance must be nonnegative")
    if x == 0.0:
        return 0.0
    a_1 = association_prob_macro(cfg)
    return 2.0 * math.pi * cfg.macro.density * x * math.exp(void_exponent(cfg, None, x)) / a_1
