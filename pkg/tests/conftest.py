"""Shared scenario builders for the test suite.

The default numbers mirror the evaluation setups used throughout the
acceptance experiments: a sparse 3.5-exponent macro tier with a 200-antenna
15-user array, overlaid by denser fourth-power small-cell tiers.
"""

import math

from hetnoma.model import MacroTier, NetworkConfig, SmallTier

MACRO_DENSITY = 1.0 / (500.0**2 * math.pi)


def two_tier_config(
    *,
    power1=10.0,
    power2=0.1,
    density_ratio=20.0,
    bias=1.0,
    pair_distance=10.0,
    share_far=0.6,
    share_near=0.4,
    antennas=200,
    users=15,
    alpha1=3.5,
    alpha2=4.0,
    noise_power=None,
    path_loss_factor=None,
):
    macro = MacroTier(
        density=MACRO_DENSITY,
        power=power1,
        path_loss_exponent=alpha1,
        antennas=antennas,
        users_served=users,
    )
    small = SmallTier(
        density=density_ratio * MACRO_DENSITY,
        power=power2,
        path_loss_exponent=alpha2,
        bias=bias,
        pair_distance=pair_distance,
        share_far=share_far,
        share_near=share_near,
    )
    return NetworkConfig(
        macro=macro,
        small_tiers=(small,),
        noise_power=noise_power,
        path_loss_factor=path_loss_factor,
    )


def three_tier_config(*, antennas=50, bias2=1.0, pair_distance=50.0):
    macro = MacroTier(
        density=MACRO_DENSITY,
        power=10.0,
        path_loss_exponent=3.5,
        antennas=antennas,
        users_served=15,
    )
    tier2 = SmallTier(
        density=20.0 * MACRO_DENSITY,
        power=1.0,
        path_loss_exponent=4.0,
        bias=bias2,
        pair_distance=pair_distance,
    )
    tier3 = SmallTier(
        density=20.0 * MACRO_DENSITY,
        power=0.1,
        path_loss_exponent=4.0,
        bias=20.0 * bias2,
        pair_distance=pair_distance,
    )
    return NetworkConfig(macro=macro, small_tiers=(tier2, tier3))
