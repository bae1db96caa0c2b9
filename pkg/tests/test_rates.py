import math

import pytest
from conftest import MACRO_DENSITY, two_tier_config
from scipy import integrate as si

from hetnoma import model
from hetnoma.coverage import (
    laplace_macro_interference,
    laplace_small_interference,
    macro_interference_exponent,
    small_interference_exponent,
)
from hetnoma.model import MacroTier, NetworkConfig, SmallTier
from hetnoma.rates import (
    average_macro_interference,
    ergodic_rate_far,
    ergodic_rate_near,
    ergodic_rate_small,
    interference_exponent_total,
    macro_rate_lower_bound,
    macro_rate_lower_bound_closed,
    sic_ccdf_far_partner,
    sic_ccdf_far_typical,
    sic_ccdf_near_partner,
    sic_ccdf_near_typical,
    spectrum_efficiency,
)


def test_exponent_total_is_product_of_laplaces():
    cfg = two_tier_config(bias=5.0)
    for s, x in [(1e3, 4.0), (1e7, 30.0)]:
        total = interference_exponent_total(cfg, 0, s, x)
        product = laplace_small_interference(cfg, 0, s, x) * laplace_macro_interference(
            cfg, 0, s, x
        )
        assert math.exp(-total) == pytest.approx(product, rel=1e-12)


def _inside_mass(cfg, k):
    tier = cfg.small_tiers[k]
    val, _ = si.quad(
        lambda x: model.serving_distance_pdf_small(cfg, k, x),
        0.0,
        tier.pair_distance,
        epsabs=1e-14,
        epsrel=1e-11,
    )
    return val


def test_zero_threshold_tails_reduce_to_pairing_masses():
    cfg = two_tier_config(bias=5.0)
    inside = _inside_mass(cfg, 0)
    assert sic_ccdf_far_partner(cfg, 0, 0.0) == pytest.approx(inside, rel=1e-6)
    assert sic_ccdf_near_typical(cfg, 0, 0.0) == pytest.approx(inside, rel=1e-6)
    assert sic_ccdf_far_typical(cfg, 0, 0.0) == pytest.approx(1.0 - inside, rel=1e-6)
    assert sic_ccdf_near_partner(cfg, 0, 0.0) == pytest.approx(1.0 - inside, rel=1e-6)


def test_tails_are_valid_and_decreasing():
    cfg = two_tier_config(bias=5.0)
    grid = (0.0, 0.2, 0.5, 1.0, 1.4)
    for tail in (
        sic_ccdf_far_partner,
        sic_ccdf_near_typical,
        sic_ccdf_far_typical,
        sic_ccdf_near_partner,
    ):
        vals = [tail(cfg, 0, z) for z in grid]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        sic_ccdf_near_typical(cfg, 0, -0.5)


def test_superimposed_decode_tails_vanish_at_power_ratio():
    cfg = two_tier_config(bias=5.0)
    tier = cfg.small_tiers[0]
    z_cut = tier.share_far / tier.share_near
    assert sic_ccdf_far_partner(cfg, 0, z_cut) == 0.0
    assert sic_ccdf_far_typical(cfg, 0, z_cut + 1.0) == 0.0
    assert sic_ccdf_far_partner(cfg, 0, z_cut - 1e-9) >= 0.0


def test_near_rate_against_swapped_integration_order():
    # Same double integral with the distance integral outermost, done with
    # plain nested library quadrature: checks prefactors, cutoffs and the
    # semi-infinite transform.
    cfg = two_tier_config(bias=5.0)
    k = 0
    tier = cfg.small_tiers[k]
    alpha = tier.path_loss_exponent
    r = tier.pair_distance
    z_cut = tier.share_far / tier.share_near
    pref = 2.0 * math.pi * tier.density / model.association_prob_small(cfg, k)

    def own_inner(x):
        def g(z):
            s = z * x**alpha / (tier.share_near * tier.power * cfg.eta)
            return math.exp(
                -s * cfg.sigma2 - interference_exponent_total(cfg, k, s, x)
            ) / (1.0 + z)

        head, _ = si.quad(g, 0.0, 100.0, epsabs=1e-12, epsrel=1e-9, limit=300)
        tail, _ = si.quad(
            lambda t: g(math.exp(t)) * math.exp(t),
            math.log(100.0),
            math.log(1e14),
            epsabs=1e-12,
            epsrel=1e-9,
            limit=300,
        )
        return head + tail

    def partner_inner(x):
        def g(z):
            gap = tier.share_far - tier.share_near * z
            s = z * r**alpha / (gap * tier.power * cfg.eta)
            return math.exp(
                -s * cfg.sigma2 - interference_exponent_total(cfg, k, s, x)
            ) / (1.0 + z)

        val, _ = si.quad(g, 0.0, z_cut, epsabs=1e-12, epsrel=1e-9, limit=300)
        return val

    def outer(x):
        lam = math.exp(model.void_exponent(cfg, k, x))
        return x * lam * (own_inner(x) + partner_inner(x))

    want, _ = si.quad(outer, 0.0, r, epsabs=1e-12, epsrel=1e-8, limit=200)
    want *= pref / math.log(2.0)
    got = ergodic_rate_near(cfg, k)
    assert got == pytest.approx(want, rel=1e-4)


def test_interference_limited_rates_are_scale_invariant():
    # With zero receiver noise and one common path-loss exponent every SINR
    # is a ratio of power-law terms, so shrinking all distances while
    # thickening all densities by the matching factor must leave the rates
    # unchanged.  (Mixed exponents break this symmetry.)
    base = two_tier_config(bias=5.0, noise_power=0.0, alpha1=4.0, alpha2=4.0)
    c = 3.0
    scaled = NetworkConfig(
        macro=MacroTier(
            density=base.macro.density * c**2,
            power=base.macro.power,
            path_loss_exponent=base.macro.path_loss_exponent,
            antennas=base.macro.antennas,
            users_served=base.macro.users_served,
        ),
        small_tiers=tuple(
            SmallTier(
                density=t.density * c**2,
                power=t.power,
                path_loss_exponent=t.path_loss_exponent,
                bias=t.bias,
                pair_distance=t.pair_distance / c,
                share_far=t.share_far,
                share_near=t.share_near,
            )
            for t in base.small_tiers
        ),
        noise_power=0.0,
    )
    assert ergodic_rate_near(scaled, 0) == pytest.approx(
        ergodic_rate_near(base, 0), rel=1e-5
    )
    assert ergodic_rate_far(scaled, 0) == pytest.approx(
        ergodic_rate_far(base, 0), rel=1e-5
    )


def test_rates_monotone_in_noise_and_zero_density():
    quiet = two_tier_config(bias=5.0, noise_power=0.0)
    loud = two_tier_config(bias=5.0, noise_power=1e-9)
    assert ergodic_rate_small(quiet, 0) > ergodic_rate_small(loud, 0)
    empty = two_tier_config(density_ratio=0.0)
    assert ergodic_rate_small(empty, 0) == 0.0
    assert sic_ccdf_near_typical(empty, 0, 1.0) == 0.0


def test_average_macro_interference_hand_value():
    cfg = two_tier_config()
    macro = cfg.macro
    x = 100.0
    own = (
        2.0 * math.pi * macro.density * macro.power * cfg.eta
        * x ** (2.0 - macro.path_loss_exponent)
        / (macro.path_loss_exponent - 2.0)
    )
    tier = cfg.small_tiers[0]
    w = model.exclusion_radius(cfg, None, 0, x)
    small = (
        2.0 * math.pi * tier.density * tier.power * cfg.eta
        * w ** (2.0 - tier.path_loss_exponent)
        / (tier.path_loss_exponent - 2.0)
    )
    assert average_macro_interference(cfg, x) == pytest.approx(own + small, rel=1e-12)
    with pytest.raises(ValueError):
        average_macro_interference(cfg, 0.0)


def test_macro_bound_closed_matches_quadrature():
    cfg = two_tier_config(alpha1=4.0, alpha2=4.0, bias=3.0)
    assert macro_rate_lower_bound_closed(cfg) == pytest.approx(
        macro_rate_lower_bound(cfg), rel=1e-6
    )


def test_macro_bound_single_tier_hand_formula():
    # Macro-only network with a common exponent: the serving distance is
    # Rayleigh(pi*lam) and the bound collapses to explicit moments.
    lam = MACRO_DENSITY
    cfg = NetworkConfig(
        macro=MacroTier(
            density=lam, power=10.0, path_loss_exponent=4.0, antennas=64, users_served=8
        ),
        small_tiers=(
            SmallTier(density=0.0, power=1.0, path_loss_exponent=4.0),
        ),
    )
    psi = 2.0 * math.pi * lam * 10.0 * cfg.eta / 2.0
    denom = psi / (math.pi * lam) + cfg.sigma2 * math.gamma(3.0) / (math.pi * lam) ** 2
    gain = 10.0 * (64 - 8 + 1) * cfg.eta / 8
    want = math.log2(1.0 + gain / denom)
    assert macro_rate_lower_bound_closed(cfg) == pytest.approx(want, rel=1e-12)
    assert macro_rate_lower_bound(cfg) == pytest.approx(want, rel=1e-6)


def test_macro_bound_monotone_in_antennas():
    small = macro_rate_lower_bound(two_tier_config(antennas=100))
    large = macro_rate_lower_bound(two_tier_config(antennas=400))
    assert large > small


def test_spectrum_efficiency_combines_components():
    cfg = two_tier_config(bias=5.0)
    report = spectrum_efficiency(cfg)
    assert report.small_rates[0] == pytest.approx(ergodic_rate_small(cfg, 0), rel=1e-9)
    assert report.macro_rate == pytest.approx(macro_rate_lower_bound(cfg), rel=1e-12)
    want = (
        report.macro_association * cfg.macro.users_served * report.macro_rate
        + report.small_associations[0] * report.small_rates[0]
    )
    assert report.spectrum_efficiency == pytest.approx(want, rel=1e-12)
    assert report.macro_association + sum(report.small_associations) == pytest.approx(
        1.0, abs=1e-6
    )
