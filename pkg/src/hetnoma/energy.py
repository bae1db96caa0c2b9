"""Power consumption and energy efficiency per tier.

Small cells spend a static term plus the radiated power scaled by the
amplifier efficiency.  The multi-antenna macro station adds signal
processing that grows polynomially with the number of simultaneously served
streams and linearly with the array size at each polynomial order.  Energy
efficiency divides the tier throughput by the tier's total consumed power,
and the network figure weights tiers by association probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import model, rates


@dataclass(frozen=True)
class PowerModel:
    """Consumed-power parameters; powers in watts.

    `stream_coefficients[a-1]` multiplies streams**a and
    `array_coefficients[a-1]` multiplies streams**(a-1) * antennas, for
    polynomial orders a = 1, 2, 3 of the macro processing load.
    """

    macro_static: float = 4.0
    small_static: float = 2.0
    macro_amplifier_efficiency: float = 0.4
    small_amplifier_efficiency: float = 0.4
    stream_coefficients: tuple = (4.8, 0.0, 2.08e-8)
    array_coefficients: tuple = (1.0, 9.5e-8, 6.25e-8)

    def __post_init__(self):
        if self.macro_static < 0.0 or self.small_static < 0.0:
            raise ValueError("static power: must be nonnegative")
        for eff in (self.macro_amplifier_efficiency, self.small_amplifier_efficiency):
            if not 0.0 < eff <= 1.0:
                raise ValueError("amplifier efficiency: must lie in (0, 1]")
        for coeffs in (self.stream_coefficients, self.array_coefficients):
            if len(coeffs) != 3 or any(c < 0.0 for c in coeffs):
                raise ValueError("coefficients: need three nonnegative entries")


DEFAULT_POWER_MODEL = PowerModel()


def macro_power_total(cfg, power_model=DEFAULT_POWER_MODEL):
    """Total consumed power of one macro station in watts."""
    macro = cfg.macro
    n = float(macro.users_served)
    m = float(macro.antennas)
    processing = 0.0
    for a, (cn, cm) in enumerate(
        zip(power_model.stream_coefficients, power_model.array_coefficients), start=1
    ):
        processing += n**a * cn + n ** (a - 1) * m * cm
    return (
        power_model.macro_static
        + processing
        + macro.power / power_model.macro_amplifier_efficiency
    )


def small_power_total(cfg, k, power_model=DEFAULT_POWER_MODEL):
    """Total consumed power of one tier-k small cell in watts."""
    tier = cfg.small_tiers[k]
    return (
        power_model.small_static
        + tier.power / power_model.small_amplifier_efficiency
    )


@dataclass(frozen=True)
class EnergyReport:
    """Consumed powers, per-tier efficiencies, and the network figure.

    Efficiencies are throughput per consumed watt in bits/s/Hz/W; the
    network value weights tiers by association probability.
    """

    small_powers: tuple
    macro_power: float
    small_efficiencies: tuple
    macro_efficiency: float
    network_efficiency: float


def energy_efficiency(cfg, power_model=DEFAULT_POWER_MODEL, rate_report=None):
    """Evaluate tier and network energy efficiency.

    Pass a precomputed `rates.spectrum_efficiency` report to reuse its
    expensive rate integrals; otherwise one is computed here.
    """
    if rate_report is None:
        rate_report = rates.spectrum_efficiency(cfg)
    macro_power = macro_power_total(cfg, power_model)
    small_powers = tuple(
        small_power_total(cfg, k, power_model) for k in range(len(cfg.small_tiers))
    )
    macro_eff = (
        cfg.macro.users_served * rate_report.macro_rate / macro_power
    )
    small_effs = tuple(
        rate / power for rate, power in zip(rate_report.small_rates, small_powers)
    )
    network = rate_report.macro_association * macro_eff + sum(
        a * e for a, e in zip(rate_report.small_associations, small_effs)
    )
    return EnergyReport(
        small_powers=small_powers,
        macro_power=macro_power,
        small_efficiencies=small_effs,
        macro_efficiency=macro_eff,
        network_efficiency=network,
    )
