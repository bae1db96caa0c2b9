"""End-to-end acceptance gate for the dual-engine evaluator.

Each test checks one shipping criterion and prints exactly one labeled
pass/fail line (emitted outside pytest's capture so the lines always appear
in the run log), then asserts.  The criteria cross-validate the analytical
quadrature engine against the Monte Carlo engine at the bundled benchmark
parameter sets, pin the closed forms to their general counterparts, and
freeze the reproducibility contract of the command line front end.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate as si

from hetnoma import cli
from hetnoma.coverage import (
    coverage_probability,
    coverage_probability_closed,
    macro_interference_exponent,
    small_interference_exponent,
)
from hetnoma.energy import energy_efficiency, macro_power_total
from hetnoma.model import (
    MacroTier,
    NetworkConfig,
    SmallTier,
    Targets,
    association_prob_closed,
    association_prob_macro,
    association_prob_small,
    dbm_to_watts,
    exclusion_radius,
)
from hetnoma.montecarlo import simulate_records, summarize
from hetnoma.rates import (
    ergodic_rate_small,
    macro_rate_lower_bound,
    macro_rate_lower_bound_closed,
    spectrum_efficiency,
)
from hetnoma.specfun import hyp2f1_coverage

MACRO_DENSITY = 1.0 / (math.pi * 500.0**2)
BIAS_GRID = (1.0, 2.0, 5.0, 10.0, 20.0, 40.0)
UNIT_TARGETS = Targets(1.0, 1.0)


def _report(capsys, number, ok, detail):
    with capsys.disabled():
        print("\ncriterion %d: %s  [%s]" % (number, "PASS" if ok else "FAIL", detail))
    assert ok, "criterion %d: %s" % (number, detail)


def _config(
    *,
    power1=10.0,
    antennas=200,
    users=15,
    alpha1=3.5,
    small=((0.1, 20.0, 1.0, 10.0, 0.6, 4.0),),
    noise_power=None,
):
    """small = tuple of (power, density_ratio, bias, pair_distance, share_far, alpha)."""
    tiers = tuple(
        SmallTier(
            density=ratio * MACRO_DENSITY,
            power=power,
            path_loss_exponent=alpha,
            bias=bias,
            pair_distance=distance,
            share_far=share_far,
            share_near=1.0 - share_far,
        )
        for power, ratio, bias, distance, share_far, alpha in small
    )
    return NetworkConfig(
        macro=MacroTier(
            density=MACRO_DENSITY,
            power=power1,
            path_loss_exponent=alpha1,
            antennas=antennas,
            users_served=users,
        ),
        small_tiers=tiers,
        noise_power=noise_power,
    )


def _fig3_config(bias, share_far=0.6):
    return _config(small=((0.1, 20.0, bias, 10.0, share_far, 4.0),))


@pytest.fixture(scope="module")
def fig3_sweep():
    """Both benchmark coverage curves at 1e5 trials per point, with the
    per-curve wall time; shared by the accuracy and the trend criteria."""
    curves = {}
    for share_far in (0.6, 0.9):
        start = time.perf_counter()
        points = []
        for bias in BIAS_GRID:
            cfg = _fig3_config(bias, share_far)
            records = simulate_records(cfg, UNIT_TARGETS, 100_000, 101)
            points.append(
                {
                    "bias": bias,
                    "analytic": coverage_probability(cfg, 0, UNIT_TARGETS).total,
                    "mc": summarize(cfg, records, "coverage", 0),
                    "oma": summarize(cfg, records, "oma_coverage", 0),
                }
            )
            del records
        curves[share_far] = {
            "points": points,
            "seconds": time.perf_counter() - start,
        }
    return curves


def test_criterion_1_coverage_agrees_with_simulation(fig3_sweep, capsys):
    """Analytical coverage within 0.015 of a 1e5-trial simulation at every
    benchmark point, each 6-point curve finishing inside 5 minutes."""
    worst = 0.0
    times = []
    for share_far, curve in fig3_sweep.items():
        times.append(curve["seconds"])
        for point in curve["points"]:
            worst = max(worst, abs(point["analytic"] - point["mc"].mean))
    ok = worst <= 0.015 and all(t <= 300.0 for t in times)
    _report(
        capsys, 1, ok,
        "max |analytic - simulated| %.4f (tolerance 0.015); curve times %s s"
        % (worst, "/".join("%.0f" % t for t in times)),
    )


def test_criterion_2_closed_forms_match_quadrature(capsys):
    """Equal-exponent, noise-free closed forms against the general
    quadrature pipeline: coverage 1e-5, association 1e-6, macro rate 1e-6."""
    configs = (
        _config(alpha1=4.0, noise_power=0.0,
                small=((0.1, 20.0, 1.0, 10.0, 0.6, 4.0),)),
        _config(power1=5.0, antennas=64, users=8, alpha1=4.0, noise_power=0.0,
                small=((1.0, 5.0, 7.0, 25.0, 0.8, 4.0),)),
    )
    target_sets = (UNIT_TARGETS, Targets(0.5, 0.75))
    worst_cov = worst_assoc = worst_rate = 0.0
    for cfg in configs:
        for targets in target_sets:
            closed = coverage_probability_closed(cfg, 0, targets)
            general = coverage_probability(cfg, 0, targets).total
            worst_cov = max(worst_cov, abs(closed - general) / general)
        for k in (None, 0):
            closed = association_prob_closed(cfg, k)
            general = (
                association_prob_macro(cfg)
                if k is None
                else association_prob_small(cfg, k)
            )
            worst_assoc = max(worst_assoc, abs(closed - general) / general)
        closed = macro_rate_lower_bound_closed(cfg)
        general = macro_rate_lower_bound(cfg)
        worst_rate = max(worst_rate, abs(closed - general) / general)
    ok = worst_cov <= 1e-5 and worst_assoc <= 1e-6 and worst_rate <= 1e-6
    _report(
        capsys, 2, ok,
        "rel err: coverage %.2e (<=1e-5), association %.2e (<=1e-6), "
        "macro rate %.2e (<=1e-6)" % (worst_cov, worst_assoc, worst_rate),
    )


def test_criterion_3_association_probabilities_sum_to_one(capsys):
    """Macro plus all small-tier association probabilities sum to 1 within
    1e-6 across 100 randomized networks."""
    rng = np.random.default_rng(20260816)
    worst = 0.0
    for _ in range(100):
        num_small = int(rng.integers(1, 4))
        share_far = float(rng.uniform(0.51, 0.95))
        users = int(rng.integers(1, 17))
        small = tuple(
            (
                dbm_to_watts(float(rng.uniform(20.0, 46.0))),
                float(10.0 ** rng.uniform(0.0, 2.0)),
                float(10.0 ** rng.uniform(-0.3, 1.6)),
                float(rng.uniform(5.0, 100.0)),
                share_far,
                float(rng.uniform(2.6, 4.6)),
            )
            for _ in range(num_small)
        )
        cfg = _config(
            power1=dbm_to_watts(float(rng.uniform(30.0, 46.0))),
            antennas=users + int(rng.integers(0, 241)),
            users=users,
            alpha1=float(rng.uniform(2.6, 4.4)),
            small=small,
        )
        total = association_prob_macro(cfg) + sum(
            association_prob_small(cfg, k) for k in range(num_small)
        )
        worst = max(worst, abs(total - 1.0))
    ok = worst <= 1e-6
    _report(capsys, 3, ok, "max |sum - 1| %.2e over 100 networks (<=1e-6)" % worst)


def test_criterion_4_blocked_power_split_gives_exact_zero(capsys):
    """When the far share cannot carry either demanded rate the analytical
    coverage is exactly zero and no simulated trial is ever covered."""
    cfg = _fig3_config(5.0, 0.6)
    targets = Targets(2.0, 2.0)  # threshold 3 > share_far / share_near
    breakdown = coverage_probability(cfg, 0, targets)
    records = simulate_records(cfg, targets, 100_000, 17)
    est = summarize(cfg, records, "coverage", 0)
    ok = (
        breakdown.total == 0.0
        and breakdown.zero_by_power_split
        and est.mean == 0.0
        and est.effective_trials > 1000
    )
    _report(
        capsys, 4, ok,
        "analytic %.1f, %d covered among %d small-cell trials"
        % (breakdown.total, round(est.mean * est.effective_trials),
           est.effective_trials),
    )


def test_criterion_5_kernels_match_direct_integrals(capsys):
    """The hypergeometric kernel reproduces its arctangent special case to
    1e-10, and both interference-exponent forms match direct numerical
    Campbell integrals to 1e-8 over a log grid of transforms and distances."""
    xs = np.concatenate(([0.0], np.logspace(-8.0, 4.0, 49)))
    worst_arctan = 0.0
    for x in xs:
        reference = 1.0 if x == 0.0 else math.atan(math.sqrt(x)) / math.sqrt(x)
        worst_arctan = max(worst_arctan, abs(hyp2f1_coverage(0.5, x) - reference))

    def direct_small(cfg, k, s, x):
        total = 0.0
        for i, tier in enumerate(cfg.small_tiers):
            c = s * tier.power * cfg.eta
            alpha = tier.path_loss_exponent
            w = exclusion_radius(cfg, k, i, x)

            def integrand(t, c=c, alpha=alpha):
                y = c * t**alpha
                return y / (1.0 + y) / t**3

            knee = c ** (-1.0 / alpha)
            points = [knee] if knee < 1.0 / w else None
            value, _ = si.quad(
                integrand, 0.0, 1.0 / w, points=points,
                epsabs=0.0, epsrel=1e-11, limit=500,
            )
            total += 2.0 * math.pi * tier.density * value
        return total

    def direct_macro(cfg, k, s, x):
        macro = cfg.macro
        scaled = s * macro.power * cfg.eta / macro.users_served
        alpha = macro.path_loss_exponent
        w = exclusion_radius(cfg, k, None, x)

        def integrand(t):
            return -math.expm1(
                -macro.users_served * math.log1p(scaled * t**alpha)
            ) / t**3

        knee = scaled ** (-1.0 / alpha)
        points = [knee] if knee < 1.0 / w else None
        value, _ = si.quad(
            integrand, 0.0, 1.0 / w, points=points,
            epsabs=0.0, epsrel=1e-11, limit=500,
        )
        return 2.0 * math.pi * macro.density * value

    worst_small = worst_macro = 0.0
    scenarios = (
        (_config(), 0),
        (_config(antennas=64, users=8,
                 small=((0.1, 20.0, 1.0, 10.0, 0.6, 4.0),
                        (1.0, 5.0, 10.0, 50.0, 0.6, 4.0))), 1),
    )
    for cfg, k in scenarios:
        tier = cfg.small_tiers[k]
        for x in np.logspace(0.5, 3.0, 4):
            for tau in np.logspace(-2.0, 2.0, 5):
                s = tau * x**tier.path_loss_exponent / (tier.power * cfg.eta)
                mine = small_interference_exponent(cfg, k, s, x)
                oracle = direct_small(cfg, k, s, x)
                worst_small = max(worst_small, abs(mine - oracle) / oracle)
                mine = macro_interference_exponent(cfg, k, s, x)
                oracle = direct_macro(cfg, k, s, x)
                worst_macro = max(worst_macro, abs(mine - oracle) / oracle)
    ok = worst_arctan <= 1e-10 and worst_small <= 1e-8 and worst_macro <= 1e-8
    _report(
        capsys, 5, ok,
        "arctan |err| %.1e (<=1e-10); transform rel err small %.1e, "
        "macro %.1e (<=1e-8)" % (worst_arctan, worst_small, worst_macro),
    )


def test_criterion_6_macro_rate_bound_is_a_lower_bound(capsys):
    """The analytical macro rate never exceeds the simulated rate by more
    than the 99% confidence halfwidth at the macro-efficiency benchmark."""
    worst_margin = math.inf
    combos = 0
    for power1 in (1.0, 10.0):
        for bias in (1.0, 5.0, 10.0, 20.0):
            cfg = _config(
                power1=power1, antennas=50, users=5,
                small=((0.1, 100.0, bias, 50.0, 0.6, 4.0),),
            )
            bound = macro_rate_lower_bound(cfg)
            records = simulate_records(cfg, UNIT_TARGETS, 20_000, 29)
            est = summarize(cfg, records, "macro_rate")
            worst_margin = min(
                worst_margin, est.mean + est.ci_halfwidth_99 - bound
            )
            combos += 1
    ok = worst_margin >= 0.0
    _report(
        capsys, 6, ok,
        "min (simulated + CI - bound) %.4f bits over %d setups (>=0)"
        % (worst_margin, combos),
    )


def test_criterion_7_benchmark_trends_hold(fig3_sweep, capsys):
    """Qualitative behaviour across the bundled benchmarks: offload and
    ordering trends all point the expected way."""
    failures = []

    def check(name, ok):
        if not ok:
            failures.append(name)

    def nonincreasing(values):
        return all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    # growing macro arrays recapture users, at any small-cell bias
    for bias2 in (1.0, 5.0):
        values = [
            association_prob_macro(
                _config(
                    antennas=m,
                    small=((1.0, 20.0, bias2, 50.0, 0.6, 4.0),
                           (0.1, 20.0, 20.0 * bias2, 50.0, 0.6, 4.0)),
                )
            )
            for m in (50, 100, 150, 200, 250, 300)
        ]
        check("macro association rises with antennas", nonincreasing(values[::-1]))

    # stronger small-cell bias admits weaker links: coverage falls, and the
    # power-domain pairing stays ahead of the orthogonal split
    for share_far, curve in fig3_sweep.items():
        points = curve["points"]
        check(
            "coverage falls with bias (share %.1f)" % share_far,
            nonincreasing([p["analytic"] for p in points]),
        )
        for p in points:
            slack = p["mc"].ci_halfwidth_99 + p["oma"].ci_halfwidth_99
            check(
                "pairing covers at least the orthogonal baseline",
                p["mc"].mean >= p["oma"].mean - slack,
            )

    # pair throughput falls with bias and beats the orthogonal baseline
    for power2 in (0.1, 1.0):
        analytic = []
        for bias in (1.0, 5.0, 40.0):
            cfg = _config(small=((power2, 20.0, bias, 50.0, 0.6, 4.0),))
            analytic.append(ergodic_rate_small(cfg, 0))
            records = simulate_records(cfg, UNIT_TARGETS, 10_000, 31)
            pair = summarize(cfg, records, "pair_throughput", 0)
            oma = summarize(cfg, records, "oma_pair_throughput", 0)
            slack = pair.ci_halfwidth_99 + oma.ci_halfwidth_99
            check(
                "pair throughput beats the orthogonal baseline",
                pair.mean >= oma.mean - slack,
            )
        check("pair throughput falls with bias", nonincreasing(analytic))

    # offloading shortens macro links: the per-stream rate grows with bias
    for power1 in (1.0, 10.0):
        values = [
            macro_rate_lower_bound(
                _config(
                    power1=power1, antennas=50, users=5,
                    small=((0.1, 100.0, bias, 50.0, 0.6, 4.0),),
                )
            )
            for bias in (1.0, 5.0, 10.0, 20.0)
        ]
        check("macro rate rises with bias", nonincreasing(values[::-1]))

    # energy efficiency: larger arrays burn more power than they earn back,
    # small cells dominate the macro tier, pairing beats the orthogonal split
    macro_eff = {}
    for antennas in (100, 200):
        for bias in (1.0, 40.0):
            cfg = _config(
                power1=1.0, antennas=antennas,
                small=((0.1, 20.0, bias, 10.0, 0.6, 4.0),),
            )
            report = energy_efficiency(cfg, rate_report=spectrum_efficiency(cfg))
            macro_eff[(antennas, bias)] = report.macro_efficiency
            check(
                "small-cell efficiency exceeds macro efficiency",
                report.small_efficiencies[0] > report.macro_efficiency,
            )
            records = simulate_records(cfg, UNIT_TARGETS, 10_000, 37)
            net = summarize(cfg, records, "energy_efficiency")
            oma = summarize(cfg, records, "oma_energy_efficiency")
            slack = net.ci_halfwidth_99 + oma.ci_halfwidth_99
            check(
                "network efficiency beats the orthogonal baseline",
                net.mean >= oma.mean - slack,
            )
    for bias in (1.0, 40.0):
        check(
            "macro efficiency falls with antennas",
            macro_eff[(200, bias)] < macro_eff[(100, bias)],
        )

    ok = not failures
    _report(
        capsys, 7, ok,
        "all benchmark trends hold" if ok else "violated: " + "; ".join(sorted(set(failures))),
    )


def test_criterion_8_macro_power_model_reference_value(capsys):
    """Total macro power draw at the 200-antenna 15-user 30 dBm operating
    point equals the frozen reference to 1e-9 relative."""
    cfg = _config(power1=dbm_to_watts(30.0))
    value = macro_power_total(cfg)
    expected = 278.5031677
    rel = abs(value - expected) / expected
    _report(
        capsys, 8, rel <= 1e-9,
        "macro power %.10f W vs %.10f W, rel err %.2e (<=1e-9)"
        % (value, expected, rel),
    )


def test_criterion_9_cli_output_is_worker_invariant(tmp_path, capsys):
    """The benchmark coverage sweep from the command line produces
    byte-identical CSV output with 1, 4 and 16 worker threads."""
    payloads = {}
    for workers in (1, 4, 16):
        out = tmp_path / ("workers_%d" % workers)
        code = cli.main([
            "figure", "fig3", "--seed", "7", "--trials", "400",
            "--workers", str(workers), "--out", str(out),
        ])
        assert code == 0
        payloads[workers] = (out / "fig3.csv").read_bytes()
    ok = payloads[1] == payloads[4] == payloads[16]
    _report(
        capsys, 9, ok,
        "fig3.csv identical across 1/4/16 workers (%d bytes)" % len(payloads[1]),
    )
