"""Monte Carlo engine cross-validating the analytical expressions.

Each trial drops every tier as an independent Poisson field on a disc around
the typical user, attaches fading marks, and evaluates association, SINRs,
coverage, and rates exactly as defined by the system model, with none of the
analytical machinery involved.  The downlink split and its orthogonal-access
benchmark are evaluated on the same sampled network, so scheme comparisons
are paired.

Reproducibility contract: trial t of a run keyed by `seed` uses the stream
``default_rng([seed, t])`` and a fixed draw order (tier counts in one call,
then squared distances tier by tier with the macro tier last, then macro
interference marks, then small-tier fading marks tier by tier, then the
serving-array fading mark).  Results therefore depend only on (config,
targets, seed, trials, options) and never on how trials are partitioned
across workers.  The optional independent partner field uses the child
stream ``default_rng([seed, t, 1])``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energy import DEFAULT_POWER_MODEL, macro_power_total, small_power_total

# Two-sided 99% normal quantile for confidence halfwidths.
Z99 = 2.5758293035489004

DEFAULT_REGION_RADIUS = 1e4

MACRO = -1
UNSERVED = -2

METRICS = (
    "association",
    "coverage",
    "pair_throughput",
    "macro_rate",
    "spectrum_efficiency",
    "energy_efficiency",
    "oma_association",
    "oma_coverage",
    "oma_pair_throughput",
    "oma_spectrum_efficiency",
    "oma_energy_efficiency",
)


@dataclass(frozen=True)
class Field:
    """One sampled interference geometry around the typical user.

    Distances are stored squared; `small_marks` carry unit-mean exponential
    fading, `macro_marks` the per-station effective interference fading of
    the multi-stream array, and `macro_serving_mark` the beamformed serving
    fade used when the macro tier serves.
    """

    small_dist2: tuple
    small_marks: tuple
    macro_dist2: np.ndarray
    macro_marks: np.ndarray
    macro_serving_mark: float


def sample_field(cfg, seed, trial, region_radius=DEFAULT_REGION_RADIUS):
    """Draw the trial's network realization (see the module docstring for
    the fixed draw order)."""
    rng = np.random.default_rng([seed, trial])
    area = math.pi * region_radius**2
    means = [t.density * area for t in cfg.small_tiers] + [cfg.macro.density * area]
    counts = rng.poisson(means)
    r2 = region_radius**2
    small_dist2 = tuple(r2 * rng.random(int(n)) for n in counts[:-1])
    macro_dist2 = r2 * rng.random(int(counts[-1]))
    macro_marks = rng.gamma(cfg.macro.users_served, 1.0, macro_dist2.size)
    small_marks = tuple(rng.exponential(1.0, d.size) for d in small_dist2)
    serving_mark = float(rng.gamma(cfg.macro.array_gain, 1.0))
    return Field(small_dist2, small_marks, macro_dist2, macro_marks, serving_mark)


def sample_partner_field(cfg, seed, trial, region_radius=DEFAULT_REGION_RADIUS):
    """Independent interference geometry and serving fade for the user at
    the pair distance, from the trial's child stream."""
    rng = np.random.default_rng([seed, trial, 1])
    serving_fade = float(rng.exponential(1.0))
    area = math.pi * region_radius**2
    means = [t.density * area for t in cfg.small_tiers] + [cfg.macro.density * area]
    counts = rng.poisson(means)
    r2 = region_radius**2
    small_dist2 = tuple(r2 * rng.random(int(n)) for n in counts[:-1])
    macro_dist2 = r2 * rng.random(int(counts[-1]))
    macro_marks = rng.gamma(cfg.macro.users_served, 1.0, macro_dist2.size)
    small_marks = tuple(rng.exponential(1.0, d.size) for d in small_dist2)
    return Field(small_dist2, small_marks, macro_dist2, macro_marks, serving_fade)


def _attenuation(dist2, alpha):
    if dist2.size == 0:
        return dist2
    if alpha == 4.0:
        inv = 1.0 / dist2
        return inv * inv
    return dist2 ** (-0.5 * alpha)


@dataclass(frozen=True)
class TrialOutcome:
    """Metrics of one trial; fields are NaN where the defining event did
    not occur (e.g. pair throughput when the macro tier serves)."""

    assoc: int
    near: bool
    covered: float
    pair_throughput: float
    macro_rate: float
    oma_assoc: int
    oma_covered: float
    oma_pair_throughput: float
    oma_macro_rate: float


def _interference_field(cfg, field):
    """Per-tier attenuation arrays, tier interference totals, and nearest
    indices.  Totals include every station; serving terms are removed by
    the caller."""
    atts = []
    totals = []
    nearest = []
    for tier, d2, marks in zip(cfg.small_tiers, field.small_dist2, field.small_marks):
        att = _attenuation(d2, tier.path_loss_exponent)
        atts.append(att)
        totals.append(tier.power * cfg.eta * float(np.dot(att, marks)))
        nearest.append(int(np.argmin(d2)) if d2.size else -1)
    m = cfg.macro
    macro_att = _attenuation(field.macro_dist2, m.path_loss_exponent)
    macro_total = (m.power / m.users_served) * cfg.eta * float(
        np.dot(macro_att, field.macro_marks)
    )
    macro_nearest = int(np.argmin(field.macro_dist2)) if field.macro_dist2.size else -1
    return atts, totals, nearest, macro_att, macro_total, macro_nearest


def _associate(cfg, atts, nearest, macro_att, macro_nearest, full_power):
    """Biased mean-power association; returns MACRO, a small-tier index, or
    UNSERVED when the region holds no station at all."""
    best, best_offer = UNSERVED, -math.inf
    m = cfg.macro
    if macro_nearest >= 0:
        best = MACRO
        best_offer = (
            m.power * m.array_gain / m.users_served * cfg.eta * macro_att[macro_nearest]
        )
    for k, tier in enumerate(cfg.small_tiers):
        if nearest[k] < 0:
            continue
        weight = 1.0 if full_power else tier.share_near
        offer = weight * tier.power * tier.bias * cfg.eta * atts[k][nearest[k]]
        if offer > best_offer:
            best, best_offer = k, offer
    return best


def _partner_interference(cfg, partner):
    """Total interference power at the pair-distance user from an
    independent field (the serving station is not part of it)."""
    total = 0.0
    for tier, d2, marks in zip(cfg.small_tiers, partner.small_dist2, partner.small_marks):
        att = _attenuation(d2, tier.path_loss_exponent)
        total += tier.power * cfg.eta * float(np.dot(att, marks))
    m = cfg.macro
    att = _attenuation(partner.macro_dist2, m.path_loss_exponent)
    total += (m.power / m.users_served) * cfg.eta * float(
        np.dot(att, partner.macro_marks)
    )
    return total


def evaluate_field(cfg, targets, field, partner=None):
    """Evaluate one sampled network.

    With `partner=None` the pair-distance user shares the typical user's
    serving fade and interference realization (mirroring the analytical
    treatment, which reuses the typical user's exclusion geometry);
    otherwise the given independent field supplies both.
    """
    atts, totals, nearest, macro_att, macro_total, macro_nearest = _interference_field(
        cfg, field
    )
    assoc = _associate(cfg, atts, nearest, macro_att, macro_nearest, False)
    oma_assoc = _associate(cfg, atts, nearest, macro_att, macro_nearest, True)
    sigma2 = cfg.sigma2
    tau_t = targets.tau_typical
    tau_c = targets.tau_connected
    all_small = sum(totals)
    nan = math.nan

    near = False
    covered = nan
    pair_throughput = nan
    macro_rate = nan
    m = cfg.macro

    if partner is None:
        partner_fade = None
        partner_total = None
    else:
        partner_fade = partner.macro_serving_mark
        partner_total = _partner_interference(cfg, partner)

    def small_outcome(k, full_power):
        tier = cfg.small_tiers[k]
        idx = nearest[k]
        g0 = field.small_marks[k][idx]
        signal = tier.power * cfg.eta * atts[k][idx] * g0
        denom = all_small + macro_total - signal + sigma2
        r_att = tier.pair_distance ** (-tier.path_loss_exponent)
        is_near = atts[k][idx] >= r_att
        if partner is None:
            partner_gain = tier.power * cfg.eta * r_att * g0
            partner_denom = denom
        else:
            partner_gain = tier.power * cfg.eta * r_att * partner_fade
            partner_denom = partner_total + sigma2
        if full_power:
            gamma = signal / denom
            cov = 1.0 if gamma > targets.tau_orthogonal else 0.0
            own_rate = 0.5 * math.log2(1.0 + gamma)
            partner_rate = 0.5 * math.log2(1.0 + partner_gain / partner_denom)
            return is_near, cov, own_rate + partner_rate
        a_m, a_n = tier.share_far, tier.share_near
        if is_near:
            gamma_sic = a_m * signal / (a_n * signal + denom)
            gamma_own = a_n * signal / denom
            cov = 1.0 if (gamma_sic > tau_c and gamma_own > tau_t) else 0.0
            own_rate = math.log2(1.0 + gamma_own)
            partner_rate = math.log2(
                1.0 + a_m * partner_gain / (a_n * partner_gain + partner_denom)
            )
        else:
            gamma_own = a_m * signal / (a_n * signal + denom)
            cov = 1.0 if gamma_own > tau_t else 0.0
            own_rate = math.log2(1.0 + gamma_own)
            partner_rate = math.log2(1.0 + a_n * partner_gain / partner_denom)
        return is_near, cov, own_rate + partner_rate

    def macro_outcome():
        idx = macro_nearest
        interference = (
            all_small
            + macro_total
            - (m.power / m.users_served) * cfg.eta * macro_att[idx] * field.macro_marks[idx]
        )
        signal = (
            (m.power / m.users_served)
            * cfg.eta
            * macro_att[idx]
            * field.macro_serving_mark
        )
        gamma = signal / (interference + sigma2)
        return (1.0 if gamma > tau_t else 0.0), math.log2(1.0 + gamma)

    if assoc == MACRO:
        covered, macro_rate = macro_outcome()
    elif assoc >= 0:
        near, covered, pair_throughput = small_outcome(assoc, False)

    oma_covered = nan
    oma_pair = nan
    oma_macro_rate = nan
    if oma_assoc == MACRO:
        oma_covered, oma_macro_rate = macro_outcome()
    elif oma_assoc >= 0:
        _, oma_covered, oma_pair = small_outcome(oma_assoc, True)

    return TrialOutcome(
        assoc=assoc,
        near=near,
        covered=covered,
        pair_throughput=pair_throughput,
        macro_rate=macro_rate,
        oma_assoc=oma_assoc,
        oma_covered=oma_covered,
        oma_pair_throughput=oma_pair,
        oma_macro_rate=oma_macro_rate,
    )


@dataclass(frozen=True)
class TrialRecords:
    """Column-per-metric trial results in trial order."""

    assoc: np.ndarray
    near: np.ndarray
    covered: np.ndarray
    pair_throughput: np.ndarray
    macro_rate: np.ndarray
    oma_assoc: np.ndarray
    oma_covered: np.ndarray
    oma_pair_throughput: np.ndarray
    oma_macro_rate: np.ndarray


def simulate_records(
    cfg,
    targets,
    trials,
    seed,
    workers=1,
    partner_field="shared",
    region_radius=DEFAULT_REGION_RADIUS,
):
    """Run `trials` independent network draws and record every metric.

    `partner_field` selects how the pair-distance user's channel is drawn:
    "shared" reuses the typical user's realization, "independent" draws a
    fresh one from the trial's child stream.
    """
    if trials < 100:
        raise ValueError("trials: need at least 100 for meaningful intervals")
    if partner_field not in ("shared", "independent"):
        raise ValueError("partner_field: must be 'shared' or 'independent'")
    if workers < 1:
        raise ValueError("workers: must be at least 1")

    assoc = np.empty(trials, dtype=np.int8)
    near = np.empty(trials, dtype=bool)
    covered = np.empty(trials)
    pair = np.empty(trials)
    macro_rate = np.empty(trials)
    oma_assoc = np.empty(trials, dtype=np.int8)
    oma_covered = np.empty(trials)
    oma_pair = np.empty(trials)
    oma_macro = np.empty(trials)

    independent = partner_field == "independent"

    def fill(start, stop):
        for t in range(start, stop):
            field = sample_field(cfg, seed, t, region_radius)
            partner = (
                sample_partner_field(cfg, seed, t, region_radius)
                if independent
                else None
            )
            out = evaluate_field(cfg, targets, field, partner)
            assoc[t] = out.assoc
            near[t] = out.near
            covered[t] = out.covered
            pair[t] = out.pair_throughput
            macro_rate[t] = out.macro_rate
            oma_assoc[t] = out.oma_assoc
            oma_covered[t] = out.oma_covered
            oma_pair[t] = out.oma_pair_throughput
            oma_macro[t] = out.oma_macro_rate

    if workers == 1:
        fill(0, trials)
    else:
        chunk = -(-trials // workers)
        bounds = [
            (lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)
        ]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: fill(*b), bounds))

    return TrialRecords(
        assoc=assoc,
        near=near,
        covered=covered,
        pair_throughput=pair,
        macro_rate=macro_rate,
        oma_assoc=oma_assoc,
        oma_covered=oma_covered,
        oma_pair_throughput=oma_pair,
        oma_macro_rate=oma_macro,
    )


@dataclass(frozen=True)
class Estimate:
    """Sample mean with a 99% normal confidence halfwidth.

    `effective_trials` counts the trials that entered the mean; for
    conditional metrics this is the number of trials where the conditioning
    event occurred.
    """

    mean: float
    ci_halfwidth_99: float
    trials: int
    effective_trials: int
    seed: int


def _mean_ci(values, trials, seed):
    n = values.size
    if n == 0:
        return Estimate(math.nan, math.nan, trials, 0, seed)
    total = math.fsum(values.tolist())
    mean = total / n
    square = math.fsum(((v - mean) ** 2 for v in values.tolist()))
    if n > 1:
        halfwidth = Z99 * math.sqrt(square / (n - 1)) / math.sqrt(n)
    else:
        halfwidth = math.inf
    return Estimate(mean, halfwidth, trials, n, seed)


def _metric_values(cfg, records, metric, tier, power_model):
    tier_code = MACRO if tier is None else tier
    if tier_code >= len(cfg.small_tiers):
        raise ValueError("tier: no such small tier")
    if metric in ("association", "oma_association"):
        col = records.assoc if metric == "association" else records.oma_assoc
        return (col == tier_code).astype(float)
    if metric in ("coverage", "oma_coverage"):
        assoc = records.assoc if metric == "coverage" else records.oma_assoc
        col = records.covered if metric == "coverage" else records.oma_covered
        return col[assoc == tier_code]
    if metric in ("pair_throughput", "oma_pair_throughput"):
        if tier is None:
            raise ValueError("tier: pair throughput needs a small tier")
        assoc = records.assoc if metric == "pair_throughput" else records.oma_assoc
        col = (
            records.pair_throughput
            if metric == "pair_throughput"
            else records.oma_pair_throughput
        )
        return col[assoc == tier_code]
    if metric == "macro_rate":
        return records.macro_rate[records.assoc == MACRO]
    if metric in ("spectrum_efficiency", "oma_spectrum_efficiency"):
        oma = metric.startswith("oma")
        assoc = records.oma_assoc if oma else records.assoc
        pair = records.oma_pair_throughput if oma else records.pair_throughput
        stream = records.oma_macro_rate if oma else records.macro_rate
        values = np.zeros(assoc.size)
        macro_sel = assoc == MACRO
        values[macro_sel] = cfg.macro.users_served * stream[macro_sel]
        small_sel = assoc >= 0
        values[small_sel] = pair[small_sel]
        return values
    if metric in ("energy_efficiency", "oma_energy_efficiency"):
        oma = metric.startswith("oma")
        assoc = records.oma_assoc if oma else records.assoc
        pair = records.oma_pair_throughput if oma else records.pair_throughput
        stream = records.oma_macro_rate if oma else records.macro_rate
        values = np.zeros(assoc.size)
        macro_sel = assoc == MACRO
        values[macro_sel] = (
            cfg.macro.users_served
            * stream[macro_sel]
            / macro_power_total(cfg, power_model)
        )
        for k in range(len(cfg.small_tiers)):
            sel = assoc == k
            values[sel] = pair[sel] / small_power_total(cfg, k, power_model)
        return values
    raise ValueError("metric: expected one of %s" % (METRICS,))


def summarize(cfg, records, metric, tier=None, power_model=DEFAULT_POWER_MODEL, seed=0):
    """Reduce recorded trials to an `Estimate` for one metric.

    `tier` picks the small tier for per-tier metrics; None means the macro
    tier where that makes sense.  The reduction only uses order-stable
    operations, so the result is bit-identical however the trials were
    partitioned when they were produced.
    """
    values = _metric_values(cfg, records, metric, tier, power_model)
    return _mean_ci(values, records.assoc.size, seed)


def estimate(
    cfg,
    metric,
    targets,
    tier=None,
    trials=10_000,
    seed=0,
    workers=1,
    partner_field="shared",
    power_model=DEFAULT_POWER_MODEL,
    region_radius=DEFAULT_REGION_RADIUS,
):
    """Simulate and summarize one metric in a single call."""
    records = simulate_records(
        cfg, targets, trials, seed, workers, partner_field, region_radius
    )
    return summarize(cfg, records, metric, tier, power_model, seed)
