"""Experiment descriptions and batch evaluation.

An experiment is a JSON document naming a network, target rates, one swept
parameter, optional curve variants (each a set of overrides on the same
document), and the metrics to evaluate.  `run` walks
variant x sweep-point x metric x engine in a fixed order, reusing one batch
of simulated trials per sweep point across every Monte Carlo metric, and
captures per-cell failures in the result rows instead of aborting the sweep.

All numeric file output is formatted with %.17g and ordered
deterministically, so a run with the same description and seed produces
byte-identical CSV and .dat files regardless of the worker count.  Wall
times are nondeterministic by nature and live in a separate timings sidecar.
"""

import copy
import json
import math
import re
import time
from dataclasses import dataclass
from pathlib import Path

from .coverage import coverage_probability
from .energy import (
    DEFAULT_POWER_MODEL,
    PowerModel,
    energy_efficiency,
    macro_power_total,
    small_power_total,
)
from .model import (
    MacroTier,
    NetworkConfig,
    SmallTier,
    Targets,
    association_prob_macro,
    association_prob_small,
    dbm_to_watts,
)
from .montecarlo import DEFAULT_REGION_RADIUS, simulate_records, summarize
from .rates import macro_rate_lower_bound, spectrum_efficiency


class ConfigError(ValueError):
    """An experiment description violates the schema.  The message names the
    offending field by its JSON path."""


MACRO_TIER = "macro"

_ENGINES = ("analytical", "montecarlo")

# Tier kinds each engine can serve for a metric: "net" is the network-level
# aggregate (no tier given), "small" a small-tier index, "macro" the macro
# tier.  Orthogonal-baseline metrics exist only in simulation.
_ANALYTICAL_TIERS = {
    "association": ("small", "macro"),
    "coverage": ("small",),
    "pair_throughput": ("small",),
    "macro_rate": ("macro",),
    "spectrum_efficiency": ("net",),
    "energy_efficiency": ("net", "small", "macro"),
}
_MONTECARLO_TIERS = {
    "association": ("small", "macro"),
    "coverage": ("small", "macro"),
    "pair_throughput": ("small",),
    "macro_rate": ("macro",),
    "spectrum_efficiency": ("net",),
    "energy_efficiency": ("net", "small", "macro"),
    "oma_association": ("small", "macro"),
    "oma_coverage": ("small", "macro"),
    "oma_pair_throughput": ("small",),
    "oma_spectrum_efficiency": ("net",),
    "oma_energy_efficiency": ("net",),
}
METRIC_NAMES = tuple(sorted(_MONTECARLO_TIERS))

_REQUIRED = object()


def _fail(path, rule):
    raise ConfigError("%s: %s" % (path, rule))


def _check_mapping(value, path):
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    return dict(value)


def _no_extras(block, path):
    if block:
        _fail("%s.%s" % (path, sorted(block)[0]), "unknown field")


def _pop_number(
    block, key, path, default=_REQUIRED, minimum=None, strict=False, nullable=False
):
    full = "%s.%s" % (path, key)
    if key not in block:
        if default is _REQUIRED:
            _fail(full, "required field is missing")
        return default
    value = block.pop(key)
    if value is None:
        if nullable:
            return None
        _fail(full, "expected a number")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(full, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        _fail(full, "expected a finite number")
    if minimum is not None:
        if strict and not value > minimum:
            _fail(full, "must be greater than %g" % minimum)
        if not strict and not value >= minimum:
            _fail(full, "must be at least %g" % minimum)
    return value


def _pop_integer(block, key, path, default=_REQUIRED, minimum=None):
    full = "%s.%s" % (path, key)
    if key not in block:
        if default is _REQUIRED:
            _fail(full, "required field is missing")
        return default
    value = block.pop(key)
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(full, "expected an integer")
    if minimum is not None and value < minimum:
        _fail(full, "must be at least %d" % minimum)
    return value


def _pop_string(block, key, path, default=_REQUIRED, choices=None):
    full = "%s.%s" % (path, key)
    if key not in block:
        if default is _REQUIRED:
            _fail(full, "required field is missing")
        return default
    value = block.pop(key)
    if not isinstance(value, str):
        _fail(full, "expected a string")
    if choices is not None and value not in choices:
        _fail(full, "expected one of %s" % (choices,))
    return value


def _pop_array(block, key, path, default=_REQUIRED):
    full = "%s.%s" % (path, key)
    if key not in block:
        if default is _REQUIRED:
            _fail(full, "required field is missing")
        return default
    value = block.pop(key)
    if not isinstance(value, list) or not value:
        _fail(full, "expected a nonempty array")
    return value


def _as_float(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "expected a number")
    value = float(value)
    if not math.isfinite(value):
        _fail(path, "expected a finite number")
    return value


# ---------------------------------------------------------------------------
# schema blocks


def _normalize_macro(block, path):
    block = _check_mapping(block, path)
    out = {
        "density_per_km2": _pop_number(
            block, "density_per_km2", path, minimum=0.0, strict=True
        ),
        "power_dbm": _pop_number(block, "power_dbm", path),
        "path_loss_exponent": _pop_number(
            block, "path_loss_exponent", path, minimum=2.0, strict=True
        ),
        "antennas": _pop_integer(block, "antennas", path, minimum=1),
        "users_served": _pop_integer(block, "users_served", path, minimum=1),
    }
    _no_extras(block, path)
    return out


def _normalize_small(block, path):
    block = _check_mapping(block, path)
    out = {
        "density_per_km2": _pop_number(
            block, "density_per_km2", path, minimum=0.0
        ),
        "power_dbm": _pop_number(block, "power_dbm", path),
        "path_loss_exponent": _pop_number(
            block, "path_loss_exponent", path, minimum=2.0, strict=True
        ),
        "bias": _pop_number(block, "bias", path, default=1.0, minimum=0.0, strict=True),
        "pair_distance_m": _pop_number(
            block, "pair_distance_m", path, default=50.0, minimum=0.0, strict=True
        ),
        "share_far": _pop_number(block, "share_far", path, default=0.6),
        "share_near": _pop_number(block, "share_near", path, default=0.4),
    }
    _no_extras(block, path)
    return out


def _normalize_network(block, path):
    block = _check_mapping(block, path)
    macro = _normalize_macro(
        block.pop("macro") if "macro" in block else _fail(path + ".macro", "required field is missing"),
        path + ".macro",
    )
    tiers = _pop_array(block, "small_tiers", path)
    small = [
        _normalize_small(entry, "%s.small_tiers[%d]" % (path, i))
        for i, entry in enumerate(tiers)
    ]
    out = {
        "macro": macro,
        "small_tiers": small,
        "carrier_frequency_hz": _pop_number(
            block, "carrier_frequency_hz", path, default=1.0e9, minimum=0.0, strict=True
        ),
        "bandwidth_hz": _pop_number(
            block, "bandwidth_hz", path, default=1.0e7, minimum=0.0, strict=True
        ),
        "noise_figure_db": _pop_number(block, "noise_figure_db", path, default=10.0),
        "path_loss_factor": _pop_number(
            block, "path_loss_factor", path, default=None, minimum=0.0, strict=True,
            nullable=True,
        ),
        "noise_power_watts": _pop_number(
            block, "noise_power_watts", path, default=None, minimum=0.0, nullable=True
        ),
    }
    _no_extras(block, path)
    return out


def _normalize_targets(block, path):
    block = _check_mapping(block, path)
    out = {
        "rate_typical_bpcu": _pop_number(
            block, "rate_typical_bpcu", path, minimum=0.0
        ),
        "rate_connected_bpcu": _pop_number(
            block, "rate_connected_bpcu", path, minimum=0.0
        ),
    }
    _no_extras(block, path)
    return out


def _pop_coefficients(block, key, path, default):
    full = "%s.%s" % (path, key)
    if key not in block:
        return list(default)
    value = block.pop(key)
    if not isinstance(value, list) or len(value) != 3:
        _fail(full, "expected an array of three numbers")
    return [_as_float(item, "%s[%d]" % (full, i)) for i, item in enumerate(value)]


def _normalize_power_model(block, path):
    base = DEFAULT_POWER_MODEL
    block = _check_mapping(block, path)
    out = {
        "macro_static_watts": _pop_number(
            block, "macro_static_watts", path, default=base.macro_static, minimum=0.0
        ),
        "small_static_watts": _pop_number(
            block, "small_static_watts", path, default=base.small_static, minimum=0.0
        ),
        "macro_amplifier_efficiency": _pop_number(
            block,
            "macro_amplifier_efficiency",
            path,
            default=base.macro_amplifier_efficiency,
            minimum=0.0,
            strict=True,
        ),
        "small_amplifier_efficiency": _pop_number(
            block,
            "small_amplifier_efficiency",
            path,
            default=base.small_amplifier_efficiency,
            minimum=0.0,
            strict=True,
        ),
        "stream_coefficients": _pop_coefficients(
            block, "stream_coefficients", path, base.stream_coefficients
        ),
        "array_coefficients": _pop_coefficients(
            block, "array_coefficients", path, base.array_coefficients
        ),
    }
    _no_extras(block, path)
    return out


# ---------------------------------------------------------------------------
# parameter paths into the normalized document

_SEGMENT_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)((?:\[[0-9]+\])*)\Z")
_PATH_ROOTS = ("network", "targets", "power_model")


def _path_keys(path):
    if not isinstance(path, str) or not path:
        _fail("path", "expected a dotted parameter path")
    keys = []
    for segment in path.split("."):
        match = _SEGMENT_RE.match(segment)
        if match is None:
            _fail(path, "malformed path segment %r" % segment)
        keys.append(match.group(1))
        keys.extend(int(idx) for idx in re.findall(r"\[([0-9]+)\]", match.group(2)))
    if keys[0] not in _PATH_ROOTS:
        _fail(path, "path must start with one of %s" % (_PATH_ROOTS,))
    return keys


def _step(node, key, path):
    if isinstance(key, int):
        if not isinstance(node, list) or not 0 <= key < len(node):
            _fail(path, "index [%d] is out of range" % key)
    else:
        if not isinstance(node, dict) or key not in node:
            _fail(path, "no field named %r at this point" % key)
    return node[key]


def _set_path(document, path, value):
    """Overwrite one existing numeric field; never creates new fields."""
    keys = _path_keys(path)
    node = document
    for key in keys[:-1]:
        node = _step(node, key, path)
    _step(node, keys[-1], path)
    node[keys[-1]] = value


def _default_sweep_label(path):
    for key in reversed(_path_keys(path)):
        if isinstance(key, str):
            return key
    return "value"


# ---------------------------------------------------------------------------
# experiment


@dataclass(frozen=True)
class Experiment:
    """A validated experiment description.

    `raw` is the normalized JSON document with every default filled in; the
    remaining fields are parsed views of it.  Edit by copying `raw` and
    running the copy back through `parse_experiment`.
    """

    name: str
    raw: dict
    sweep_path: str
    sweep_values: tuple
    sweep_label: str
    variants: tuple
    metrics: tuple
    engines: str
    trials: int
    seed: int
    workers: int
    partner_field: str
    region_radius: float


def _normalize_metric(entry, path, num_small, engines):
    entry = _check_mapping(entry, path)
    name = _pop_string(entry, "name", path, choices=METRIC_NAMES)
    tier = entry.pop("tier", None)
    if tier is not None and tier != MACRO_TIER:
        if isinstance(tier, bool) or not isinstance(tier, int):
            _fail(path + ".tier", 'expected null, "macro", or a small-tier index')
        if not 0 <= tier < num_small:
            _fail(path + ".tier", "small-tier index out of range")
    _no_extras(entry, path)
    if not _row_engines(engines, name, tier):
        _fail(path, "metric %r has no %s route for this tier" % (name, engines))
    return {"name": name, "tier": tier}


def _normalize_variant(entry, path, probe_document):
    entry = _check_mapping(entry, path)
    label = _pop_string(entry, "label", path)
    if re.fullmatch(r"[A-Za-z0-9_.+=-]*", label) is None:
        _fail(path + ".label", "only letters, digits and _.+=- are allowed")
    overrides_raw = entry.pop("overrides", {})
    overrides = {}
    if not isinstance(overrides_raw, dict):
        _fail(path + ".overrides", "expected an object")
    for override_path in sorted(overrides_raw):
        value = _as_float(
            overrides_raw[override_path], "%s.overrides.%s" % (path, override_path)
        )
        _set_path(probe_document, override_path, value)
        overrides[override_path] = value
    _no_extras(entry, path)
    return {"label": label, "overrides": overrides}


def parse_experiment(raw):
    """Validate a JSON experiment document and return an `Experiment`."""
    block = _check_mapping(raw, "experiment")
    name = _pop_string(block, "name", "experiment")
    if re.fullmatch(r"[A-Za-z0-9][A-Za-z0-9_-]*", name) is None:
        _fail("experiment.name", "only letters, digits, _ and - are allowed")
    engines = _pop_string(
        block, "engines", "experiment", default="both", choices=_ENGINES + ("both",)
    )
    trials = _pop_integer(block, "trials", "experiment", default=10_000, minimum=100)
    seed = _pop_integer(block, "seed", "experiment", default=0, minimum=0)
    workers = _pop_integer(block, "workers", "experiment", default=1, minimum=1)
    partner_field = _pop_string(
        block,
        "partner_field",
        "experiment",
        default="shared",
        choices=("shared", "independent"),
    )
    region_radius = _pop_number(
        block,
        "region_radius_m",
        "experiment",
        default=DEFAULT_REGION_RADIUS,
        minimum=0.0,
        strict=True,
    )

    if "network" not in block:
        _fail("experiment.network", "required field is missing")
    network = _normalize_network(block.pop("network"), "network")
    if "targets" not in block:
        _fail("experiment.targets", "required field is missing")
    targets = _normalize_targets(block.pop("targets"), "targets")
    power_model = _normalize_power_model(block.pop("power_model", {}), "power_model")

    sweep_block = _check_mapping(
        block.pop("sweep") if "sweep" in block else _fail("experiment.sweep", "required field is missing"),
        "sweep",
    )
    sweep_path = _pop_string(sweep_block, "path", "sweep")
    values_raw = _pop_array(sweep_block, "values", "sweep")
    sweep_values = tuple(
        _as_float(value, "sweep.values[%d]" % i) for i, value in enumerate(values_raw)
    )
    sweep_label = _pop_string(
        sweep_block, "label", "sweep", default=_default_sweep_label(sweep_path)
    )
    _no_extras(sweep_block, "sweep")

    num_small = len(network["small_tiers"])
    metrics_raw = _pop_array(block, "metrics", "experiment")
    metrics = []
    seen = set()
    for i, entry in enumerate(metrics_raw):
        normalized = _normalize_metric(entry, "metrics[%d]" % i, num_small, engines)
        key = (normalized["name"], normalized["tier"])
        if key in seen:
            _fail("metrics[%d]" % i, "duplicate metric entry")
        seen.add(key)
        metrics.append(normalized)

    base_document = {
        "network": network,
        "targets": targets,
        "power_model": power_model,
    }
    variants_raw = block.pop("variants", [{"label": "", "overrides": {}}])
    if not isinstance(variants_raw, list) or not variants_raw:
        _fail("experiment.variants", "expected a nonempty array")
    variants = []
    labels = set()
    for i, entry in enumerate(variants_raw):
        probe = copy.deepcopy(base_document)
        normalized = _normalize_variant(entry, "variants[%d]" % i, probe)
        _set_path(probe, sweep_path, sweep_values[0])
        if normalized["label"] in labels:
            _fail("variants[%d].label" % i, "duplicate variant label")
        labels.add(normalized["label"])
        variants.append(normalized)

    _no_extras(block, "experiment")

    # The base document must itself describe a buildable network; sweep or
    # override values that break an invariant later are captured per row.
    _build_network(network)
    _build_targets(targets)
    _build_power_model(power_model)

    normalized_raw = {
        "name": name,
        "engines": engines,
        "trials": trials,
        "seed": seed,
        "workers": workers,
        "partner_field": partner_field,
        "region_radius_m": region_radius,
        "network": network,
        "targets": targets,
        "power_model": power_model,
        "sweep": {"path": sweep_path, "values": list(sweep_values), "label": sweep_label},
        "metrics": metrics,
        "variants": variants,
    }
    return Experiment(
        name=name,
        raw=normalized_raw,
        sweep_path=sweep_path,
        sweep_values=sweep_values,
        sweep_label=sweep_label,
        variants=tuple((v["label"], dict(v["overrides"])) for v in variants),
        metrics=tuple((m["name"], m["tier"]) for m in metrics),
        engines=engines,
        trials=trials,
        seed=seed,
        workers=workers,
        partner_field=partner_field,
        region_radius=region_radius,
    )


def serialize(experiment):
    """JSON text whose parse compares equal to `experiment`."""
    return json.dumps(experiment.raw, indent=2, sort_keys=True) + "\n"


def load_config(path):
    """Parse an experiment description from a JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError("%s: %s" % (path, err)) from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            "%s: invalid JSON at line %d column %d: %s"
            % (path, err.lineno, err.colno, err.msg)
        ) from err
    return parse_experiment(raw)


# ---------------------------------------------------------------------------
# building model objects from normalized blocks


def _build_network(net):
    try:
        macro = net["macro"]
        small = tuple(
            SmallTier(
                density=t["density_per_km2"] * 1e-6,
                power=dbm_to_watts(t["power_dbm"]),
                path_loss_exponent=t["path_loss_exponent"],
                bias=t["bias"],
                pair_distance=t["pair_distance_m"],
                share_far=t["share_far"],
                share_near=t["share_near"],
            )
            for t in net["small_tiers"]
        )
        return NetworkConfig(
            macro=MacroTier(
                density=macro["density_per_km2"] * 1e-6,
                power=dbm_to_watts(macro["power_dbm"]),
                path_loss_exponent=macro["path_loss_exponent"],
                antennas=_build_int(macro["antennas"], "network.macro.antennas"),
                users_served=_build_int(
                    macro["users_served"], "network.macro.users_served"
                ),
            ),
            small_tiers=small,
            carrier_frequency=net["carrier_frequency_hz"],
            bandwidth=net["bandwidth_hz"],
            noise_figure_db=net["noise_figure_db"],
            path_loss_factor=net["path_loss_factor"],
            noise_power=net["noise_power_watts"],
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _build_int(value, path):
    number = float(value)
    if not number.is_integer():
        _fail(path, "must be an integer")
    return int(number)


def _build_targets(block):
    try:
        return Targets(
            rate_typical=block["rate_typical_bpcu"],
            rate_connected=block["rate_connected_bpcu"],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _build_power_model(block):
    try:
        return PowerModel(
            macro_static=block["macro_static_watts"],
            small_static=block["small_static_watts"],
            macro_amplifier_efficiency=block["macro_amplifier_efficiency"],
            small_amplifier_efficiency=block["small_amplifier_efficiency"],
            stream_coefficients=tuple(block["stream_coefficients"]),
            array_coefficients=tuple(block["array_coefficients"]),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class ResultRow:
    """One evaluated cell of a sweep.

    `tier` is None for network-level metrics, "macro", or a small-tier
    index.  Failed cells carry `error` and leave the numeric fields None.
    `runtime_ms` is reported only in the timings sidecar, never in the
    deterministic CSV.
    """

    variant: str
    sweep_value: float
    metric: str
    tier: object
    engine: str
    value: float = None
    ci_halfwidth: float = None
    trials: int = None
    error: str = None
    runtime_ms: float = 0.0


def _tier_kind(tier):
    if tier is None:
        return "net"
    if tier == MACRO_TIER:
        return "macro"
    return "small"


def _row_engines(engines, metric, tier):
    kind = _tier_kind(tier)
    chosen = _ENGINES if engines == "both" else (engines,)
    out = []
    for engine in chosen:
        table = _ANALYTICAL_TIERS if engine == "analytical" else _MONTECARLO_TIERS
        if kind in table.get(metric, ()):
            out.append(engine)
    return tuple(out)


class _PointContext:
    """Caches shared work at one sweep point: the simulated trial records
    and the analytical rate/energy reports."""

    def __init__(self, cfg, targets, power_model, experiment):
        self.cfg = cfg
        self.targets = targets
        self.power_model = power_model
        self.experiment = experiment
        self._records = None
        self._rates = None
        self._energy = None

    def records(self):
        if self._records is None:
            exp = self.experiment
            self._records = simulate_records(
                self.cfg,
                self.targets,
                exp.trials,
                exp.seed,
                workers=exp.workers,
                partner_field=exp.partner_field,
                region_radius=exp.region_radius,
            )
        return self._records

    def rate_report(self):
        if self._rates is None:
            self._rates = spectrum_efficiency(self.cfg)
        return self._rates

    def energy_report(self):
        if self._energy is None:
            self._energy = energy_efficiency(
                self.cfg, self.power_model, self.rate_report()
            )
        return self._energy


def _analytical_value(ctx, metric, tier):
    cfg = ctx.cfg
    if metric == "association":
        if tier == MACRO_TIER:
            return association_prob_macro(cfg)
        return association_prob_small(cfg, tier)
    if metric == "coverage":
        return coverage_probability(cfg, tier, ctx.targets).total
    if metric == "pair_throughput":
        return ctx.rate_report().small_rates[tier]
    if metric == "macro_rate":
        if ctx._rates is not None:
            return ctx._rates.macro_rate
        return macro_rate_lower_bound(cfg)
    if metric == "spectrum_efficiency":
        return ctx.rate_report().spectrum_efficiency
    if metric == "energy_efficiency":
        report = ctx.energy_report()
        if tier is None:
            return report.network_efficiency
        if tier == MACRO_TIER:
            return report.macro_efficiency
        return report.small_efficiencies[tier]
    raise ValueError("metric: no analytical route for %r" % metric)


def _montecarlo_value(ctx, metric, tier):
    """Returns (mean, ci_halfwidth, trials)."""
    cfg = ctx.cfg
    if metric == "energy_efficiency" and tier is not None:
        # Per-tier efficiency is the conditional rate scaled by a constant,
        # so reuse the rate estimates rather than simulating more columns.
        if tier == MACRO_TIER:
            est = summarize(
                cfg, ctx.records(), "macro_rate", None, ctx.power_model,
                ctx.experiment.seed,
            )
            scale = cfg.macro.users_served / macro_power_total(cfg, ctx.power_model)
        else:
            est = summarize(
                cfg, ctx.records(), "pair_throughput", tier, ctx.power_model,
                ctx.experiment.seed,
            )
            scale = 1.0 / small_power_total(cfg, tier, ctx.power_model)
        return est.mean * scale, est.ci_halfwidth_99 * scale, est.trials
    tier_arg = None if tier in (None, MACRO_TIER) else tier
    est = summarize(
        cfg, ctx.records(), metric, tier_arg, ctx.power_model, ctx.experiment.seed
    )
    return est.mean, est.ci_halfwidth_99, est.trials


def _run_point(experiment, label, overrides, sweep_value):
    ctx = None
    build_error = None
    try:
        document = copy.deepcopy(experiment.raw)
        for path in sorted(overrides):
            _set_path(document, path, overrides[path])
        _set_path(document, experiment.sweep_path, sweep_value)
        ctx = _PointContext(
            _build_network(document["network"]),
            _build_targets(document["targets"]),
            _build_power_model(document["power_model"]),
            experiment,
        )
    except ConfigError as err:
        build_error = str(err)

    rows = []
    for metric, tier in experiment.metrics:
        for engine in _row_engines(experiment.engines, metric, tier):
            base = dict(
                variant=label, sweep_value=sweep_value, metric=metric, tier=tier,
                engine=engine,
            )
            if build_error is not None:
                rows.append(ResultRow(error=build_error, **base))
                continue
            start = time.perf_counter()
            try:
                if engine == "analytical":
                    value = _analytical_value(ctx, metric, tier)
                    ci = trials = None
                else:
                    value, ci, trials = _montecarlo_value(ctx, metric, tier)
            except Exception as err:  # captured per cell, sweep continues
                rows.append(
                    ResultRow(
                        error="%s: %s" % (type(err).__name__, err),
                        runtime_ms=(time.perf_counter() - start) * 1e3,
                        **base,
                    )
                )
                continue
            rows.append(
                ResultRow(
                    value=value,
                    ci_halfwidth=ci,
                    trials=trials,
                    runtime_ms=(time.perf_counter() - start) * 1e3,
                    **base,
                )
            )
    return rows


def run(experiment, out_dir=None):
    """Evaluate every (variant, sweep point, metric, engine) cell in order.

    Failures inside one cell are recorded on its row and do not abort the
    sweep.  With `out_dir` set, writes <name>.csv, <name>_timings.csv and
    one gnuplot .dat file per successful curve, then returns the rows.
    """
    rows = []
    for label, overrides in experiment.variants:
        for sweep_value in experiment.sweep_values:
            rows.extend(_run_point(experiment, label, overrides, sweep_value))
    if out_dir is not None:
        write_outputs(experiment, rows, out_dir)
    return rows


# ---------------------------------------------------------------------------
# output files

_CSV_COLUMNS = ("variant", "sweep_value", "metric", "tier", "engine", "value",
                "ci_halfwidth", "trials", "error")


def _format_number(value):
    if value is None:
        return ""
    return "%.17g" % value


def _tier_text(tier):
    if tier is None:
        return ""
    return str(tier)


def _csv_escape(text):
    if any(ch in text for ch in ',"\n'):
        return '"%s"' % text.replace('"', '""')
    return text


def rows_to_csv(rows):
    lines = [",".join(_CSV_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                (
                    row.variant,
                    _format_number(row.sweep_value),
                    row.metric,
                    _tier_text(row.tier),
                    row.engine,
                    _format_number(row.value),
                    _format_number(row.ci_halfwidth),
                    "" if row.trials is None else str(row.trials),
                    _csv_escape(row.error or ""),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _curve_files(experiment, rows):
    groups = {}
    for row in rows:
        if row.error is not None or row.value is None:
            continue
        if isinstance(row.value, float) and math.isnan(row.value):
            continue
        groups.setdefault((row.variant, row.metric, row.tier, row.engine), []).append(row)
    files = {}
    for (variant, metric, tier, engine), grouped in groups.items():
        parts = [experiment.name]
        if variant:
            parts.append(variant)
        parts.append(metric if tier is None else "%s_%s" % (metric, _tier_text(tier)))
        parts.append(engine)
        stem = re.sub(r"[^A-Za-z0-9_.+-]", "-", "__".join(parts))
        lines = [
            "# %s  variant=%s metric=%s tier=%s engine=%s"
            % (
                experiment.name,
                variant or "-",
                metric,
                _tier_text(tier) or "network",
                engine,
            ),
            "# columns: %s value ci_halfwidth_99" % experiment.sweep_label,
        ]
        for row in grouped:
            lines.append(
                "%.17g %.17g %.17g"
                % (row.sweep_value, row.value, row.ci_halfwidth or 0.0)
            )
        files[stem + ".dat"] = "\n".join(lines) + "\n"
    return files


def write_outputs(experiment, rows, out_dir):
    """Write the deterministic CSV, per-curve .dat files and the (wall-time,
    nondeterministic) timings sidecar.  Returns the CSV path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / (experiment.name + ".csv")
    csv_path.write_text(rows_to_csv(rows))
    timing_lines = ["variant,sweep_value,metric,tier,engine,runtime_ms"]
    for row in rows:
        timing_lines.append(
            ",".join(
                (
                    row.variant,
                    _format_number(row.sweep_value),
                    row.metric,
                    _tier_text(row.tier),
                    row.engine,
                    "%.3f" % row.runtime_ms,
                )
            )
        )
    (out / (experiment.name + "_timings.csv")).write_text(
        "\n".join(timing_lines) + "\n"
    )
    for name, text in _curve_files(experiment, rows).items():
        (out / name).write_text(text)
    return csv_path


# ---------------------------------------------------------------------------
# bundled sweep presets

# Shared baseline: one macro BS per disc of radius 500 m.
MACRO_DENSITY_PER_KM2 = 1e6 / (math.pi * 500.0**2)


def _small_block(power_dbm, density_factor, bias=1.0, pair_distance=10.0,
                 share_far=0.6, share_near=0.4):
    return {
        "density_per_km2": MACRO_DENSITY_PER_KM2 * density_factor,
        "power_dbm": power_dbm,
        "path_loss_exponent": 4.0,
        "bias": bias,
        "pair_distance_m": pair_distance,
        "share_far": share_far,
        "share_near": share_near,
    }


def _network_block(macro_power_dbm, antennas, users_served, small_tiers):
    return {
        "macro": {
            "density_per_km2": MACRO_DENSITY_PER_KM2,
            "power_dbm": macro_power_dbm,
            "path_loss_exponent": 3.5,
            "antennas": antennas,
            "users_served": users_served,
        },
        "small_tiers": small_tiers,
    }


_UNIT_TARGETS = {"rate_typical_bpcu": 1.0, "rate_connected_bpcu": 1.0}
_BIAS_GRID = [1.0, 2.0, 5.0, 10.0, 20.0, 40.0]


def _figure_documents():
    figures = {}
    figures["fig2"] = {
        "name": "fig2",
        "network": _network_block(40.0, 50, 15, [
            _small_block(30.0, 20.0, pair_distance=50.0),
            _small_block(20.0, 20.0, pair_distance=50.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "sweep": {
            "path": "network.macro.antennas",
            "values": [50, 100, 150, 200, 250, 300],
            "label": "antennas",
        },
        "variants": [
            {"label": "B2_1", "overrides": {
                "network.small_tiers[0].bias": 1.0,
                "network.small_tiers[1].bias": 20.0,
            }},
            {"label": "B2_5", "overrides": {
                "network.small_tiers[0].bias": 5.0,
                "network.small_tiers[1].bias": 100.0,
            }},
        ],
        "metrics": [
            {"name": "association", "tier": "macro"},
            {"name": "association", "tier": 0},
            {"name": "association", "tier": 1},
        ],
        "trials": 100_000,
    }
    figures["fig3"] = {
        "name": "fig3",
        "network": _network_block(40.0, 200, 15, [
            _small_block(20.0, 20.0, pair_distance=10.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "sweep": {"path": "network.small_tiers[0].bias", "values": list(_BIAS_GRID),
                  "label": "bias"},
        "variants": [
            {"label": "split_0.6", "overrides": {
                "network.small_tiers[0].share_far": 0.6,
                "network.small_tiers[0].share_near": 0.4,
            }},
            {"label": "split_0.9", "overrides": {
                "network.small_tiers[0].share_far": 0.9,
                "network.small_tiers[0].share_near": 0.1,
            }},
        ],
        "metrics": [
            {"name": "coverage", "tier": 0},
            {"name": "oma_coverage", "tier": 0},
        ],
        "trials": 100_000,
    }
    figures["fig4"] = {
        "name": "fig4",
        "network": _network_block(40.0, 200, 15, [
            _small_block(20.0, 20.0, bias=5.0, pair_distance=15.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "engines": "analytical",
        "sweep": {
            "path": "targets.rate_typical_bpcu",
            "values": [0.25 * i for i in range(1, 9)],
            "label": "rate_typical",
        },
        "variants": [
            {"label": "Rc_%g" % value, "overrides": {
                "targets.rate_connected_bpcu": value,
            }}
            for value in [0.25 * i for i in range(1, 9)]
        ],
        "metrics": [{"name": "coverage", "tier": 0}],
        "trials": 1000,
    }
    figures["fig5"] = {
        "name": "fig5",
        "network": _network_block(40.0, 200, 15, [
            _small_block(20.0, 20.0, pair_distance=50.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "sweep": {"path": "network.small_tiers[0].bias", "values": list(_BIAS_GRID),
                  "label": "bias"},
        "variants": [
            {"label": "P2_20dBm", "overrides": {
                "network.small_tiers[0].power_dbm": 20.0,
            }},
            {"label": "P2_30dBm", "overrides": {
                "network.small_tiers[0].power_dbm": 30.0,
            }},
        ],
        "metrics": [
            {"name": "pair_throughput", "tier": 0},
            {"name": "oma_pair_throughput", "tier": 0},
            {"name": "spectrum_efficiency"},
        ],
        "trials": 50_000,
    }
    figures["fig6"] = {
        "name": "fig6",
        "network": _network_block(30.0, 50, 5, [
            _small_block(20.0, 100.0, pair_distance=50.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "sweep": {"path": "network.small_tiers[0].bias",
                  "values": [1.0, 5.0, 10.0, 20.0], "label": "bias"},
        "variants": [
            {"label": "P1_30dBm", "overrides": {"network.macro.power_dbm": 30.0}},
            {"label": "P1_40dBm", "overrides": {"network.macro.power_dbm": 40.0}},
        ],
        "metrics": [
            {"name": "macro_rate", "tier": "macro"},
            {"name": "energy_efficiency"},
        ],
        "trials": 20_000,
    }
    figures["fig7"] = {
        "name": "fig7",
        "network": _network_block(30.0, 100, 15, [
            _small_block(20.0, 20.0, pair_distance=10.0),
        ]),
        "targets": dict(_UNIT_TARGETS),
        "sweep": {"path": "network.small_tiers[0].bias", "values": list(_BIAS_GRID),
                  "label": "bias"},
        "variants": [
            {"label": "M_100", "overrides": {"network.macro.antennas": 100.0}},
            {"label": "M_200", "overrides": {"network.macro.antennas": 200.0}},
        ],
        "metrics": [
            {"name": "energy_efficiency"},
            {"name": "energy_efficiency", "tier": "macro"},
            {"name": "energy_efficiency", "tier": 0},
            {"name": "oma_energy_efficiency"},
        ],
        "trials": 50_000,
    }
    return figures


FIGURES = {name: parse_experiment(doc) for name, doc in _figure_documents().items()}


def replace_run_settings(experiment, trials=None, seed=None, workers=None):
    """The same experiment with trial count, seed or worker count swapped
    out; None keeps the current value."""
    if trials is None and seed is None and workers is None:
        return experiment
    document = copy.deepcopy(experiment.raw)
    if trials is not None:
        document["trials"] = trials
    if seed is not None:
        document["seed"] = seed
    if workers is not None:
        document["workers"] = workers
    return parse_experiment(document)


def figure_experiment(name, trials=None, seed=None, workers=None):
    """A bundled preset, optionally with trial count, seed or workers
    replaced.  Raises ConfigError for unknown names."""
    if name not in FIGURES:
        raise ConfigError(
            "figure: unknown name %r; expected one of %s"
            % (name, tuple(sorted(FIGURES)))
        )
    return replace_run_settings(
        FIGURES[name], trials=trials, seed=seed, workers=workers
    )


def reproduce_figure(name, out_dir, trials=None, seed=None, workers=None):
    """Run one bundled preset and write its outputs under `out_dir`."""
    experiment = figure_experiment(name, trials=trials, seed=seed, workers=workers)
    return run(experiment, out_dir=out_dir)
