"""Nested run configuration: defaults, file loading and validation.

A configuration is a plain nested mapping, for example::

    horizon: 1000000
    seed: 1
    link: {rx_cost: 0.5}
    harvest: {amount: 1.0, tx: {prob: 0.4}, rx: {prob: 0.3}}
    battery: {tx: {capacity: 1000}, rx: {capacity: 1000}}
    policy: {kind: coordinated, beta_t: 2.0}

Keys are addressed with dotted paths such as ``harvest.rx.prob``.
"""

from __future__ import annotations

import copy
import json
import math
import numbers
from pathlib import Path
from typing import Any, Dict, List, Mapping, Union

import yaml

__all__ = [
    "ConfigError",
    "DEFAULTS",
    "MAX_TRACE_SLOTS",
    "load_config",
    "get_key",
    "set_key",
    "merged",
    "config_violations",
    "sweep_violations",
]

MAX_TRACE_SLOTS = 10**6
POLICY_KINDS = ("unconstrained", "coordinated", "dilated", "uncoordinated")
SCHEDULED_KINDS = ("coordinated", "dilated", "uncoordinated")
SWEEP_AXES = (
    "harvest.tx.prob",
    "harvest.rx.prob",
    "battery.tx.capacity",
    "battery.rx.capacity",
    "battery.capacity",
    "policy.dilation_f",
)

DEFAULTS: Dict[str, Any] = {
    "horizon": 10**7,
    "seed": 0,
    "record": "summary",
    "warmup_fraction": 0.01,
    "link": {"rx_cost": 0.5},
    "harvest": {"amount": 1.0, "tx": {"prob": 0.4}, "rx": {"prob": 0.3}},
    "battery": {
        "tx": {"capacity": 1000.0, "initial_fraction": 0.5},
        "rx": {"capacity": 1000.0, "initial_fraction": 0.5},
    },
    "policy": {"kind": "coordinated", "beta_t": 2.0, "dilation_f": 1, "pattern": None},
}


class ConfigError(ValueError):
    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("invalid configuration: " + "; ".join(self.violations))


def get_key(cfg: Mapping[str, Any], key: str) -> Any:
    node: Any = cfg
    for part in key.split("."):
        if not isinstance(node, Mapping) or part not in node:
            raise KeyError(key)
        node = node[part]
    return node


def set_key(cfg: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def _deep_update(base: Dict[str, Any], extra: Mapping[str, Any]) -> None:
    for k, v in extra.items():
        if isinstance(v, Mapping) and isinstance(base.get(k), dict):
            _deep_update(base[k], v)
        else:
            base[k] = copy.deepcopy(v)


def merged(*layers: Mapping[str, Any]) -> Dict[str, Any]:
    """Defaults overlaid with each layer in turn (later layers win)."""
    out = copy.deepcopy(DEFAULTS)
    for layer in layers:
        _deep_update(out, layer)
    return out


def load_config(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a YAML or JSON file into a nested dict (no defaults applied)."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json"):
        data = json.loads(text)
    else:
        data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return data


def _is_int(x: Any) -> bool:
    if isinstance(x, bool):
        return False
    if isinstance(x, numbers.Integral):
        return True
    return isinstance(x, float) and x.is_integer()


def _num(x: Any) -> bool:
    return isinstance(x, numbers.Real) and not isinstance(x, bool) and math.isfinite(x)


def config_violations(raw: Mapping[str, Any]) -> List[str]:
    """Every rule the configuration breaks, as ``"key: reason"`` strings.

    ``raw`` is merged over :data:`DEFAULTS` first, so partial files are fine.
    """
    cfg = merged({k: v for k, v in raw.items() if k != "sweep"})
    bad: List[str] = sweep_violations(raw.get("sweep"))
    unknown = sorted(set(raw) - set(DEFAULTS) - {"sweep"})
    if unknown:
        bad.append(f"unknown top-level keys: {', '.join(unknown)}")

    def num(key: str) -> Any:
        try:
            v = get_key(cfg, key)
        except KeyError:
            bad.append(f"{key}: missing")
            return None
        if not _num(v):
            bad.append(f"{key}: must be a finite number, got {v!r}")
            return None
        return float(v)

    horizon = get_key(cfg, "horizon")
    if not _is_int(horizon) or horizon < 1:
        bad.append(f"horizon: must be an integer >= 1, got {horizon!r}")
        horizon = None
    seed = get_key(cfg, "seed")
    if not _is_int(seed) or seed < 0:
        bad.append(f"seed: must be a non-negative integer, got {seed!r}")
    record = cfg.get("record")
    if record not in ("summary", "trace"):
        bad.append(f"record: must be 'summary' or 'trace', got {record!r}")
    elif record == "trace" and horizon is not None and horizon > MAX_TRACE_SLOTS:
        bad.append(f"record: full trace is limited to {MAX_TRACE_SLOTS} slots")
    warm = num("warmup_fraction")
    if warm is not None and not 0.0 <= warm < 1.0:
        bad.append("warmup_fraction: must lie in [0, 1)")

    R = num("link.rx_cost")
    if R is not None and not R > 0:
        bad.append("link.rx_cost: must be positive")
        R = None
    amount = num("harvest.amount")
    if amount is not None and not amount > 0:
        bad.append("harvest.amount: must be positive")
        amount = None
    probs = {}
    for node in ("tx", "rx"):
        p = num(f"harvest.{node}.prob")
        if p is not None and not 0.0 <= p <= 1.0:
            bad.append(f"harvest.{node}.prob: must lie in [0, 1], got {p}")
            p = None
        probs[node] = p
    caps = {}
    for node in ("tx", "rx"):
        c = num(f"battery.{node}.capacity")
        if c is not None and not c > 0:
            bad.append(f"battery.{node}.capacity: must be positive")
            c = None
        caps[node] = c
        frac = num(f"battery.{node}.initial_fraction")
        if frac is not None and not 0.0 <= frac <= 1.0:
            bad.append(f"battery.{node}.initial_fraction: must lie in [0, 1]")

    if caps["rx"] is not None and R is not None and caps["rx"] < 2 * R:
        bad.append(f"battery.rx.capacity: B_max^r >= 2R required ({caps['rx']} < {2 * R})")

    kind = get_key(cfg, "policy.kind")
    if kind not in POLICY_KINDS:
        bad.append(f"policy.kind: must be one of {', '.join(POLICY_KINDS)}, got {kind!r}")
        kind = None
    beta = num("policy.beta_t")
    if beta is not None and beta < 2.0:
        bad.append(f"policy.beta_t: must be >= 2, got {beta}")
        beta = None
    f = get_key(cfg, "policy.dilation_f")
    if not _is_int(f) or f < 1:
        bad.append(f"policy.dilation_f: integer f >= 1 required, got {f!r}")
        f = None

    pattern = cfg["policy"].get("pattern")
    if pattern is not None:
        if not isinstance(pattern, Mapping):
            bad.append("policy.pattern: must be a mapping with n_plus and n_minus")
        else:
            terms = [pattern.get("n_plus"), pattern.get("n_minus")]
            if not all(_is_int(t) and t >= 0 for t in terms):
                bad.append(f"policy.pattern: n_plus and n_minus must be non-negative integers, got {terms}")
            elif sum(terms) < 1:
                bad.append("policy.pattern: n_plus + n_minus must be >= 1")

    # Transmitter drift must leave a positive low-battery draw and an
    # affordable high-battery draw.
    if probs["tx"] is not None and amount is not None and caps["tx"] is not None and beta is not None:
        mu_t = probs["tx"] * amount
        sigma2 = probs["tx"] * (1 - probs["tx"]) * amount**2
        delta = beta * sigma2 * math.log(caps["tx"]) / caps["tx"]
        if mu_t > 0 and not delta < mu_t:
            bad.append(f"policy.beta_t: delta_t^- < mu_t required ({delta:.6g} >= {mu_t:.6g})")
        if mu_t + delta > caps["tx"] / 2:
            bad.append("battery.tx.capacity: half capacity must cover mu_t + delta_t^+")

    if kind in SCHEDULED_KINDS and probs["rx"] is not None and amount is not None and R is not None:
        mu_r = probs["rx"] * amount
        if mu_r <= 0:
            bad.append(f"harvest.rx.prob: policy {kind} needs mu_r > 0")
        elif mu_r > R:
            bad.append(f"harvest.rx.prob: policy {kind} needs mu_r <= R (energy-constrained receiver)")
    return bad


def sweep_violations(sweep: Any) -> List[str]:
    """Checks for the optional ``sweep`` section of a run file."""
    if sweep is None:
        return []
    if not isinstance(sweep, Mapping):
        return ["sweep: must be a mapping with axis and values"]
    bad = []
    if sweep.get("axis") not in SWEEP_AXES:
        bad.append(f"sweep.axis: must be one of {', '.join(SWEEP_AXES)}, got {sweep.get('axis')!r}")
    values = sweep.get("values")
    if not isinstance(values, list) or not values:
        bad.append("sweep.values: must be a non-empty list")
    policies = sweep.get("policies")
    if policies is not None:
        if not isinstance(policies, list) or not policies:
            bad.append("sweep.policies: must be a non-empty list")
        else:
            for p in policies:
                if p not in POLICY_KINDS:
                    bad.append(f"sweep.policies: unknown policy {p!r}")
    return bad

