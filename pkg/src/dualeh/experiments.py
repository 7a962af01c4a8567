"""Experiment presets and CSV output for the command-line harness.

Each preset fixes a base configuration, one sweep axis and the policies
to compare. Only ``horizon``, ``seed`` and ``trials`` may be overridden;
anything else needs a custom config file with a ``sweep`` section::

    link: {rx_cost: 0.5}
    battery: {tx: {capacity: 200}, rx: {capacity: 200}}
    sweep:
      axis: harvest.rx.prob
      values: [0.1, 0.2, 0.3]
      policies: [coordinated, dilated]

CSV columns (stable; rates in bits per slot, log base 2):

``preset, axis, value, policy, trial, seed, throughput,
upper_bound_bits_per_slot, gap_bits_per_slot``, then the link parameters
``rx_cost, prob_tx, prob_rx, capacity_tx, capacity_rx, beta_t,
dilation_f`` (``dilation_f`` only on dilated rows), then every
:meth:`SimSummary.as_row` field except the ones already listed.
"""

from __future__ import annotations

import csv
import io
import numbers
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .bounds import throughput_upper_bound
from .config import ConfigError, config_violations, load_config
from .engine import SimConfig, SweepRow, run_link, run_sweep
from .energy import EnergyLedger
from .metrics import SimSummary

__all__ = [
    "ExperimentPreset",
    "PRESETS",
    "LEAD_COLUMNS",
    "check_writable",
    "csv_columns",
    "format_value",
    "preset_from_file",
    "run_experiment",
    "rows_to_csv",
    "write_csv",
    "write_traces",
]

LEAD_COLUMNS = (
    "preset",
    "axis",
    "value",
    "policy",
    "trial",
    "seed",
    "throughput",
    "upper_bound_bits_per_slot",
    "gap_bits_per_slot",
    "rx_cost",
    "prob_tx",
    "prob_rx",
    "capacity_tx",
    "capacity_rx",
    "beta_t",
    "dilation_f",
)
DEFAULT_HORIZON = 10**7


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    base: Mapping[str, Any]
    axis: str
    values: Tuple[Any, ...]
    policies: Tuple[str, ...]
    include_bound: bool = True

    def base_config(self, horizon: int, seed: int) -> SimConfig:
        raw = dict(self.base)
        raw["horizon"] = horizon
        raw["seed"] = seed
        return SimConfig.from_dict(raw)


def _link(R, cap, prob_tx, prob_rx, policy="coordinated", f=1):
    return {
        "link": {"rx_cost": R},
        "harvest": {"amount": 1.0, "tx": {"prob": prob_tx}, "rx": {"prob": prob_rx}},
        "battery": {"tx": {"capacity": cap}, "rx": {"capacity": cap}},
        "policy": {"kind": policy, "beta_t": 2.0, "dilation_f": f},
    }


_TENTHS = tuple(round(0.1 * k, 1) for k in range(1, 10))

PRESETS: Dict[str, ExperimentPreset] = {
    # Receiver harvests more than it can spend, so only the transmitter limits.
    "fig1": ExperimentPreset(
        "fig1", _link(0.5, 50.0, 0.4, 0.6, "unconstrained"), "harvest.tx.prob", _TENTHS, ("unconstrained",)
    ),
    "fig2": ExperimentPreset(
        "fig2",
        _link(0.5, 1000.0, 0.4, 0.3, f=100),
        "harvest.rx.prob",
        (0.1, 0.2, 0.3, 0.4, 0.5),
        ("coordinated", "dilated"),
    ),
    "fig3": ExperimentPreset(
        "fig3",
        _link(0.5, 1000.0, 0.4, 0.3),
        "battery.capacity",
        (20.0, 50.0, 100.0, 200.0, 500.0, 1000.0),
        ("coordinated",),
    ),
    "fig4": ExperimentPreset(
        "fig4",
        _link(0.5, 50.0, 0.4, 0.3),
        "harvest.rx.prob",
        (0.1, 0.2, 0.4),
        ("coordinated", "uncoordinated"),
    ),
}


def preset_from_file(path: Union[str, Path]) -> ExperimentPreset:
    """Build a ``custom`` preset from a config file.

    Without a ``sweep`` section the file describes a single point.
    """
    raw = load_config(path)
    bad = config_violations(raw)
    if bad:
        raise ConfigError(bad)
    sweep = raw.pop("sweep", None)
    base = SimConfig.from_dict(raw)
    if sweep is None:
        axis, values, policies = "harvest.tx.prob", (base.prob_tx,), (base.policy,)
    else:
        axis = sweep["axis"]
        values = tuple(sweep["values"])
        policies = tuple(sweep.get("policies") or (base.policy,))
    return ExperimentPreset("custom", raw, axis, values, policies)


def run_experiment(
    preset: ExperimentPreset,
    *,
    horizon: Optional[int] = None,
    seed: Optional[int] = None,
    trials: int = 1,
    workers: int = 1,
) -> List[SweepRow]:
    """Run every (value, policy, trial) of ``preset``."""
    if horizon is None:
        horizon = int(preset.base.get("horizon", DEFAULT_HORIZON))
    if seed is None:
        seed = int(preset.base.get("seed", 0))
    base = preset.base_config(horizon, seed)
    return run_sweep(base, preset.axis, preset.values, trials=trials, policies=preset.policies, workers=workers)


def format_value(v: Any) -> str:
    """CSV cell text: floats to 12 significant digits, bools as 0/1."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, numbers.Integral):
        return str(int(v))
    if isinstance(v, numbers.Real):
        return format(float(v), ".12g")
    return str(v)


def csv_columns() -> List[str]:
    skip = set(LEAD_COLUMNS) | {"ledger_tx", "ledger_rx", "pattern", "config"}
    cols = list(LEAD_COLUMNS)
    cols += [f.name for f in fields(SimSummary) if f.name not in skip]
    cols += ["n_plus", "n_minus"]
    for node in ("tx", "rx"):
        cols += [f"ledger_{node}_{f.name}" for f in fields(EnergyLedger)]
    return cols


def _row(preset: ExperimentPreset, r: SweepRow) -> Dict[str, Any]:
    s: SimSummary = r.summary
    cfg = s.config
    bound = throughput_upper_bound(s.config.link)
    row = {
        "preset": preset.name,
        "axis": preset.axis,
        "value": r.value,
        "policy": r.policy,
        "trial": r.trial,
        "seed": s.seed,
        "throughput": s.throughput,
        "upper_bound_bits_per_slot": bound if preset.include_bound else None,
        "gap_bits_per_slot": bound - s.throughput if preset.include_bound else None,
        "rx_cost": cfg.rx_cost,
        "prob_tx": cfg.prob_tx,
        "prob_rx": cfg.prob_rx,
        "capacity_tx": cfg.capacity_tx,
        "capacity_rx": cfg.capacity_rx,
        "beta_t": cfg.beta_t,
        "dilation_f": cfg.dilation_f if cfg.policy == "dilated" else None,
    }
    for k, v in s.as_row().items():
        row.setdefault(k, v)
    return row


def rows_to_csv(preset: ExperimentPreset, rows: Iterable[SweepRow]) -> str:
    cols = csv_columns()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = _row(preset, r)
        w.writerow([format_value(d.get(c)) for c in cols])
    return buf.getvalue()


def check_writable(path: Path) -> None:
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    if not os.access(parent, os.W_OK) or (path.exists() and not os.access(path, os.W_OK)):
        raise OSError(f"output path is not writable: {path}")


def write_csv(preset: ExperimentPreset, rows: Iterable[SweepRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    check_writable(path)
    text = rows_to_csv(preset, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_traces(
    preset: ExperimentPreset, rows: Sequence[SweepRow], directory: Union[str, Path]
) -> List[Path]:
    """Re-run each row with per-slot recording and save one CSV per run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for r in rows:
        cfg = r.summary.config.replace(record="trace")
        _, trace = run_link(cfg)
        rec = trace.records
        path = directory / f"{format_value(r.value)}_{r.policy}_{r.trial}.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(rec.dtype.names)
            for row in rec.tolist():
                w.writerow([format_value(v) for v in row])
        out.append(path)
    return out
