import json

import pytest

from dualeh.config import DEFAULTS, ConfigError, config_violations, get_key, load_config, merged, set_key
from dualeh.engine import SimConfig
from dualeh.experiments import PRESETS


def _with(**dotted):
    raw = {}
    for k, v in dotted.items():
        set_key(raw, k.replace("__", "."), v)
    return raw


def test_defaults_are_valid():
    assert config_violations({}) == []


def test_receiver_battery_must_hold_two_listens():
    bad = config_violations(_with(link__rx_cost=0.5, battery__rx__capacity=0.8))
    assert any("B_max^r >= 2R" in b for b in bad)


def test_dilation_must_be_integer():
    bad = config_violations(_with(policy__dilation_f=2.5))
    assert any("integer f" in b for b in bad)


def test_fig2_config_is_ok():
    assert config_violations(dict(PRESETS["fig2"].base)) == []


def test_every_violation_reported():
    raw = _with(harvest__tx__prob=1.2, harvest__rx__prob=-0.1, policy__dilation_f=0, link__rx_cost=0.5, battery__rx__capacity=0.5)
    bad = config_violations(raw)
    keys = {b.split(":")[0] for b in bad}
    assert {"harvest.tx.prob", "harvest.rx.prob", "policy.dilation_f", "battery.rx.capacity"} <= keys


def test_drift_must_stay_below_mean():
    # delta/mu_t = beta*(1-p)*ln(B)/B, which beta=2 keeps below 2/e
    assert config_violations(_with(harvest__tx__prob=0.05, battery__tx__capacity=3.0)) == []
    bad = config_violations(_with(harvest__tx__prob=0.05, battery__tx__capacity=3.0, policy__beta_t=5.0))
    assert any("delta_t^- < mu_t" in b for b in bad)


def test_scheduled_policy_needs_constrained_receiver():
    bad = config_violations(_with(harvest__rx__prob=0.6))
    assert any("mu_r <= R" in b for b in bad)
    assert config_violations(_with(harvest__rx__prob=0.6, policy__kind="unconstrained")) == []


@pytest.mark.parametrize(
    "raw,key",
    [
        ({"horizon": 0}, "horizon"),
        ({"horizon": 1.5}, "horizon"),
        ({"seed": -1}, "seed"),
        ({"record": "full"}, "record"),
        ({"record": "trace", "horizon": 10**6 + 1}, "record"),
        ({"warmup_fraction": 1.0}, "warmup_fraction"),
        (_with(policy__kind="greedy"), "policy.kind"),
        (_with(policy__beta_t=1.0), "policy.beta_t"),
        (_with(policy__pattern={"n_plus": 0, "n_minus": 0}), "policy.pattern"),
        (_with(policy__pattern={"n_plus": 1.5, "n_minus": 1}), "policy.pattern"),
        (_with(harvest__amount=0), "harvest.amount"),
        ({"bogus": 1}, "unknown top-level keys"),
        ({"sweep": {"axis": "link.rx_cost", "values": [1]}}, "sweep.axis"),
        ({"sweep": {"axis": "harvest.rx.prob", "values": []}}, "sweep.values"),
        ({"sweep": {"axis": "harvest.rx.prob", "values": [0.1], "policies": ["magic"]}}, "sweep.policies"),
    ],
)
def test_single_violations(raw, key):
    bad = config_violations(raw)
    assert bad and any(b.startswith(key) for b in bad), bad


def test_load_yaml_and_json(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("horizon: 1000\nharvest:\n  rx: {prob: 0.2}\n", encoding="utf-8")
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"horizon": 1000, "harvest": {"rx": {"prob": 0.2}}}), encoding="utf-8")
    assert load_config(y) == load_config(j)
    cfg = SimConfig.from_dict(load_config(y))
    assert cfg.prob_rx == 0.2 and cfg.prob_tx == DEFAULTS["harvest"]["tx"]["prob"]


def test_load_rejects_non_mapping(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(p)


def test_merged_does_not_mutate_defaults():
    m = merged({"harvest": {"tx": {"prob": 0.9}}})
    assert get_key(m, "harvest.tx.prob") == 0.9
    assert get_key(DEFAULTS, "harvest.tx.prob") == 0.4
    assert get_key(m, "harvest.rx.prob") == 0.3


def test_get_key_missing():
    with pytest.raises(KeyError):
        get_key(DEFAULTS, "harvest.sun.prob")


def test_config_error_lists_violations():
    with pytest.raises(ConfigError) as err:
        SimConfig.from_dict(_with(harvest__tx__prob=2.0))
    assert err.value.violations
    assert "harvest.tx.prob" in str(err.value)


def test_battery_capacity_axis_sets_both():
    cfg = SimConfig.from_dict({}).with_key("battery.capacity", 77.0)
    assert cfg.capacity_tx == cfg.capacity_rx == 77.0
