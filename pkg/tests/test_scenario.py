import json
import math

import numpy as np
import pytest

from pnormcl.errors import InvalidScenarioError
from pnormcl.fields import Datum, Grid, constant, field_from_datum
from pnormcl.kernels import Kernel
from pnormcl.scenario import (dump_scenario, load_scenario, parse_exponent,
                              scenario_from_dict)

BASE = {"initial": {"kind": "riemann", "a": 0.5, "b": 1, "jump": 0},
        "velocity": {"kind": "linear"}, "kernel": {"shape": "constant"},
        "p": 2, "eta": 0.5, "T": 0.5, "grid": {"x_min": -4, "x_max": 4, "n_cells": 160}}


def test_parse_exponent():
    assert parse_exponent("zero") == 0.0
    assert math.isinf(parse_exponent("infinity"))
    assert parse_exponent(2) == 2.0
    for bad in ("big", -1, float("nan")):
        with pytest.raises(InvalidScenarioError):
            parse_exponent(bad)


def test_roundtrip(tmp_path):
    s = scenario_from_dict(BASE)
    dump_scenario(s, tmp_path / "s.json")
    back = load_scenario(tmp_path / "s.json")
    assert back.to_dict() == s.to_dict()
    assert np.array_equal(back.initial.values, s.initial.values)
    assert s.record_times == (0.0, 0.125, 0.25, 0.375, 0.5)


@pytest.mark.parametrize("change", [{"eta": -1}, {"T": 0}, {"p": "minus"},
                                    {"record_times": [0.3, 0.1]}, {"record_times": [0.9]},
                                    {"kernel": {"shape": "cubic"}}])
def test_invalid(change):
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict({**BASE, **change})


def test_missing_key():
    d = dict(BASE)
    del d["grid"]
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict(d)


def test_limit_exponent_requirements():
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict({**BASE, "p": "zero", "kernel": {"shape": "exponential"}})
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict({**BASE, "p": "infinity", "kernel": {"shape": "exponential"}})
    s = scenario_from_dict({**BASE, "p": "infinity"})
    assert s.exploratory and any("exploratory" in n for n in s.notes)


def test_zero_density_support():
    zero = {**BASE, "initial": {"kind": "riemann", "a": 0.0, "b": 1, "jump": 0}}
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict(zero)
    s = scenario_from_dict({**zero, "kernel": {"shape": "exponential"}})
    assert "zero-density datum" in s.notes


def test_inadmissible_velocity():
    with pytest.raises(InvalidScenarioError):
        scenario_from_dict({**BASE, "velocity": {"kind": "polynomial", "coeffs": [0, 1]}})


def test_contamination_and_window():
    s = scenario_from_dict(BASE)
    assert s.contamination_distance() == pytest.approx(0.5 * 0.5 + 0.5)
    assert s.clean_window() == pytest.approx((-3.25, 3.25))


def test_with_changes():
    s = scenario_from_dict(BASE)
    t = s.with_changes(p="zero", grid=Grid(-4, 4, 320))
    assert t.p == 0 and t.grid.n_cells == 320 and t.eta == s.eta
