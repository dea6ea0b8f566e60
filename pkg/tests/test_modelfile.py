from __future__ import annotations

import pytest

from sharpwaves.errors import ModelError
from sharpwaves.kinetics import KineticsSpec, LinearDeath, Nicholson, PowerDeath, Tabulated, nicholson_reference
from sharpwaves.modelfile import dumps_model, loads_model

REF_TOML = """
m = 2.0
D = 1.0
r = 1.0
birth.kind = "nicholson"
birth.p = 4.0
birth.a = 0.5
death.kind = "linear"
death.delta = 0.5
"""


def test_parse_reference():
    assert loads_model(REF_TOML) == nicholson_reference(1.0)


@pytest.mark.parametrize("spec", [
    nicholson_reference(2.5, m=3.0, diffusivity=0.5),
    KineticsSpec(1.5, 1.0, 0.0, Nicholson(4.0, 0.5, 2.0), PowerDeath(0.3, 2.0)),
    KineticsSpec(2.0, 1.0, 1.0, Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 0.5)), LinearDeath(0.2)),
])
def test_round_trip(spec):
    assert loads_model(dumps_model(spec)) == spec


def test_unknown_key_rejected():
    with pytest.raises(ModelError):
        loads_model(REF_TOML + "colour = 1\n")


def test_unknown_law_rejected():
    with pytest.raises(ModelError):
        loads_model(REF_TOML.replace('"nicholson"', '"ricker"'))


def test_missing_parameter_rejected():
    with pytest.raises(ModelError):
        loads_model(REF_TOML.replace("death.delta = 0.5\n", ""))


def test_malformed_toml():
    with pytest.raises(ModelError):
        loads_model("m = = 2")


def test_age_structured_inherits_delay():
    spec = loads_model(REF_TOML.replace('"nicholson"', '"age_structured"').replace("birth.a = 0.5", "birth.gamma = 0.1"))
    assert spec.birth.r == 1.0
