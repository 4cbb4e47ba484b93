import numpy as np
import pytest

from config.weakwire_config import ConfigError, get_config
from tools.encoding import JsonEncodable, encode, format_float, read_csv, to_str, write_csv
from tools.response import all_graded_pass, assert_dict_struct
from tools.structure import check_report_structure
from tools.types import AverageHalf, CheckReport, CheckStatus, Command, ConstraintMode
from weakwire.circuit import Cut
from weakwire.weakvalues import WeakVector


def test_config_defaults(monkeypatch):
    for name in ("THREADS", "MAX_QUBITS", "AMP_EPS", "CHECK_TOL", "LOG_LEVEL"):
        monkeypatch.delenv(f"WEAKWIRE_{name}", raising=False)
    config = get_config()
    assert config["threads"] == 1
    assert config["max_qubits"] == 12
    assert config["amp_eps"] == 1e-10
    assert config["check_tol"] == 1e-10
    assert config["log_level"] == "WARNING"


def test_config_reads_environment(monkeypatch):
    monkeypatch.setenv("WEAKWIRE_THREADS", "4")
    monkeypatch.setenv("WEAKWIRE_LOG_LEVEL", "debug")
    config = get_config()
    assert config["threads"] == 4
    assert config["log_level"] == "DEBUG"


@pytest.mark.parametrize("name, value", [("WEAKWIRE_THREADS", "two"), ("WEAKWIRE_AMP_EPS", "-1")])
def test_config_rejects_bad_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigError):
        get_config()


def test_enum_parsing():
    assert CheckStatus.from_string("PASSED") is CheckStatus.PASSED
    assert ConstraintMode.from_string("Relaxed") is ConstraintMode.RELAXED
    assert AverageHalf.from_string("first_half") is AverageHalf.FIRST_HALF
    assert Command.from_string("hv_solve") is Command.HV_SOLVE
    with pytest.raises(ValueError):
        ConstraintMode.from_string("partial")


def test_check_report_grading():
    assert CheckReport.graded("x", 1e-12, 1e-10).status is CheckStatus.PASSED
    failed = CheckReport.graded("x", 1e-3, 1e-10)
    assert failed.status is CheckStatus.FAILED
    assert not failed.passed
    unasserted = CheckReport.graded("x", 1e-3, 1e-10, asserted=False)
    assert unasserted.status is CheckStatus.UNASSERTED
    assert not unasserted.asserted
    skipped = CheckReport.skipped("x", 0.5, 1e-10, {"reason": "condition not met"})
    assert skipped.to_dict()["skipped"]


def test_check_report_dict_round_trip():
    report = CheckReport.graded("pair_dot", 2e-11, 1e-10, {"tau": 0.25})
    data = report.to_dict()
    assert_dict_struct(data, check_report_structure)
    assert CheckReport.from_dict(data) == report
    assert all_graded_pass([data, CheckReport.skipped("n", 1.0, 1e-10).to_dict()])


def test_encode_complex_and_dataclasses():
    encoded = encode(
        {"w": WeakVector(1j, 2, 0), "cut": Cut(1, 0, 0.25), "mode": ConstraintMode.FULL}
    )
    assert encoded == {
        "w": [[0.0, 1.0], [2.0, 0.0], [0.0, 0.0]],
        "cut": {"moment": 1, "gate": 0, "tau": 0.25},
        "mode": "full",
    }
    assert encode(np.array([1 + 2j])) == [[1.0, 2.0]]
    with pytest.raises(TypeError):
        encode({1: "x"})


class Phase(JsonEncodable):
    def __init__(self, angle: float):
        self.angle = angle

    def __to_json__(self):
        return {"phase": complex(np.cos(self.angle), np.sin(self.angle))}


def test_encode_protocol_and_default_hook():
    """Objects lower themselves through __to_json__; the default hook runs first."""
    assert encode([Phase(0.0)]) == [{"phase": [1.0, 0.0]}]
    assert encode({"x": 0.5}, default=lambda v: Phase(v) if isinstance(v, float) else v) == {
        "x": {"phase": [np.cos(0.5), np.sin(0.5)]}
    }


def test_float_formatting():
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(-0.0) == "0"
    with pytest.raises(ValueError):
        format_float(float("nan"))
    assert to_str({"a": [1.5, 2]}) == '{\n  "a": [1.5, 2]\n}\n'


def test_csv_round_trip_keeps_precision():
    values = [[0.1, 1 / 3], [0.2, -2 / 3]]
    header, data = read_csv(write_csv(["tau", "v"], values))
    assert header == ["tau", "v"]
    assert data.tolist() == values
