# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import json
import sys

import pytest

from hill import config as hill_config
from hill import errors
from hill.config import HillConfig
from hill.utils import misc


def test_defaults_and_overrides():
    config = HillConfig(config={"TRUNCATION": 32, "GAMMA_TOL": 1})
    assert config.TRUNCATION == 32
    assert config.GAMMA_TOL == 1.0 and isinstance(config.GAMMA_TOL, float)
    assert HillConfig().TRUNCATION == 64
    with pytest.raises(ValueError, match="unknown key"):
        HillConfig(config={"TRUNCATON": 32})
    with pytest.raises(TypeError):
        HillConfig(config={"TRUNCATION": "32"})


def test_dump_and_load(tmp_path):
    path = str(tmp_path / "hill.json")
    HillConfig(config={"N_MAX": 12, "BC": ["dir"]}).dump(path)
    with open(path, encoding="utf-8") as file:
        data = json.load(file)
    assert list(data) == sorted(data)
    loaded = HillConfig(path)
    assert loaded.N_MAX == 12 and loaded.BC == ["dir"]


def test_print_prefix(capsys):
    config = HillConfig()
    config.name = "slate"
    config.print("hello")
    assert capsys.readouterr().out == "[slate] hello\n"


def test_threads_cap(monkeypatch):
    config = HillConfig(config={"THREADS": 8})
    monkeypatch.setenv(hill_config.THREADS_ENV, "2")
    assert hill_config.threads(config) == 2
    monkeypatch.setenv(hill_config.THREADS_ENV, "many")
    assert hill_config.threads(config) == 8
    monkeypatch.delenv(hill_config.THREADS_ENV)
    assert hill_config.threads(HillConfig(config={"THREADS": 3})) == 3


def test_map_threads_keeps_order(config):
    config.THREADS = 4
    assert hill_config.map_threads(config, lambda x: x * x, range(10)) == [x * x for x in range(10)]


@pytest.mark.parametrize(
    ("update", "error"),
    [
        ({"TRUNCATION": 3}, errors.TruncationTooSmallError),
        ({"N_MIN": 4}, errors.BadParamError),
        ({"N_MIN": 10, "N_MAX": 8}, errors.BadParamError),
        ({"GAMMA_TOL": -1.0}, errors.BadParamError),
        ({"RADIUS_POLICY": "wide"}, errors.BadParamError),
        ({"PROJECTION_NODES": 8}, errors.BadParamError),
    ],
)
def test_check(update, error):
    with pytest.raises(error):
        hill_config.check(HillConfig(config=update))


def test_resolution_floor():
    assert hill_config.resolution_floor(HillConfig(), 32) == pytest.approx(1e3 * sys.float_info.epsilon * 65**2)


def test_make_potential_from_config(tmp_path):
    config = HillConfig(config={"BUILTIN": "delta_comb", "BUILTIN_PARAMS": {"s": 2.0}, "BAND_LIMIT": 8})
    p = hill_config.make_potential(config)
    assert p.family_tag == "delta_comb" and p.band_limit == 8 and p.params["s"] == 2.0
    path = tmp_path / "p.json"
    path.write_text('{"coeffs": [[2, 0.0, -0.5], [-2, 0.0, 0.5]]}', encoding="utf-8")
    config.POTENTIAL_FILE = str(path)
    assert hill_config.make_potential(config).q(2) == pytest.approx(-0.5j)


def test_error_taxonomy():
    exc = errors.TruncationTooSmallError("K(3) must be >= 4")
    assert exc.kind() == "TruncationTooSmall"
    assert exc.as_dict() == {"error": "TruncationTooSmall", "message": "K(3) must be >= 4", "exit_code": 2}
    assert errors.NearSingularError.exit_code == 3
    assert issubclass(errors.CountMismatchError, errors.NumericalError)
    assert issubclass(errors.FrameMismatchError, errors.ConfigError)


def test_misc_helpers(tmp_path):
    assert {"python", "numpy", "scipy", "pandas"} <= set(misc.versions())
    path = misc.write_json(str(tmp_path / "a" / "b.json"), {"b": 1, "a": complex(1, 2)})
    with open(path, encoding="utf-8") as file:
        assert json.load(file) == {"a": "(1+2j)", "b": 1}
    assert not misc.silent_unlink(str(tmp_path / "missing"))
