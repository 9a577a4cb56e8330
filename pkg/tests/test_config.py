import json
import os

import pytest

from multiphasetorsion.config import ExperimentConfig, _positive_int
from multiphasetorsion.exceptions import ConfigurationError, DomainError


def _write(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def test_positive_int():
    assert _positive_int("4") == 4
    assert _positive_int(0) == 0
    assert _positive_int("40", strict=True) == 40
    with pytest.raises(ConfigurationError):
        _positive_int(0, strict=True)
    with pytest.raises(ConfigurationError):
        _positive_int("four")
    with pytest.raises(ConfigurationError):
        _positive_int(-1)


def test_version_is_required():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"geometry": {}})
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"schema_version": "2"})


def test_unknown_blocks_are_rejected():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"schema_version": "1", "geomtry": {}})


def test_block_types():
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_dict({"schema_version": "1", "solver": [1]})


def test_solver_block_overrides_settings(settings):
    config = ExperimentConfig.from_dict(
        {"schema_version": "1", "solver": {"TRUNCATION": 8}}
    )
    assert config.settings(settings).TRUNCATION == 8
    bad = ExperimentConfig.from_dict(
        {"schema_version": "1", "solver": {"TRUNCATION": -1}}
    )
    with pytest.raises(ConfigurationError):
        bad.settings(settings)
    unknown = ExperimentConfig.from_dict({"schema_version": "1", "solver": {"K": 8}})
    with pytest.raises(ConfigurationError):
        unknown.settings(settings)


def test_concentric_geometry():
    config = ExperimentConfig.from_dict(
        {
            "schema_version": "1",
            "geometry": {
                "radii": [0.5, 1.0, 1.5],
                "sigmas": [2.0, 1.0, 3.0],
                "source": 0.0,
            },
        }
    )
    geometry = config.layered_geometry()
    assert geometry.m == 3
    assert geometry.source == 0.0
    assert config.phase_config().radii == (0.5, 1.0, 1.5)


def test_geometry_needs_radii():
    config = ExperimentConfig.from_dict(
        {"schema_version": "1", "geometry": {"sigmas": [1.0]}}
    )
    with pytest.raises(ConfigurationError):
        config.layered_geometry()


def test_explicit_interfaces():
    config = ExperimentConfig.from_dict(
        {
            "schema_version": "1",
            "geometry": {
                "interfaces": [
                    {"r0": 0.5, "modes": [[2, 0.01, 0.0]]},
                    {"r0": 1.0, "center": [0.0, 0.0]},
                ],
                "sigmas": [2.0, 1.0],
            },
        }
    )
    geometry = config.layered_geometry()
    assert geometry.truncation == 2
    assert geometry.source == 1.0


def test_geometry_file_is_relative_to_config(tmp_path):
    geometry = {
        "interfaces": [{"r0": 0.5}, {"r0": 1.0}],
        "sigmas": [2.0, 1.0],
        "source": 1.0,
    }
    _write(tmp_path / "geometry.json", geometry)
    path = _write(
        tmp_path / "verify.json",
        {
            "schema_version": "1",
            "geometry": {"file": "geometry.json"},
            "verify": {"orders": [1, 2, 3]},
        },
    )
    config = ExperimentConfig.load(path)
    assert config.base_dir == str(tmp_path)
    assert config.layered_geometry().m == 2
    assert config.orders() == [1, 2, 3]


def test_missing_geometry_file(tmp_path):
    config = ExperimentConfig.from_dict(
        {"schema_version": "1", "geometry": {"file": "nope.json"}},
        base_dir=str(tmp_path),
    )
    with pytest.raises(ConfigurationError):
        config.layered_geometry()


def test_unreadable_config(tmp_path):
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(str(tmp_path / "broken.json"))
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(str(tmp_path / "absent.json"))


def test_fields():
    config = ExperimentConfig.from_dict(
        {
            "schema_version": "1",
            "dirichlet": 0.25,
            "jumps": {"0": {"modes": [[2, 0.1, 0.0]]}},
            "construction": {"eta": [[3, 0.03, 0.0]], "truncation": 8},
            "geometry": {"radii": [0.5, 1.0, 1.5], "sigmas": [2.0, 1.0, 3.0]},
        }
    )
    assert config.dirichlet_field().mean == 0.25
    jumps = config.jump_fields()
    assert list(jumps) == [0]
    assert jumps[0].cosines[1] == 0.1
    assert config.eta().cosines[2] == 0.03
    params = config.construction_params()
    assert params.truncation == 8
    assert params.sigma3 == 3.0
    assert config.orders() == [1, 2]


def test_invalid_fields():
    config = ExperimentConfig.from_dict(
        {
            "schema_version": "1",
            "dirichlet": {"modes": [[0, 1.0, 0.0]]},
            "construction": {},
        }
    )
    with pytest.raises(ConfigurationError):
        config.dirichlet_field()
    with pytest.raises(ConfigurationError):
        config.eta()


def test_invalid_orders():
    config = ExperimentConfig.from_dict(
        {"schema_version": "1", "verify": {"orders": [0]}}
    )
    with pytest.raises(ConfigurationError):
        config.orders()


def test_output_dir(tmp_path):
    config = ExperimentConfig.from_dict(
        {"schema_version": "1", "outputs": "results"}, base_dir=str(tmp_path)
    )
    path = config.output_dir()
    assert path == os.path.join(str(tmp_path), "results")
    assert os.path.isdir(path)
    override = str(tmp_path / "elsewhere")
    assert config.output_dir(override) == override


def test_output_dir_on_a_file(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    config = ExperimentConfig.from_dict({"schema_version": "1"}, base_dir=str(tmp_path))
    with pytest.raises(ConfigurationError):
        config.output_dir(str(blocker / "sub"))


def test_planar_geometry_only():
    config = ExperimentConfig.from_dict(
        {
            "schema_version": "1",
            "geometry": {"radii": [0.5, 1.0], "sigmas": [2.0, 1.0], "dimension": 3},
        }
    )
    with pytest.raises(DomainError):
        config.layered_geometry()
