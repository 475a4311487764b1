import json

import pytest
import anisoscale

# Logging
import logging
logging.basicConfig(level=logging.DEBUG)

MODEL = {"q1": 1.8, "q2": 3.0, "q3": 6.0}


def test_create_empty_config():
    config = anisoscale.RunConfig()
    assert config.__dict__ == {}

def test_create_config_with_variable():
    config = anisoscale.RunConfig(seed=42)
    assert config.__dict__ == {"seed": 42}

def test_config_from_dict():
    config = anisoscale.RunConfig.from_dict({"model": MODEL, "gamma": [1, 1, 1]})
    assert config.params() == anisoscale.ModelParams((1.8, 3.0, 6.0))
    assert config.scaling() == anisoscale.ScalingVector((1.0, 1.0, 1.0))

def test_config_unknown_keys():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig.from_dict({"model": MODEL, "colour": "red"})
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig.from_dict([1, 2, 3])

def test_config_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": MODEL, "seed": 1}))
    assert anisoscale.RunConfig.from_file(str(path)).seed == 1
    path.write_text("{not json")
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig.from_file(str(path))

def test_config_hash_is_canonical():
    first = anisoscale.RunConfig(model=MODEL, seed=1)
    second = anisoscale.RunConfig(seed=1, model=dict(reversed(list(MODEL.items()))))
    assert first.config_hash() == second.config_hash()
    assert first.config_hash() != anisoscale.RunConfig(model=MODEL, seed=2).config_hash()

def test_effective_thresholds():
    config = anisoscale.RunConfig(thresholds={"slope": 0.1})
    assert config.effective_thresholds["slope"] == 0.1
    assert config.effective_thresholds["covariance"] == anisoscale.DEFAULT_THRESHOLDS["covariance"]

def test_missing_model():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig().params()
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig().scaling()

def test_validate_accepts():
    config = anisoscale.RunConfig(model=MODEL, gamma=[1, 1, 1], lambda_grid=[2, 4, 8], corners=[[1, 1, 1]],
                                  pairs=[[[1, 1, 1], [0.5, 1, 1]]], radius="auto", quadrature={"nodes": 10},
                                  replicates=50, threads=2)
    assert config.validate() is config

@pytest.mark.parametrize("values", [
    {"model": {"q1": 1.2, "q2": 1.2, "q3": 1.2}},
    {"gamma": [1, 0, 1]},
    {"lambda_grid": [0.5, 2, 4]},
    {"lambda_grid": []},
    {"corners": [[1, 1]]},
    {"corners": [[1, -1, 1]]},
    {"pairs": [[[1, 1, 1]]]},
    {"radius": 0},
    {"quadrature": {"nodes": 2}},
    {"quadrature": {"points": 10}},
    {"replicates": 0},
    {"threads": 1.5},
    {"thresholds": {"speed": 1.0}},
])
def test_validate_rejects(values):
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.RunConfig(**values).validate()

def test_validate_boundary():
    with pytest.raises(anisoscale.BoundaryRejectionException):
        anisoscale.RunConfig(model={"q1": 3.0, "q2": 3.0, "q3": 3.0}).validate()
