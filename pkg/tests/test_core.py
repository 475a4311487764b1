import pytest
import anisoscale
from anisoscale import io

# Logging
import logging
logging.basicConfig(level=logging.DEBUG)

LOPSIDED = anisoscale.ModelParams((1.8, 3.0, 6.0))
GAMMA = (1.0, 1.0, 1.0)
config = anisoscale.RunConfig(lambda_grid=[2.0, 4.0, 8.0, 16.0], corners=[[1.0, 1.0, 1.0]], seed=7)


def test_core_creation():
    verifier = anisoscale.Verifier(config)
    assert verifier.config == config
    assert set(verifier.accessible_checks) == {"slope", "l2"}

def test_core_creation_with_empty_config():
    verifier = anisoscale.Verifier(anisoscale.RunConfig())
    assert verifier.accessible_checks == {}

def test_core_creation_test_mode():
    verifier = anisoscale.Verifier(anisoscale.RunConfig(), test_mode=True)
    assert set(verifier.accessible_checks) == {"dummy", "fail_dummy"}

@pytest.mark.asyncio
async def test_core_check_not_valid():
    verifier = anisoscale.Verifier(config)
    scenario = anisoscale.classify_scenario(LOPSIDED, GAMMA)
    with pytest.raises(anisoscale.NotAValidCheckException):
        await verifier.run_check("bootstrap", scenario)

@pytest.mark.asyncio
async def test_core_check_missing_config():
    verifier = anisoscale.Verifier(config)
    scenario = anisoscale.classify_scenario(LOPSIDED, GAMMA)
    with pytest.raises(anisoscale.MissingConfigException):
        await verifier.run_check("covariance", scenario)

@pytest.mark.asyncio
async def test_core_dummy_check():
    verifier = anisoscale.Verifier(config, test_mode=True)
    scenario = anisoscale.classify_scenario(LOPSIDED, GAMMA)
    result = await verifier.run_check("dummy", scenario)
    assert result.verdict == "pass"
    assert result.metrics == {"family": "Y1"}

@pytest.mark.asyncio
async def test_core_full_report_callback():
    verifier = anisoscale.Verifier(anisoscale.RunConfig(seed=3), test_mode=True)
    seen = []

    async def callback(name, result):
        seen.append((name, result.verdict))

    report = await verifier.full_report(LOPSIDED, GAMMA, callback)
    assert sorted(seen) == [("dummy", "pass"), ("fail_dummy", "error")]
    assert report.scenario["family"] == "Y1"
    assert report.verdicts["fail_dummy"]["note"] == "Exception: Check failed (intentional)"
    assert report.seed == 3
    assert len(report.config_hash) == 64
    assert anisoscale.aggregate_verdict(report) == "fail"

def test_full_report_blocking():
    report = anisoscale.full_report(LOPSIDED, GAMMA, anisoscale.RunConfig(), test_mode=True)
    rows = anisoscale.summary_rows(report)
    assert [row["check"] for row in rows] == ["dummy", "fail_dummy"]
    assert rows[0]["verdict"] == "pass"

def test_full_report_boundary():
    params = anisoscale.ModelParams((2.0, 8 / 3, 8 / 3))
    assert params.Q == pytest.approx(1.25)
    report = anisoscale.full_report(params, GAMMA, anisoscale.RunConfig(), test_mode=True)
    assert report.rejection["kind"] == "boundary"
    assert report.verdicts == {}
    assert anisoscale.aggregate_verdict(report) == "rejected"
    assert anisoscale.summary_rows(report)[0]["verdict"] == "rejected"

def test_invalid_q_raises_before_checks():
    with pytest.raises(anisoscale.InvalidParametersException):
        anisoscale.full_report(anisoscale.ModelParams((1.2, 1.2, 1.2)), GAMMA, anisoscale.RunConfig())

def test_empty_report_fails():
    report = anisoscale.full_report(LOPSIDED, GAMMA, anisoscale.RunConfig())
    assert report.verdicts == {}
    assert anisoscale.aggregate_verdict(report) == "fail"

def test_report_document():
    report = anisoscale.full_report(LOPSIDED, GAMMA, anisoscale.RunConfig(seed=5), test_mode=True)
    document = io.report_to_dict(report)
    assert document["scenario"]["pi"] == [1, 2, 3]
    assert document["verdicts"]["dummy"]["verdict"] == "pass"
    restored = io.report_from_dict(document)
    assert anisoscale.summary_rows(restored) == anisoscale.summary_rows(report)

@pytest.mark.asyncio
async def test_core_slope_check_runs():
    params = anisoscale.ModelParams.white_noise((1.8, 3.0, 6.0))
    report = await anisoscale.Verifier(config).full_report(params, GAMMA)
    assert report.slope_fit["H_est"] == pytest.approx(1.5)
    assert report.verdicts["slope"]["verdict"] == "fail"
