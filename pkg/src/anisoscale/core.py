# stdlib
import asyncio
from collections import namedtuple
import functools
import logging

# Config
from anisoscale.config import RunConfig

# Geometry
from anisoscale.geometry import classify_scenario, scenario_to_dict

# Checks
from anisoscale.checks.base import CheckResult
from anisoscale.checks.slope import SlopeCheck
from anisoscale.checks.l2 import L2ConvergenceCheck
from anisoscale.checks.covariance import CovarianceMatchCheck
from anisoscale.checks.summability import SummabilityCheck
from anisoscale.checks.dummy import DummyCheck

# Exceptions
from anisoscale.errors import (BoundaryRejectionException, ExistenceConditionException, MissingConfigException,
                               NotAValidCheckException)

VerificationReport = namedtuple("VerificationReport", ["scenario", "lambda_grid", "slope_fit", "l2_curve", "cov_match",
                                                       "diagnostics", "verdicts", "rejection", "config_hash", "seed"])
"""The assembled outcome of a verification run.

.. py:attribute:: scenario

    The classified scenario as a key-value record, or ``None`` after a rejection.

.. py:attribute:: slope_fit

    Metrics of the slope check, or ``None`` when it did not run.

.. py:attribute:: l2_curve

    Metrics of the L² check.

.. py:attribute:: cov_match

    Metrics of the covariance check.

.. py:attribute:: diagnostics

    Metrics of the summability check.

.. py:attribute:: verdicts

    ``{name: {"verdict", "thresholds", "metrics", "note"}}`` for every check run.

.. py:attribute:: rejection

    ``None``, or ``{"kind", "message"}`` when classification rejected the parameters.

"""

REPORT_SECTIONS = {
    "slope": "slope_fit",
    "l2": "l2_curve",
    "covariance": "cov_match",
    "summability": "diagnostics",
}

# Set up logger
logger = logging.getLogger(__name__)


class Verifier:
    r"""Core class running the verification checks of one scenario.

    This class can only be instantiated with a :class:`RunConfig` instance.

    :meth:`run_check` and :meth:`full_report` can only be run from an asynchronous context.

    :ivar accessible_checks: The checks the passed in configuration can run.
    :param config: The config object.
    :type config: RunConfig
    :param test_mode: Enable test mode. Test mode adds two dummy checks, one of which always fails.
    :type test_mode: bool
    """
    _all_checks = [
        "slope",
        "l2",
        "covariance",
        "summability",
    ]

    def __init__(self, config, test_mode=False):
        self.config = config
        self.accessible_checks = {}
        self._all_checks = list(self._all_checks)

        for check in (SlopeCheck, L2ConvergenceCheck, CovarianceMatchCheck, SummabilityCheck):
            if all(hasattr(self.config, key) for key in check.needs):
                self.accessible_checks[check.name] = check(self.config)
                logger.info("Created %s check", check.name)

        if test_mode:
            self.accessible_checks["dummy"] = DummyCheck(False)
            self.accessible_checks["fail_dummy"] = DummyCheck(True)
            self._all_checks.append("dummy")
            self._all_checks.append("fail_dummy")

    async def run_check(self, name, scenario):
        r"""Run one check on a worker thread.

        :param name: Check to run; must be one of ``_all_checks``.
        :type name: str
        :param scenario: The classified scenario.
        :type scenario: Scenario
        :raises NotAValidCheckException: The check does not exist.
        :raises MissingConfigException: The configuration lacks keys the check needs.
        :rtype: CheckResult
        """
        if name not in self._all_checks:
            raise NotAValidCheckException("%s is not a valid check" % name)
        if name not in self.accessible_checks:
            raise MissingConfigException("%s needs configuration keys that are missing. Check the documentation." % name)
        loop = asyncio.get_event_loop()
        return await loop.run_in_executor(None, functools.partial(self.accessible_checks[name].run, scenario))

    async def _gather_check_task(self, name, scenario, callback):
        """Underlying method used to run the checks concurrently."""
        logger.info("[%s] Starting check [%s]", scenario.family, name)
        try:
            result = await self.run_check(name, scenario)
        except Exception as e:
            logger.warning("[%s] Check [%s] raised %s: %s", scenario.family, name, type(e).__name__, e)
            result = CheckResult(name, "error", {}, {}, "%s: %s" % (type(e).__name__, e))
        else:
            logger.info("[%s][%s] Verdict: %s", scenario.family, name, result.verdict)
        if callback:
            logger.info("[%s][%s] Executing callback", scenario.family, name)
            await callback(name, result)
        logger.info("[%s] Finished check [%s]", scenario.family, name)
        return result

    async def full_report(self, params, gamma, callback=None):
        """Classify (q, γ), run every accessible check concurrently and assemble the report.

        .. note::
            The callback is awaited once per finished check with the check name
            and its :class:`CheckResult`.

            .. code-block:: python
               :linenos:

                async def callback(name, result):
                    print("Finished check: %s" % name)
                    print("Verdict: %s" % result.verdict)

                await verifier.full_report(params, gamma, callback)

        :param params: Model parameters (already validated, so invalid Q raises at construction).
        :type params: ModelParams
        :param gamma: Scaling exponents.
        :param callback: Callback function.
        :type callback: Optional[function]
        :rtype: VerificationReport
        """
        lambda_grid = list(getattr(self.config, "lambda_grid", []))
        config_hash = self.config.config_hash() if isinstance(self.config, RunConfig) else None
        seed = getattr(self.config, "seed", None)
        try:
            scenario = classify_scenario(params, gamma)
        except BoundaryRejectionException as e:
            logger.warning("[rejected] boundary: %s", e)
            return VerificationReport(None, lambda_grid, None, None, None, None, {},
                                      {"kind": "boundary", "message": str(e)}, config_hash, seed)
        except ExistenceConditionException as e:
            logger.warning("[rejected] existence: %s", e)
            return VerificationReport(None, lambda_grid, None, None, None, None, {},
                                      {"kind": "existence", "message": str(e)}, config_hash, seed)

        names = [name for name in self._all_checks if name in self.accessible_checks]
        results = await asyncio.gather(*[self._gather_check_task(name, scenario, callback) for name in names])
        verdicts = {}
        sections = dict.fromkeys(REPORT_SECTIONS.values())
        for result in results:
            verdicts[result.name] = {
                "verdict": result.verdict,
                "thresholds": result.thresholds,
                "metrics": result.metrics,
                "note": result.note,
            }
            if result.name in REPORT_SECTIONS:
                sections[REPORT_SECTIONS[result.name]] = result.metrics
        return VerificationReport(scenario_to_dict(scenario), lambda_grid, sections["slope_fit"], sections["l2_curve"],
                                  sections["cov_match"], sections["diagnostics"], verdicts, None, config_hash, seed)


def full_report(params, gamma, config, callback=None, test_mode=False):
    """Blocking wrapper running :meth:`Verifier.full_report` in a fresh event loop.

    :rtype: VerificationReport
    """
    return asyncio.run(Verifier(config, test_mode).full_report(params, gamma, callback))


def aggregate_verdict(report):
    """``"rejected"``, ``"pass"`` if every check passed, ``"fail"`` otherwise."""
    if report.rejection is not None:
        return "rejected"
    if report.verdicts and all(v["verdict"] == "pass" for v in report.verdicts.values()):
        return "pass"
    return "fail"


def summary_rows(report):
    """One CSV row per check: check, verdict, key metric, thresholds, config hash and seed."""
    rows = []
    if report.rejection is not None:
        rows.append({"check": "classification", "verdict": "rejected", "detail": report.rejection["message"],
                     "thresholds": "", "config_hash": report.config_hash, "seed": report.seed})
        return rows
    for name in sorted(report.verdicts):
        entry = report.verdicts[name]
        rows.append({
            "check": name,
            "verdict": entry["verdict"],
            "detail": entry["note"] or "",
            "thresholds": ";".join("%s=%s" % item for item in sorted(entry["thresholds"].items())),
            "config_hash": report.config_hash,
            "seed": report.seed,
        })
    return rows
