from collections import namedtuple

CheckResult = namedtuple("CheckResult", ["name", "verdict", "metrics", "thresholds", "note"])
"""The outcome of one verification check.

.. py:attribute:: name

    The check name.

.. py:attribute:: verdict

    ``"pass"``, ``"fail"``, ``"inconclusive"`` or ``"error"``.

.. py:attribute:: metrics

    Key-value record of every computed quantity the verdict rests on.

.. py:attribute:: thresholds

    The thresholds the verdict was taken against.

.. py:attribute:: note

    Free text; the failure message for ``"error"`` verdicts.

"""

VERDICTS = ("pass", "fail", "inconclusive", "error")


class Check:
    """Base class for a check.

    All the check classes must derive from this class.

    :ivar name: The name the check is registered under.
    :vartype name: str
    :ivar needs: Configuration keys the check cannot run without.
    :vartype needs: tuple
    """
    name = None
    needs = ()

    def __init__(self, config): # pragma: no cover
        raise NotImplementedError("Expand this method to read the needed configuration keys.")

    def run(self, scenario): # pragma: no cover
        """Run the check against a classified scenario.

        :param scenario: The classified (q, γ) pair.
        :type scenario: Scenario
        :rtype: CheckResult
        """
        raise NotImplementedError("Expand this method to include the logic of the check.")

    @staticmethod
    def threshold(config, key, default):
        thresholds = getattr(config, "thresholds", None) or {}
        return thresholds.get(key, default)
