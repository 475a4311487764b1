from anisoscale.checks.base import Check, CheckResult


class DummyCheck(Check):
    """A dummy check that's only useful for testing.
    """
    name = "dummy"

    def __init__(self, fail):
        self.fail = fail

    def run(self, scenario):
        if self.fail:
            raise Exception("Check failed (intentional)")
        return CheckResult(self.name, "pass", {"family": scenario.family}, {}, None)
