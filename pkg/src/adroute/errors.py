"""Exception hierarchy for the simulator."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class UnknownNode(SimulationError):
    pass


class UnknownLink(SimulationError):
    pass


class DuplicateLink(SimulationError):
    pass


class NonPositiveBandwidth(SimulationError):
    pass


class LinkDown(SimulationError):
    pass


class EmptyRoute(SimulationError):
    pass


class NoRoute(SimulationError):
    pass


class TooLarge(SimulationError):
    pass


class Unauthorized(SimulationError):
    pass


class UnknownMember(SimulationError):
    pass


class WouldExcludeAll(SimulationError):
    pass


class NotExcluded(SimulationError):
    pass


class AllMembersExcluded(SimulationError):
    pass


class NoReachableMember(SimulationError):
    pass


class MismatchedScenarios(SimulationError):
    pass


class ValidationError(SimulationError):
    """Scenario validation failure carrying line-numbered diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))
