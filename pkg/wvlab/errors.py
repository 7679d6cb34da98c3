"""Exceptions raised by wvlab"""


class WvlabError(Exception):
    """Base class for wvlab errors"""


class PhysicsError(WvlabError, ValueError):
    """A physically meaningless request, such as an impossible postselection"""


class OrthogonalPostselectionError(PhysicsError):
    """Pre- and postselected states (or densities) have vanishing overlap"""


class DegenerateResourceError(PhysicsError):
    """The shared resource carries no entanglement (e.g. n = 0)"""


class ImpossiblePostselectionError(PhysicsError):
    """Every pointer branch has zero amplitude after postselection"""


class InsufficientStatisticsError(PhysicsError):
    """Sampling produced no accepted shots to estimate from"""


class GridError(WvlabError, ValueError):
    """Pointer grid does not contain the wavefunction"""


class ScenarioParseError(WvlabError, ValueError):
    """Scenario file could not be parsed.

    Args:
        errors: list of "key: reason" diagnostics.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DecodeError(WvlabError, ValueError):
    """A wire frame could not be decoded.

    Args:
        message: what went wrong.
        offset: byte offset into the frame where decoding failed.
    """

    def __init__(self, message: str, offset: int = 0):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class SessionAbort(WvlabError):
    """A two-party session ended with ABORT.

    Args:
        reason: short machine-readable reason, e.g. "order" or "timeout".
        detail: human readable diagnostic.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
