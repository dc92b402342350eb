"""Exception hierarchy shared by every stage of the pipeline.

Each exception carries an ``exit_code`` used by the command line front end:
2 for configuration problems, 3 for bad data, 4 for internal invariant
violations.
"""


class AdlError(Exception):
    exit_code = 3


class ConfigError(AdlError):
    exit_code = 2


class SequenceError(ConfigError):
    """A scenario lists segments that the motion-state machine forbids."""


class TransitionError(AdlError):
    exit_code = 2


class RankError(ConfigError):
    pass


class DurationError(AdlError):
    pass


class ShapeError(AdlError):
    pass


class RangeError(AdlError):
    pass


class LengthError(AdlError):
    pass


class BandError(AdlError):
    pass


class LabelError(AdlError):
    pass


class EmptyClassSetError(AdlError):
    pass


class IoError(AdlError):
    pass


class InternalError(AdlError):
    exit_code = 4
