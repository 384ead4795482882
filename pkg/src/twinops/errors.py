"""Exception hierarchy shared by all twinops modules."""


class TwinError(Exception):
    """Base class for all twinops domain errors."""


# --- topology ---

class DuplicateIdError(TwinError):
    pass


class DanglingEdgeError(TwinError):
    pass


class BrokenRouteError(TwinError):
    pass


class MissingLengthError(TwinError):
    pass


class NotOnPathError(TwinError):
    pass


class UnknownShelfError(TwinError):
    pass


class UnknownElementError(TwinError):
    pass


# --- fault localization ---

class EmptyAlarmsError(TwinError):
    pass


class NotOnAnyPathError(TwinError):
    pass


# --- navigation ---

class EmptySlabError(TwinError):
    pass


class NoPathError(TwinError):
    pass


class BlockedEndpointError(TwinError):
    pass


class OutOfBoundsError(TwinError):
    pass


class InvalidShelfLevelError(TwinError):
    pass


class UnknownPointError(TwinError):
    pass


# --- card identification ---

class DetectorUnavailableError(TwinError):
    pass


class NoDetectionsError(TwinError):
    pass


# --- edge service ---

class BindFailureError(TwinError):
    pass


class MalformedFrameError(TwinError):
    pass


class UnknownKindError(TwinError):
    pass


class NonMonotoneTimestampsError(TwinError):
    pass


class NotJoinedError(TwinError):
    pass


class InvalidStrokeError(TwinError):
    pass


# --- qos simulation ---

class InvalidConfigError(TwinError):
    pass


# --- scenario files ---

class ScenarioInvalidError(TwinError):
    pass
