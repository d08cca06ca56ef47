"""Exception hierarchy with stable machine-readable codes.

Every error that can cross the HTTP boundary carries a `code` string that
clients may match on, plus a suggested HTTP status.
"""


class OasimError(Exception):
    code = "ERROR"
    http_status = 400

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class NotFound(OasimError):
    code = "NOT_FOUND"
    http_status = 404


class Invalid(OasimError):
    code = "INVALID"


class UnknownAsset(OasimError):
    code = "UNKNOWN_ASSET"
    http_status = 404


class MapFormat(OasimError):
    code = "MAP_FORMAT"


class MapInvalid(OasimError):
    code = "MAP_INVALID"


class UnknownLane(OasimError):
    code = "UNKNOWN_LANE"
    http_status = 404


class NoRoute(OasimError):
    code = "NO_ROUTE"
    http_status = 409


class ProfileInvalid(OasimError):
    code = "PROFILE_INVALID"


class NoNeighbor(OasimError):
    code = "NO_NEIGHBOR"
    http_status = 409


class NotASuccessor(OasimError):
    code = "NOT_A_SUCCESSOR"
    http_status = 409


class SpawnInfeasible(OasimError):
    code = "SPAWN_INFEASIBLE"
    http_status = 409


class OutOfImage(OasimError):
    code = "OUT_OF_IMAGE"


class BehindCamera(OasimError):
    code = "BEHIND_CAMERA"


class UnknownSensor(OasimError):
    code = "UNKNOWN_SENSOR"
    http_status = 404


class TrajectoryGap(OasimError):
    code = "TRAJECTORY_GAP"
    http_status = 409


class OutOfRange(OasimError):
    code = "OUT_OF_RANGE"
    http_status = 409


class Unreadable(OasimError):
    code = "UNREADABLE"


class OutputNotEmpty(OasimError):
    code = "OUTPUT_NOT_EMPTY"
    http_status = 409
