from fastapi import HTTPException, status

from app.exceptions.synapse_exceptions import (
    DegenerateFitError,
    NoEdgeError,
    ProtocolError,
    SynapseError,
    UndefinedIndexError,
    UnsatisfiableGateError,
)


class ConfigNotFoundException(HTTPException):
    def __init__(self, detail: str = "Config not found"):
        super().__init__(status_code=status.HTTP_404_NOT_FOUND, detail=detail)


class UnknownProtocolException(HTTPException):
    def __init__(
        self,
        detail: str = "Unknown protocol. Must be stm-ltm, learning, ppf, filter, stdp, or logic",
    ):
        super().__init__(status_code=status.HTTP_400_BAD_REQUEST, detail=detail)


_CONFLICTS = (
    ProtocolError,
    DegenerateFitError,
    UnsatisfiableGateError,
    UndefinedIndexError,
    NoEdgeError,
)


def to_http_exception(error: SynapseError) -> HTTPException:
    """Map a domain error onto an HTTP status; input/domain problems are 422."""
    if isinstance(error, _CONFLICTS):
        code = status.HTTP_409_CONFLICT
    else:
        code = status.HTTP_422_UNPROCESSABLE_CONTENT
    return HTTPException(status_code=code, detail=error.to_dict())
