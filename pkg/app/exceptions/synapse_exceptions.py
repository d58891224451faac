from typing import Any


class SynapseError(Exception):
    code = "synapse_error"

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"error": self.code, "detail": self.detail}
        if self.context:
            payload["context"] = self.context
        return payload


class DomainError(SynapseError):
    code = "domain_error"


class InputError(SynapseError):
    code = "input_error"


class ProtocolError(SynapseError):
    code = "protocol_error"


class UndefinedIndexError(SynapseError):
    code = "undefined_index"

    def __init__(self, detail: str = "First-pulse amplitude is zero; index undefined"):
        super().__init__(detail)


class UnsatisfiableGateError(SynapseError):
    code = "unsatisfiable_gate"

    def __init__(self, gate: str, conductances: dict[str, float], threshold: float):
        super().__init__(
            f"Threshold {threshold:.6g} S cannot realize {gate} for the four input cases",
            gate=gate,
            conductances=conductances,
            threshold=threshold,
        )


class DegenerateFitError(SynapseError):
    code = "degenerate_fit"


class NoEdgeError(SynapseError):
    code = "no_edge"

    def __init__(self, detail: str = "No absorption edge found in the fit window"):
        super().__init__(detail)
