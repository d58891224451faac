from fastapi import APIRouter

from app.exceptions.http_exceptions import to_http_exception
from app.exceptions.synapse_exceptions import SynapseError
from app.schemas.fitting import FitReport, FitRequest, ModelSelection
from app.schemas.kinetic_model import ModelKind
from app.services.fitting import fit_transient, fit_wickelgren, model_select

router = APIRouter(prefix="/fit", tags=["fit"])


@router.post("", response_model=FitReport | ModelSelection)
async def fit_trace(request: FitRequest):
    try:
        if request.candidates:
            return model_select(request.trace, request.candidates, request.window)
        if request.model is ModelKind.WICKELGREN:
            off_time = request.window[0] if request.window else request.trace.t[0]
            return fit_wickelgren(request.trace, off_time)
        return fit_transient(request.trace, request.model, request.n_terms, request.window)
    except SynapseError as e:
        raise to_http_exception(e)
