from fastapi import APIRouter

from app.exceptions.http_exceptions import to_http_exception
from app.exceptions.synapse_exceptions import SynapseError
from app.schemas.analysis import TaucRequest, TaucResult
from app.services.analysis import tauc_bandgap

router = APIRouter(prefix="/analysis", tags=["analysis"])


@router.post("/tauc", response_model=TaucResult)
async def extract_bandgap(request: TaucRequest):
    try:
        return tauc_bandgap(request.spectrum, request.window)
    except SynapseError as e:
        raise to_http_exception(e)
