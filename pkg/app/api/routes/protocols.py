from fastapi import APIRouter

from app.exceptions.http_exceptions import (
    ConfigNotFoundException,
    UnknownProtocolException,
    to_http_exception,
)
from app.exceptions.synapse_exceptions import InputError, SynapseError
from app.schemas.protocol import ProtocolRecord
from app.schemas.run_config import ProtocolName, RunConfig
from app.services.presets import config_names, load_config
from app.services.runs import run_protocol

router = APIRouter(tags=["protocols"])


@router.post("/protocols/{which}", response_model=ProtocolRecord)
async def run_named_protocol(which: str, config: RunConfig, temperature: float | None = None):
    try:
        protocol = ProtocolName(which)
    except ValueError:
        raise UnknownProtocolException()
    try:
        return run_protocol(config, protocol, temperature)
    except SynapseError as e:
        raise to_http_exception(e)


@router.get("/configs", response_model=list[str])
async def list_configs():
    return config_names()


@router.get("/configs/{name}", response_model=RunConfig)
async def get_config(name: str):
    if name not in config_names():
        raise ConfigNotFoundException(detail=f"No shipped config named {name}")
    try:
        return load_config(name)
    except InputError as e:
        raise to_http_exception(e)
