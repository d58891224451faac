from fastapi import APIRouter
from pydantic import BaseModel

from app.exceptions.http_exceptions import to_http_exception
from app.exceptions.synapse_exceptions import SynapseError
from app.schemas.analysis import HallSeries
from app.schemas.device import Trace
from app.schemas.run_config import RunConfig
from app.services.kinetics import simulate_hall
from app.services.runs import run_simulation

router = APIRouter(prefix="/simulate", tags=["simulate"])


class SimulationRead(BaseModel):
    trace: Trace
    hall: HallSeries


@router.post("", response_model=SimulationRead)
async def simulate_device(config: RunConfig, temperature: float | None = None):
    try:
        env = config.environment
        temperature = temperature if temperature is not None else env.temperature
        trace = run_simulation(config, temperature)
        hall = simulate_hall(
            config.params, config.stimulus.train(), temperature, env.sample_dt, env.t_end
        )
    except SynapseError as e:
        raise to_http_exception(e)
    return SimulationRead(trace=trace, hall=hall)
