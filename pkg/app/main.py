import logging
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from app.api.routes import analysis as analysis_router
from app.api.routes import fitting as fitting_router
from app.api.routes import protocols as protocols_router
from app.api.routes import simulation as simulation_router
from app.core.config import settings
from app.core.logging import configure_logging

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    configure_logging(settings.log_level)
    logger.info("synapse API started")
    yield
    logger.info("synapse API shutting down")


app = FastAPI(lifespan=lifespan)

app.include_router(simulation_router.router)
app.include_router(protocols_router.router)
app.include_router(fitting_router.router)
app.include_router(analysis_router.router)


@app.get("/")
async def home(request: Request):
    return JSONResponse(content={"home": "synapse"})
