import asyncio
import logging
from typing import Any, Callable, Dict, List

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from config.config import get_settings
from pacal import commands
from pacal.schemas import RunConfig, parse_run_config
from pacal.utils.cache import ResultCache
from pacal.utils.emitters import jsonable
from pacal.utils.errors import PacalError, UsageError

logger = logging.getLogger(__name__)

router = APIRouter()

settings = get_settings()
result_cache = ResultCache.from_settings(settings)


class CommandRequest(BaseModel):
    # Validated by parse_run_config so that a bad document is a 400, not a 422.
    config: Dict[str, Any]


class FlatnessRequest(CommandRequest):
    samples: int = Field(200, ge=1)


class VerifyRequest(CommandRequest):
    suite: str = "all"


class GeodesicRequest(CommandRequest):
    p0: List[float]
    v: List[float]
    t_end: float = 1.0
    steps: int = Field(1000, ge=1)


class TransportRequest(CommandRequest):
    v: List[float]
    start: List[float]
    steps: List[List[float]]


class LimitsRequest(CommandRequest):
    p: List[float]
    u: List[float]
    v: List[float]


async def run_command(endpoint: str, request: CommandRequest, compute: Callable[[RunConfig], commands.CommandResult]) -> Dict[str, Any]:
    payload = request.model_dump()
    cached = result_cache.get(endpoint, payload)
    if cached is not None:
        logger.info("cache hit for %s", endpoint)
        return cached

    try:
        config = parse_run_config(request.config)
        result = await asyncio.to_thread(compute, config)
    except UsageError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except PacalError as e:
        logger.warning("%s failed: %s", endpoint, e)
        raise HTTPException(status_code=422, detail=str(e))

    response = jsonable({"command": endpoint, "exit_code": result.exit_code, "result": result.data})
    result_cache.set(endpoint, payload, response)
    return response


@router.get("/warmup")
async def warmup():
    return {"status": "ready"}


@router.post("/curvature")
async def curvature(request: CommandRequest):
    return await run_command("curvature", request, lambda c: commands.cmd_curvature(c, threads=settings.THREADS))


@router.post("/flatness")
async def flatness(request: FlatnessRequest):
    return await run_command("flatness", request, lambda c: commands.cmd_flatness(c, samples=request.samples))


@router.post("/verify")
async def verify(request: VerifyRequest):
    return await run_command("verify", request, lambda c: commands.cmd_verify(c, suite=request.suite))


@router.post("/geodesic")
async def geodesic(request: GeodesicRequest):
    return await run_command(
        "geodesic", request, lambda c: commands.cmd_geodesic(c, request.p0, request.v, request.t_end, request.steps)
    )


@router.post("/transport")
async def transport(request: TransportRequest):
    return await run_command("transport", request, lambda c: commands.cmd_transport(c, request.v, request.start, request.steps))


@router.post("/limits")
async def limits(request: LimitsRequest):
    return await run_command("limits", request, lambda c: commands.cmd_limits(c, request.p, request.u, request.v))
