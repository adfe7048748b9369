"""FastAPI application"""
import logging
from typing import Optional

import numpy as np
from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from src import __version__
from src.application.use_cases import ComputeSignatureUseCase, InvertSignatureUseCase, MMDTestUseCase
from src.config.dependencies import (
    get_compute_signature_use_case,
    get_invert_signature_use_case,
    get_mmd_test_use_case,
    get_settings,
)
from src.core.autodiff import InversionConfig
from src.core.sigkernel import KernelConfig
from src.domain.exceptions import NumericalError
from src.domain.models import Stream, StreamBatch

# Set up logging
logging.basicConfig(level=get_settings().log_level)
logger = logging.getLogger(__name__)

app = FastAPI(title="sigstack API", version=__version__)


class StreamPayload(BaseModel):
    points: list[list[float]]
    times: Optional[list[float]] = None

    def to_stream(self) -> Stream:
        return Stream(points=np.array(self.points, dtype=np.float64), times=self.times)


class SignatureRequest(StreamPayload):
    depth: int = Field(default=4, ge=1, le=16)
    time_augment: bool = False


class MMDRequest(BaseModel):
    a: list[StreamPayload]
    b: list[StreamPayload]
    depth: int = Field(default=4, ge=1, le=8)
    permutations: int = Field(default=200, ge=100, le=10000)
    seed: int = 0
    target_norm: float = Field(default=1.0, gt=0.0)
    time_augment: bool = True


class InvertRequest(StreamPayload):
    depth: int = Field(default=6, ge=1, le=12)
    max_iterations: int = Field(default=2000, ge=0, le=20000)
    seed: int = 0


@app.exception_handler(NumericalError)
async def numerical_exception_handler(request: Request, exc: NumericalError):
    """Numerical failures are server-side errors"""
    logger.error(f"Numerical failure on {request.url.path}: {exc}")
    return JSONResponse(status_code=500, content={"detail": str(exc), "type": type(exc).__name__})


@app.exception_handler(ValueError)
async def value_exception_handler(request: Request, exc: ValueError):
    """Bad shapes and precondition violations are the client's"""
    return JSONResponse(status_code=422, content={"detail": str(exc), "type": type(exc).__name__})


# Global exception handler to ensure all errors return JSON
@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Handle all unhandled exceptions and return JSON"""
    return JSONResponse(status_code=500, content={"detail": str(exc), "type": type(exc).__name__})


@app.exception_handler(RequestValidationError)
async def validation_exception_handler(request: Request, exc: RequestValidationError):
    """Handle validation errors and return JSON"""
    return JSONResponse(status_code=422, content={"detail": exc.errors(), "type": "RequestValidationError"})


@app.get("/api/health")
def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "version": __version__}


@app.post("/api/signature")
def compute_signature(
    request: SignatureRequest,
    use_case: ComputeSignatureUseCase = Depends(get_compute_signature_use_case),
):
    """Truncated signature of one stream"""
    return use_case.execute(request.depth, stream=request.to_stream(), time_augmented=request.time_augment)


@app.post("/api/mmd")
def mmd_test(
    request: MMDRequest,
    use_case: MMDTestUseCase = Depends(get_mmd_test_use_case),
):
    """Signature-kernel MMD and permutation p-value between two batches"""
    a = StreamBatch.from_streams([stream.to_stream() for stream in request.a])
    b = StreamBatch.from_streams([stream.to_stream() for stream in request.b])
    kernel = KernelConfig(depth=request.depth, normalization_target=request.target_norm)
    return use_case.execute(a, b, kernel, permutations=request.permutations, seed=request.seed,
                            time_augmented=request.time_augment)


@app.post("/api/invert")
def invert_signature(
    request: InvertRequest,
    use_case: InvertSignatureUseCase = Depends(get_invert_signature_use_case),
):
    """Recover a stream of the same length from the signature of the given one"""
    config = InversionConfig(max_iterations=request.max_iterations)
    result = use_case.execute(request.depth, reference=request.to_stream(), config=config, seed=request.seed)
    return {
        "points": result.recovered.points.tolist(),
        "final_loss": result.final_loss,
        "iterations_used": result.iterations_used,
        "increment_rmse": result.increment_rmse,
        "loss_trace": result.loss_trace,
    }
