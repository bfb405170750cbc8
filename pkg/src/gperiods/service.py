"""HTTP service exposing the operations of :mod:`gperiods.api`.

Run with ``uvicorn gperiods.service:app``.  Failures come back as a JSON body
{"error": code, "exit_code": n, "message": text} with status 422 (math or
usage failures) or 501 (declared-unimplemented cases).
"""

from typing import Optional, Union

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import api
from .errors import GPeriodError

FamilyRef = Union[str, dict]


class SeriesRequest(BaseModel):
    family: FamilyRef = "default"
    coord: int = 1
    order: int = api.DEFAULT_ORDER


class HeightsRequest(BaseModel):
    family: FamilyRef = "default"
    order: int = api.DEFAULT_ORDER


class RadiiRequest(BaseModel):
    family: FamilyRef = "default"
    order: int = 200
    places: list[Union[str, int]] = Field(default_factory=lambda: ["archimedean", 2, 3, 5, 7])


class TrivialCheckRequest(BaseModel):
    family: FamilyRef = "default"
    order: int = api.DEFAULT_ORDER
    numeric_at: Optional[str] = None
    basis_scale: Optional[str] = None
    prec: Optional[int] = None


class FibersRequest(BaseModel):
    family: FamilyRef = "default"
    max_abs: float = 1.0


class RelationRequest(BaseModel):
    family: FamilyRef = "default"
    point: Optional[str] = None
    prec: Optional[int] = None
    order: int = api.DEFAULT_ORDER
    report: bool = False


class PeriodsRequest(BaseModel):
    lam: Optional[str] = None
    family: Optional[FamilyRef] = None
    coord: Optional[int] = None
    x0: Optional[str] = None
    order: int = 200
    prec: Optional[int] = None
    cm: Optional[int] = None
    monodromy: bool = False


class CMRequest(BaseModel):
    class_number: Optional[int] = None
    scan: Optional[int] = None
    heegner: Optional[int] = None
    fundamental_only: bool = False


class SiegelRequest(BaseModel):
    max_abs_D: int = 200
    eps: Optional[list[str]] = None
    summary: bool = False


REQUESTS = {
    "series": SeriesRequest,
    "heights": HeightsRequest,
    "radii": RadiiRequest,
    "trivial-check": TrivialCheckRequest,
    "fibers": FibersRequest,
    "relation": RelationRequest,
    "periods": PeriodsRequest,
    "cm": CMRequest,
    "siegel": SiegelRequest,
}


def error_payload(exc: GPeriodError) -> dict:
    return {"error": exc.code, "exit_code": exc.exit_code, "message": str(exc)}


def _respond(result: dict):
    if result.get("format") == "csv":
        return PlainTextResponse(result["text"], media_type="text/csv")
    return result


def create_app() -> FastAPI:
    app = FastAPI(title="gperiods", version="0.1.0")

    @app.exception_handler(GPeriodError)
    async def _gperiod_error(request: Request, exc: GPeriodError):
        status = 501 if exc.exit_code == 3 else 422
        return JSONResponse(error_payload(exc), status_code=status)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    def register(name, model):
        op = api.OPERATIONS[name]

        def endpoint(body: model):  # type: ignore[valid-type]
            return _respond(op(**body.model_dump()))

        endpoint.__name__ = name.replace("-", "_")
        app.post(f"/{name}")(endpoint)

    for name, model in REQUESTS.items():
        register(name, model)
    return app


app = create_app()
