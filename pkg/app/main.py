from __future__ import annotations

import logging
from typing import Any

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .core import config
from .core.action import action_closed_form, fundamental_unitary, index_pairing
from .core.checks import SuiteSizes, build_ledger
from .core.forms import FormError
from .core.representation import Truncation, TruncationError, poly_operator, relation_residual
from .core.residues import ResidueError, residue, residue_report
from .core.symbols import ActionCoefficients, sigma_q
from .core.wordexpr import WordSyntaxError, parse_poly

logging.basicConfig(level=config.LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
log = logging.getLogger(__name__)

# Requests above this truncation are refused; the CLI has no such cap.
MAX_API_M_MAX = 80

app = FastAPI(title=config.APP_TITLE)

_KNOWN_ERRORS = (config.ConfigError, WordSyntaxError, TruncationError, FormError, ResidueError, ValueError)


@app.exception_handler(Exception)
async def _global_exception_handler(request: Request, exc: Exception):
    log.exception("Unhandled exception on %s %s: %s", request.method, request.url.path, exc)
    return JSONResponse(
        status_code=500,
        content={"detail": f"Internal error: {type(exc).__name__}: {exc}"},
    )

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


# ─── Request models ───

class TruncationRequest(BaseModel):
    q: float = Field(config.Q, ge=0.0, lt=1.0)
    m_max: int = Field(config.M_MAX, ge=4, le=MAX_API_M_MAX)
    guard: int = Field(config.GUARD, ge=2)


class ResidueRequest(TruncationRequest):
    expr: str = Field(..., min_length=1)
    y: int = Field(-3, le=-1)


class SymbolRequest(BaseModel):
    expr: str = Field(..., min_length=1)


class ActionRequest(BaseModel):
    coefficients: dict[str, Any]
    q: float = Field(config.Q, ge=0.0, lt=1.0)
    level: int = config.LEVEL
    phi1_weights: str = Field("exact", pattern="^(exact|printed)$")
    chi_constant: str = Field("trace", pattern="^(trace|literal)$")
    rho_bound: str = Field("symmetric", pattern="^(symmetric|literal)$")


def _truncation(body: TruncationRequest) -> Truncation:
    return Truncation(body.m_max, min(body.guard, body.m_max))


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


# ─── Endpoints ───

@app.get("/api/health")
def health() -> dict[str, Any]:
    return {"status": "ok", "app": config.APP_NAME, "config": config.load_config().model_dump(mode="json")}


@app.post("/api/relations")
def api_relations(body: TruncationRequest) -> dict[str, Any]:
    try:
        residuals = relation_residual(body.q, _truncation(body))
    except _KNOWN_ERRORS as exc:
        raise _bad_request(exc) from exc
    return {"q": body.q, "m_max": body.m_max, "residuals": residuals}


@app.post("/api/residues")
def api_residues(body: ResidueRequest) -> dict[str, Any]:
    try:
        x = parse_poly(body.expr)
        op = poly_operator(x, body.q, _truncation(body))
        report = residue_report(op, geometric=body.q > 0)
        value = residue(op, body.y)
    except _KNOWN_ERRORS as exc:
        raise _bad_request(exc) from exc
    out = report.to_json()
    out.update({"expr": body.expr, "y": body.y, "wres_y": [value.real, value.imag]})
    return out


@app.post("/api/symbol")
def api_symbol(body: SymbolRequest) -> dict[str, Any]:
    try:
        f = sigma_q(parse_poly(body.expr))
    except _KNOWN_ERRORS as exc:
        raise _bad_request(exc) from exc
    mean = f.mean()
    return {"expr": body.expr, "fourier": f.to_json(), "mean": [mean.real, mean.imag]}


@app.post("/api/action")
def api_action(body: ActionRequest) -> dict[str, Any]:
    try:
        c = ActionCoefficients.from_json(body.coefficients)
        br = action_closed_form(c, body.q, body.level, body.phi1_weights, body.chi_constant, body.rho_bound)
    except (KeyError, TypeError) as exc:
        raise HTTPException(status_code=400, detail=f"malformed coefficients: {exc}") from exc
    except _KNOWN_ERRORS as exc:
        raise _bad_request(exc) from exc
    return br.to_json()


@app.post("/api/index")
def api_index(body: TruncationRequest) -> dict[str, Any]:
    try:
        result = index_pairing(fundamental_unitary(body.q), body.q, _truncation(body))
    except _KNOWN_ERRORS as exc:
        raise _bad_request(exc) from exc
    return result.to_json()


@app.get("/api/ledger")
def api_ledger() -> dict[str, Any]:
    cfg = config.load_config()
    sizes = SuiteSizes.quick(min(cfg.m_max, MAX_API_M_MAX))
    return {"ledger": [e.to_json() for e in build_ledger(cfg, sizes)]}
