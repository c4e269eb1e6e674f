"""
Apollonia: FastAPI Backend Server
Exposes domain validation, packing generation and every experiment as JSON endpoints.
"""

import os
import time

import anyio
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from scripts import config
from scripts.apollonian_packing import PACKINGS, StopCriterion
from scripts.domain_model import domain_from_document, load_domain
from scripts.errors import ApolloniaError, DomainValidationError
from scripts.experiments import (
    cmd_converge,
    cmd_fit_counting,
    cmd_fit_residual,
    cmd_greedy,
    cmd_lp_check,
)
from scripts.exponent_fit import log_spaced
from scripts.geometry_core import TangencyTolerance
from scripts.greedy_baseline import parse_region
from scripts.harmonic import parse_function

# ==================================================
# 1. SETUP & CONFIG
# ==================================================
PREVIEW_ROWS = 50

# ==================================================
# 2. FASTAPI APP
# ==================================================
app = FastAPI(title="Apollonia", version=config.VERSION)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)

# ==================================================
# 3. PYDANTIC MODELS
# ==================================================
class DomainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    domain: str | None = None      # bundled name or file path
    document: dict | None = None   # inline {"disks": [...], "gaps": [...]}
    tolerance_rel: float = config.TOLERANCE_REL
    tolerance_abs: float = config.TOLERANCE_ABS

class GenerateRequest(DomainRequest):
    max_count: int | None = None
    max_curvature: float | None = None
    min_residual: float | None = None

class ConvergeRequest(DomainRequest):
    function: str
    grid: list[int] | None = None
    n_min: int = 10
    n_max: int = 10_000
    points: int = 13
    normalize: bool = False
    oracle: str = "quadrature"
    sup: str = "auto"
    mc_baseline: bool = False
    l1: bool = False
    seed: int = 0
    threads: int = config.THREADS

class FitResidualRequest(DomainRequest):
    n_min: int = 1_000
    n_max: int = 100_000
    points: int = 40

class FitCountingRequest(DomainRequest):
    t_min: float = 1e2
    t_max: float = 1e4
    points: int = 40
    band_ratio: float = 2.0

class LpCheckRequest(DomainRequest):
    n: int
    p: list[float] = [1.0, 2.0, 3.0]
    samples: int = config.MC_SAMPLES
    seed: int = 0

class GreedyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    region: str = "square:1"
    target_n: int = Field(default=10_000, ge=1)
    seeds: list[int] = [1, 2, 3, 4, 5]
    fit_min: float = 1e2
    fit_max: float = 1e4
    points: int = 40
    threads: int = config.THREADS

# ==================================================
# 4. HELPERS
# ==================================================
def tolerance_of(req):
    return TangencyTolerance(req.tolerance_rel, req.tolerance_abs)


def resolve_domain(req):
    """Load a bundled/named domain or build an inline one."""
    tol = tolerance_of(req)
    if req.document is not None:
        return domain_from_document(req.document, tol, name="inline")
    if req.domain is None:
        raise HTTPException(status_code=400, detail="Give either 'domain' or 'document'.")
    path = config.DOMAIN_DIR / f"{req.domain.removesuffix('.json')}.json"
    return load_domain(path if path.exists() else req.domain, tol)


def as_http_error(e):
    if isinstance(e, DomainValidationError):
        return HTTPException(status_code=e.http_status,
                             detail={"message": str(e), "violations": e.report.to_list()})
    return HTTPException(status_code=e.http_status, detail=f"{type(e).__name__}: {e}")


async def run_report(label, work):
    """Run an experiment off the event loop and return its report as a dict."""
    t0 = time.time()
    try:
        report = await anyio.to_thread.run_sync(work)
    except ApolloniaError as e:
        print(f"❌ {label} failed: {e}")
        raise as_http_error(e)
    print(f"⏱️  {label} request took: {time.time() - t0:.2f}s")
    return report.to_dict()

# ==================================================
# 5. API ENDPOINTS
# ==================================================
@app.get("/api/status")
async def api_status():
    """Version, defaults and the bundled domains that are present."""
    return {
        "version": config.VERSION,
        "tolerance_rel": config.TOLERANCE_REL,
        "tolerance_abs": config.TOLERANCE_ABS,
        "threads": config.THREADS,
        "domains": sorted(p.stem for p in config.DOMAIN_DIR.glob("*.json")),
    }

@app.get("/api/domains")
async def api_domains():
    """Names of the domain files under data/domains/."""
    return {"domains": sorted(p.stem for p in config.DOMAIN_DIR.glob("*.json"))}

@app.post("/api/validate")
async def api_validate(req: DomainRequest):
    """Validation report; a failing domain is a 200 with ok = false."""
    try:
        domain = resolve_domain(req)
    except DomainValidationError as e:
        return {"ok": False, "violations": e.report.to_list()}
    except ApolloniaError as e:
        raise as_http_error(e)
    return {
        "ok": True,
        "violations": [],
        "disks": domain.k,
        "gaps": [list(g.members) for g in domain.gaps],
        "exact_area": domain.exact_area,
    }

@app.post("/api/generate")
async def api_generate(req: GenerateRequest):
    """Packing statistics and the first rows of the size-ordered sequence."""
    try:
        domain = resolve_domain(req)
        stop = StopCriterion(req.max_count, req.max_curvature, req.min_residual)
        stats, emitted = await anyio.to_thread.run_sync(lambda: PACKINGS.prefix(domain, stop, tolerance_of(req)))
    except ApolloniaError as e:
        raise as_http_error(e)
    rows = [
        {"index": e.index, "x": e.circle.x, "y": e.circle.y, "r": e.circle.radius,
         "curvature": e.circle.curvature, "parents": list(e.parents) if e.parents else None}
        for e in emitted[:PREVIEW_ROWS]
    ]
    return {"stats": stats.to_dict(), "circles": rows, "truncated": len(emitted) > PREVIEW_ROWS}

@app.post("/api/converge")
async def api_converge(req: ConvergeRequest):
    try:
        domain = resolve_domain(req)
        u = parse_function(req.function)
        if req.normalize:
            u = u.normalized(domain)
        grid = req.grid or log_spaced(req.n_min, req.n_max, req.points, integer=True).tolist()
    except ApolloniaError as e:
        raise as_http_error(e)
    return await run_report("Converge", lambda: cmd_converge(
        domain, u, grid, tol=tolerance_of(req), threads=req.threads, oracle=req.oracle,
        sup_method=req.sup, mc_baseline=req.mc_baseline, l1=req.l1, seed=req.seed))

@app.post("/api/fit/residual")
async def api_fit_residual(req: FitResidualRequest):
    try:
        domain = resolve_domain(req)
    except ApolloniaError as e:
        raise as_http_error(e)
    return await run_report("Residual fit", lambda: cmd_fit_residual(
        domain, req.n_min, req.n_max, req.points, tol=tolerance_of(req)))

@app.post("/api/fit/counting")
async def api_fit_counting(req: FitCountingRequest):
    try:
        domain = resolve_domain(req)
    except ApolloniaError as e:
        raise as_http_error(e)
    return await run_report("Counting fit", lambda: cmd_fit_counting(
        domain, req.t_min, req.t_max, req.points, req.band_ratio, tol=tolerance_of(req)))

@app.post("/api/lp-check")
async def api_lp_check(req: LpCheckRequest):
    try:
        domain = resolve_domain(req)
    except ApolloniaError as e:
        raise as_http_error(e)
    return await run_report("L^p check", lambda: cmd_lp_check(
        domain, req.n, req.p, req.samples, req.seed, tol=tolerance_of(req)))

@app.post("/api/greedy")
async def api_greedy(req: GreedyRequest):
    try:
        region = parse_region(req.region)
    except ApolloniaError as e:
        raise as_http_error(e)
    return await run_report("Greedy", lambda: cmd_greedy(
        region, req.target_n, req.seeds, req.fit_min, req.fit_max, req.points, threads=req.threads))


if __name__ == "__main__":
    import uvicorn

    port = int(os.environ.get("PORT", 8000))

    print("\n⚡ Apollonia Server starting...")
    print(f"🌐 Server running on port {port}\n")
    uvicorn.run(app, host="0.0.0.0", port=port)
