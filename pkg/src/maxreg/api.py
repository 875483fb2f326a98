"""HTTP service exposing the quick analysis operations.

The service wraps the fast operations (sampling, counting on small nets,
bound tables, region maps).  Long-running experiment sweeps stay on the
command line where they can write files incrementally and be resumed.

Run with `uvicorn maxreg.api:app`.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import bounds as bounds_mod
from . import initializers, net, regions

app = FastAPI(title="maxreg", description="Linear-region analysis of maxout networks")

# Service-side guard: exact enumeration is exponential in the worst case,
# so cap the request size and push anything bigger to the CLI.
MAX_SERVICE_UNITS = 40
MAX_SERVICE_GRID = 1024


class ArchModel(BaseModel):
    n0: int = Field(ge=1)
    widths: list[int]
    rank: int = Field(ge=1)
    out_dim: int = Field(default=1, ge=1)

    def to_arch(self):
        return net.Architecture(self.n0, tuple(self.widths), self.rank, self.out_dim)


class InitModel(BaseModel):
    scheme: str = "maxout_he"
    dist_shape: str = "normal"
    zero_bias: bool = False
    noise: float = 0.0
    seed: int = 0


class SampleRequest(BaseModel):
    arch: ArchModel
    init: InitModel = InitModel()


class CountRequest(BaseModel):
    network: dict
    window: list[list[float]] | None = None
    window_half: float = 50.0


class ApproxRequest(CountRequest):
    grid_pts: int = Field(default=256, ge=2, le=MAX_SERVICE_GRID)


class BoundsRequest(BaseModel):
    n0: int = Field(ge=1)
    n_units: int = Field(ge=0)
    rank: int = Field(ge=1)
    m_classes: int = Field(default=2, ge=1)
    r: int = Field(default=0, ge=0)
    c_grad: float = 0.0
    c_bias: float = 0.0
    c: float = 1.0
    t_prime: float = 1.0


class CountResponse(BaseModel):
    regions: int
    db_pieces: int | None
    lp_calls: int
    wall_time_s: float
    breakdowns: int


def _load(req: CountRequest):
    try:
        arch, params = net.from_dict(req.network)
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(422, f"malformed network document: {exc}") from exc
    if arch.total_units > MAX_SERVICE_UNITS:
        raise HTTPException(
            413,
            f"network has {arch.total_units} units; the service caps exact "
            f"analysis at {MAX_SERVICE_UNITS}, use the CLI for larger runs",
        )
    if req.window is not None:
        bounds = tuple((lo, hi) for lo, hi in req.window)
        if len(bounds) != arch.n0:
            raise HTTPException(422, f"window must have {arch.n0} intervals")
        try:
            window = regions.Window(bounds)
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from exc
    else:
        window = regions.Window.cube(arch.n0, req.window_half)
    return arch, params, window


@app.post("/sample")
def sample(req: SampleRequest) -> dict:
    try:
        arch = req.arch.to_arch()
        spec = initializers.InitSpec(
            scheme=req.init.scheme,
            dist_shape=req.init.dist_shape,
            zero_bias=req.init.zero_bias,
            noise=req.init.noise,
            seed=req.init.seed,
        )
        params = initializers.sample(arch, spec)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    return net.to_dict(arch, params)


@app.post("/count")
def count(req: CountRequest) -> CountResponse:
    arch, params, window = _load(req)
    rep = regions.count_regions_exact(arch, params, window)
    return CountResponse(
        regions=rep.regions,
        db_pieces=rep.db_pieces,
        lp_calls=rep.lp_calls,
        wall_time_s=rep.wall_time_s,
        breakdowns=rep.breakdowns,
    )


@app.post("/count-db")
def count_db(req: CountRequest) -> CountResponse:
    arch, params, window = _load(req)
    try:
        rep = regions.count_db_exact(arch, params, window)
    except ValueError as exc:
        raise HTTPException(422, str(exc)) from exc
    return CountResponse(
        regions=rep.regions,
        db_pieces=rep.db_pieces,
        lp_calls=rep.lp_calls,
        wall_time_s=rep.wall_time_s,
        breakdowns=rep.breakdowns,
    )


@app.post("/approx")
def approx(req: ApproxRequest) -> dict:
    arch, params, window = _load(req)
    try:
        n = regions.count_regions_grid(arch, params, window, req.grid_pts)
    except (ValueError, regions.GridCapError) as exc:
        raise HTTPException(422, str(exc)) from exc
    return {"regions": n, "grid_pts": req.grid_pts}


@app.post("/bounds")
def bound_table(req: BoundsRequest) -> dict:
    if req.r > req.n0:
        raise HTTPException(422, f"r={req.r} exceeds n0={req.n0}")
    table = {
        "trivial_pattern_bound": bounds_mod.trivial_pattern_bound(
            req.n_units, req.rank, req.r
        ),
        "exact_pattern_count": bounds_mod.exact_pattern_count(
            req.n_units, req.rank, req.r
        ),
        "generic_lower_bound": bounds_mod.generic_lower_bound(req.n0, req.n_units),
        "max_regions_shallow": bounds_mod.max_regions_shallow(
            req.n0, req.n_units, req.rank
        ),
        "db_pattern_bound": bounds_mod.db_pattern_bound(
            req.n_units, req.rank, req.r, req.m_classes
        ),
        "zero_bias_upper": bounds_mod.zero_bias_upper(
            req.n0, req.n_units, req.rank, req.t_prime
        ),
    }
    if req.c_grad > 0 and req.c_bias > 0:
        bp = bounds_mod.BoundParams(
            req.c_grad,
            req.c_bias,
            req.n0,
            req.n_units,
            req.rank,
            m_classes=req.m_classes,
            r=req.r,
        )
        table["expected_regions_upper"] = bounds_mod.expected_regions_upper(
            bp, delta_ok=True
        )
        table["volume_upper"] = bounds_mod.volume_upper(bp, req.r)
        table["db_expected_upper"] = bounds_mod.db_expected_upper(bp, delta_ok=True)
        table["db_volume_upper"] = bounds_mod.db_volume_upper(bp, req.r)
        table["db_distance_lower"] = bounds_mod.db_distance_lower(bp, req.c)
    return table
