"""Exact and approximate analysis of the linear regions of maxout networks.

The package splits into:

* net           -- architectures, parameters, evaluation, slicing, (de)serialization
* feas          -- linear-inequality feasibility (phase-1 simplex)
* regions       -- exact region / decision-boundary enumeration, grid counters
* initializers  -- parameter samplers and region-rich constructions
* bounds        -- closed-form counts and bounds, Monte Carlo constants
* experiment    -- trial sweeps with CSV persistence
* cli           -- command-line front end
* api           -- HTTP service exposing the quick operations
"""
from .net import (
    AffineMap,
    Architecture,
    Parameters,
    activation_pattern,
    forward,
    gradient,
    region_affine_map,
    slice_network,
)
from .feas import InequalitySystem, is_feasible
from .regions import (
    CountReport,
    Window,
    count_db_exact,
    count_regions_exact,
    count_regions_grid,
    export_region_map,
)
from .initializers import (
    InitSpec,
    construct_layer_parallel,
    construct_unit_rank_k,
    sample,
)

__version__ = "0.1.0"
