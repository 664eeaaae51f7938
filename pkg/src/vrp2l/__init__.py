"""Exact branch-and-price for the capacitated vehicle routing problem with
two-dimensional LIFO loading, with optional learned screening of the packing
feasibility checks (always rectified exactly, so results stay exact)."""

from . import core, driver, master, neural, packing, pricing
from .core import Instance, Route, generate_instance, parse_instance, write_instance
from .driver import (
    BpResult,
    CgConfig,
    CgReport,
    branch_and_price,
    cg_solve,
    classification_metrics,
    percentage_gap,
)
from .packing import PackingQuery, check_feasible, oracle_check

__version__ = "1.0.0"

__all__ = [
    "core",
    "packing",
    "pricing",
    "master",
    "neural",
    "driver",
    "Instance",
    "Route",
    "generate_instance",
    "parse_instance",
    "write_instance",
    "PackingQuery",
    "check_feasible",
    "oracle_check",
    "CgConfig",
    "CgReport",
    "BpResult",
    "cg_solve",
    "branch_and_price",
    "percentage_gap",
    "classification_metrics",
    "__version__",
]
