"""Compact fourth-order convection-diffusion and Navier-Stokes solvers on
deforming structured grids."""

import json

from ._core import (
    Error,
    InvalidArgument,
    error_norms,
    exact_pulse,
    exact_taylor,
    motion_grid,
    observed_order,
    pade_derivative,
    property_suite,
)
from ._core import normalize_config as _normalize_config
from ._core import run_case as _run_case

__all__ = [
    "Error",
    "InvalidArgument",
    "config",
    "error_norms",
    "exact_pulse",
    "exact_taylor",
    "motion_grid",
    "observed_order",
    "pade_derivative",
    "property_suite",
    "run",
]


def config(case, **overrides):
    """Full configuration dict for a case with the given keys replaced."""
    return json.loads(_normalize_config(json.dumps({"case": case, **overrides})))


def run(cfg=None, **overrides):
    """Run one case. cfg is a config dict (or a case name); keyword
    arguments override its keys. Returns the report as a dict with numpy
    arrays for the final grid and fields."""
    if isinstance(cfg, str):
        cfg = {"case": cfg}
    return _run_case(json.dumps({**(cfg or {}), **overrides}))
