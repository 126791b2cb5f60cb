#!/usr/bin/env python3
"""A/B diagnostic: solver effort with and without nondimensionalization.

Runs a few outer iterations of the landing problem twice - once with the
default scaling units and once with unit scales (raw SI) - and reports the
subproblem iteration counts. Informational only; raw SI conditioning is
expected to be dramatically worse.
"""

import logging
import time

import numpy as np

from seqconic.pipg import PipgSettings
from seqconic.rocket import solve_landing
from seqconic.scp import ScaleSet, ScpSettings
from seqconic.vehicle import RocketParams


def trial(label: str, scale: ScaleSet, outer: int = 5) -> None:
    settings = ScpSettings(max_scp_iters=outer, scale=scale)
    pipg = PipgSettings(
        omega=settings.w_vse / settings.w_tr, max_iters=300_000
    )
    t0 = time.perf_counter()
    try:
        result = solve_landing(RocketParams(), settings, pipg)
        iters = [it.pipg.iterations for it in result.report.iterations]
        resid = [it.pipg.fixed_point_residual for it in result.report.iterations]
        print(f"{label}: wall {time.perf_counter() - t0:.1f}s")
        print(f"  subproblem iterations: {iters}")
        print(f"  fixed-point residuals: {['%.1e' % r for r in resid]}")
    except Exception as exc:  # noqa: BLE001 - report and compare whatever happens
        print(f"{label}: failed after {time.perf_counter() - t0:.1f}s: {exc}")


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)
    trial("scaled (default units)", ScaleSet())
    trial("unscaled (raw SI units)", ScaleSet(length=1.0, mass=1.0, time=1.0))
