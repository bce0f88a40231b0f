"""Iteration engines: Douglas-Rachford steps, the Lyapunov-surrogate (LT)
update, its projected variant (PLT), and a trace-recording driver.

The engines are generic over the point type: anything with vector
arithmetic and an inner product (Point2, SymMatrix) works.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Optional, Sequence

from feasikit.numerics import (
    PrecisionContext,
    SingularMatrixError,
    dist,
    inner,
    solve2x2,
)
from feasikit.sets import FeasibilitySet


class Termination(enum.Enum):
    TOLERANCE = "tolerance"
    MAX_ITER = "max_iter"
    EXACT_ZERO = "exact_zero"
    STAGNATION = "stagnation"


@dataclass(frozen=True)
class StopRule:
    """Stopping parameters.  ``tol`` defaults to 10^-(decimal_digits - 20)
    when left as None (resolved against the run's context)."""

    tol: object = None
    max_iter: int = 200
    stagnation_window: int = 5

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def resolved_tol(self, ctx: PrecisionContext):
        if self.tol is None:
            return ctx.pow10(-(ctx.decimal_digits - 20))
        tol = ctx.mpf(self.tol)
        if not tol > 0:
            raise ValueError("tol must be positive")
        return tol


@dataclass(frozen=True)
class DrOperator:
    """T = (I + R_second o R_first) / 2; ``first`` is reflected first."""

    first: FeasibilitySet
    second: FeasibilitySet

    def step(self, p, ctx: PrecisionContext):
        return dr_step(self, p, ctx)


def dr_step(t: DrOperator, p, ctx: PrecisionContext):
    reflected = t.second.reflect(t.first.reflect(p, ctx), ctx)
    return (p + reflected) * ctx.mpf("0.5")


@dataclass(frozen=True)
class LtUpdateRecord:
    """One LT update: the two trial DR steps, the Gram data of the
    difference vectors, and the resulting point.

    In the non-collinear case ``result = v0 + mu1*u1 + mu2*u2`` is the
    unique point with ``<result - v1, v1 - v0> = <result - v2, v2 - v1> = 0``;
    otherwise (``collinear``) the update falls back to ``v1``.
    """

    v0: object
    v1: object
    v2: object
    u1: object
    u2: object
    eta: object
    mu1: Optional[object]
    mu2: Optional[object]
    result: object
    collinear: bool


def lt_step(t: DrOperator, p, ctx: PrecisionContext) -> LtUpdateRecord:
    """One Lyapunov-surrogate update seeded at p."""
    v0 = p
    v1 = t.step(v0, ctx)
    v2 = t.step(v1, ctx)
    u1 = v1 - v0
    u2 = v2 - v0
    nsq1 = inner(u1, u1)
    nsq2 = inner(u2, u2)
    g = inner(u1, u2)
    eta = nsq1 * nsq2 - g * g

    def fallback():
        return LtUpdateRecord(v0, v1, v2, u1, u2, eta, None, None, v1, True)

    # relative collinearity test; eta == 0 exactly only in exact arithmetic
    if eta <= ctx.col_tol * nsq1 * nsq2:
        return fallback()
    try:
        mu1, mu2 = solve2x2(
            ((nsq1, g), (g - nsq1, nsq2 - g)), (nsq1, nsq2 - g), ctx
        )
    except SingularMatrixError:
        return fallback()
    result = v0 + u1 * mu1 + u2 * mu2
    return LtUpdateRecord(v0, v1, v2, u1, u2, eta, mu1, mu2, result, False)


def plt_step(t: DrOperator, affine: FeasibilitySet, p, ctx: PrecisionContext):
    """Projected LT: apply the LT update after projecting onto the affine set."""
    return lt_step(t, affine.project(p, ctx), ctx).result


METHODS = ("dr", "lt", "plt")


@dataclass(frozen=True)
class Trace:
    """Record of one run: every iterate, the distance to the reference
    point, and per-step wall time (len(step_times) == len(iterates) - 1)."""

    method: str
    iterates: tuple
    errors: tuple
    step_times: tuple
    terminated_by: Termination

    @property
    def iterations(self) -> int:
        return len(self.iterates) - 1

    @property
    def solved(self) -> bool:
        return self.terminated_by in (Termination.TOLERANCE, Termination.EXACT_ZERO)

    @property
    def total_seconds(self) -> float:
        return sum(self.step_times)


def _advance(method: str, t: DrOperator, affine, p, ctx: PrecisionContext):
    if method == "dr":
        return t.step(p, ctx)
    if method == "lt":
        return lt_step(t, p, ctx).result
    if method == "plt":
        return plt_step(t, affine, p, ctx)
    raise ValueError(f"unknown method: {method!r}")


def run(
    method: str,
    t: DrOperator,
    p0,
    stop: StopRule,
    reference,
    ctx: PrecisionContext,
    affine: FeasibilitySet = None,
) -> Trace:
    """Iterate ``method`` from p0, recording distances to ``reference``.

    Termination: error <= tol (tolerance); error exactly zero, or at the
    arithmetic floor 10^-(decimal_digits-10) after a one-step cliff that no
    quadratic sequence could produce (exact_zero); no new error minimum over
    the stagnation window while at the floor (stagnation); otherwise
    max_iter.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method: {method!r}")
    if method == "plt" and affine is None:
        raise ValueError("plt requires the affine set of the pair")

    tol = stop.resolved_tol(ctx)
    floor = ctx.pow10(-(ctx.decimal_digits - 10))
    # a drop from above this level to the floor is faster than quadratic
    cliff = ctx.pow10(-((ctx.decimal_digits - 10) // 4))
    near_floor = ctx.pow10(-((ctx.decimal_digits - 10) // 2))

    iterates = [p0]
    errors = [dist(p0, reference, ctx)]
    step_times = []
    if errors[0] <= tol:
        return Trace(method, tuple(iterates), tuple(errors), (), Termination.TOLERANCE)

    terminated = Termination.MAX_ITER
    window = stop.stagnation_window
    for _ in range(stop.max_iter):
        t0 = time.perf_counter()
        p = _advance(method, t, affine, iterates[-1], ctx)
        step_times.append(time.perf_counter() - t0)
        iterates.append(p)
        err = dist(p, reference, ctx)
        errors.append(err)
        prev = errors[-2]
        if err == 0 or (err <= floor and prev > cliff):
            terminated = Termination.EXACT_ZERO
            break
        if err <= tol:
            terminated = Termination.TOLERANCE
            break
        if len(errors) > window and errors[-1] <= near_floor:
            if min(errors[-window:]) >= min(errors[:-window]):
                terminated = Termination.STAGNATION
                break
    return Trace(method, tuple(iterates), tuple(errors), tuple(step_times), terminated)


def iterate_to_fixed_point(
    method: str,
    t: DrOperator,
    p0,
    ctx: PrecisionContext,
    affine: FeasibilitySet = None,
    max_iter: int = 400,
):
    """Iterate until successive iterates agree to the arithmetic floor and
    return the last iterate.  Used to precompute reference points when no
    closed-form solution is known."""
    diff_tol = ctx.pow10(-(ctx.decimal_digits - 10))
    p = p0
    for _ in range(max_iter):
        q = _advance(method, t, affine, p, ctx)
        if dist(q, p, ctx) <= diff_tol:
            return q
        p = q
    return p


def trace_to_csv(
    trace: Trace,
    ctx: PrecisionContext,
    metadata: Sequence = (),
    include_times: bool = True,
) -> str:
    """Serialize a trace: '#'-prefixed metadata header block, then rows
    ``iter,error,step_seconds`` with errors as full-precision decimal
    strings.  ``include_times=False`` zeroes the timing column, giving
    byte-identical output for identical configurations."""
    lines = [f"# {key}: {value}" for key, value in metadata]
    lines.append("iter,error,step_seconds")
    for k, err in enumerate(trace.errors):
        if k == 0 or not include_times:
            seconds = "0"
        else:
            seconds = repr(trace.step_times[k - 1])
        lines.append(f"{k},{ctx.to_str(err)},{seconds}")
    return "\n".join(lines) + "\n"
