"""Convergence diagnostics and benchmark reductions: order / linear-rate
estimation from error traces, Dolan-More performance profiles, and seeded
trial generation."""

from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from typing import Mapping, Sequence

from feasikit.numerics import FeasikitError, Point2, PrecisionContext, SymMatrix


class InsufficientDataError(FeasikitError):
    """Too few usable error entries to fit an estimate."""


def _usable_pairs(errors, ctx: PrecisionContext):
    """Consecutive (e_n, e_{n+1}) pairs with both entries positive and above
    the precision floor 10^-(decimal_digits-10); below it, traces flatline
    and corrupt the fit."""
    floor = ctx.pow10(-(ctx.decimal_digits - 10))
    usable = [e is not None and e > floor for e in errors]
    return [
        (errors[i], errors[i + 1])
        for i in range(len(errors) - 1)
        if usable[i] and usable[i + 1]
    ]


@dataclass(frozen=True)
class OrderEstimate:
    """Fit of log e_{n+1} = q log e_n + log c over a tail window of pairs."""

    q: object
    c: object
    window: tuple
    residual: object


def estimate_order(errors, ctx: PrecisionContext, window_pairs: int = 4) -> OrderEstimate:
    """Estimate the convergence order from an error sequence.

    Least-squares slope of log e_{n+1} against log e_n over the last
    ``window_pairs`` usable pairs (at least 4).
    """
    if window_pairs < 4:
        raise ValueError("window_pairs must be >= 4")
    pairs = _usable_pairs(errors, ctx)
    if len(pairs) < 4:
        raise InsufficientDataError(
            f"need >= 4 usable error pairs above the precision floor, got {len(pairs)}"
        )
    used = pairs[-window_pairs:]
    xs = [ctx.mp.log(a) for a, _ in used]
    ys = [ctx.mp.log(b) for _, b in used]
    n = len(used)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var = sum((x - mean_x) ** 2 for x in xs)
    if var == 0:
        raise InsufficientDataError("error pairs are constant; no slope to fit")
    cov = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    q = cov / var
    log_c = mean_y - q * mean_x
    residual = ctx.mp.sqrt(
        sum((y - q * x - log_c) ** 2 for x, y in zip(xs, ys)) / n
    )
    return OrderEstimate(
        q=q, c=ctx.mp.exp(log_c), window=(len(pairs) - len(used), len(pairs) - 1), residual=residual
    )


def order_record(
    est: OrderEstimate, method: str, problem: str, ctx: PrecisionContext
) -> dict:
    """JSON-ready record of an order estimate; numeric fields as decimal
    strings."""
    return {
        "method": method,
        "problem": problem,
        "q": ctx.to_str(est.q),
        "c": ctx.to_str(est.c),
        "residual": ctx.to_str(est.residual),
        "window": list(est.window),
    }


def estimate_linear_rate(errors, ctx: PrecisionContext):
    """Geometric mean of e_{n+1}/e_n over the usable tail (its last half,
    at least two pairs), which drops the pre-asymptotic transient."""
    pairs = _usable_pairs(errors, ctx)
    if len(pairs) < 2:
        raise InsufficientDataError(
            f"need >= 3 usable error entries, got {len(pairs) + 1 if pairs else 0}"
        )
    tail = pairs[-max(2, len(pairs) // 2):]
    log_sum = sum(ctx.mp.log(b / a) for a, b in tail)
    return ctx.mp.exp(log_sum / len(tail))


# ---------------------------------------------------------------------------
# performance profiles


@dataclass(frozen=True)
class ProfileCurve:
    """Step function rho(tau): fraction of problems solved within a factor
    tau of the best solver.  ``ratios`` holds the solver's finite
    performance ratios, sorted; failures count as +inf."""

    solver: str
    metric: str
    ratios: tuple
    n_problems: int
    n_failures: int

    def rho(self, tau) -> float:
        if self.n_problems == 0:
            return 0.0
        if math.isinf(tau):
            return (len(self.ratios) + self.n_failures) / self.n_problems
        return bisect_right(self.ratios, tau) / self.n_problems

    @property
    def breakpoints(self) -> tuple:
        return tuple(sorted(set(self.ratios)))


@dataclass(frozen=True)
class ProfileResult:
    curves: Mapping[str, ProfileCurve]
    excluded: tuple  # indices of problems every solver failed on


def performance_profile(
    costs: Mapping[str, Sequence[float]], metric: str = "iterations"
) -> ProfileResult:
    """Dolan-More profiles from per-(solver, problem) costs.

    ``costs[solver][p]`` is the cost on problem p, with ``math.inf`` as the
    failure sentinel.  Problems on which every solver failed are excluded
    and reported in the result.
    """
    solvers = list(costs)
    if len(solvers) < 2:
        raise ValueError("performance profiles need at least two solvers")
    lengths = {len(costs[s]) for s in solvers}
    if len(lengths) != 1:
        raise ValueError("all solvers must report the same number of problems")
    (n_total,) = lengths
    if n_total < 1:
        raise ValueError("performance profiles need at least one problem")

    excluded = []
    ratios = {s: [] for s in solvers}
    failures = {s: 0 for s in solvers}
    for p in range(n_total):
        best = min(costs[s][p] for s in solvers)
        if math.isinf(best):
            excluded.append(p)
            continue
        for s in solvers:
            c = costs[s][p]
            if math.isinf(c):
                failures[s] += 1
            else:
                ratios[s].append(c / best)
    n_included = n_total - len(excluded)
    curves = {
        s: ProfileCurve(
            solver=s,
            metric=metric,
            ratios=tuple(sorted(ratios[s])),
            n_problems=n_included,
            n_failures=failures[s],
        )
        for s in solvers
    }
    return ProfileResult(curves=curves, excluded=tuple(excluded))


def profile_to_csv(result: ProfileResult, metadata: Sequence = ()) -> str:
    """CSV with one tau column and one rho_<solver> column per solver,
    evaluated at the union of all solvers' breakpoints."""
    solvers = list(result.curves)
    taus = sorted({tau for s in solvers for tau in result.curves[s].breakpoints})
    lines = [f"# {key}: {value}" for key, value in metadata]
    if result.excluded:
        lines.append(f"# excluded_problems: {' '.join(map(str, result.excluded))}")
    lines.append("tau," + ",".join(f"rho_{s}" for s in solvers))
    for tau in taus:
        rhos = ",".join(repr(result.curves[s].rho(tau)) for s in solvers)
        lines.append(f"{tau!r},{rhos}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# trial generation


@dataclass(frozen=True)
class TrialSet:
    """Seed-reproducible initial points for a batch of runs."""

    seed: int
    problem: str
    points: tuple


def sample_disk(
    center: Point2, radius, n: int, seed: int, ctx: PrecisionContext
) -> TrialSet:
    """n points uniform on the disk (polar sampling with the area-correct
    sqrt-radius transform), reproducible from the seed."""
    radius = ctx.mpf(radius)
    if not radius > 0:
        raise ValueError("radius must be positive")
    rng = random.Random(seed)
    two_pi = 2 * ctx.mp.pi
    points = []
    for _ in range(n):
        r = radius * ctx.mp.sqrt(ctx.mpf(rng.random()))
        phi = two_pi * ctx.mpf(rng.random())
        points.append(center + Point2(r * ctx.mp.cos(phi), r * ctx.mp.sin(phi)))
    return TrialSet(seed=seed, problem="disk", points=tuple(points))


def sample_sym(n_dim: int, count: int, seed: int, ctx: PrecisionContext) -> TrialSet:
    """Symmetric matrices (U + U^T)/2 with U entrywise uniform on [-1, 1]."""
    if n_dim < 2:
        raise ValueError("n_dim must be >= 2")
    rng = random.Random(seed)
    points = []
    for _ in range(count):
        u = [[ctx.mpf(rng.uniform(-1.0, 1.0)) for _ in range(n_dim)] for _ in range(n_dim)]
        rows = [
            [(u[i][j] + u[j][i]) / 2 for j in range(n_dim)] for i in range(n_dim)
        ]
        points.append(SymMatrix.from_rows(rows))
    return TrialSet(seed=seed, problem="sym", points=tuple(points))
