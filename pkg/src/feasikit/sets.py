"""Feasibility sets with projection selectors and reflections.

Plane sets: the x-axis, horizontal lines, the unit circle and graphs of
analytic curves.  Matrix sets: the PSD cone, its boundary, and the affine
sets fixing the diagonal (all ones) or the (1,1) entry.  Projections are
single-valued selectors, so ``project(project(p)) == project(p)``;
reflections are ``R = 2 P - I``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

from feasikit.numerics import (
    FeasikitError,
    Point2,
    PrecisionContext,
    SymMatrix,
    eig_sym,
)


class ProjectionError(FeasikitError):
    """A projection kernel failed to converge from every Newton start."""


class FeasibilitySet(ABC):
    """Abstract capability: project a point onto the set."""

    ident: str = ""

    @abstractmethod
    def project(self, p, ctx: PrecisionContext):
        ...

    def reflect(self, p, ctx: PrecisionContext):
        return self.project(p, ctx) * 2 - p


def reflect(s: FeasibilitySet, p, ctx: PrecisionContext):
    """Reflection of p about the set: 2*project(p) - p."""
    return s.reflect(p, ctx)


# ---------------------------------------------------------------------------
# plane sets


@dataclass(frozen=True)
class AnalyticCurve:
    """An analytic function t -> f(t) with f(0) = 0 and f'(0) != 0.

    ``f``, ``df`` and ``ddf`` evaluate f, f' and f'' at full precision; ``a``
    caches f'(0).
    """

    f: Callable
    df: Callable
    ddf: Callable
    a: object
    ident: str = ""

    @classmethod
    def checked(cls, f, df, ddf, ctx: PrecisionContext, ident: str = "") -> "AnalyticCurve":
        zero = ctx.mp.zero
        f0 = f(zero)
        if abs(f0) > ctx.pow10(-(ctx.decimal_digits - 5)):
            raise ValueError(f"curve must pass through the origin, f(0)={f0}")
        a = df(zero)
        if abs(a) <= ctx.col_tol:
            raise ValueError("curve must not be tangent to the x-axis: f'(0) == 0")
        return cls(f=f, df=df, ddf=ddf, a=a, ident=ident)


def project_horizontal_line(p: Point2, h) -> Point2:
    return Point2(p.x, h)


def project_circle(p: Point2, ctx: PrecisionContext) -> Point2:
    """Radial projection onto the unit circle; the selector at the origin
    (where the projection is set-valued) is (1, 0)."""
    r = ctx.mp.sqrt(p.x * p.x + p.z * p.z)
    if r == 0:
        return Point2(ctx.mp.one, ctx.mp.zero)
    return Point2(p.x / r, p.z / r)


def project_graph(p: Point2, curve: AnalyticCurve, ctx: PrecisionContext) -> Point2:
    """Nearest-point selector onto the graph of the curve.

    Newton's method on the stationarity equation
    g(t) = (t - p.x) + (f(t) - p.z) f'(t) = 0, started from 33 equispaced
    points on [p.x - 2*D, p.x + 2*D] with D = 1 + |p.z|.  Among converged
    roots, the one of least squared distance wins; exact ties break toward
    smaller t.
    """
    f, df, ddf = curve.f, curve.df, curve.ddf
    px, pz = p.x, p.z
    res_tol = ctx.pow10(-(ctx.decimal_digits - 15))
    span = 2 * (1 + abs(pz))
    lo = px - span
    width = 2 * span
    escape = abs(px) + span + 10

    roots = []
    for k in range(33):
        t = lo + width * k / 32
        for _ in range(200):
            gt = (t - px) + (f(t) - pz) * df(t)
            if abs(gt) <= res_tol:
                roots.append(t)
                break
            slope = 1 + df(t) ** 2 + (f(t) - pz) * ddf(t)
            if slope == 0:
                break
            t = t - gt / slope
            if abs(t) > escape:
                break
    if not roots:
        raise ProjectionError(
            "graph projection: Newton failed from every start; widen the bracket"
        )

    roots.sort()
    merged = [roots[0]]
    for t in roots[1:]:
        if abs(t - merged[-1]) > ctx.pow10(-(ctx.decimal_digits - 20)) * (1 + abs(t)):
            merged.append(t)

    def objective(t):
        dx = t - px
        dz = f(t) - pz
        return dx * dx + dz * dz

    best = min(merged, key=lambda t: (objective(t), t))
    return Point2(best, f(best))


@dataclass(frozen=True)
class HorizontalLine(FeasibilitySet):
    height: object

    @property
    def ident(self) -> str:
        return f"hline:{self.height}"

    def project(self, p: Point2, ctx: PrecisionContext) -> Point2:
        return project_horizontal_line(p, self.height)


class XAxis(HorizontalLine):
    ident = "xaxis"

    def __init__(self):
        super().__init__(height=0)

    def project(self, p: Point2, ctx: PrecisionContext) -> Point2:
        return Point2(p.x, ctx.mp.zero)


class UnitCircle(FeasibilitySet):
    ident = "circle"

    def project(self, p: Point2, ctx: PrecisionContext) -> Point2:
        return project_circle(p, ctx)


@dataclass(frozen=True)
class CurveGraph(FeasibilitySet):
    curve: AnalyticCurve

    @property
    def ident(self) -> str:
        return f"graph:{self.curve.ident}"

    def project(self, p: Point2, ctx: PrecisionContext) -> Point2:
        return project_graph(p, self.curve, ctx)


# ---------------------------------------------------------------------------
# matrix sets


def _rows(x) -> Sequence[Sequence]:
    return x.entries if isinstance(x, SymMatrix) else x


def project_psd(x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
    """Eigenvalue-thresholding projection onto the PSD cone."""
    spectrum = eig_sym(x, ctx)
    if spectrum.eigenvalues[0] >= 0:
        return x
    clipped = tuple(lam if lam > 0 else ctx.mp.zero for lam in spectrum.eigenvalues)
    return spectrum.with_eigenvalues(clipped).reconstruct()


def project_psd_boundary(x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
    """Projection selector onto the PSD-cone boundary.

    With lambda_min <= 0 this is the usual cone projection; otherwise the
    smallest eigenvalue (first index, ascending order) is replaced by zero.
    """
    spectrum = eig_sym(x, ctx)
    if spectrum.eigenvalues[0] <= 0:
        mu = tuple(lam if lam > 0 else ctx.mp.zero for lam in spectrum.eigenvalues)
    else:
        mu = (ctx.mp.zero,) + spectrum.eigenvalues[1:]
    return spectrum.with_eigenvalues(mu).reconstruct()


def project_diag_ones(x, ctx: PrecisionContext) -> SymMatrix:
    """Fix the diagonal to 1 and symmetrize off-diagonal pairs by averaging.

    Asymmetric raw input is legal; the averaging makes the output symmetric.
    """
    rows = _rows(x)
    n = len(rows)
    one = ctx.mp.one
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = one
        for j in range(i + 1, n):
            avg = (rows[i][j] + rows[j][i]) / 2
            out[i][j] = out[j][i] = avg
    return SymMatrix.from_rows(out)


def project_entry11(x, ctx: PrecisionContext) -> SymMatrix:
    """Fix the (1,1) entry to 1; symmetrize off-diagonals; keep the rest."""
    rows = _rows(x)
    n = len(rows)
    out = [[None] * n for _ in range(n)]
    out[0][0] = ctx.mp.one
    for i in range(n):
        if i > 0:
            out[i][i] = rows[i][i]
        for j in range(i + 1, n):
            avg = (rows[i][j] + rows[j][i]) / 2
            out[i][j] = out[j][i] = avg
    return SymMatrix.from_rows(out)


class PsdCone(FeasibilitySet):
    ident = "psd"

    def project(self, x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
        return project_psd(x, ctx)


class PsdBoundary(FeasibilitySet):
    ident = "psd-boundary"

    def project(self, x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
        return project_psd_boundary(x, ctx)


class DiagOnes(FeasibilitySet):
    ident = "diag-ones"

    def project(self, x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
        return project_diag_ones(x, ctx)


class EntryOne(FeasibilitySet):
    ident = "entry11"

    def project(self, x: SymMatrix, ctx: PrecisionContext) -> SymMatrix:
        return project_entry11(x, ctx)


def set_from_id(ident: str, ctx: PrecisionContext, curve_lookup=None) -> FeasibilitySet:
    """Resolve a set identifier (as used by the CLI) to a set instance.

    ``curve_lookup`` maps a curve id to an :class:`AnalyticCurve`; it is only
    needed for ``graph:<curve-id>``.
    """
    if ident == "xaxis":
        return XAxis()
    if ident.startswith("hline:"):
        return HorizontalLine(height=ctx.mpf(ident.split(":", 1)[1]))
    if ident == "circle":
        return UnitCircle()
    if ident.startswith("graph:"):
        if curve_lookup is None:
            raise ValueError("graph sets need a curve_lookup")
        return CurveGraph(curve=curve_lookup(ident.split(":", 1)[1]))
    if ident == "psd":
        return PsdCone()
    if ident == "psd-boundary":
        return PsdBoundary()
    if ident == "diag-ones":
        return DiagOnes()
    if ident == "entry11":
        return EntryOne()
    raise ValueError(f"unknown set id: {ident!r}")
