"""Arbitrary-precision scalars, plane points, symmetric matrices and the
small dense linear algebra the iteration engines are built on.

Every operation is a pure function of its inputs and an explicit
:class:`PrecisionContext`; there is no global precision state.  Scalars are
``mpf`` values bound to the context's private mpmath context, so arithmetic
on them is deterministic at the configured number of decimal digits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from mpmath.ctx_mp import MPContext


class FeasikitError(Exception):
    """Base class for all toolkit errors."""


class NonConvergenceError(FeasikitError):
    """An iterative kernel exhausted its budget without converging."""


class SingularMatrixError(FeasikitError):
    """2x2 system is singular relative to the collinearity tolerance."""

    def __init__(self, determinant):
        self.determinant = determinant
        super().__init__(f"singular 2x2 system, det={determinant}")


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision plus the tolerances derived from it.

    ``eig_tol`` bounds the relative off-diagonal residual at which the
    eigensolver stops; ``col_tol`` is the relative threshold below which
    determinants / denominators are treated as degenerate (collinear).
    Both default to 10^-(decimal_digits - 10).
    """

    decimal_digits: int = 120
    eig_tol: object = None
    col_tol: object = None
    mp: MPContext = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.decimal_digits < 30:
            raise ValueError(f"decimal_digits must be >= 30, got {self.decimal_digits}")
        mp = MPContext()
        mp.dps = self.decimal_digits
        object.__setattr__(self, "mp", mp)
        default_tol = mp.mpf(10) ** (-(self.decimal_digits - 10))
        if self.eig_tol is None:
            object.__setattr__(self, "eig_tol", default_tol)
        else:
            object.__setattr__(self, "eig_tol", mp.mpf(self.eig_tol))
        if self.col_tol is None:
            object.__setattr__(self, "col_tol", default_tol)
        else:
            object.__setattr__(self, "col_tol", mp.mpf(self.col_tol))
        if not self.eig_tol > 0:
            raise ValueError("eig_tol must be positive")
        if not self.col_tol > 0:
            raise ValueError("col_tol must be positive")

    def mpf(self, value):
        """Convert ``value`` (int, float, str or mpf) to a scalar of this context."""
        return self.mp.mpf(value)

    def pow10(self, exponent: int):
        return self.mp.mpf(10) ** exponent

    def to_str(self, value) -> str:
        """Serialize a scalar as a decimal string at full working precision."""
        return self.mp.nstr(self.mp.mpf(value), self.decimal_digits)


@dataclass(frozen=True)
class Point2:
    """A point (x, z) in the plane."""

    x: object
    z: object

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.z + other.z)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.z - other.z)

    def __mul__(self, scalar) -> "Point2":
        return Point2(self.x * scalar, self.z * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "Point2":
        return Point2(-self.x, -self.z)

    def polar(self, ctx: PrecisionContext):
        """Polar coordinates (R, theta) with R >= 0 and theta in [0, 2*pi)."""
        r = ctx.mp.sqrt(self.x * self.x + self.z * self.z)
        theta = ctx.mp.atan2(self.z, self.x)
        two_pi = 2 * ctx.mp.pi
        if theta < 0:
            theta = theta + two_pi
        if theta >= two_pi:  # wraparound rounds up for tiny negative angles
            theta = ctx.mp.zero
        return r, theta

    @staticmethod
    def of(ctx: PrecisionContext, x, z) -> "Point2":
        return Point2(ctx.mpf(x), ctx.mpf(z))


@dataclass(frozen=True)
class SymMatrix:
    """An n x n symmetric matrix; symmetry is checked on construction."""

    entries: tuple

    def __post_init__(self):
        n = len(self.entries)
        for row in self.entries:
            if len(row) != n:
                raise ValueError("matrix must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if self.entries[i][j] != self.entries[j][i]:
                    raise ValueError(f"matrix not symmetric at ({i},{j})")

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    @staticmethod
    def from_rows(rows: Sequence[Sequence]) -> "SymMatrix":
        return SymMatrix(tuple(tuple(row) for row in rows))

    @staticmethod
    def diag(values: Sequence, ctx: PrecisionContext) -> "SymMatrix":
        zero = ctx.mp.zero
        vals = [ctx.mpf(v) for v in values]
        return SymMatrix(
            tuple(
                tuple(vals[i] if i == j else zero for j in range(len(vals)))
                for i in range(len(vals))
            )
        )

    @staticmethod
    def identity(n: int, ctx: PrecisionContext) -> "SymMatrix":
        return SymMatrix.diag([1] * n, ctx)

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(
            tuple(
                tuple(a + b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(
            tuple(
                tuple(a - b for a, b in zip(ra, rb))
                for ra, rb in zip(self.entries, other.entries)
            )
        )

    def __mul__(self, scalar) -> "SymMatrix":
        return SymMatrix(tuple(tuple(a * scalar for a in row) for row in self.entries))

    __rmul__ = __mul__

    def __neg__(self) -> "SymMatrix":
        return SymMatrix(tuple(tuple(-a for a in row) for row in self.entries))


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a symmetric matrix.

    ``eigenvalues`` are sorted ascending; column k of ``basis`` is the
    eigenvector for eigenvalue k, sign-fixed so that the first component of
    largest magnitude is positive.
    """

    eigenvalues: tuple
    basis: tuple

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> SymMatrix:
        """Q diag(lambda) Q^T, computed on the upper triangle and mirrored."""
        n = self.n
        rows = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                acc = sum(
                    self.basis[i][k] * self.eigenvalues[k] * self.basis[j][k]
                    for k in range(n)
                )
                rows[i][j] = acc
                rows[j][i] = acc
        return SymMatrix(tuple(tuple(row) for row in rows))

    def with_eigenvalues(self, eigenvalues: Sequence) -> "Spectrum":
        return Spectrum(tuple(eigenvalues), self.basis)


def inner(a, b):
    """Inner product: Euclidean on Point2, Frobenius on SymMatrix."""
    if isinstance(a, Point2):
        return a.x * b.x + a.z * b.z
    return sum(
        x * y for ra, rb in zip(a.entries, b.entries) for x, y in zip(ra, rb)
    )


def norm(a, ctx: PrecisionContext):
    return ctx.mp.sqrt(inner(a, a))


def dist(a, b, ctx: PrecisionContext):
    return norm(a - b, ctx)


def _sign(x) -> int:
    return -1 if x < 0 else 1


def eig_sym(X: SymMatrix, ctx: PrecisionContext) -> Spectrum:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Deterministic: fixed row-major sweep order, threshold rules with exact
    comparisons, eigenvalues stably sorted ascending, eigenvector signs fixed
    by making each column's first largest-magnitude component positive.
    Raises :class:`NonConvergenceError` if the sweep budget (30*n^2) is
    exhausted, which for well-posed symmetric input does not happen.
    """
    n = X.n
    one, zero = ctx.mp.one, ctx.mp.zero
    a = [list(row) for row in X.entries]
    v = [[one if i == j else zero for j in range(n)] for i in range(n)]

    norm_x = ctx.mp.sqrt(sum(x * x for row in X.entries for x in row))
    if n == 1 or norm_x == 0:
        return _sorted_spectrum([a[i][i] for i in range(n)], v, n)

    # stop when the off-diagonal Frobenius mass is negligible relative to X
    off_goal_sq = (ctx.eig_tol * norm_x) ** 2
    max_sweeps = 30 * n * n
    for _ in range(max_sweeps):
        off_sq = 2 * sum(
            a[p][q] * a[p][q] for p in range(n) for q in range(p + 1, n)
        )
        if off_sq <= off_goal_sq:
            return _sorted_spectrum([a[i][i] for i in range(n)], v, n)
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p][q]
                if apq == 0:
                    continue
                tau = (a[q][q] - a[p][p]) / (2 * apq)
                t = _sign(tau) / (abs(tau) + ctx.mp.sqrt(1 + tau * tau))
                c = 1 / ctx.mp.sqrt(1 + t * t)
                s = t * c
                a[p][p] = a[p][p] - t * apq
                a[q][q] = a[q][q] + t * apq
                a[p][q] = a[q][p] = zero
                for i in range(n):
                    if i == p or i == q:
                        continue
                    aip, aiq = a[i][p], a[i][q]
                    a[i][p] = a[p][i] = c * aip - s * aiq
                    a[i][q] = a[q][i] = s * aip + c * aiq
                for i in range(n):
                    vip, viq = v[i][p], v[i][q]
                    v[i][p] = c * vip - s * viq
                    v[i][q] = s * vip + c * viq
    off = ctx.mp.sqrt(
        2 * sum(a[p][q] * a[p][q] for p in range(n) for q in range(p + 1, n))
    )
    raise NonConvergenceError(
        f"Jacobi sweeps exhausted ({max_sweeps}) with off-diagonal residual {off}"
    )


def _sorted_spectrum(diag, v, n) -> Spectrum:
    perm = sorted(range(n), key=lambda k: diag[k])  # stable for ties
    cols = []
    for k in perm:
        col = [v[i][k] for i in range(n)]
        peak = 0
        for i in range(1, n):
            if abs(col[i]) > abs(col[peak]):
                peak = i
        if col[peak] < 0:
            col = [-x for x in col]
        cols.append(col)
    basis = tuple(tuple(cols[k][i] for k in range(n)) for i in range(n))
    return Spectrum(tuple(diag[k] for k in perm), basis)


def solve2x2(A: Sequence[Sequence], b: Sequence, ctx: PrecisionContext):
    """Solve a 2x2 linear system by Cramer's rule.

    Raises :class:`SingularMatrixError` when |det A| <= col_tol * ||A||_F^2
    (the determinant scales like the norm squared).
    """
    (a00, a01), (a10, a11) = A[0], A[1]
    b0, b1 = b[0], b[1]
    det = a00 * a11 - a01 * a10
    scale = a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11
    if abs(det) <= ctx.col_tol * scale:
        raise SingularMatrixError(det)
    return (b0 * a11 - b1 * a01) / det, (a00 * b1 - a10 * b0) / det
