"""Feasibility-problem toolkit: Douglas-Rachford, Lyapunov-surrogate (LT) and
projected-LT iterations over plane curves and symmetric-matrix sets, with
arbitrary-precision numerics and verification probes for the closed forms
governing the LT update."""

from feasikit.numerics import PrecisionContext, Point2, SymMatrix, Spectrum

__all__ = ["PrecisionContext", "Point2", "SymMatrix", "Spectrum"]
__version__ = "0.1.0"
