"""Uniform grids, complex-valued fields, quadrature, and weighted norms."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Grid",
    "ComplexField",
    "NormKind",
    "make_grid",
    "inner",
    "norm",
    "derivative",
]


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform mesh on [-L, L] with an odd node count, so x = 0 is a node.

    Attributes
    ----------
    L : float
        Half-width of the domain.
    N : int
        Number of nodes (odd).
    h : float
        Node spacing, 2L/(N-1).
    x : ndarray
        Node coordinates.
    weights : ndarray
        Trapezoid quadrature weights.
    center : int
        Index of the x = 0 node.
    """

    L: float
    N: int
    h: float = field(init=False)
    x: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    center: int = field(init=False)

    def __post_init__(self):
        h = 2.0 * self.L / (self.N - 1)
        x = -self.L + h * np.arange(self.N)
        c = self.N // 2
        x[c] = 0.0  # kill roundoff so the center node is exactly zero
        w = np.full(self.N, h)
        w[0] = w[-1] = 0.5 * h
        x.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "center", c)

    def compatible(self, other) -> bool:
        return self is other or (self.L == other.L and self.N == other.N)


def make_grid(L: float, N: int) -> Grid:
    """Build a uniform grid on [-L, L] with N nodes.

    N must be odd so that x = 0 is a node (the point defect sits there).
    """
    if L <= 0:
        raise ValueError(f"domain half-width must be positive, got L={L}")
    if N < 3 or N % 2 == 0:
        raise ValueError(f"node count must be odd and >= 3, got N={N}")
    return Grid(float(L), int(N))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """A complex-valued function sampled on a Grid. Values are immutable."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.N,):
            raise ValueError(
                f"field has {v.shape} values for a grid of {self.grid.N} nodes"
            )
        if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
            raise ValueError("field contains non-finite values")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _check(self, other: "ComplexField"):
        if not self.grid.compatible(other.grid):
            raise ValueError("grid mismatch between fields")

    def __add__(self, other):
        self._check(other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return ComplexField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ComplexField(self.grid, -self.values)

    def conj(self):
        return ComplexField(self.grid, self.values.conj())

    def at_zero(self) -> complex:
        return complex(self.values[self.grid.center])


class NormKind(Enum):
    L2 = "L2"
    L2_GAMMA = "L2_gamma"
    H1 = "H1"
    H1_GAMMA = "H1_gamma"
    H1_MINUS_GAMMA = "H1_minus_gamma"
    X = "X"


def inner(f: ComplexField, g: ComplexField) -> float:
    """Real bilinear pairing Re \\int f conj(g) dx by trapezoid quadrature."""
    f._check(g)
    return float(np.real(np.sum(f.grid.weights * f.values * np.conj(g.values))))


def derivative(f: ComplexField) -> ComplexField:
    """First derivative: centered differences inside, one-sided at the walls."""
    return ComplexField(f.grid, np.gradient(f.values, f.grid.h, edge_order=2))


def _weighted(f: ComplexField, gamma: float) -> ComplexField:
    w = np.exp(gamma * np.abs(f.grid.x))
    if not np.all(np.isfinite(w)):
        raise ValueError(f"weight exp({gamma}|x|) overflows on this grid")
    return ComplexField(f.grid, w * f.values)


def _l2(f: ComplexField) -> float:
    return float(np.sqrt(np.sum(f.grid.weights * np.abs(f.values) ** 2)))


def norm(f: ComplexField, kind=NormKind.L2, gamma: float = 0.2) -> float:
    """Grid norm of a field.

    Kinds (gamma is the weight rate for the weighted ones):
      L2              plain L2
      L2_gamma        L2 of exp(+gamma|x|) f
      H1              sqrt(L2^2 + L2(f')^2)
      H1_gamma        H1 of exp(+gamma|x|) f
      H1_minus_gamma  H1 of exp(-gamma|x|) f
      X               sqrt(L2(f')^2 + L2(f/(1+x^2))^2)
    """
    if isinstance(kind, str):
        try:
            kind = NormKind(kind)
        except ValueError:
            raise ValueError(f"unknown norm kind {kind!r}") from None
    if kind is NormKind.L2:
        out = _l2(f)
    elif kind is NormKind.L2_GAMMA:
        out = _l2(_weighted(f, gamma))
    elif kind is NormKind.H1:
        out = float(np.hypot(_l2(f), _l2(derivative(f))))
    elif kind is NormKind.H1_GAMMA:
        g = _weighted(f, gamma)
        out = float(np.hypot(_l2(g), _l2(derivative(g))))
    elif kind is NormKind.H1_MINUS_GAMMA:
        g = _weighted(f, -gamma)
        out = float(np.hypot(_l2(g), _l2(derivative(g))))
    elif kind is NormKind.X:
        decay = ComplexField(f.grid, f.values / (1.0 + f.grid.x**2))
        out = float(np.hypot(_l2(derivative(f)), _l2(decay)))
    else:  # pragma: no cover
        raise ValueError(f"unknown norm kind {kind!r}")
    if not np.isfinite(out):
        raise ValueError("norm evaluated to a non-finite value")
    return out
