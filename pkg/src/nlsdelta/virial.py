"""Localized virial weights and commutator/coercivity diagnostics.

The weight ladder starts from a smooth even cutoff chi (1 on [-1, 1],
0 outside [-2, 2], monotone in |x|), builds the localized envelope
zeta_A = exp(-(|x|/A)(1 - chi)) and the odd antiderivative
psi_A(x) = int_0^x zeta_A^2. The momentum-type functional

    J(xi) = 1/2 <i xi, (psi_A'/2 + psi_A d/dx) xi>

obeys a localization identity: pairing the multiplier with the defect
Hamiltonian H_1 equals <H_{1/2} w, w> + (2A)^{-1} <V w, w> for
w = zeta_A xi, where H_{1/2} has half-strength coupling and the
potential V = chi'' |x| + 2 chi' sign(x) is supported in 1 <= |x| <= 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import ComplexField, Grid, NormKind, derivative, inner, norm
from .operator import build_operator, spectral_data

__all__ = [
    "VirialWeights",
    "make_weights",
    "j_functional",
    "virial_multiplier",
    "commutator_identity",
    "coercivity_report",
    "CommutatorCheck",
    "CoercivityReport",
]


def _bump(t):
    """exp(-1/t) for t > 0, identically 0 for t <= 0 (smooth junction)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 1e-6
    out[m] = np.exp(-1.0 / t[m])
    return out


def _bump_d1(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 1e-6
    out[m] = np.exp(-1.0 / t[m]) / t[m] ** 2
    return out


def _bump_d2(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    m = t > 1e-6
    out[m] = np.exp(-1.0 / t[m]) * (1.0 / t[m] ** 4 - 2.0 / t[m] ** 3)
    return out


def cutoff(x):
    """Even C-infinity cutoff: 1 on [-1, 1], 0 outside [-2, 2], decreasing in |x|.

    Built from the standard bump quotient a/(a + b) with a = exp(-1/(2-|x|))
    and b = exp(-1/(|x|-1)).
    """
    r = np.abs(np.asarray(x, dtype=float))
    a = _bump(2.0 - r)
    b = _bump(r - 1.0)
    return a / (a + b + (a + b == 0.0))  # denominator never 0 on [1,2]


def cutoff_derivatives(x):
    """(chi', chi'') evaluated analytically; both vanish outside 1 < |x| < 2."""
    x = np.asarray(x, dtype=float)
    r = np.abs(x)
    sgn = np.sign(x)
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    m = (r > 1.0) & (r < 2.0)
    rm = r[m]
    a = _bump(2.0 - rm)
    b = _bump(rm - 1.0)
    ap = -_bump_d1(2.0 - rm)
    bp = _bump_d1(rm - 1.0)
    app = _bump_d2(2.0 - rm)
    bpp = _bump_d2(rm - 1.0)
    s = a + b
    # chi(r) = a/(a+b) in the radial variable, then chain rule through |x|
    dr1 = (ap * b - a * bp) / s**2
    dr2 = ((app * b - a * bpp) * s - 2.0 * (ap * b - a * bp) * (ap + bp)) / s**3
    d1[m] = dr1 * sgn[m]
    d2[m] = dr2
    return d1, d2


@dataclass(eq=False)
class VirialWeights:
    """Sampled weight family for one localization scale A on one grid."""

    grid: Grid
    A: float
    chi: np.ndarray = field(repr=False)
    chi_p: np.ndarray = field(repr=False)
    chi_pp: np.ndarray = field(repr=False)
    zeta: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    psi_prime: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)

    def __post_init__(self):
        self._ops = {}
        self._sd = None

    def operator(self, q: float):
        op = self._ops.get(q)
        if op is None:
            op = build_operator(q, self.grid)
            self._ops[q] = op
        return op

    def spectral(self):
        """Trapping-defect spectral data on this grid (cached)."""
        if self._sd is None:
            self._sd = spectral_data(self.operator(1.0))
        return self._sd


def make_weights(A: float, grid: Grid) -> VirialWeights:
    """Assemble chi, zeta_A, psi_A, psi_A' and the commutator potential V.

    psi_A is the cumulative trapezoid of zeta_A^2 from the center node,
    extended oddly; psi_A' is stored analytically as zeta_A^2. Requires
    A >= 4 (the envelope comparison with exp(-|x|/A) needs it).
    """
    if A < 4:
        raise ValueError(f"localization scale must satisfy A >= 4, got A={A}")
    x = grid.x
    r = np.abs(x)
    chi = cutoff(x)
    chi_p, chi_pp = cutoff_derivatives(x)
    zeta = np.exp(-(r / A) * (1.0 - chi))
    z2 = zeta**2
    c = grid.center
    psi = np.empty(grid.N)
    right = np.concatenate(([0.0], np.cumsum(0.5 * grid.h * (z2[c:-1] + z2[c + 1:]))))
    psi[c:] = right
    psi[:c] = -right[1:][::-1]
    V = chi_pp * r + 2.0 * chi_p * np.sign(x)
    return VirialWeights(grid=grid, A=float(A), chi=chi, chi_p=chi_p, chi_pp=chi_pp,
                         zeta=zeta, psi=psi, psi_prime=z2, V=V)


def virial_multiplier(xi: ComplexField, wts: VirialWeights) -> ComplexField:
    """(psi_A'/2 + psi_A d/dx) xi."""
    if not wts.grid.compatible(xi.grid):
        raise ValueError("grid mismatch between field and weights")
    dxi = derivative(xi)
    return ComplexField(xi.grid, 0.5 * wts.psi_prime * xi.values + wts.psi * dxi.values)


def j_functional(xi: ComplexField, wts: VirialWeights) -> float:
    """Momentum-type functional J = 1/2 <i xi, (psi'/2 + psi d/dx) xi>."""
    mult = virial_multiplier(xi, wts)
    i_xi = ComplexField(xi.grid, 1j * xi.values)
    return 0.5 * inner(i_xi, mult)


@dataclass
class CommutatorCheck:
    lhs: float
    rhs: float
    gap: float


def commutator_identity(xi: ComplexField, wts: VirialWeights,
                        use_statement_potential: bool = False) -> CommutatorCheck:
    """Both sides of the localization identity and their relative gap.

    lhs = <(psi'/2 + psi d/dx) xi, H_1 xi>
    rhs = <H_{1/2} w, w> + (2A)^{-1} <V w, w>,  w = zeta_A xi.

    `use_statement_potential` swaps in the variant potential
    chi''|x| + 2 chi'' sign(x) (second derivative in both terms); the
    identity only closes with the correct first-derivative term, which
    the tests demonstrate.
    """
    mult = virial_multiplier(xi, wts)
    h1 = wts.operator(1.0)
    lhs = inner(mult, h1.apply(xi))
    w = ComplexField(xi.grid, wts.zeta * xi.values)
    h_half = wts.operator(0.5)
    V = wts.V
    if use_statement_potential:
        V = wts.chi_pp * np.abs(wts.grid.x) + 2.0 * wts.chi_pp * np.sign(wts.grid.x)
    vw = ComplexField(xi.grid, V * w.values)
    rhs = inner(h_half.apply(w), w) + inner(vw, w) / (2.0 * wts.A)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return CommutatorCheck(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs) / scale)


@dataclass
class CoercivityReport:
    """Measured constants of the coercivity chain for one field.

    ratio          lhs / <(-dxx + delta) w, w>
    vterm_ratio    |<V w, w>| / (2A <(-dxx + delta) w, w>)
    phi_leak       |<w, phi>| / sqrt(<(-dxx + delta) w, w>)
    const_norm     (||w'||^2 + ||<x>^-2 w||^2) / <(-dxx + delta) w, w>
    bound_margin   max_x (|w(x)| - |w(0)| - |x|^(1/2) ||w'||)
    """

    A: float
    ratio: float
    vterm_ratio: float
    phi_leak: float
    const_norm: float
    bound_margin: float
    quadform: float


def coercivity_report(xi: ComplexField, wts: VirialWeights,
                      proj_tol: float = 1e-8) -> CoercivityReport:
    """Coercivity diagnostics for a projector-orthogonal field.

    The reference quadratic form is <(-dxx + delta) w, w> (repulsive
    unit defect), which controls ||w'||^2 + ||<x>^-2 w||^2 and, for
    fields orthogonal to the ground state, a definite fraction of the
    commutator lhs.
    """
    sd = wts.spectral()
    scale = norm(xi)
    leak = abs(complex(np.sum(xi.grid.weights * xi.values * np.conj(sd.phi_hat.values))))
    if leak > proj_tol * max(scale, 1e-300):
        raise ValueError(
            f"field is not projector-orthogonal (leakage {leak:.3e} vs norm {scale:.3e})"
        )
    w = ComplexField(xi.grid, wts.zeta * xi.values)
    rep = wts.operator(-1.0)  # -dxx + delta as the matrix with +1/h at the center
    quad = inner(rep.apply(w), w)
    lhs = inner(virial_multiplier(xi, wts), wts.operator(1.0).apply(xi))
    vw = ComplexField(xi.grid, wts.V * w.values)
    vterm = abs(inner(vw, w)) / (2.0 * wts.A)
    phi_leak = abs(complex(np.sum(w.grid.weights * w.values * np.conj(sd.phi_hat.values))))
    wp = norm(derivative(w))
    decay = norm(ComplexField(w.grid, w.values / (1.0 + w.grid.x**2)))
    w0 = abs(w.values[w.grid.center])
    margin = float(np.max(np.abs(w.values) - w0 - np.sqrt(np.abs(w.grid.x)) * wp))
    return CoercivityReport(
        A=wts.A,
        ratio=lhs / quad,
        vterm_ratio=vterm / quad,
        phi_leak=phi_leak / np.sqrt(quad),
        const_norm=(wp**2 + decay**2) / quad,
        bound_margin=margin,
        quadform=quad,
    )
