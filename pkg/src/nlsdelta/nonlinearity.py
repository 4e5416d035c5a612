"""Gauge-invariant nonlinearities g(|u|^2) u and their composites.

A NonlinearitySpec bundles g, its first two derivatives, and the
primitive G(s) = int_0^s g. The power family g(s) = lam s^p is the
main instance; a saturating family s^p/(1+s) is provided so nothing
downstream silently assumes pure powers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import hyp2f1

from .grid import ComplexField, inner

__all__ = [
    "NonlinearitySpec",
    "power_law",
    "saturating",
    "g_G_eval",
    "f_eval",
    "f_tilde",
    "f_linearized",
    "h_tilde",
    "dh_drho",
    "dh_dmu",
    "h_eval",
    "e_eval",
]


@dataclass(frozen=True)
class NonlinearitySpec:
    """Callables for g, g', g'', and the primitive G. All take s >= 0."""

    p: float
    lam: float
    name: str
    g: Callable
    dg: Callable
    d2g: Optional[Callable]
    G: Callable


def _pow(s, a):
    """s**a with the s = 0 convention: ordinary value for a >= 0 (0**0 = 1),
    and the limit 0 where the power is singular (a < 0)."""
    s = np.asarray(s, dtype=float)
    if a >= 0:
        out = s**a
    else:
        out = np.zeros_like(s)
        m = s > 0
        out[m] = s[m] ** a
    return out if out.ndim else float(out)


def power_law(p: float, lam: float) -> NonlinearitySpec:
    """g(s) = lam * s^p with 0 < p. Derivatives take their limit 0 at s = 0."""
    if p <= 0:
        raise ValueError(f"exponent must be positive, got p={p}")
    if lam == 0:
        raise ValueError("lam must be nonzero")

    def g(s):
        return lam * _pow(s, p)

    def dg(s):
        return lam * p * _pow(s, p - 1.0)

    def d2g(s):
        return lam * p * (p - 1.0) * _pow(s, p - 2.0)

    def G(s):
        return lam * _pow(s, p + 1.0) / (p + 1.0)

    return NonlinearitySpec(p=p, lam=lam, name=f"power(p={p},lam={lam})", g=g, dg=dg, d2g=d2g, G=G)


def saturating(p: float) -> NonlinearitySpec:
    """g(s) = s^p / (1 + s): grows like s^p near zero, saturates for large s."""
    if p <= 0:
        raise ValueError(f"exponent must be positive, got p={p}")

    def g(s):
        s = np.asarray(s, dtype=float)
        return _pow(s, p) / (1.0 + s)

    def dg(s):
        s = np.asarray(s, dtype=float)
        return _pow(s, p - 1.0) * (p + (p - 1.0) * s) / (1.0 + s) ** 2

    def G(s):
        s = np.asarray(s, dtype=float)
        return _pow(s, p + 1.0) / (p + 1.0) * hyp2f1(1.0, p + 1.0, p + 2.0, -s)

    return NonlinearitySpec(p=p, lam=1.0, name=f"saturating(p={p})", g=g, dg=dg, d2g=None, G=G)


def g_G_eval(spec: NonlinearitySpec, s):
    """Evaluate (g(s), G(s)); s must be nonnegative."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("g and G are defined for nonnegative arguments only")
    return spec.g(s), spec.G(s)


def f_eval(spec: NonlinearitySpec, w: ComplexField) -> ComplexField:
    """Pointwise nonlinearity f(w) = g(|w|^2) w."""
    s = np.abs(w.values) ** 2
    return ComplexField(w.grid, spec.g(s) * w.values)


def f_tilde(spec: NonlinearitySpec, Q: ComplexField, xi: ComplexField) -> ComplexField:
    """Interaction remainder f(Q + xi) - f(xi) - f(Q)."""
    Q._check(xi)
    tot = ComplexField(Q.grid, Q.values + xi.values)
    return ComplexField(
        Q.grid, f_eval(spec, tot).values - f_eval(spec, xi).values - f_eval(spec, Q).values
    )


def f_linearized(spec: NonlinearitySpec, Q: ComplexField, eta: ComplexField) -> ComplexField:
    """Derivative of f at Q applied to eta:

    g(|Q|^2) eta + 2 g'(|Q|^2) Q Re(conj(Q) eta).
    """
    Q._check(eta)
    s = np.abs(Q.values) ** 2
    lin = spec.g(s) * eta.values + 2.0 * spec.dg(s) * Q.values * np.real(
        np.conj(Q.values) * eta.values
    )
    return ComplexField(Q.grid, lin)


def h_tilde(spec: NonlinearitySpec, rho: float, mu):
    """Scalar profile map g(rho mu^2) mu."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    mu = np.asarray(mu, dtype=float)
    return spec.g(rho * mu**2) * mu


def dh_drho(spec: NonlinearitySpec, rho: float, mu):
    """d/d rho of g(rho mu^2) mu = g'(rho mu^2) mu^3."""
    mu = np.asarray(mu, dtype=float)
    return spec.dg(rho * mu**2) * mu**3


def dh_dmu(spec: NonlinearitySpec, rho: float, mu):
    """d/d mu of g(rho mu^2) mu = g(rho mu^2) + 2 rho mu^2 g'(rho mu^2)."""
    mu = np.asarray(mu, dtype=float)
    s = rho * mu**2
    return spec.g(s) + 2.0 * rho * mu**2 * spec.dg(s)


def h_eval(spec: NonlinearitySpec, rho: float, profile: np.ndarray) -> np.ndarray:
    """Nodewise h(rho, profile) = g(rho profile^2) profile for a real profile."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    mu = np.asarray(profile, dtype=float)
    return spec.g(rho * mu**2) * mu


def e_eval(spec: NonlinearitySpec, rho: float, qf: ComplexField, phi: ComplexField) -> float:
    """Nonlinear eigenvalue shift <h(rho, phi + q), phi>."""
    qf._check(phi)
    total = qf.values.real + phi.values.real
    hv = h_eval(spec, rho, total)
    return inner(ComplexField(qf.grid, hv), phi)
