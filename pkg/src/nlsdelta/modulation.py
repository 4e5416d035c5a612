"""Splitting a state into a bound-state part and a radiation remainder.

Two conventions are supported. The projector convention ("pc") forces
the remainder orthogonal to the linear ground state phi and i phi; the
tangent convention ("hc") forces it symplectically orthogonal to the
family's tangent directions D_j Q[z]. Both solve a 2x2 real Newton
problem for z; pc is exactly solvable in one step because
Q[z] - z phi is orthogonal to phi by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bound_states import BoundStateFamily
from .errors import ConvergenceError
from .grid import ComplexField, NormKind, inner, norm

__all__ = [
    "ModulationState",
    "decompose_pc",
    "decompose_hc",
    "r_operator",
    "tangent_pairing_matrix",
]

DEFAULT_SIZE_CAP = 0.25


@dataclass
class ModulationState:
    """Result of a decomposition u = Q[z] + remainder."""

    z: complex
    remainder: ComplexField
    convention: str
    residual: float
    iterations: int


def _pairings(u: ComplexField, f: ComplexField):
    # real pairings against f and i f in one complex number
    c = complex(np.sum(u.grid.weights * u.values * np.conj(f.values)))
    return c


def _size_check(u: ComplexField, cap: float):
    s = norm(u, NormKind.H1)
    if s >= cap:
        raise ValueError(
            f"state too large for modulation: ||u||_H1 = {s:.3e} >= cap {cap:.3e}"
        )


def decompose_pc(u: ComplexField, family: BoundStateFamily, cap: float = DEFAULT_SIZE_CAP,
                 tol: float = 1e-12, max_iter: int = 50) -> ModulationState:
    """Decomposition with remainder in the range of the spectral projector.

    Newton on F(z) = (<u - Q[z], phi>, <u - Q[z], i phi>) starting from
    the pairing of u itself; since <Q[z], phi> = z on the discrete grid,
    the first step already lands on the root.
    """
    _size_check(u, cap)
    phi = family.sd.phi_hat
    z = _pairings(u, phi)
    best = None
    for k in range(1, max_iter + 1):
        Q, _ = family.bound_state(z)
        F = _pairings(u, phi) - _pairings(Q, phi)
        if best is None or abs(F) < best[0]:
            best = (abs(F), z, k)
        if abs(F) < tol:
            xi = ComplexField(u.grid, u.values - Q.values)
            return ModulationState(z=z, remainder=xi, convention="pc",
                                   residual=abs(F), iterations=k)
        z = z + F
    raise ConvergenceError(
        f"pc decomposition stalled at |F| = {best[0]:.3e} after {max_iter} iterations"
    )


def _hc_constraint(u: ComplexField, family: BoundStateFamily, z: complex):
    Q, _ = family.bound_state(z)
    diff = ComplexField(u.grid, u.values - Q.values)
    d1 = family.dQ(z, 1)
    d2 = family.dQ(z, 2)
    i_diff = ComplexField(u.grid, 1j * diff.values)
    return np.array([inner(i_diff, d1), inner(i_diff, d2)]), diff


def decompose_hc(u: ComplexField, family: BoundStateFamily, cap: float = DEFAULT_SIZE_CAP,
                 tol: float = 1e-12, max_iter: int = 50,
                 z0: complex = None) -> ModulationState:
    """Decomposition with remainder tangent-orthogonal: <i eta, D_j Q[z]> = 0.

    Solved by a damped 2x2 Newton iteration with a finite-difference
    Jacobian; `z0` warm-starts the iteration (defaults to the pc value).
    """
    _size_check(u, cap)
    if z0 is None:
        z0 = _pairings(u, family.sd.phi_hat)
    z = complex(z0)
    F, _ = _hc_constraint(u, family, z)
    for k in range(1, max_iter + 1):
        r = float(np.hypot(F[0], F[1]))
        if r < tol:
            _, diff = _hc_constraint(u, family, z)
            return ModulationState(z=z, remainder=diff, convention="hc",
                                   residual=r, iterations=k)
        step = max(abs(z), 1e-3) * 1e-6
        J = np.zeros((2, 2))
        for col, dz in enumerate((step, 1j * step)):
            Fp, _ = _hc_constraint(u, family, z + dz)
            J[:, col] = (Fp - F) / step
        try:
            delta = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian in hc decomposition") from None
        damping = 1.0
        for _ in range(8):
            z_try = z + damping * (delta[0] + 1j * delta[1])
            F_try, _ = _hc_constraint(u, family, z_try)
            if np.hypot(F_try[0], F_try[1]) < r:
                z, F = z_try, F_try
                break
            damping *= 0.5
        else:
            raise ConvergenceError(
                f"hc decomposition stopped descending at |F| = {r:.3e} (iteration {k})"
            )
    raise ConvergenceError(
        f"hc decomposition did not reach {tol} in {max_iter} iterations"
    )


def tangent_pairing_matrix(family: BoundStateFamily, z: complex) -> np.ndarray:
    """2x2 matrix of pairings <i^(k-1) phi, D_j Q[z]> (rows k, columns j)."""
    phi = family.sd.phi_hat
    iphi = ComplexField(phi.grid, 1j * phi.values)
    d1 = family.dQ(z, 1)
    d2 = family.dQ(z, 2)
    return np.array(
        [[inner(phi, d1), inner(phi, d2)], [inner(iphi, d1), inner(iphi, d2)]]
    )


def r_operator(z: complex, xi: ComplexField, family: BoundStateFamily,
               ortho_tol: float = 1e-8) -> ComplexField:
    """Map a projector-orthogonal remainder to a tangent-orthogonal one.

    R[z] xi = xi + <i xi, alpha_1> phi + <i xi, alpha_2> i phi where the
    alpha_j are combinations of D_1 Q and D_2 Q chosen so the output
    satisfies <i R xi, D_j Q[z]> = 0. Near z = 0 the correction matrix
    has determinant 1 + o(1); it degenerating below 1/2 is an error.
    """
    phi = family.sd.phi_hat
    scale = norm(xi)
    leak = abs(_pairings(xi, phi))
    if leak > ortho_tol * max(scale, 1e-300):
        raise ValueError(
            f"remainder is not projector-orthogonal (leakage {leak:.3e} vs norm {scale:.3e})"
        )
    M = tangent_pairing_matrix(family, z)
    det = M[0, 0] * M[1, 1] - M[1, 0] * M[0, 1]
    if abs(det) < 0.5:
        raise ValueError(f"tangent pairing matrix is degenerate: det = {det:.3e}")
    d1 = family.dQ(z, 1)
    d2 = family.dQ(z, 2)
    alpha1 = ComplexField(xi.grid, (M[0, 1] * d1.values - M[0, 0] * d2.values) / det)
    alpha2 = ComplexField(xi.grid, (M[1, 1] * d1.values - M[1, 0] * d2.values) / det)
    i_xi = ComplexField(xi.grid, 1j * xi.values)
    b1 = inner(i_xi, alpha1)
    b2 = inner(i_xi, alpha2)
    return ComplexField(xi.grid, xi.values + (b1 + 1j * b2) * phi.values)
