"""Small-amplitude bound states bifurcating from the defect ground state.

Profiles are built with the contraction scheme: with phi the (unit-norm)
trapped eigenvector, lam its matrix eigenvalue, and rho = |z|^2, iterate

    q  <-  R Phi(rho, q),
    Phi(rho, q) = e(rho, q) (phi + q) - h(rho, phi + q),
    e(rho, q)   = <h(rho, phi + q), phi>,

where R inverts (T - lam) on the orthogonal complement of phi. The
e-term of Phi is absorbed into the shift, so each sweep solves the
well-conditioned system (T - lam - e) q_new = -(h - e phi). The full
state is Q[z] = z (phi + q(|z|^2)) with nonlinear eigenvalue
E = lam + e, and T Q + h = E Q holds to solver precision: the discrete
family is exactly stationary under the discrete flow, not merely up to
the O(h^2) defect between lam and the continuum value -1/4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError
from .grid import ComplexField, NormKind, norm
from .nonlinearity import NonlinearitySpec, f_eval, h_eval
from .operator import DeltaOperator, SpectralData

__all__ = [
    "BoundStateFamily",
    "ProfileSolution",
    "cubic_oracle",
]


@dataclass
class ProfileSolution:
    """Converged radial correction q(rho) and its Picard diagnostics."""

    rho: float
    values: np.ndarray
    e: float
    iterations: int
    factors: list = field(default_factory=list)


class BoundStateFamily:
    """Standing-wave family for one nonlinearity on one grid.

    Parameters
    ----------
    nl : NonlinearitySpec
    op : DeltaOperator with q = 1
    sd : SpectralData for op
    gamma : weight rate of the H1_gamma norm used by the Picard stop rule
    """

    def __init__(self, nl: NonlinearitySpec, op: DeltaOperator, sd: SpectralData,
                 gamma: float = 0.2, tol: float = 1e-12, max_iter: int = 200):
        if op.q != 1:
            raise ValueError(f"bound-state construction assumes unit coupling, got q={op.q}")
        if sd.lam_num is None:
            raise ValueError("spectral data lacks the numerical eigenpair; build it with spectral_data()")
        self.nl = nl
        self.op = op
        self.sd = sd
        self.lam = float(sd.lam_num)
        self.grid = op.grid
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self._profiles = {}
        self._rho0 = None

    # -- fixed-point machinery -------------------------------------------

    def phi_map(self, rho: float, q_values: np.ndarray):
        """Map Phi(rho, q) = e (phi + q) - h and its multiplier e = <h, phi>.

        e is chosen so that <Phi, phi> = 0; at the converged profile,
        q = R Phi(rho, q) with R the resolvent of (T - lam) on the
        complement of the trapped mode.
        """
        phi = self.sd.phi_hat.values.real
        total = phi + q_values
        hv = h_eval(self.nl, rho, total)
        e = float(np.sum(self.grid.weights * hv * phi))
        return e * total - hv, e

    def _diff_norm(self, a: np.ndarray, b: np.ndarray) -> float:
        return norm(ComplexField(self.grid, a - b), NormKind.H1_GAMMA, self.gamma)

    def _store(self, sol: ProfileSolution):
        # long evolutions visit thousands of distinct rho; keep the cache bounded
        if len(self._profiles) >= 1024:
            self._profiles.pop(next(iter(self._profiles)))
        self._profiles[sol.rho] = sol

    def solve_profile(self, rho: float) -> ProfileSolution:
        """Picard-iterate q <- R Phi(rho, q) from q = 0 to tolerance.

        Raises ConvergenceError if the iteration stops contracting; the
        recorded ratios certify the contraction constant along the run.
        """
        if rho < 0:
            raise ValueError(f"rho must be nonnegative, got {rho}")
        cached = self._profiles.get(rho)
        if cached is not None:
            return cached
        if rho == 0.0:
            sol = ProfileSolution(rho=0.0, values=np.zeros(self.grid.N), e=0.0, iterations=0)
            self._store(sol)
            return sol
        phi = self.sd.phi_hat.values.real
        w = self.grid.weights
        q = np.zeros(self.grid.N)
        prev_diff = None
        factors = []
        for k in range(1, self.max_iter + 1):
            hv = h_eval(self.nl, rho, phi + q)
            e = float(np.sum(w * hv * phi))
            # (T - lam - e) q_new = -(h - e phi); the right side is exactly
            # orthogonal to the trapped mode, and the shift sits a distance
            # |e| from its eigenvalue, so no deflation is needed
            rhs = e * phi - hv
            q_new = np.zeros(self.grid.N)
            if np.any(rhs):
                q_new[1:-1] = self.op.solve_shifted(self.lam + e, rhs[1:-1])
                q_new -= float(np.sum(w * q_new * phi)) * phi
            diff = self._diff_norm(q_new, q)
            if prev_diff is not None and prev_diff > 1e-13:
                ratio = diff / prev_diff
                factors.append(ratio)
                if ratio >= 1.0:
                    raise ConvergenceError(
                        f"profile iteration stopped contracting at rho={rho} "
                        f"(step {k}, ratio {ratio:.3f})"
                    )
            q = q_new
            if diff < self.tol:
                _, e = self.phi_map(rho, q)
                sol = ProfileSolution(rho=rho, values=q, e=e, iterations=k, factors=factors)
                self._store(sol)
                return sol
            prev_diff = diff
        raise ConvergenceError(
            f"profile iteration did not reach {self.tol} in {self.max_iter} steps at rho={rho}"
        )

    def contraction_certificate(self, rho: float) -> float:
        """Largest recorded step-ratio of the Picard iteration at rho."""
        sol = self.solve_profile(rho)
        return max(sol.factors) if sol.factors else 0.0

    def rho0(self, hint: float = 1e-3) -> float:
        """Empirical amplitude-squared threshold of the contraction regime.

        Doubles from `hint` until the iteration fails or its certificate
        exceeds 1/2, then bisects the boundary; the result is cached.
        """
        if self._rho0 is not None:
            return self._rho0

        def ok(rho):
            try:
                return self.contraction_certificate(rho) <= 0.5
            except ConvergenceError:
                return False

        lo = hint
        while not ok(lo):
            lo /= 4.0
            if lo < 1e-12:
                raise ConvergenceError("no contraction regime found down to rho=1e-12")
        hi = lo
        while ok(hi) and hi < 64.0:
            lo = hi
            hi *= 2.0
        for _ in range(12):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        self._rho0 = lo
        return lo

    # -- the family itself -------------------------------------------------

    def _check_amplitude(self, rho: float):
        r0 = self.rho0()
        if rho > r0:
            raise ValueError(
                f"amplitude out of the contraction regime: rho={rho:.3e} > rho0={r0:.3e}"
            )

    def bound_state(self, z: complex):
        """Full state Q[z] = z (phi + q(|z|^2)) and its eigenvalue E(|z|^2)."""
        z = complex(z)
        rho = abs(z) ** 2
        if rho == 0.0:
            return ComplexField(self.grid, np.zeros(self.grid.N, dtype=complex)), self.lam
        self._check_amplitude(rho)
        sol = self.solve_profile(rho)
        vals = z * (self.sd.phi_hat.values.real + sol.values)
        return ComplexField(self.grid, vals), self.lam + sol.e

    def energy(self, z: complex) -> float:
        return self.bound_state(z)[1]

    def rotation_rate(self, z: complex) -> float:
        """Phase-rotation rate of the discrete profile under the flow.

        The projector coefficient of a discrete standing wave obeys
        zdot = -i <T Phi + h(rho, Phi), phi> z with Phi = phi + q(rho).
        This pairing is evaluated directly rather than through the
        cached e value, so gauge bookkeeping stays pinned to the actual
        matrix action even at the solver-tolerance level; it agrees
        with energy(z) to the Picard stopping tolerance.
        """
        rho = abs(complex(z)) ** 2
        phi = self.sd.phi_hat.values.real
        if rho == 0.0:
            Phi = phi
        else:
            self._check_amplitude(rho)
            Phi = phi + self.solve_profile(rho).values
        hv = h_eval(self.nl, rho, Phi)
        tv = self.op.apply_values(Phi.astype(complex)).real
        return float(np.sum(self.grid.weights * (tv + hv) * phi))

    def profile_derivative(self, rho: float) -> np.ndarray:
        """dq/drho by centered differencing of cached profiles (step rho/10)."""
        if rho <= 0:
            raise ValueError("profile derivative needs rho > 0")
        d = rho / 10.0
        hi = self.solve_profile(rho + d)
        lo = self.solve_profile(rho - d)
        return (hi.values - lo.values) / (2.0 * d)

    def dQ(self, z: complex, j: int) -> ComplexField:
        """Real-directional derivatives of z -> Q[z].

        j = 1 differentiates along Re z, j = 2 along Im z:
        D_j Q[z] = i^(j-1) (phi + q) + 2 q'(rho) z z_j.
        """
        if j not in (1, 2):
            raise ValueError(f"direction must be 1 or 2, got {j}")
        z = complex(z)
        unit = 1.0 if j == 1 else 1.0j
        phi = self.sd.phi_hat.values.real
        rho = abs(z) ** 2
        if rho == 0.0:
            return ComplexField(self.grid, unit * phi.astype(complex))
        self._check_amplitude(1.1 * rho)
        sol = self.solve_profile(rho)
        dq = self.profile_derivative(rho)
        zj = z.real if j == 1 else z.imag
        vals = unit * (phi + sol.values) + 2.0 * dq * z * zj
        return ComplexField(self.grid, vals)

    def dQ_apply(self, z: complex, w: complex) -> ComplexField:
        """Differential DQ[z] applied to a complex increment w."""
        d1 = self.dQ(z, 1)
        d2 = self.dQ(z, 2)
        return ComplexField(self.grid, w.real * d1.values + w.imag * d2.values)

    def eigen_residual(self, z: complex) -> float:
        """L2 residual of the stationary equation at Q[z]."""
        Q, E = self.bound_state(z)
        r = self.op.apply(Q).values + f_eval(self.nl, Q).values - E * Q.values
        return norm(ComplexField(self.grid, r))

    def discretization_floor(self) -> float:
        """Distance of the grid problem from the continuum one, as an L2 scale.

        Measured as the residual of the sampled continuum ground state
        in the matrix eigenvalue problem at -1/4, normalized to a unit
        profile. Residuals of the discrete stationary equation sit far
        below this (the family is built from the matrix eigenpair); the
        floor quantifies the honest gap to the continuum statement and
        pads residual tolerances when comparing against closed forms.
        """
        phi = self.sd.phi.values / norm(self.sd.phi)
        r = self.op.apply_values(phi) + 0.25 * phi
        return norm(ComplexField(self.grid, r))


def cubic_oracle(beta: float, grid) -> tuple:
    """Closed-form bound state of the focusing cubic equation with unit defect.

    Q(x) = sqrt(2) beta sech(beta |x| + artanh(1/(2 beta))), E = -beta^2,
    valid for beta > 1/2. Derived independently of the fixed point: the
    sech profile solves -Q'' - Q^3 = E Q off the origin and the offset
    artanh(1/(2 beta)) matches the derivative jump -Q(0) at the defect.
    """
    if beta <= 0.5:
        raise ValueError(f"cubic bound state needs beta > 1/2, got {beta}")
    c = np.arctanh(1.0 / (2.0 * beta))
    vals = np.sqrt(2.0) * beta / np.cosh(beta * np.abs(grid.x) + c)
    return ComplexField(grid, vals), -beta * beta
