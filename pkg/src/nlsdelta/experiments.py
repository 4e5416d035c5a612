"""Scripted numerical experiments probing the long-time behavior.

Three runners mirror the qualitative statements under study:

  run_small_en    radiation near a small solitary wave has a finite
                  local-energy budget: I(T) = int ||xi||^2_{H1,-gamma}
                  stays controlled as the data size eps is halved;
  run_selection   the gauge-corrected parameter rho(t) = z exp(i int E)
                  settles (numerically Cauchy) and its total variation
                  scales like a cubic power of the data size;
  run_dispersion  with a repulsive defect and defocusing nonlinearity
                  the whole solution disperses: the local-energy budget
                  is bounded by the conserved-quantity combination
                  sqrt(E M) + M.

run_modulation_residuals assembles both sides of the parameter ODEs on
a tracked trajectory and reports the mismatch.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .bound_states import BoundStateFamily
from .errors import ConvergenceError
from .evolution import EvolutionConfig, TrajectoryRecord, conserved, evolve
from .grid import ComplexField, Grid, NormKind, inner, norm
from .modulation import decompose_hc, decompose_pc
from .nonlinearity import NonlinearitySpec, f_eval, f_tilde
from .operator import DeltaOperator, SpectralData, build_operator, project_continuous, spectral_data
from .virial import VirialWeights, j_functional, make_weights

__all__ = [
    "ModulationTracker",
    "WholeFieldTracker",
    "ExperimentReport",
    "initial_state",
    "random_localized_field",
    "run_small_en",
    "run_selection",
    "run_dispersion",
    "run_modulation_residuals",
    "fit_power",
]

# Empirical caps frozen from pilot runs; the theory only asserts
# "bounded", the numbers pin what this code actually produces.
SMALL_EN_RATIO_CAP = 2.5
SMALL_EN_SUP_CAP = 3.0
SELECTION_TV_SLOPE = (2.5, 3.5)
# measured I_T/B over L in {40, 80}, amplitudes {0.5, 1, 2}: 2.6 to 4.9,
# worst case the smallest amplitude (B shrinks faster than I_T)
DISPERSION_RATIO_CAP = 6.0

CSV_COLUMNS = ["t", "mass", "energy", "z_re", "z_im", "E_z",
               "xi_h1mg", "w_xnorm", "J", "rho_re", "rho_im"]


class ModulationTracker:
    """Per-snapshot soliton/radiation diagnostics for evolve()."""

    columns = ["z_re", "z_im", "E_z", "xi_h1mg", "xi_h1", "w_xnorm", "J"]

    def __init__(self, family: BoundStateFamily, wts: VirialWeights,
                 gamma: float = 0.2, convention: str = "pc", cap: float = 0.25):
        if convention not in ("pc", "hc"):
            raise ValueError(f"unknown decomposition convention {convention!r}")
        self.family = family
        self.wts = wts
        self.gamma = gamma
        self.convention = convention
        self.cap = cap
        self._last_z = None

    def sample(self, t, u):
        if self.convention == "pc":
            ms = decompose_pc(u, self.family, cap=self.cap)
        else:
            ms = decompose_hc(u, self.family, cap=self.cap, z0=self._last_z)
        self._last_z = ms.z
        xi = ms.remainder
        w = ComplexField(u.grid, self.wts.zeta * xi.values)
        return {
            "z_re": ms.z.real,
            "z_im": ms.z.imag,
            "E_z": self.family.rotation_rate(ms.z),
            "xi_h1mg": norm(xi, NormKind.H1_MINUS_GAMMA, self.gamma),
            "xi_h1": norm(xi, NormKind.H1),
            "w_xnorm": norm(w, NormKind.X),
            "J": j_functional(xi, self.wts),
        }


class WholeFieldTracker:
    """Same column set with the whole state treated as the remainder."""

    columns = ["z_re", "z_im", "E_z", "xi_h1mg", "xi_h1", "w_xnorm", "J"]

    def __init__(self, wts: VirialWeights, gamma: float = 0.2):
        self.wts = wts
        self.gamma = gamma

    def sample(self, t, u):
        w = ComplexField(u.grid, self.wts.zeta * u.values)
        return {
            "z_re": 0.0,
            "z_im": 0.0,
            "E_z": 0.0,
            "xi_h1mg": norm(u, NormKind.H1_MINUS_GAMMA, self.gamma),
            "xi_h1": norm(u, NormKind.H1),
            "w_xnorm": norm(w, NormKind.X),
            "J": j_functional(u, self.wts),
        }


def random_localized_field(grid: Grid, rng, modes: int = 8, kmax: float = 1.5,
                           spread: float = 8.0, span: float = 10.0) -> ComplexField:
    """Smooth decaying complex field: a few Gaussian-enveloped wave packets."""
    vals = np.zeros(grid.N, dtype=complex)
    for _ in range(modes):
        amp = rng.normal() + 1j * rng.normal()
        k = rng.uniform(-kmax, kmax)
        x0 = rng.uniform(-span, span)
        sig = rng.uniform(0.5 * spread, spread)
        vals += amp * np.exp(-((grid.x - x0) ** 2) / (2.0 * sig**2) + 1j * k * grid.x)
    vals[0] = 0.0
    vals[-1] = 0.0
    return ComplexField(grid, vals)


def initial_state(kind: str, eps: float, grid: Grid, sd: SpectralData,
                  family: BoundStateFamily = None) -> ComplexField:
    """Deterministic initial data of H1 size exactly eps.

    Shapes: 'soliton_bump' (bound state plus projected wave packet),
    'ground_state' (pure linear-mode direction), 'offset_gaussian'
    (radiation-only packet away from the defect).
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if kind == "ground_state":
        base = sd.phi_hat
        return ComplexField(grid, (eps / norm(base, NormKind.H1)) * base.values)
    if kind == "offset_gaussian":
        vals = np.exp(-((grid.x - 5.0) ** 2) / 4.0).astype(complex)
        f = ComplexField(grid, vals)
        return ComplexField(grid, (eps / norm(f, NormKind.H1)) * vals)
    if kind == "soliton_bump":
        if family is None:
            raise ValueError("soliton_bump needs a bound-state family")
        Q, _ = family.bound_state(0.4 * eps)
        # carrier k=1, envelope width 4: the k-spectrum (spread 1/4) puts
        # essentially nothing in the slow band |k| < 0.2 whose components
        # linger near the defect for hundreds of time units
        packet = np.exp(-((grid.x - 2.0) ** 2) / 16.0 + 1.0j * grid.x)
        bump = project_continuous(ComplexField(grid, packet), sd)
        bump = ComplexField(grid, bump.values / norm(bump, NormKind.H1))

        def size(c):
            return norm(ComplexField(grid, Q.values + c * bump.values), NormKind.H1) - eps

        c = brentq(size, 0.0, 2.0 * eps)
        return ComplexField(grid, Q.values + c * bump.values)
    raise ValueError(f"unknown initial-state shape {kind!r}")


def fit_power(x, y):
    """Least-squares slope of log y vs log x with a leave-one-out spread."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    slope = np.polyfit(lx, ly, 1)[0]
    loo = []
    for i in range(len(lx)):
        keep = np.arange(len(lx)) != i
        loo.append(np.polyfit(lx[keep], ly[keep], 1)[0])
    return float(slope), float(max(abs(s - slope) for s in loo))


@dataclass
class ExperimentReport:
    """Outcome of one scripted experiment, serializable to JSON + CSV."""

    experiment: str
    config: dict
    confighash: str
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    records: list = field(default_factory=list)  # (label, TrajectoryRecord)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def summary_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "confighash": self.confighash,
            "config": self.config,
            "rows": self.rows,
            "fits": self.fits,
            "checks": self.checks,
            "passed": self.passed,
            "notes": self.notes,
        }

    def save(self, outdir: str):
        """Write <experiment>-<confighash>.json and .csv atomically."""
        os.makedirs(outdir, exist_ok=True)
        base = f"{self.experiment}-{self.confighash}"
        jpath = os.path.join(outdir, base + ".json")
        _atomic_write(jpath, json.dumps(self.summary_dict(), indent=2, sort_keys=True) + "\n")
        cpath = os.path.join(outdir, base + ".csv")
        lines = [f"# config {self.confighash}: " + json.dumps(self.config, sort_keys=True)]
        lines.append(",".join(CSV_COLUMNS))
        for label, rec in self.records:
            lines.append(f"# run {label}")
            nan = np.full_like(rec.t, np.nan)
            cols = [rec.t] + [rec.series.get(c, nan) for c in CSV_COLUMNS[1:]]
            for vals in zip(*cols):
                lines.append(",".join(f"{v:.12g}" for v in vals))
        _atomic_write(cpath, "\n".join(lines) + "\n")
        return jpath, cpath


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _evolution_config(nl, grid, T, dt=None, sponge=True, cadence_dt=0.5):
    """Runner defaults: dt = h/4, gentle absorber over the outer quarter.

    A narrow strong sponge reflects (impedance mismatch); the widest
    window the config invariant allows, at unit strength, absorbs the
    outgoing front adiabatically.
    """
    dt = grid.h / 4.0 if dt is None else dt
    cadence = max(1, int(round(cadence_dt / dt)))
    return EvolutionConfig(nl=nl, dt=dt, T=T, sponge=sponge, cadence=cadence,
                           sponge_width=0.245 * grid.L, sponge_strength=1.0)


def run_small_en(nl: NonlinearitySpec, grid: Grid, eps_ladder=(0.0125, 0.025, 0.05, 0.1),
                 T: float = 200.0, shape: str = "soliton_bump", A: float = 16.0,
                 gamma: float = 0.2, dt: float = None, config: dict = None,
                 confighash: str = "local") -> ExperimentReport:
    """Radiation budget vs data size for a trapping defect.

    For each eps the state is evolved with the sponge on and the
    projector decomposition tracked; the budget I(T) and the ratio
    sup_t (|z| + ||xi||_H1)/eps land in the report. Checks: halving eps
    never inflates I(T) by more than SMALL_EN_RATIO_CAP, and the sup
    ratio stays under SMALL_EN_SUP_CAP.
    """
    op = build_operator(1.0, grid)
    sd = spectral_data(op)
    family = BoundStateFamily(nl, op, sd, gamma=gamma)
    wts = make_weights(A, grid)
    rep = ExperimentReport("thm-small-en", config or {}, confighash)
    for eps in eps_ladder:
        u0 = initial_state(shape, eps, grid, sd, family)
        cfg = _evolution_config(nl, grid, T, dt=dt)
        tracker = ModulationTracker(family, wts, gamma=gamma, convention="pc")
        rec = evolve(u0, cfg, op, tracker)
        I_T = rec.running_integral("xi_h1mg", square=True)[-1]
        zmod = np.hypot(rec.series["z_re"], rec.series["z_im"])
        sup_ratio = float(np.max(zmod + rec.series["xi_h1"]) / eps)
        rep.rows.append({"eps": eps, "I_T": float(I_T), "sup_ratio": sup_ratio,
                         "flags": len(rec.flags), "confighash": confighash})
        rep.records.append((f"eps={eps}", rec))
    eps_arr = [r["eps"] for r in rep.rows]
    I_arr = [r["I_T"] for r in rep.rows]
    order = np.argsort(eps_arr)
    ratios = []
    for a, b in zip(order[:-1], order[1:]):
        ratios.append(I_arr[a] / I_arr[b])  # halved eps over its double
    slope, ci = fit_power(eps_arr, I_arr)
    rep.fits["I_slope"] = slope
    rep.fits["I_slope_ci"] = ci
    rep.fits["halving_ratios"] = [float(r) for r in ratios]
    rep.checks["halving_ratio_cap"] = all(r <= SMALL_EN_RATIO_CAP for r in ratios)
    rep.checks["sup_ratio_cap"] = all(r["sup_ratio"] <= SMALL_EN_SUP_CAP for r in rep.rows)
    rep.checks["no_flags"] = all(r["flags"] == 0 for r in rep.rows)
    return rep


def delta_rho(t: np.ndarray, rho: np.ndarray, T: float) -> float:
    """Settling diagnostic: sup over [T/2, T] of |rho(t) - rho(T)|."""
    m = (t >= T / 2.0) & (t <= T)
    if not np.any(m):
        return float("nan")
    ref = rho[np.searchsorted(t, T, side="right") - 1]
    return float(np.max(np.abs(rho[m] - ref)))


def run_selection(nl: NonlinearitySpec, grid: Grid, eps_ladder=(0.025, 0.05, 0.1, 0.2),
                  T: float = 200.0, shape: str = "soliton_bump", A: float = 16.0,
                  gamma: float = 0.2, dt: float = None, experimental: bool = False,
                  config: dict = None, confighash: str = "local") -> ExperimentReport:
    """Settling of the gauge-corrected parameter rho(t).

    Uses the tangent-orthogonal decomposition, meaningful for p > 1/2;
    smaller p runs only with experimental=True, reported without
    pass/fail. Checks: delta_rho(T') = sup_{[T'/2,T']} |rho - rho(T')|
    decreases along T' in {T/4, T/2, T} until it reaches the recorded
    integrator phase floor (see the in-loop comment), and the total
    variation of rho scales with data size at a cubic-like power.
    """
    if nl.p <= 0.5 and not experimental:
        raise ValueError(f"parameter tracking needs p > 1/2, got p={nl.p} "
                         "(pass experimental=True to run without pass/fail)")
    op = build_operator(1.0, grid)
    sd = spectral_data(op)
    family = BoundStateFamily(nl, op, sd, gamma=gamma)
    wts = make_weights(A, grid)
    rep = ExperimentReport("thm-selection", config or {}, confighash)
    checkpoints = (T / 4.0, T / 2.0, T)
    # dt = h/32 keeps the integrator's own phase artifact (next comment)
    # one to two orders below the genuine settling signal of the ladder.
    dt = grid.h / 32.0 if dt is None else dt
    for eps in eps_ladder:
        u0 = initial_state(shape, eps, grid, sd, family)
        cfg = _evolution_config(nl, grid, T, dt=dt)
        tracker = ModulationTracker(family, wts, gamma=gamma, convention="hc")
        rec = evolve(u0, cfg, op, tracker)
        rho = rec.series["rho_re"] + 1j * rec.series["rho_im"]
        deltas = [delta_rho(rec.t, rho, Tc) for Tc in checkpoints]
        tv = float(np.sum(np.abs(np.diff(rho))))
        # The split step rotates the trapped mode with an O(dt^2)
        # frequency bias (Cayley phase error, rate |E|^3 dt^2 / 12), so
        # rho carries a residual rotation the gauge cannot remove. Over
        # the window [Tc/2, Tc] that puts a linear-in-time artifact of
        # size |rho| * rate * Tc/2 under delta_rho; no genuine settling
        # can undercut it, so deltas at the floor count as settled.
        rate = abs(family.energy(0.4 * eps)) ** 3 * dt**2 / 12.0
        floors = [4.0 * (0.4 * eps) * rate * (Tc / 2.0) for Tc in checkpoints]
        rep.rows.append({"eps": eps, "delta_rho": deltas, "tv_rho": tv,
                         "gauge_floor": floors,
                         "flags": len(rec.flags), "confighash": confighash})
        rep.records.append((f"eps={eps}", rec))
    eps_arr = [r["eps"] for r in rep.rows]
    tv_arr = [r["tv_rho"] for r in rep.rows]
    slope, ci = fit_power(eps_arr, tv_arr)
    rep.fits["tv_slope"] = slope
    rep.fits["tv_slope_ci"] = ci
    rep.fits["checkpoints"] = list(checkpoints)
    if nl.p <= 0.5:
        rep.notes.append(f"p={nl.p} <= 1/2: experimental run, no pass/fail asserted")
        return rep
    lo, hi = SELECTION_TV_SLOPE
    rep.checks["tv_slope_window"] = bool(lo <= slope <= hi)
    rep.checks["cauchy"] = all(
        r["delta_rho"][k] <= max(1.1 * r["delta_rho"][k - 1], r["gauge_floor"][k]) + 1e-12
        for r in rep.rows for k in (1, 2)
    )
    rep.checks["no_flags"] = all(r["flags"] == 0 for r in rep.rows)
    return rep


def run_dispersion(nl: NonlinearitySpec, grid: Grid, amplitudes=(0.5, 1.0, 2.0),
                   T: float = 200.0, A: float = 16.0, gamma: float = 0.2,
                   dt: float = None, config: dict = None,
                   confighash: str = "local") -> ExperimentReport:
    """Full dispersion with a repulsive defect and defocusing nonlinearity.

    The local-energy budget I = int ||u||^2_{H1,-gamma} dt is compared
    against B = sqrt(E(u0) M(u0)) + M(u0); the ratio I/B must stay
    under DISPERSION_RATIO_CAP across the amplitude ladder, and the
    budget must plateau in the second half of the run.
    """
    if nl.lam <= 0:
        raise ValueError(f"dispersion run needs a defocusing sign, got lam={nl.lam}")
    s_test = np.linspace(0.0, 10.0, 64)
    if np.any(nl.g(s_test) < -1e-12) or np.any(s_test * nl.g(s_test) - nl.G(s_test) < -1e-12):
        raise ValueError("nonlinearity fails the defocusing inequalities g >= 0, s g - G >= 0")
    op = build_operator(-1.0, grid)
    wts = make_weights(A, grid)
    rep = ExperimentReport("thm-dispersion", config or {}, confighash)
    for a in amplitudes:
        vals = a * np.exp(-((grid.x - 2.0) ** 2) / 4.0).astype(complex)
        u0 = ComplexField(grid, vals)
        cfg = _evolution_config(nl, grid, T, dt=dt)
        tracker = WholeFieldTracker(wts, gamma=gamma)
        rec = evolve(u0, cfg, op, tracker)
        mass, energy = conserved(u0, cfg, op)
        B = float(np.sqrt(max(energy, 0.0) * mass) + mass)
        budget = rec.running_integral("xi_h1mg", square=True)
        I_T = float(budget[-1])
        half = float(budget[np.searchsorted(rec.t, T / 2.0)])
        tail_norm = float(rec.series["xi_h1mg"][-1])
        peak_norm = float(np.max(rec.series["xi_h1mg"]))
        rep.rows.append({
            "amplitude": a, "I_T": I_T, "B": B, "ratio": I_T / B,
            "late_fraction": (I_T - half) / I_T, "tail_norm": tail_norm,
            "peak_norm": peak_norm, "flags": len(rec.flags),
            "confighash": confighash,
        })
        rep.records.append((f"amp={a}", rec))
    rep.checks["ratio_cap"] = all(r["ratio"] <= DISPERSION_RATIO_CAP for r in rep.rows)
    rep.checks["plateau"] = all(r["late_fraction"] <= 0.25 for r in rep.rows)
    rep.checks["local_decay"] = all(
        r["tail_norm"] <= 0.2 * r["peak_norm"] for r in rep.rows
    )
    return rep


def _phase_ode_sides(family: BoundStateFamily, nl: NonlinearitySpec,
                     z: complex, zdot: complex, xi: ComplexField):
    """lhs/rhs pairs of the projector-convention parameter ODE.

    lhs_j = <i DQ[z](zdot + i E z), i^(j-1) phi>,
    rhs_j = <f(xi) + ftilde(z, xi), i^(j-1) phi>.
    """
    sd = family.sd
    E = family.rotation_rate(z)
    s = zdot + 1j * E * z
    dqs = family.dQ_apply(z, s)
    i_dqs = ComplexField(xi.grid, 1j * dqs.values)
    Q, _ = family.bound_state(z)
    rhs_field = ComplexField(xi.grid, f_eval(nl, xi).values + f_tilde(nl, Q, xi).values)
    phi = sd.phi_hat
    iphi = ComplexField(xi.grid, 1j * phi.values)
    lhs = np.array([inner(i_dqs, phi), inner(i_dqs, iphi)])
    rhs = np.array([inner(rhs_field, phi), inner(rhs_field, iphi)])
    return lhs, rhs


def run_modulation_residuals(nl: NonlinearitySpec, grid: Grid, eps: float = 0.05,
                             T: float = 10.0, shape: str = "soliton_bump",
                             gamma: float = 0.2, dt: float = None, cadence_dt: float = None,
                             A: float = 16.0, config: dict = None,
                             confighash: str = "local") -> ExperimentReport:
    """Residuals of the parameter ODE along a tracked trajectory.

    zdot is estimated by centered differencing of the sampled z(t); both
    sides of the projector-convention ODE are assembled at the interior
    snapshots. The report carries the worst and median absolute
    mismatch, plus the ratio |zdot + i E z| / (||xi||_X^2-type bound).
    """
    op = build_operator(1.0, grid)
    sd = spectral_data(op)
    family = BoundStateFamily(nl, op, sd, gamma=gamma)
    wts = make_weights(A, grid)
    dt = grid.h / 4.0 if dt is None else dt
    cadence_dt = 4 * dt if cadence_dt is None else cadence_dt
    cfg = _evolution_config(nl, grid, T, dt=dt, sponge=False, cadence_dt=cadence_dt)
    u0 = initial_state(shape, eps, grid, sd, family)
    tracker = ModulationTracker(family, wts, gamma=gamma, convention="pc")
    rec = evolve(u0, cfg, op, tracker)
    if rec.flags:
        raise ConvergenceError(f"decomposition was lost during the run: {rec.flags[0]}")

    # The record keeps norms only; rerun the stepper retaining (t, z, xi)
    # at every cadence point so both sides can be assembled.
    snaps = _snapshots(u0, cfg, op, family)
    rows = []
    for k in range(1, len(snaps) - 1):
        tk, zk, xik = snaps[k]
        zdot = (snaps[k + 1][1] - snaps[k - 1][1]) / (snaps[k + 1][0] - snaps[k - 1][0])
        lhs, rhs = _phase_ode_sides(family, nl, zk, zdot, xik)
        E = family.rotation_rate(zk)
        s = zdot + 1j * E * zk
        wx = norm(ComplexField(grid, wts.zeta * xik.values), NormKind.X)
        xinf = float(np.max(np.abs(xik.values)))
        bound = (xinf ** (2.0 * nl.p) + abs(zk) ** min(2.0 * nl.p, 1.0)) * wx
        rows.append({
            "t": float(tk),
            "residual": float(np.max(np.abs(lhs - rhs))),
            "scale": float(np.max(np.abs(lhs)) + np.max(np.abs(rhs))),
            "speed": abs(s),
            "bound": float(bound),
            "confighash": confighash,
        })
    rep = ExperimentReport("residuals", config or {}, confighash)
    rep.rows = rows
    res = np.array([r["residual"] for r in rows])
    rep.fits["residual_max"] = float(res.max())
    rep.fits["residual_median"] = float(np.median(res))
    ratios = [r["speed"] / r["bound"] for r in rows if r["bound"] > 1e-14]
    rep.fits["speed_ratio_max"] = float(max(ratios)) if ratios else 0.0
    rep.records.append((f"eps={eps}", rec))
    rep.checks["assembled"] = True
    return rep


def _snapshots(u0, cfg, op, family):
    """Evolve while retaining (t, z, xi) at every cadence point."""
    from .evolution import Stepper

    st = Stepper(op, cfg.nl, cfg.dt, cfg.sponge, cfg.sponge_width, cfg.sponge_strength)
    v = u0.values.copy()
    v[0] = 0.0
    v[-1] = 0.0
    n_steps = int(round(cfg.T / cfg.dt))
    out = []

    def grab(k):
        u = ComplexField(u0.grid, v)
        ms = decompose_pc(u, family)
        out.append((k * cfg.dt, ms.z, ms.remainder))

    grab(0)
    for k in range(1, n_steps + 1):
        v = st.advance(v)
        if k % cfg.cadence == 0 or k == n_steps:
            grab(k)
    return out
