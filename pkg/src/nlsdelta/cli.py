"""Command line front end.

    nls <command> [--config FILE] [--grid.L 40] [--nl.p 1] ...

Commands cover the library surface: bound-state construction, spectral
checks, decompositions, virial diagnostics, time evolution, the three
theorem-style experiments, and the parameter-ODE residual check.
Exit codes: 0 success, 1 a numerical check failed, 2 bad usage/config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .bound_states import BoundStateFamily
from .config import RunConfig, apply_overrides, config_hash, load_config, write_json
from .errors import ConvergenceError
from .evolution import EvolutionConfig, conserved, evolve
from .grid import ComplexField, NormKind, make_grid, norm
from .modulation import decompose_hc, decompose_pc
from .nonlinearity import power_law, saturating
from .operator import build_operator, project_continuous, smallest_eigenvalue, spectral_data
from .virial import coercivity_report, commutator_identity, make_weights
from .experiments import (
    ExperimentReport,
    initial_state,
    random_localized_field,
    run_dispersion,
    run_modulation_residuals,
    run_selection,
    run_small_en,
)

DOTTED_FLAGS = [
    "grid.L", "grid.N", "op.q", "nl.kind", "nl.p", "nl.lambda",
    "evo.dt", "evo.T", "evo.sponge", "evo.cadence", "virial.A",
    "exp.eps-ladder", "exp.amplitudes", "exp.T", "exp.shape",
    "gamma", "seed", "out",
]


def _flag_dest(name: str) -> str:
    return name.replace(".", "__").replace("-", "_")


def _config_key(name: str) -> str:
    return name.replace("-", "_")


# short spellings for the most-used overrides
ALIASES = {"p": "nl.p", "lambda": "nl.lambda", "q": "op.q", "A": "virial.A"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON config file")
    for name in DOTTED_FLAGS:
        common.add_argument(f"--{name}", dest=_flag_dest(name), metavar="V",
                            help=argparse.SUPPRESS)
    for short, target in ALIASES.items():
        common.add_argument(f"--{short}", dest=f"alias_{_flag_dest(short)}",
                            metavar="V", help=f"alias for --{target}")

    p = argparse.ArgumentParser(prog="nls", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"nls {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("bound-state", parents=[common],
                        help="solve the stationary profile at a given amplitude")
    sp.add_argument("--z", "--zmod", dest="zmod", type=float, default=0.1,
                    help="amplitude |z|")
    sp.add_argument("--phase", type=float, default=0.0, help="phase of z (radians)")
    sp.add_argument("--profile-csv", action="store_true",
                    help="also write the profile as x,re,im CSV")

    sub.add_parser("spectrum", parents=[common],
                   help="ground eigenvalue of the defect operator, exact vs numeric")

    sp = sub.add_parser("decompose", parents=[common],
                        help="split a state into soliton parameter and remainder")
    sp.add_argument("--convention", choices=["pc", "hc"], default="pc")
    sp.add_argument("--eps", type=float, default=0.05,
                    help="size of the synthesized state when --state is absent")
    sp.add_argument("--state", metavar="CSV", help="input state as x,re,im rows")

    sp = sub.add_parser("virial-check", parents=[common],
                        help="cutoff commutator identity and coercivity on random fields")
    sp.add_argument("--fields", type=int, default=20)
    sp.add_argument("--gap-tol", type=float, default=1e-3)
    sp.add_argument("--ratio-floor", type=float, default=0.19)

    sp = sub.add_parser("evolve", parents=[common], help="run the time stepper")
    sp.add_argument("--shape", default="soliton_bump",
                    choices=["soliton_bump", "ground_state", "offset_gaussian"])
    sp.add_argument("--eps", type=float, default=0.05)

    sub.add_parser("thm-small-en", parents=[common],
                   help="radiation budget across a data-size ladder (trapping defect)")
    sp = sub.add_parser("thm-selection", parents=[common],
                        help="settling of the gauge-corrected soliton parameter")
    sp.add_argument("--experimental", action="store_true",
                    help="allow p <= 1/2 (reported without pass/fail)")
    sub.add_parser("thm-dispersion", parents=[common],
                   help="local-energy budget vs conserved quantities (repulsive defect)")
    sub.add_parser("residuals", parents=[common],
                   help="parameter-ODE residuals along a tracked trajectory")
    return p


def _gather_config(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    pairs = []
    for name in DOTTED_FLAGS:
        val = getattr(args, _flag_dest(name), None)
        if val is not None:
            pairs.append((_config_key(name), val))
    for short, target in ALIASES.items():
        val = getattr(args, f"alias_{_flag_dest(short)}", None)
        if val is not None:
            pairs.append((_config_key(target), val))
    apply_overrides(cfg, pairs)
    return cfg


def _nl_from(cfg: RunConfig):
    if cfg.nl.kind == "power":
        return power_law(cfg.nl.p, cfg.nl.lam)
    if cfg.nl.kind == "saturating":
        return saturating(cfg.nl.p)
    raise ValueError(f"unknown nonlinearity kind {cfg.nl.kind!r}")


def _outdir(cfg: RunConfig) -> str:
    return cfg.out or os.environ.get("NLS_OUT", "") or "out"


def _setup(cfg: RunConfig, q=None):
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    op = build_operator(cfg.op.q if q is None else q, grid)
    return grid, op


def _evo_config(cfg: RunConfig, grid, nl) -> EvolutionConfig:
    dt = cfg.evo.dt if cfg.evo.dt > 0 else grid.h / 4.0
    return EvolutionConfig(nl=nl, dt=dt, T=cfg.evo.T, sponge=cfg.evo.sponge,
                           cadence=cfg.evo.cadence)


def _emit(payload: dict, cfg: RunConfig, stem: str):
    payload = dict(payload, config=cfg.to_dict(), confighash=config_hash(cfg))
    path = os.path.join(_outdir(cfg), f"{stem}-{config_hash(cfg)}.json")
    write_json(path, payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    print(f"wrote {path}")


def cmd_bound_state(args, cfg: RunConfig) -> int:
    grid, op = _setup(cfg, q=1.0)
    sd = spectral_data(op)
    family = BoundStateFamily(_nl_from(cfg), op, sd, gamma=cfg.gamma)
    z = args.zmod * np.exp(1j * args.phase)
    Q, E = family.bound_state(z)
    sol = family.solve_profile(abs(z) ** 2) if abs(z) > 0 else None
    payload = {
        "zmod": args.zmod,
        "phase": args.phase,
        "energy": E,
        "iterations": sol.iterations if sol else 0,
        "contraction": max(sol.factors) if sol and sol.factors else 0.0,
        "eigen_residual": family.eigen_residual(z),
        "amplitude_window": family.rho0(),
        "profile_linf": float(np.max(np.abs(Q.values))),
    }
    _emit(payload, cfg, "bound-state")
    if args.profile_csv:
        path = os.path.join(_outdir(cfg), f"bound-state-{config_hash(cfg)}.csv")
        rows = ["x,re,im"] + [
            f"{x:.12g},{v.real:.12g},{v.imag:.12g}" for x, v in zip(grid.x, Q.values)
        ]
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(rows) + "\n")
        os.replace(tmp, path)
        print(f"wrote {path}")
    return 0


def cmd_spectrum(args, cfg: RunConfig) -> int:
    grid, op = _setup(cfg)
    payload = {"q": op.q, "L": grid.L, "N": grid.N, "h": grid.h}
    if op.q > 0:
        sd = spectral_data(op)
        payload.update(
            exact_energy=sd.energy,
            numeric_energy=sd.lam_num,
            eigenvalue_error=abs(sd.lam_num - sd.energy),
            sampled_residual=float(
                norm(ComplexField(grid, op.apply_values(sd.phi.values)
                                  - sd.energy * sd.phi.values), NormKind.L2)
            ),
        )
    else:
        payload.update(smallest_eigenvalue=smallest_eigenvalue(op),
                       note="no trapped mode for q <= 0")
    _emit(payload, cfg, "spectrum")
    return 0


def cmd_decompose(args, cfg: RunConfig) -> int:
    grid, op = _setup(cfg, q=1.0)
    sd = spectral_data(op)
    family = BoundStateFamily(_nl_from(cfg), op, sd, gamma=cfg.gamma)
    if args.state:
        data = np.loadtxt(args.state, delimiter=",", comments="#", skiprows=1)
        if data.shape != (grid.N, 3):
            raise ValueError(
                f"state file must have {grid.N} rows of x,re,im; got shape {data.shape}"
            )
        if not np.allclose(data[:, 0], grid.x, atol=1e-9):
            raise ValueError("state file grid does not match the configured grid")
        u = ComplexField(grid, data[:, 1] + 1j * data[:, 2])
    else:
        u = initial_state(cfg.exp.shape, args.eps, grid, sd, family)
    fn = decompose_pc if args.convention == "pc" else decompose_hc
    ms = fn(u, family)
    payload = {
        "convention": ms.convention,
        "z_re": ms.z.real,
        "z_im": ms.z.imag,
        "residual": ms.residual,
        "iterations": ms.iterations,
        "remainder_h1": norm(ms.remainder, NormKind.H1),
        "remainder_h1mg": norm(ms.remainder, NormKind.H1_MINUS_GAMMA, cfg.gamma),
    }
    _emit(payload, cfg, "decompose")
    return 0


def cmd_virial_check(args, cfg: RunConfig) -> int:
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    op = build_operator(1.0, grid)
    sd = spectral_data(op)
    wts = make_weights(cfg.virial.A, grid)
    rng = np.random.default_rng(cfg.seed)
    gaps, ratios = [], []
    for _ in range(args.fields):
        xi = random_localized_field(grid, rng)
        gaps.append(commutator_identity(xi, wts).gap)
        ratios.append(coercivity_report(project_continuous(xi, sd), wts).ratio)
    payload = {
        "fields": args.fields,
        "A": cfg.virial.A,
        "max_gap": float(np.max(gaps)),
        "min_ratio": float(np.min(ratios)),
        "gap_tol": args.gap_tol,
        "ratio_floor": args.ratio_floor,
        "gap_ok": bool(np.max(gaps) < args.gap_tol),
        "ratio_ok": bool(np.min(ratios) >= args.ratio_floor),
    }
    _emit(payload, cfg, "virial-check")
    return 0 if payload["gap_ok"] and payload["ratio_ok"] else 1


def cmd_evolve(args, cfg: RunConfig) -> int:
    grid, op = _setup(cfg)
    nl = _nl_from(cfg)
    if op.q > 0:
        sd = spectral_data(op)
        family = BoundStateFamily(nl, op, sd, gamma=cfg.gamma) if op.q == 1.0 else None
        u0 = initial_state(args.shape, args.eps, grid, sd, family)
    else:
        vals = args.eps * np.exp(-((grid.x - 2.0) ** 2) / 4.0).astype(complex)
        u0 = ComplexField(grid, vals)
    ecfg = _evo_config(cfg, grid, nl)
    m0, e0 = conserved(u0, ecfg, op)
    rec = evolve(u0, ecfg, op)
    uT = ComplexField(grid, rec.final_values)
    mT, eT = conserved(uT, ecfg, op)
    payload = {
        "T": ecfg.T, "dt": ecfg.dt, "steps": rec.steps,
        "mass_initial": m0, "mass_final": mT, "mass_drift": abs(mT - m0),
        "energy_initial": e0, "energy_final": eT, "energy_drift": abs(eT - e0),
        "sponge": ecfg.sponge,
    }
    _emit(payload, cfg, "evolve")
    # the sampled time series goes under its own stem so it cannot
    # clobber the scalar summary written just above
    rep = ExperimentReport("trajectory", cfg.to_dict(), config_hash(cfg))
    rep.records.append(("run", rec))
    rep.save(_outdir(cfg))
    return 0


def _run_report(rep: ExperimentReport, cfg: RunConfig) -> int:
    jpath, cpath = rep.save(_outdir(cfg))
    for name, ok in rep.checks.items():
        print(f"{name}: {'PASS' if ok else 'FAIL'}")
    for k, v in rep.fits.items():
        print(f"{k} = {v}")
    print(f"wrote {jpath}")
    print(f"wrote {cpath}")
    return 0 if rep.passed else 1


def cmd_thm_small_en(args, cfg: RunConfig) -> int:
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    rep = run_small_en(_nl_from(cfg), grid, eps_ladder=tuple(cfg.exp.eps_ladder),
                       T=cfg.exp.T, shape=cfg.exp.shape, A=cfg.virial.A,
                       gamma=cfg.gamma, dt=cfg.evo.dt if cfg.evo.dt > 0 else None,
                       config=cfg.to_dict(), confighash=config_hash(cfg))
    return _run_report(rep, cfg)


def cmd_thm_selection(args, cfg: RunConfig) -> int:
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    rep = run_selection(_nl_from(cfg), grid, eps_ladder=tuple(cfg.exp.eps_ladder),
                        T=cfg.exp.T, shape=cfg.exp.shape, A=cfg.virial.A,
                        gamma=cfg.gamma, dt=cfg.evo.dt if cfg.evo.dt > 0 else None,
                        experimental=args.experimental,
                        config=cfg.to_dict(), confighash=config_hash(cfg))
    return _run_report(rep, cfg)


def cmd_thm_dispersion(args, cfg: RunConfig) -> int:
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    nl = _nl_from(cfg)
    rep = run_dispersion(nl, grid, amplitudes=tuple(cfg.exp.amplitudes),
                         T=cfg.exp.T, A=cfg.virial.A, gamma=cfg.gamma,
                         dt=cfg.evo.dt if cfg.evo.dt > 0 else None,
                         config=cfg.to_dict(), confighash=config_hash(cfg))
    return _run_report(rep, cfg)


def cmd_residuals(args, cfg: RunConfig) -> int:
    grid = make_grid(cfg.grid.L, cfg.grid.N)
    rep = run_modulation_residuals(_nl_from(cfg), grid, eps=cfg.exp.eps_ladder[-1],
                                   T=cfg.evo.T, shape=cfg.exp.shape, gamma=cfg.gamma,
                                   dt=cfg.evo.dt if cfg.evo.dt > 0 else None,
                                   A=cfg.virial.A, config=cfg.to_dict(),
                                   confighash=config_hash(cfg))
    return _run_report(rep, cfg)


_COMMANDS = {
    "bound-state": cmd_bound_state,
    "spectrum": cmd_spectrum,
    "decompose": cmd_decompose,
    "virial-check": cmd_virial_check,
    "evolve": cmd_evolve,
    "thm-small-en": cmd_thm_small_en,
    "thm-selection": cmd_thm_selection,
    "thm-dispersion": cmd_thm_dispersion,
    "residuals": cmd_residuals,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _gather_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
