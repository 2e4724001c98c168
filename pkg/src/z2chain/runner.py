"""Experiment runner: reproduces each figure-style data pipeline end to end
from a config file, with deterministic table outputs.

Exit codes: 0 success, 1 validation error, 2 numerical non-convergence,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .exact import evolve_krylov, diagonalize_dense, prepare_initial
from .measurement import (apply_readout_error, correct_marginals,
                          device_readout_model, sample_shots)
from .mps import dmrg_ground_state, product_mps, tebd_evolve
from .observables import (ObservableSeries, extended_imbalance, fit_gaussian_peak,
                          gauge_correlation_residual, gauge_correlator_ops,
                          gauge_curve, gauge_value_from_correlators,
                          occupation_profile, steady_value,
                          z2_charge, z2_flux, gauss_sign_exponent)
from .params import (ConfigError, InitialStateSpec, RunConfig, config_to_dict,
                     load_config, matter_site, uniform_params)
from .pauli import build_effective, build_full, build_rotated_effective

log = logging.getLogger("z2chain")

OUT_ROOT_ENV = "Z2CHAIN_OUT_ROOT"


class OutputExists(IOError):
    pass


def build_hamiltonian(cfg: RunConfig, boundary="open"):
    kind = cfg.hamiltonian_kind
    if kind == "full":
        return build_full(cfg.device, boundary)
    if kind == "effective":
        return build_effective(cfg.device, boundary)
    return build_rotated_effective(cfg.device, boundary)


def sample_times(cfg: RunConfig):
    n = int(round(cfg.t_max / cfg.dt_sample))
    return [k * cfg.dt_sample for k in range(n + 1)]


def run_trajectory(cfg: RunConfig, observables="profile", ell=3):
    """Evolve the configured initial state and record observables.

    observables: 'profile' records P_j over odd sites; 'gauge' additionally
    records the four gauge correlators at matter site `ell`.
    Returns dict with 'times', 'profiles' (rows = samples), and optionally
    'correlators'.
    """
    L = cfg.device.n_sites
    times = sample_times(cfg)
    want_gauge = observables == "gauge"
    corr_ops = gauge_correlator_ops(ell, L) if want_gauge else {}
    profiles = []
    correlators = {k: [] for k in corr_ops}

    if cfg.engine == "exact":
        psi0 = prepare_initial(cfg.initial, L)
        H = build_hamiltonian(cfg)
        states = evolve_krylov(H, psi0, times, m=cfg.engine_params.krylov_dim)
        for psi in states:
            profiles.append(occupation_profile(psi, odd_only=True))
            for k, op in corr_ops.items():
                correlators[k].append(float(np.real(psi.expectation(op))))
    else:
        psi0 = product_mps(cfg.initial, L)
        H = build_hamiltonian(cfg)
        dt = cfg.engine_params.trotter_dt
        stride = max(1, int(round(cfg.dt_sample / dt)))
        rec_times = []

        def observe(t, psi):
            rec_times.append(t)
            profiles.append(occupation_profile(psi, odd_only=True))
            for k, op in corr_ops.items():
                correlators[k].append(float(np.real(psi.expectation(op))))

        tebd_evolve(H, psi0, cfg.t_max, dt=dt,
                    chi_max=cfg.engine_params.chi_max,
                    svd_tol=cfg.engine_params.svd_tol,
                    sample_every=stride, observe=observe)
        times = rec_times

    out = {"times": np.asarray(times), "profiles": np.asarray(profiles)}
    if want_gauge:
        out["correlators"] = {k: np.asarray(v) for k, v in correlators.items()}
    return out


# -- output plumbing -----------------------------------------------------------


def _meta_lines(cfg: RunConfig, extra=None):
    lines = [f"# z2chain {__version__}"]
    resolved = config_to_dict(cfg)
    lines.append("# config " + json.dumps(resolved, sort_keys=True))
    for k, v in (extra or {}).items():
        lines.append(f"# {k} {v}")
    return lines


def write_table(path: Path, header_cols, rows, cfg: RunConfig, force=False, extra=None):
    path = Path(path)
    if path.exists() and not force:
        raise OutputExists(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = _meta_lines(cfg, extra)
    lines.append("\t".join(header_cols))
    for row in rows:
        lines.append("\t".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                               for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


# -- recipes -------------------------------------------------------------------


def run_evolve(cfg: RunConfig, out_dir: Path, force=False, shots=0):
    """P_j(t) table for all odd sites; optional shot-sampled variant."""
    res = run_trajectory(cfg, observables="profile")
    n_m = cfg.device.n_matter
    cols = ["t_us"] + [f"P{matter_site(l)}" for l in range(1, n_m + 1)]
    rows = [[float(t)] + [float(p) for p in prof]
            for t, prof in zip(res["times"], res["profiles"])]
    paths = [write_table(out_dir / "profile.tsv", cols, rows, cfg, force,
                         extra={"hamiltonian": cfg.hamiltonian_kind})]
    if shots:
        # measured variant: finite shots + readout corruption + correction
        model = device_readout_model()
        L = cfg.device.n_sites
        if L > model.n_qubits:
            raise ConfigError(
                f"no readout calibration beyond {model.n_qubits} qubits")
        if L < model.n_qubits:
            from .measurement import ReadoutModel
            model = ReadoutModel(model.f_g[:L], model.f_e[:L])
        psi0 = prepare_initial(cfg.initial, cfg.device.n_sites)
        H = build_hamiltonian(cfg)
        states = evolve_krylov(H, psi0, list(res["times"]),
                               m=cfg.engine_params.krylov_dim)
        seeds = np.random.SeedSequence(cfg.rng_seed).spawn(2 * len(states))
        meas_rows = []
        for k, (t, psi) in enumerate(zip(res["times"], states)):
            counts = sample_shots(psi, "Z" * cfg.device.n_sites, shots, seeds[2 * k])
            counts = apply_readout_error(counts, model, seeds[2 * k + 1])
            corrected = correct_marginals(counts, model)
            meas_rows.append([float(t)] + [float(corrected[matter_site(l) - 1])
                                           for l in range(1, n_m + 1)])
        paths.append(write_table(out_dir / "profile_shots.tsv", cols, meas_rows,
                                 cfg, force, extra={"n_shots": shots}))
    return paths


def _theta_point(cfg: RunConfig, theta: float):
    import dataclasses
    spec = InitialStateSpec(cfg.initial.s_pattern, theta)
    cfg_t = dataclasses.replace(cfg, initial=spec)
    res = run_trajectory(cfg_t, observables="profile")
    imb = [extended_imbalance(p, spec.s_pattern) for p in res["profiles"]]
    series = ObservableSeries("imbalance", res["times"], imb)
    return steady_value(series, cfg.steady_window)


def run_sweep_theta(cfg: RunConfig, out_dir: Path, n_points=25, force=False, workers=1):
    """Steady imbalance vs theta plus a Gaussian peak fit."""
    thetas = [-math.pi + (k + 1) * 2 * math.pi / n_points for k in range(n_points)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda th: _theta_point(cfg, th), thetas))
    means = [r[0] for r in results]
    stds = [r[1] for r in results]
    fit = fit_gaussian_peak(thetas, means)
    rows = [[float(t), float(m), float(s)] for t, m, s in zip(thetas, means, stds)]
    extra = {
        "fit": f"mu={fit.mu:.6g} sigma={fit.sigma:.6g} amp={fit.amplitude:.6g} "
               f"offset={fit.offset:.6g} residual={fit.residual:.6g} "
               f"degenerate={fit.degenerate}",
    }
    path = write_table(out_dir / "imbalance_vs_theta.tsv",
                       ["theta_rad", "imbalance_mean", "imbalance_std"],
                       rows, cfg, force, extra)
    return path, fit


def run_sweep_alpha(cfg: RunConfig, out_dir: Path, n_points=25, ell=3, force=False):
    """Steady gauge curve over alpha, its sinusoid fit, and the time series
    of the gauge generator at the fitted valley."""
    res = run_trajectory(cfg, observables="gauge", ell=ell)
    alphas = [-math.pi / 2 + (k + 1) * math.pi / n_points for k in range(n_points)]
    curve = gauge_curve(res["times"], res["correlators"], alphas, cfg.steady_window)
    rows = [[float(a), float(v)] for a, v in zip(curve.alphas, curve.steady_values)]
    extra = {
        "fit": f"offset={curve.offset:.6g} amplitude={curve.amplitude:.6g} "
               f"phase={curve.phase:.6g} alpha_star={curve.alpha_star:.6g} "
               f"residual={curve.residual:.6g}",
    }
    p1 = write_table(out_dir / "gauge_vs_alpha.tsv",
                     ["alpha_rad", "gauge_steady"], rows, cfg, force, extra)
    c = res["correlators"]
    series = gauge_value_from_correlators(
        curve.alpha_star, c["xzx"], c["xzz"], c["zzx"], c["zzz"])
    rows_t = [[float(t), float(v)] for t, v in zip(res["times"], series)]
    p2 = write_table(out_dir / "gauge_at_alpha_star.tsv", ["t_us", "gauge"],
                     rows_t, cfg, force, extra)
    return (p1, p2), curve


def run_ground_state(cfg: RunConfig, out_dir: Path, chi_max=128, force=False,
                     pairs=None):
    """DMRG ground state of the effective Hamiltonian and its Gauss-law table."""
    H = build_effective(cfg.device)
    # warm-start sweep schedule: converge cheaply at small bond dimension,
    # then refine at the requested one (a mild penalty keeps the spectral
    # width small enough for the inner eigensolver at large L)
    warm = dmrg_ground_state(H, chi_max=min(32, chi_max), sweeps=6, conv_tol=1e-6,
                             half_filling_penalty=8.0)
    result = dmrg_ground_state(H, chi_max=chi_max, sweeps=4, psi0=warm.state,
                               conv_tol=1e-6, half_filling_penalty=8.0)
    beta = cfg.device.beta
    n_m = cfg.device.n_matter
    if pairs is None:
        pairs = [(i, j) for i in range(2, n_m + 1) for j in range(i, n_m + 1)
                 if j - i <= 6][: 40]
    rows = []
    for i, j in pairs:
        w = float(np.real(result.state.expectation(z2_charge(i, j, H.n_sites))))
        cc = float(np.real(result.state.expectation(z2_flux(i, j, H.n_sites, beta))))
        sign = -1 if gauss_sign_exponent(i, j) % 2 else 1
        rows.append([i, j, w, cc, abs(cc - sign * w)])
    extra = {"energy": f"{result.energy:.10g}",
             "converged": result.converged,
             "max_truncation": f"{result.max_truncation:.3e}"}
    path = write_table(out_dir / "gauss_law.tsv",
                       ["i", "j", "charge", "flux", "residual"],
                       rows, cfg, force, extra)
    return path, result, rows


def run_eigen_scatter(cfg: RunConfig, out_dir: Path, force=False, boundary="open"):
    """Per-eigenstate (energy, charge, flux) table of the effective model."""
    H = build_effective(cfg.device, boundary=boundary)
    survey = diagonalize_dense(H)
    beta = cfg.device.beta
    n_m = cfg.device.n_matter
    pairs = [(i, j) for i in range(2, n_m + 1) for j in range(i, n_m + 1)]
    rows = []
    for k in range(len(survey.energies)):
        from .exact import StateVector
        psi = StateVector(survey.vectors[:, k], H.n_sites)
        res = np.mean([gauge_correlation_residual(psi, i, j, beta)
                       for i, j in pairs])
        w = float(np.real(psi.expectation(z2_charge(pairs[0][0], pairs[0][1], H.n_sites))))
        c = float(np.real(psi.expectation(z2_flux(pairs[0][0], pairs[0][1], H.n_sites, beta))))
        rows.append([float(survey.energies[k]), w, c, float(res)])
    path = write_table(out_dir / "eigen_scatter.tsv",
                       ["energy_MHz", "charge", "flux", "gauss_residual"],
                       rows, cfg, force)
    return path, rows


# -- CLI -----------------------------------------------------------------------


def _common(sub):
    sub.add_argument("--config", required=True, help="path to a YAML run config")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--seed", type=int, default=None, help="override rng_seed")
    sub.add_argument("--engine", choices=["exact", "tebd"], default=None)
    sub.add_argument("--force", action="store_true",
                     help="overwrite existing output files")
    sub.add_argument("--workers", type=int, default=1,
                     help="parallel workers for sweep grid points")


def make_parser():
    p = argparse.ArgumentParser(
        prog="z2chain",
        description="Quench-dynamics and ground-state pipelines for the "
                    "matter/gauge qubit chain.",
    )
    sub = p.add_subparsers(dest="recipe", required=True)
    for name, helptext in [
        ("evolve", "occupation-profile trajectory (spreading panels)"),
        ("sweep-theta", "steady imbalance vs initial gauge angle + Gaussian fit"),
        ("sweep-alpha", "steady gauge curve vs ansatz angle + sinusoid fit"),
        ("ground-state", "DMRG ground state and Gauss-law table"),
        ("eigen-scatter", "per-eigenstate charge/flux survey"),
        ("custom", "evolve with the config exactly as given"),
    ]:
        s = sub.add_parser(name, help=helptext)
        _common(s)
        if name == "evolve":
            s.add_argument("--shots", type=int, default=0,
                           help="also write a finite-shot, readout-corrupted table")
        if name in ("sweep-theta", "sweep-alpha"):
            s.add_argument("--points", type=int, default=25)
        if name == "sweep-alpha":
            s.add_argument("--ell", type=int, default=3,
                           help="matter site of the gauge generator")
        if name == "ground-state":
            s.add_argument("--chi", type=int, default=128)
    return p


def resolve_out(args) -> Path:
    if args.out:
        return Path(args.out)
    root = os.environ.get(OUT_ROOT_ENV, "out")
    return Path(root) / args.recipe


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        import dataclasses
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, rng_seed=args.seed)
        if args.engine is not None:
            cfg = dataclasses.replace(cfg, engine=args.engine)
    except (ConfigError, FileNotFoundError) as exc:
        log.error("config: %s", exc)
        return 1
    out_dir = resolve_out(args)
    try:
        if args.recipe in ("evolve", "custom"):
            shots = getattr(args, "shots", 0)
            paths = run_evolve(cfg, out_dir, force=args.force, shots=shots)
        elif args.recipe == "sweep-theta":
            paths, fit = run_sweep_theta(cfg, out_dir, n_points=args.points,
                                         force=args.force, workers=args.workers)
            if not fit.converged:
                log.error("Gaussian fit did not converge")
                return 2
            paths = [paths]
        elif args.recipe == "sweep-alpha":
            (p1, p2), _ = run_sweep_alpha(cfg, out_dir, n_points=args.points,
                                          ell=args.ell, force=args.force)
            paths = [p1, p2]
        elif args.recipe == "ground-state":
            path, result, _ = run_ground_state(cfg, out_dir, chi_max=args.chi,
                                               force=args.force)
            if not result.converged:
                log.error("DMRG did not converge")
                return 2
            paths = [path]
        elif args.recipe == "eigen-scatter":
            path, _ = run_eigen_scatter(cfg, out_dir, force=args.force)
            paths = [path]
        else:  # pragma: no cover
            raise AssertionError(args.recipe)
    except OutputExists as exc:
        log.error("%s", exc)
        return 3
    except (ConfigError, ValueError) as exc:
        log.error("validation: %s", exc)
        return 1
    except OSError as exc:
        log.error("I/O: %s", exc)
        return 3
    for p in paths:
        log.info("wrote %s", p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
