"""Command-line entry point: ``eitcool <config> [--out DIR] [--seed N] [--threads N] [--strict]``.

Each scenario writes its CSV tables and a ``metadata.json`` sidecar into the
output directory. Exit codes: 0 success, 2 configuration error, 3 physics
domain error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__, bloch, ionstring, ratecool, thermometry, trajectory
from .config import RunConfig, load_config, resolve_species
from .core import ConfigError, EitCoolError, NumericalError, PhysicsDomainError, TrapMode

EXIT_CODES = {ConfigError: 2, PhysicsDomainError: 3, NumericalError: 4}


def exit_code(exc):
    for cls, code in EXIT_CODES.items():
        if isinstance(exc, cls):
            return code
    return 1


def _write_kv(path, items):
    with open(path, "w", newline="") as fh:
        for k, v in items.items():
            fh.write(f"{k} = {v:.17g}\n" if isinstance(v, float) else f"{k} = {v}\n")


def _run_spectrum(cfg, out, threads):
    p = cfg.params
    scheme = cfg.build_scheme()
    probe = tuple(p["probe"])
    spec = bloch.absorption_spectrum(scheme, probe, p["detuning_min"], p["detuning_max"], p["points"])
    bloch.write_spectrum_csv(out / "spectrum.csv", spec)
    summary = {"failed_points": len(spec.failures)}
    if "peak_window" in p:
        pos, fwhm, peak = bloch.find_bright_resonance(scheme, probe, tuple(p["peak_window"]))
        summary.update(peak_detuning_mhz=pos, peak_fwhm_mhz=fwhm, peak_rate_mhz=peak)
    return ["spectrum.csv"], summary


def _run_cool(cfg, out, threads):
    p = cfg.params
    scheme, mode = cfg.build_scheme(), cfg.build_mode()
    rates = ratecool.scheme_rates(scheme, mode)
    mbar, tau = ratecool.steady_state_n(rates), ratecool.cooling_time(rates)
    t = np.linspace(0, p["t_final"], p["points"])
    ratecool.write_dynamics_csv(out / "mean_n_rate.csv", t, ratecool.evolve_mean_n(rates, p["initial_n"], t))
    p0 = ratecool.thermal_distribution(p["initial_n"], ratecool.default_n_max(p["initial_n"]))
    pt = ratecool.evolve_populations(rates, p0, p["t_final"], p.get("n_max"))
    trajectory.write_distribution_csv(out / "populations.csv", pt)
    summary = {"mbar": mbar, "tau_us": tau, "a_plus_mhz": rates.a_plus, "a_minus_mhz": rates.a_minus}
    return ["mean_n_rate.csv", "populations.csv"], summary


def _run_mc(cfg, out, threads):
    p = cfg.params
    scheme, mode = cfg.build_scheme(), cfg.build_mode()
    rates = ratecool.scheme_rates(scheme, mode)
    tcfg = trajectory.TrajectoryConfig(
        scheme,
        mode,
        n_max=p["n_max"],
        t_final=p["t_final"],
        dt=p["dt"],
        seed=cfg.seed,
        initial_n=p["initial_n"],
        record_interval=p.get("record_interval"),
        emission=p["emission"],
        steady_fraction=p["steady_fraction"],
    )
    res = trajectory.ensemble_average(tcfg, p["n_trajectories"], workers=threads)
    trajectory.write_ensemble_csv(out / "mean_n_mc.csv", res)
    trajectory.write_distribution_csv(out / "steady_pn.csv", res.steady_pn)
    ratecool.write_dynamics_csv(out / "mean_n_rate.csv", res.times, ratecool.evolve_mean_n(rates, p["initial_n"], res.times))
    summary = {
        "mbar_rate": ratecool.steady_state_n(rates),
        "tau_rate_us": ratecool.cooling_time(rates),
        "mbar_mc": res.steady_n,
        "mbar_mc_stderr": res.steady_stderr,
        "steady_pn_stderr": [float(x) for x in res.steady_pn_stderr],
        **res.metadata(),
    }
    return ["mean_n_mc.csv", "steady_pn.csv", "mean_n_rate.csv"], summary


def _run_sweep(cfg, out, threads):
    p = cfg.params
    scheme = cfg.build_scheme()
    species = resolve_species(p["species"])
    if "frequencies" in p:
        freqs = [float(f) for f in p["frequencies"]]
    else:
        freqs = list(np.linspace(p["nu_min"], p["nu_max"], p["points"]))
    template = TrapMode(freqs[0], 0.0, p["recoil_alpha"], species)
    rows = []
    for nu in freqs:
        rows += ratecool.band_sweep(scheme, template, (nu, nu), 1)
    ratecool.write_sweep_csv(out / "sweep.csv", rows)
    ok = [r for r in rows if r.status == "ok"]
    summary = {"points": len(rows), "net_heating_points": len(rows) - len(ok)}
    if ok:
        summary.update(max_mbar=max(r.mbar for r in ok), min_tau_us=min(r.tau for r in ok), max_tau_us=max(r.tau for r in ok))
    return ["sweep.csv"], summary


def _run_string(cfg, out, threads):
    p = cfg.params
    scheme = cfg.build_scheme()
    species = resolve_species(p["species"])
    string = ionstring.build_string(p["n_ions"], species, p["nu_axial"], p.get("nu_radial"))
    geom = ionstring.CoolingGeometry(p["cooling_wavelength"], p["axis_cosine"], p["radial_cosine"], p["recoil_alpha"])
    rows = ionstring.multimode_cooling(string, scheme, geom)
    ionstring.write_positions_csv(out / "positions.csv", string.positions)
    ionstring.write_string_csv(out / "modes.csv", rows)
    summary = {"min_spacing_um": string.min_spacing}
    if p["n_ions"] > 1:
        summary["zigzag_threshold_mhz"] = ionstring.zigzag_threshold(p["n_ions"], p["nu_axial"])
        axial = [r for r in rows if r.kind == "axial"]
        etas = ionstring.mode_lamb_dicke(string, p["blur_ion"])
        keep = [q for q in range(len(axial)) if q != p["gate_mode"]]
        if all(axial[q].status == "ok" for q in keep):
            blur, osc = ionstring.rabi_blur(etas[keep], np.array([axial[q].mbar for q in keep]), p["n_ions"])
            summary.update(rabi_blur=blur, max_rabi_oscillations=osc)
    return ["positions.csv", "modes.csv"], summary


def _run_thermometry(cfg, out, threads):
    p = cfg.params
    times = np.linspace(0, p["t_max"], p["points"])
    data = thermometry.rabi_signal(p["mbar"], p["eta"], p["omega"], times, p.get("decay"))
    if p["shots"]:
        data = thermometry.noisy_rabi(data, p["shots"], cfg.seed)
    thermometry.write_dataset_csv(out / "rabi.csv", data)
    fit = thermometry.fit_thermal(data, p["eta"], n_boot=p["n_boot"], seed=cfg.seed)
    (out / "fit_report.txt").write_text(fit.report())
    pulse = p.get("sideband_pulse") or math.pi / (2 * p["eta"] * p["omega"])
    counts = thermometry.simulate_shelving(p["mbar"], p["eta"], p["omega"], pulse, p["sideband_shots"], cfg.seed)
    try:
        mb, (lo, hi) = thermometry.sideband_ratio_to_n(counts)
        ratio = {"mbar": mb, "mbar_low": lo, "mbar_high": hi}
    except PhysicsDomainError as exc:
        ratio = {"error": str(exc)}
    _write_kv(
        out / "sideband.txt",
        {"red_excited": counts.red_excited, "blue_excited": counts.blue_excited, "shots": counts.shots_per_side, **ratio},
    )
    summary = {"mbar_fit": fit.mbar, "omega_fit_mhz": fit.omega, "p0_fit": fit.p0, "mbar_sideband": ratio.get("mbar")}
    return ["rabi.csv", "fit_report.txt", "sideband.txt"], summary


RUNNERS = {
    "spectrum": _run_spectrum,
    "cool": _run_cool,
    "mc": _run_mc,
    "sweep": _run_sweep,
    "string": _run_string,
    "thermometry": _run_thermometry,
}


def run(cfg: RunConfig, out_dir=None, threads=1):
    """Run a validated config; returns the list of files written."""
    out = Path(out_dir or cfg.output_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files, summary = RUNNERS[cfg.scenario](cfg, out, max(1, int(threads)))
    meta = {
        "scenario": cfg.scenario,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "eitcool": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": time.perf_counter() - t0,
        "outputs": files,
        "summary": summary,
    }
    with open(out / "metadata.json", "w") as fh:
        json.dump(meta, fh, indent=2, default=float)
        fh.write("\n")
    return files + ["metadata.json"]


def build_parser():
    ap = argparse.ArgumentParser(prog="eitcool", description="EIT laser-cooling simulations from a scenario config.")
    ap.add_argument("config", help="config file, or the name of a bundled config such as fig3")
    ap.add_argument("--out", help="output directory (default: output_dir from the config, else ./out)")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--threads", type=int, default=1, help="maximum worker threads")
    ap.add_argument("--strict", action="store_true", help="treat unknown config keys as errors")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, strict=args.strict)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be >= 0")
            cfg = replace(cfg, seed=args.seed)
        files = run(cfg, args.out, args.threads)
    except EitCoolError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exit_code(exc)
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
