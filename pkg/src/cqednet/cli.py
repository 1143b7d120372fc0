"""Command-line runner.

Units on the command line and in files: rates in 2 pi x MHz, times in ns
(or us where the flag says so), lengths in km.

Exit status: 0 ok, 2 invalid input or config, 3 runtime failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import cqedparams as cp
from . import dynamics as dy
from . import estimate as est
from . import io
from . import models as md
from . import network as nw
from . import photonics as ph
from . import presets
from .qcore import to_json

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
MHZ = cp.mhz(1.0)
NS = 1e-9
US = 1e-6

GLOBAL_KEYS = {"config", "seed", "out", "format", "workers", "command"}


class Runner:
    """Collects output files for one command and writes tables in the requested format."""

    def __init__(self, out: Path, fmt: str):
        self.out = out
        self.fmt = fmt
        self.files: list[Path] = []

    def table(self, name: str, columns: dict):
        if self.fmt == "json":
            p = io.write_json(self.out / f"{name}.json", {k: list(v) for k, v in columns.items()})
        else:
            p = io.write_columns(self.out / f"{name}.csv", columns)
        self.files.append(p)

    def rows(self, name: str, header: list[str], rows: list):
        if self.fmt == "json":
            p = io.write_json(self.out / f"{name}.json", [dict(zip(header, r)) for r in rows])
        else:
            p = io.write_csv(self.out / f"{name}.csv", header, rows)
        self.files.append(p)

    def json(self, name: str, obj):
        self.files.append(io.write_json(self.out / f"{name}.json", obj))


# ----------------------------------------------------------------- helpers

def _rates(args, default: cp.RateSet) -> cp.RateSet:
    d = args.rates
    if d is None:
        return default
    if isinstance(d, str):
        with open(d, encoding="utf-8") as f:
            d = json.load(f)
    known = set(cp.RateSet.__dataclass_fields__)
    unknown = set(d) - known
    if unknown:
        raise io.ConfigError(f"unknown rate keys: {sorted(unknown)}")
    return cp.RateSet.from_mhz(**d)


def _grid(start: float, stop: float, points: int) -> np.ndarray:
    if points < 2:
        raise io.ConfigError("sweeps need at least 2 points")
    return np.linspace(start, stop, points)


def _need_seed(args):
    if args.seed is None:
        raise io.ConfigError(f"command {args.command!r} samples random numbers and needs --seed")


# ---------------------------------------------------------------- commands

def cmd_params(args, run: Runner) -> dict:
    if args.input is None:
        raise io.ConfigError("params needs --input")
    with open(args.input, encoding="utf-8") as f:
        rec = json.load(f)
    if "physical" in rec:
        phys = dict(rec["physical"])
        solid = phys.pop("solid_angle", 0.0)
        cav = cp.PhysicalCavity(**phys)
        F = cp.finesse(cav.R1, cav.R2)
        rates = cp.RateSet(g=cp.coupling_strength(cav), kappa_l=cp.kappa_from_geometry(cav.length, F),
                           gamma=cp.radiative_gamma(cav.dipole_moment, cav.omega, solid))
        extra = {"finesse": F}
    elif "rates" in rec:
        args.rates = rec["rates"]
        rates = _rates(args, None)
        extra = {}
    else:
        raise io.ConfigError("params input needs a 'physical' or 'rates' object")
    C = cp.cooperativity(rates.g, rates.kappa, rates.gamma) if rates.gamma > 0 else float("inf")
    nc = cp.critical_photon_number(rates.g, rates.gamma) if rates.g > 0 else float("inf")
    summary = {"rates_over_2pi_MHz": rates.to_mhz_dict(), "cooperativity": C, "critical_photon_number": nc, **extra}
    width = max(len(k) for k in summary["rates_over_2pi_MHz"]) + 2
    lines = [f"{k:<{width}}{v:.6g} MHz x 2pi" for k, v in summary["rates_over_2pi_MHz"].items()]
    lines += [f"{'C':<{width}}{C:.6g}", f"{'n_c':<{width}}{nc:.6g}"]
    print("\n".join(lines))
    run.json("params", summary)
    return summary


def cmd_spectrum(args, run: Runner) -> dict:
    grid = _grid(args.sweep_from, args.sweep_to, args.points) * MHZ
    base = _rates(args, cp.SYMMETRIC_RATES)
    E0, Ep, Em = [], [], []
    for x in grid:
        if args.model == "jc":
            p = md.JCParams(base.with_(delta_ac=x), n_max=max(args.manifold, 1))
            ep, em = md.dressed_spectrum(p, args.manifold)
            e0 = 0.0
        else:
            e0, ep, em = md.eit_spectrum(md.LambdaParams(base.with_(omega_l=x), n_max=1))
        E0.append(e0 / MHZ)
        Ep.append(ep / MHZ)
        Em.append(em / MHZ)
    run.table("spectrum", {"sweep_value": grid / MHZ, "E0": E0, "Eplus": Ep, "Eminus": Em})
    return {"model": args.model, "points": len(grid)}


def cmd_scan(args, run: Runner) -> dict:
    r = _rates(args, cp.SYMMETRIC_RATES)
    grid = _grid(args.sweep_from, args.sweep_to, args.points) * MHZ
    s = dy.spectrum_scan(r, grid, args.xi)
    run.table("scan", {"delta_over_2pi_MHz": grid / MHZ, "R": s.R, "T": s.T,
                       "phase_r_rad": s.phase_r, "phase_t_rad": s.phase_t})
    i = int(np.argmax(s.T))
    return {"max_T": float(s.T[i]), "max_T_detuning_over_2pi_MHz": float(grid[i] / MHZ)}


def cmd_rabi(args, run: Runner) -> dict:
    r = _rates(args, cp.SYMMETRIC_RATES)
    t = np.linspace(0, args.t_max_ns, args.points) * NS
    rate = dy.vacuum_rabi_trace(md.JCParams(r, n_max=1), args.delta_ac * MHZ, t)
    run.table("rabi", {"t_ns": t / NS, "emission_rate_per_us": rate * US})
    return {"points": len(t)}


def cmd_purcell(args, run: Runner) -> dict:
    r = _rates(args, cp.RateSet.from_mhz(g=500.0, kappa_l=12500.0, gamma=2.5))
    p = md.JCParams(r.with_(delta_ac=args.delta_ac * MHZ), n_max=1)
    t = np.linspace(0, args.t_max_ns, args.points) * NS
    see = md.atom_op(p.space, 1, 1)
    res = dy.evolve(dy.excited_vacuum(p), md.jc_hamiltonian(p), md.collapse_operators(p), t, {"pe": see},
                    store_states=False)
    run.table("purcell", {"t_ns": t / NS, "p_excited": np.real(res.expect["pe"])})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fitted = dy.purcell_decay_rate(p, args.delta_ac * MHZ)
    predicted = 2 * (r.gamma + cp.purcell_rate(r.g, r.kappa, args.delta_ac * MHZ))
    out = {"fitted_rate_per_us": fitted * US, "predicted_rate_per_us": predicted * US}
    run.json("purcell_fit", out)
    return out


def cmd_g2(args, run: Runner) -> dict:
    r = _rates(args, cp.RateSet.from_mhz(g=20.0, kappa_l=2.0, gamma=2.0))
    p = md.JCParams(r, n_max=args.n_max)
    drive = dy.DriveSpec("cavity", args.drive * np.sqrt(r.kappa), args.detuning * MHZ)
    taus = np.linspace(0, args.tau_max_ns, args.points) * NS
    g2, _ = dy.driven_g2(p, drive, taus)
    run.table("g2", {"tau_ns": taus / NS, "g2": g2})
    return {"g2_0": float(g2[0])}


def cmd_hom(args, run: Runner) -> dict:
    _need_seed(args)
    dur = max(12 * args.sigma_ns, 2 * args.max_tau_ns) * NS
    a = ph.SourceSpec.gaussian(args.sigma_ns * NS, 0.0, args.jitter / np.sqrt(2) * MHZ, duration=dur)
    b = ph.SourceSpec.gaussian(args.sigma_ns * NS, args.detuning * MHZ, args.jitter / np.sqrt(2) * MHZ, duration=dur)
    h = ph.hom_monte_carlo(a, b, args.trials, args.seed, bin_width=args.bin_ns * NS,
                           max_tau=args.max_tau_ns * NS, workers=args.workers)
    run.table("hom", {"tau_ns": h.centers / NS, "parallel_counts": h.parallel,
                      "orthogonal_counts": h.orthogonal, "ratio": h.ratio})
    return {"integrated_contrast": h.integrated_contrast(), "trials": args.trials}


_PRODUCT = {"HH": [1, 0, 0, 0], "HV": [0, 1, 0, 0], "VH": [0, 0, 1, 0], "VV": [0, 0, 0, 1]}


def cmd_bsm(args, run: Runner) -> dict:
    bell = ph.bell_vectors_hv()
    if args.state in bell:
        v = bell[args.state]
    elif args.state in _PRODUCT:
        v = np.array(_PRODUCT[args.state], complex)
    else:
        raise io.ConfigError(f"unknown input state {args.state!r}")
    rho = np.outer(v, v.conj())
    probs = ph.bell_measurement(rho, args.indistinguishability, args.efficiency)
    counts = {k: None for k in probs}
    if args.trials:
        _need_seed(args)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(args.seed, spawn_key=(0,))))
        res = ph.sample_bell_measurement(rho, args.trials, rng, indistinguishability=args.indistinguishability,
                                         detector_efficiency=args.efficiency)
        counts = {k: int(np.sum(res == k)) for k in probs}
    run.rows("bsm", ["outcome", "probability", "count"], [(k, probs[k], counts[k]) for k in probs])
    return {"probabilities": probs}


def cmd_protocol(args, run: Runner) -> dict:
    _need_seed(args)
    res = presets.run_protocol(args.name, args.preset, args.trials, args.seed, workers=args.workers)
    run.rows("branches", ["label", "success", "probability", "count", "fidelity"],
             [(b["label"], b["success"], b["probability"], b["count"], b["fidelity"]) for b in res["branch_stats"]])
    run.json("protocol", res)
    return {k: res[k] for k in ("efficiency", "mean_fidelity", "exact_efficiency", "exact_fidelity")}


def cmd_repeater(args, run: Runner) -> dict:
    _need_seed(args)
    cutoff = None if not args.cutoff else args.cutoff
    e = nw.chain_rate(args.segments, args.p_link, args.swap, cutoff, args.trials, args.seed,
                      max_attempts=args.max_attempts, workers=args.workers)
    run.table("attempts_histogram", {"attempts": np.arange(1, e.histogram.size + 1), "count": e.histogram})
    run.json("rate_estimate", e.to_dict())
    return e.to_dict()


def cmd_tomo(args, run: Runner) -> dict:
    if args.input is None:
        raise io.ConfigError("tomo needs --input")
    header, rows = io.read_csv(args.input)
    if [h.strip() for h in header[:3]] != ["setting", "outcome", "count"]:
        raise io.ConfigError("tomo CSV header must be setting,outcome,count")
    by: dict[str, dict[str, float]] = {}
    for r in rows:
        s, o, c = r[0].strip(), r[1].strip(), float(r[2])
        by.setdefault(s, {})[o] = by.setdefault(s, {}).get(o, 0.0) + c
    rho = est.tomography([est.MeasurementRecord(s, c) for s, c in by.items()])
    run.json("density_matrix", to_json(rho))
    return {"purity": rho.purity()}


def cmd_bayes(args, run: Runner) -> dict:
    if args.input is None:
        raise io.ConfigError("bayes needs --input")
    header, rows = io.read_csv(args.input)
    if "counts" not in header:
        raise io.ConfigError("bayes CSV needs a 'counts' column")
    k = header.index("counts")
    counts = np.array([int(r[k]) for r in rows])
    res = est.bayesian_two_atom_filter(counts, args.base_rate_per_us / US, bin_width=args.bin_us * US,
                                       transition_rate=args.transition_rate_per_ms * 1e3)
    cols = {"bin": np.arange(counts.size)}
    for a in range(res.posterior.shape[1]):
        cols[f"p_alpha{a}"] = res.posterior[:, a]
    cols["map_alpha"] = res.map_state
    run.table("posterior", cols)
    return {"bins": int(counts.size), "map_occupation": np.bincount(res.map_state, minlength=3).tolist()}


def cmd_figures(args, run: Runner) -> dict:
    from .figures import figure_pack

    seed = 0 if args.seed is None else args.seed
    run.files += figure_pack(run.out, seed, args.workers, args.only)
    return {"files": len(run.files)}


COMMANDS = {
    "params": cmd_params, "spectrum": cmd_spectrum, "scan": cmd_scan, "rabi": cmd_rabi, "purcell": cmd_purcell,
    "g2": cmd_g2, "hom": cmd_hom, "bsm": cmd_bsm, "protocol": cmd_protocol, "repeater": cmd_repeater,
    "tomo": cmd_tomo, "bayes": cmd_bayes, "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cqednet", description="Cavity-QED network simulations.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="JSON scenario config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", default="cqednet_out", help="output directory")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--workers", type=int, default=1)
    sub = ap.add_subparsers(dest="command", required=True)

    def rates(p):
        p.add_argument("--rates", help="JSON file with RateSet fields in 2pi x MHz")

    def sweep(p, lo, hi, n):
        p.add_argument("--from", dest="sweep_from", type=float, default=lo)
        p.add_argument("--to", dest="sweep_to", type=float, default=hi)
        p.add_argument("--points", type=int, default=n)

    p = sub.add_parser("params", help="derived rates, C and n_c from a JSON record")
    p.add_argument("--input")
    p = sub.add_parser("spectrum", help="dressed energies versus a swept parameter")
    p.add_argument("--model", choices=("jc", "lambda"), default="jc")
    p.add_argument("--manifold", type=int, default=1)
    rates(p)
    sweep(p, -70.0, 70.0, 141)
    p = sub.add_parser("scan", help="reflection/transmission spectrum")
    rates(p)
    sweep(p, -20.0, 20.0, 401)
    p.add_argument("--xi", type=float, default=1.0)
    p = sub.add_parser("rabi", help="cavity emission after exciting the atom")
    rates(p)
    p.add_argument("--delta-ac", type=float, default=0.0)
    p.add_argument("--t-max-ns", type=float, default=500.0)
    p.add_argument("--points", type=int, default=501)
    p = sub.add_parser("purcell", help="excited-state decay in the fast-cavity regime")
    rates(p)
    p.add_argument("--delta-ac", type=float, default=0.0)
    p.add_argument("--t-max-ns", type=float, default=20.0)
    p.add_argument("--points", type=int, default=201)
    p = sub.add_parser("g2", help="intensity correlation of the driven system")
    rates(p)
    p.add_argument("--drive", type=float, default=0.05, help="input amplitude in units of sqrt(kappa)")
    p.add_argument("--detuning", type=float, default=-20.0, help="drive detuning from the cavity, 2pi x MHz")
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--tau-max-ns", type=float, default=500.0)
    p.add_argument("--points", type=int, default=101)
    p = sub.add_parser("hom", help="two-photon interference Monte Carlo")
    p.add_argument("--sigma-ns", type=float, default=177.532)
    p.add_argument("--detuning", type=float, default=0.0, help="2pi x MHz")
    p.add_argument("--jitter", type=float, default=0.0, help="relative frequency jitter, 2pi x MHz")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--bin-ns", type=float, default=10.0)
    p.add_argument("--max-tau-ns", type=float, default=1000.0)
    p = sub.add_parser("bsm", help="linear-optics Bell measurement")
    p.add_argument("--state", default="PsiMinus")
    p.add_argument("--indistinguishability", type=float, default=1.0)
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=0)
    p = sub.add_parser("protocol", help="run a node protocol under a preset")
    p.add_argument("name", choices=sorted(presets.PROTOCOLS))
    p.add_argument("--preset", choices=sorted(presets.PRESETS), default="ideal")
    p.add_argument("--trials", type=int, default=10_000)
    p = sub.add_parser("repeater", help="repeater-chain Monte Carlo")
    p.add_argument("--segments", type=int, default=2)
    p.add_argument("--p-link", type=float, default=0.1)
    p.add_argument("--swap", type=float, default=1.0)
    p.add_argument("--cutoff", type=int, default=0, help="memory cutoff in slots; 0 = unlimited")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--max-attempts", type=int, default=nw.DEFAULT_MAX_ATTEMPTS)
    p = sub.add_parser("tomo", help="state tomography from Pauli counts")
    p.add_argument("--input")
    p = sub.add_parser("bayes", help="atom-number filter on a click stream")
    p.add_argument("--input")
    p.add_argument("--base-rate-per-us", type=float, default=1.0)
    p.add_argument("--bin-us", type=float, default=10.0)
    p.add_argument("--transition-rate-per-ms", type=float, default=0.1)
    p = sub.add_parser("figures", help="write the figure-data pack")
    p.add_argument("--only", nargs="*")
    return ap


def _apply_config(args, parser: argparse.ArgumentParser) -> io.ScenarioConfig | None:
    if not args.config:
        return None
    cfg = io.load_config(args.config)
    if cfg.command != args.command:
        raise io.ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
    sub_defaults = vars(parser.parse_args(_minimal_argv(args.command)))
    for k, v in cfg.options.items():
        key = k.replace("-", "_")
        if key not in sub_defaults or key in GLOBAL_KEYS:
            raise io.ConfigError(f"unknown option {k!r} for {args.command}")
        if getattr(args, key) == sub_defaults[key]:  # command line wins
            setattr(args, key, v)
    if cfg.rates is not None:
        if not hasattr(args, "rates"):
            raise io.ConfigError(f"{args.command} takes no rates")
        if args.rates is None:
            args.rates = cfg.rates
    if cfg.sweep is not None:
        if not hasattr(args, "sweep_from"):
            raise io.ConfigError(f"{args.command} takes no sweep")
        args.sweep_from, args.sweep_to, args.points = cfg.sweep.start, cfg.sweep.stop, cfg.sweep.points
    if cfg.trials is not None and hasattr(args, "trials"):
        args.trials = cfg.trials
    if args.seed is None:
        args.seed = cfg.seed
    if args.workers == 1:
        args.workers = cfg.workers
    if args.format == "csv":
        args.format = cfg.format
    if cfg.preset is not None:
        if not hasattr(args, "preset"):
            raise io.ConfigError(f"{args.command} takes no preset")
        args.preset = cfg.preset
    return cfg


def _minimal_argv(command: str) -> list[str]:
    return [command, "memory"] if command == "protocol" else [command]


def effective_config(args) -> dict:
    """Config echo that reproduces the run when passed back through --config."""
    opts = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS and k != "rates"}
    rates = getattr(args, "rates", None)
    if isinstance(rates, str):
        with open(rates, encoding="utf-8") as f:
            rates = json.load(f)
    cfg = io.ScenarioConfig(command=args.command, seed=args.seed, format=args.format, options=opts, rates=rates)
    d = cfg.to_dict()
    d.pop("workers")  # outputs do not depend on it
    return d


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    t0 = time.perf_counter()
    try:
        _apply_config(args, parser)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        run = Runner(out, args.format)
        summary = COMMANDS[args.command](args, run)
        if args.command != "figures":
            io.build_manifest(out, run.files, effective_config(args), args.seed, time.perf_counter() - t0)
        else:
            io.write_json(out / "timing.json", {"duration_s": time.perf_counter() - t0})
        print(io.json_text(summary), end="")
        return EXIT_OK
    except (io.ConfigError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except Exception as e:  # noqa: BLE001 - any solver failure is a runtime error
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
