"""Figure-data pack: one subdirectory per figure with CSV data and a manifest.

No plotting.  Everything stochastic is seeded from (seed, figure index), and
Monte Carlo work is sharded with a fixed shard size, so the pack is
byte-identical for any worker count.
"""
from __future__ import annotations

import warnings
from pathlib import Path

import numpy as np

from . import cqedparams as cp
from . import dynamics as dy
from . import io
from . import models as md
from . import network as nw
from . import photonics as ph
from . import presets
from . import protocols as P

MHZ = cp.mhz(1.0)
NS = 1e-9

# Purcell system: C = 4 with kappa = 25 g
PURCELL_RATES = cp.RateSet.from_mhz(g=500.0, kappa_l=12500.0, gamma=2.5)
# strong-coupling blockade system: g >= 10 kappa = 10 gamma
BLOCKADE_RATES = cp.RateSet.from_mhz(g=20.0, kappa_l=2.0, gamma=2.0)
HOM_SIGMA = 1.77532e-07  # s, intensity std of the photon envelopes


def figure_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(1000 + index,)).generate_state(1)[0])


def jc_ladder(out: Path, seed: int, workers: int) -> list[Path]:
    r = cp.SYMMETRIC_RATES
    rows = []
    for d in np.linspace(-10, 10, 81) * r.g:
        p = md.JCParams(r.with_(delta_ac=d), n_max=4)
        for N in range(1, 5):
            _, blk = md.excitation_block(p, N)
            em, ep = np.linalg.eigvalsh(blk)
            rows.append((cp.to_mhz(d), N, cp.to_mhz(ep), cp.to_mhz(em), cp.to_mhz(ep - em)))
    return [io.write_csv(out / "ladder.csv",
                         ["delta_ac_over_2pi_MHz", "N", "E_plus_MHz", "E_minus_MHz", "gap_MHz"], rows)]


def vacuum_rabi_scan(out: Path, seed: int, workers: int) -> list[Path]:
    grid = np.arange(-200, 201) * 0.1 * MHZ
    r = cp.SYMMETRIC_RATES
    coupled = dy.spectrum_scan(r, grid)
    empty = dy.spectrum_scan(r.with_(g=0.0), grid)
    refl = dy.spectrum_scan(cp.REFLECTION_RATES, grid)
    refl_empty = dy.spectrum_scan(cp.REFLECTION_RATES.with_(g=0.0), grid)
    f1 = io.write_columns(out / "transmission.csv", {
        "delta_over_2pi_MHz": grid / MHZ, "T_coupled": coupled.T, "T_empty": empty.T,
        "phase_t_coupled_rad": coupled.phase_t, "phase_t_empty_rad": empty.phase_t})
    f2 = io.write_columns(out / "reflection.csv", {
        "delta_over_2pi_MHz": grid / MHZ, "R_coupled": refl.R, "R_empty": refl_empty.R,
        "phase_r_coupled_rad": refl.phase_r, "phase_r_empty_rad": refl_empty.phase_r})
    return [f1, f2]


def purcell(out: Path, seed: int, workers: int) -> list[Path]:
    r = PURCELL_RATES
    p = md.JCParams(r, n_max=1)
    t = np.linspace(0, 20e-9, 201)
    see = md.atom_op(p.space, 1, 1)
    rows = {}
    for label, d in (("resonant", 0.0), ("detuned", cp.mhz(-41000.0))):
        pp = md.JCParams(r.with_(delta_ac=d), 1)
        res = dy.evolve(dy.excited_vacuum(pp), md.jc_hamiltonian(pp), md.collapse_operators(pp), t,
                        {"pe": see}, store_states=False)
        rows[f"pe_{label}"] = np.real(res.expect["pe"])
    f1 = io.write_columns(out / "decay.csv", {"t_ns": t / NS, **rows})
    sweep = np.linspace(-5, 5, 11) * r.kappa
    fitted, predicted = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for d in sweep:
            fitted.append(dy.purcell_decay_rate(p, d))
            predicted.append(2 * (r.gamma + cp.purcell_rate(r.g, r.kappa, d)))
    f2 = io.write_columns(out / "rate_vs_detuning.csv", {
        "delta_ac_over_2pi_MHz": sweep / MHZ, "fitted_rate_per_us": np.array(fitted) * 1e-6,
        "predicted_rate_per_us": np.array(predicted) * 1e-6})
    return [f1, f2]


def eit_triplet(out: Path, seed: int, workers: int) -> list[Path]:
    base = cp.SYMMETRIC_RATES
    rows = []
    for om in np.linspace(0, 3, 31) * base.g:
        p = md.LambdaParams(base.with_(omega_l=om), n_max=1)
        e0, ep, em = md.eit_spectrum(p)
        rows.append((om / MHZ, e0 / MHZ, ep / MHZ, em / MHZ))
    f1 = io.write_csv(out / "triplet.csv", ["omega_l_over_2pi_MHz", "E0_MHz", "Eplus_MHz", "Eminus_MHz"], rows)
    grid = np.arange(-200, 201) * 0.1 * MHZ
    p = md.LambdaParams(base.with_(omega_l=0.3 * base.g), n_max=1, dephasing_rate=0.01 * MHZ)
    t_eit = np.abs(dy.eit_transmission(p, grid)) ** 2
    t_two = dy.spectrum_scan(base, grid).T
    f2 = io.write_columns(out / "transmission.csv", {
        "delta_over_2pi_MHz": grid / MHZ, "T_three_level": t_eit, "T_two_level": t_two})
    return [f1, f2]


def photon_shaping(out: Path, seed: int, workers: int) -> list[Path]:
    dt = 2 * NS
    t, g = ph.gaussian_envelope(HOM_SIGMA, dt, duration=3e-6, center=1.5e-6)
    _, e = ph.exponential_envelope(100 * NS, dt, duration=3e-6)
    return [io.write_columns(out / "envelopes.csv", {
        "t_ns": t / NS, "gaussian_intensity_per_ns": np.abs(g) ** 2 * NS,
        "exponential_intensity_per_ns": np.abs(e) ** 2 * NS})]


def _hist_csv(path: Path, h: ph.HomHistogram) -> Path:
    return io.write_columns(path, {
        "tau_ns": h.centers / NS, "parallel_counts": h.parallel, "orthogonal_counts": h.orthogonal,
        "ratio": h.ratio, "pairs_parallel": h.pairs_parallel})


def hom_beat(out: Path, seed: int, workers: int) -> list[Path]:
    dp = cp.mhz(2.0)
    a = ph.SourceSpec.gaussian(HOM_SIGMA, frequency=0.0, duration=2e-6)
    b = ph.SourceSpec.gaussian(HOM_SIGMA, frequency=dp, duration=2e-6)
    h = ph.hom_monte_carlo(a, b, 100_000, seed, bin_width=20 * NS, max_tau=1e-6, workers=workers)
    return [_hist_csv(out / "histogram.csv", h)]


def hom_jitter(out: Path, seed: int, workers: int) -> list[Path]:
    jit = ph.fit_jitter(HOM_SIGMA, 0.64)
    windows = np.linspace(5, 600, 120) * NS
    f1 = io.write_columns(out / "contrast_vs_window.csv", {
        "window_ns": windows / NS,
        "contrast": [ph.gaussian_jitter_contrast(HOM_SIGMA, jit, w) for w in windows],
        "pair_fraction": [ph.gaussian_window_fraction(HOM_SIGMA, w) for w in windows]})
    src = ph.SourceSpec.gaussian(HOM_SIGMA, jitter=jit / np.sqrt(2), duration=2e-6)
    h = ph.hom_monte_carlo(src, src, 100_000, seed, bin_width=20 * NS, max_tau=1e-6, workers=workers)
    return [f1, _hist_csv(out / "histogram.csv", h)]


def gate_truth_table(out: Path, seed: int, workers: int) -> list[Path]:
    rows = []
    names = [("down_a", "up_x"), ("down_a", "down_x"), ("up_a", "up_x"), ("up_a", "down_x")]
    for label, err in (("ideal", P.IDEAL), ("paper2014", presets.get_preset("paper2014", "cnot").err_a)):
        tab = P.cnot_truth_table(err)
        for (a, pin), (p_up, p_down) in zip(names, tab):
            rows.append((label, a, pin, p_up, p_down))
    f1 = io.write_csv(out / "truth_table.csv", ["model", "atom_in", "photon_in", "P_up_x_out", "P_down_x_out"], rows)
    fid = []
    for prot in ("bell", "ghz", "eraser"):
        for pre in ("ideal", "paper2014"):
            fid.append((prot, pre, presets.evaluate(prot, pre)["fidelity"]))
    f2 = io.write_csv(out / "fidelities.csv", ["protocol", "preset", "fidelity"], fid)
    return [f1, f2]


def blockade(out: Path, seed: int, workers: int) -> list[Path]:
    r = BLOCKADE_RATES
    p = md.JCParams(r, n_max=5)
    alpha = 0.05 * np.sqrt(r.kappa)
    rows = []
    for d in np.linspace(-2, 2, 41) * r.g:
        g2, rho = dy.driven_g2(p, dy.DriveSpec("cavity", alpha, d), [0.0])
        a, n = md.cavity_ops(p.space)
        rows.append((d / MHZ, g2[0], float(np.real(np.trace(n.data @ rho.data)))))
    f1 = io.write_csv(out / "g2_zero_vs_detuning.csv", ["drive_detuning_over_2pi_MHz", "g2_0", "n_cavity"], rows)
    taus = np.linspace(0, 1e-6, 101)
    g2, _ = dy.driven_g2(p, dy.DriveSpec("cavity", alpha, -r.g), taus)
    f2 = io.write_columns(out / "g2_tau_at_minus_g.csv", {"tau_ns": taus / NS, "g2": g2})
    return [f1, f2]


def protocol_presets(out: Path, seed: int, workers: int) -> list[Path]:
    rows = []
    for pre, table in presets.PRESETS.items():
        for prot, pp in table.items():
            ev = presets.evaluate(prot, pre)
            rows.append((pre, prot, ev["fidelity"], ev["efficiency"], pp.target_fidelity, pp.target_efficiency))
    f1 = io.write_csv(out / "presets.csv", ["preset", "protocol", "fidelity", "efficiency",
                                            "target_fidelity", "target_efficiency"], rows)
    err_a = presets.get_preset("paper2012", "remote_entangle").err_a
    err_b = presets.get_preset("paper2012", "remote_entangle").err_b
    cut = []
    for tc in np.geomspace(10e-9, 3e-6, 40):
        res = P.remote_entangle(1.0, err_a, err_b, tc)
        cut.append((tc / NS, P.entanglement_fidelity(res), res.efficiency))
    f2 = io.write_csv(out / "early_click.csv", ["t_cut_ns", "fidelity", "relative_efficiency"], cut)
    return [f1, f2]


def repeater_scaling(out: Path, seed: int, workers: int) -> list[Path]:
    rows = []
    for cutoff in (1, 2, 8, None):
        for n in (1, 2, 4, 8):
            if cutoff == 1 and n > 2:
                continue  # success needs every segment in one slot; too rare to sample
            est = nw.chain_rate(n, 0.5, 0.9, cutoff, trials=20_000, seed=seed, workers=workers,
                                max_attempts=100_000)
            rows.append((n, -1 if cutoff is None else cutoff, est.mean_attempts, est.stderr_attempts, est.failures))
    return [io.write_csv(out / "chain_mean_slots.csv",
                         ["segments", "cutoff", "mean_slots", "stderr_slots", "failures"], rows)]


FIGURES = [
    ("jc_ladder", jc_ladder),
    ("vacuum_rabi_scan", vacuum_rabi_scan),
    ("purcell", purcell),
    ("eit_triplet", eit_triplet),
    ("photon_shaping", photon_shaping),
    ("hom_beat", hom_beat),
    ("hom_jitter", hom_jitter),
    ("gate_truth_table", gate_truth_table),
    ("blockade", blockade),
    ("protocol_presets", protocol_presets),
    ("repeater_scaling", repeater_scaling),
]


def figure_pack(out_dir: str | Path, seed: int = 0, workers: int = 1, only: list[str] | None = None) -> list[Path]:
    """Write every figure subdirectory plus a top-level manifest; returns all data files."""
    out = Path(out_dir)
    all_files = []
    for i, (name, fn) in enumerate(FIGURES):
        if only is not None and name not in only:
            continue
        sub = out / name
        fseed = figure_seed(seed, i)
        files = fn(sub, fseed, workers)
        io.build_manifest(sub, files, {"figure": name, "seed": seed}, fseed)
        all_files += files
    io.build_manifest(out, all_files, {"command": "figures", "seed": seed, "figures": only}, seed)
    return all_files
