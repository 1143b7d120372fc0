"""Acceptance criteria 1-14.  Each test records one PASS/FAIL line; run directly to print them."""
import time
import warnings

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, random_ket
from cqednet import cqedparams as cp
from cqednet import dynamics as dy
from cqednet import models as md
from cqednet import network as nw
from cqednet import photonics as ph
from cqednet import presets as PR
from cqednet import protocols as P

MHZ = cp.mhz(1.0)


def record(n: int, ok: bool, detail: str, elapsed: float, limit: float):
    ok = bool(ok) and elapsed < limit
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} {detail} [{elapsed:.2f}s < {limit:g}s]"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def test_criterion_01_dressed_levels():
    t0 = time.perf_counter()
    g = 7 * MHZ
    worst = 0.0
    for d in np.linspace(-10, 10, 41) * g:
        p = md.JCParams(cp.RateSet(g=g, kappa_l=1.0, delta_ac=d), n_max=4)
        for N in range(1, 5):
            ep, em = md.dressed_spectrum(p, N)
            _, block = md.excitation_block(p, N)
            want = np.sort(np.linalg.eigvalsh(block))
            worst = max(worst, *(abs(a - b) / max(abs(b), g) for a, b in zip((em, ep), want)))
    record(1, worst <= 1e-10, f"max relative error {worst:.2e} (<= 1e-10)", time.perf_counter() - t0, 1)


def _fwhm(x, y, i):
    h = y[i] / 2
    lo, hi = i, i
    while y[lo] > h:
        lo -= 1
    while y[hi] > h:
        hi += 1
    xl = np.interp(h, [y[lo], y[lo + 1]], [x[lo], x[lo + 1]])
    xr = np.interp(h, [y[hi], y[hi - 1]], [x[hi], x[hi - 1]])
    return xr - xl


def test_criterion_02_vacuum_rabi_spectrum():
    t0 = time.perf_counter()
    r = cp.SYMMETRIC_RATES  # (g, kappa, gamma) = 2pi x (7, 2.5, 3) MHz
    step = 0.05 * MHZ
    grid = np.arange(-400, 401) * step
    T = dy.spectrum_scan(r, grid).T
    peaks = [i for i in range(1, grid.size - 1) if T[i] > T[i - 1] and T[i] > T[i + 1]]
    pos = sorted(grid[peaks])
    pos_ok = len(pos) == 2 and abs(pos[0] + r.g) <= step and abs(pos[1] - r.g) <= step
    widths = [_fwhm(grid, T, i) for i in peaks]
    width_ok = all(abs(w / (r.kappa + r.gamma) - 1) <= 0.10 for w in widths)
    Te = dy.spectrum_scan(r.with_(g=0.0), grid).T
    we = _fwhm(grid, Te, int(np.argmax(Te)))
    empty_ok = abs(we / (2 * r.kappa) - 1) <= 0.01
    detail = (f"peaks at {[float(round(p / MHZ, 3)) for p in pos]} MHz vs +-{r.g / MHZ:g} (step {step / MHZ:g}); "
              f"peak FWHM/(kappa+gamma) {[float(round(w / (r.kappa + r.gamma), 4)) for w in widths]}; "
              f"empty FWHM/2kappa {we / (2 * r.kappa):.4f}")
    record(2, pos_ok and width_ok and empty_ok, detail, time.perf_counter() - t0, 5)


def test_criterion_03_purcell():
    t0 = time.perf_counter()
    base = cp.RateSet.from_mhz(g=1.0, kappa_l=25.0, gamma=0.5)
    p = md.JCParams(base, n_max=1)

    def predicted(d):
        return 2 * (base.gamma + cp.purcell_rate(base.g, base.kappa, d))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        on = dy.purcell_decay_rate(p, 0.0)
        sweep = np.linspace(-5, 5, 11) * base.kappa
        dev = max(abs(dy.purcell_decay_rate(p, d) / predicted(d) - 1) for d in sweep)
    err0 = abs(on / predicted(0.0) - 1)
    record(3, err0 <= 0.02 and dev <= 0.03,
           f"resonant deviation {err0:.4f} (<= 0.02); sweep max deviation {dev:.4f} (<= 0.03)",
           time.perf_counter() - t0, 10)


def test_criterion_04_input_output():
    t0 = time.perf_counter()
    worst, max_exc = 0.0, 0.0
    for rates in (cp.REFLECTION_RATES, cp.SYMMETRIC_RATES):
        p = md.JCParams(rates, n_max=2)
        for d in np.linspace(-15, 15, 21) * MHZ:
            r_me, t_me, exc = dy.weak_drive_response(p, d)
            max_exc = max(max_exc, exc)
            worst = max(worst, abs(r_me - dy.reflection_amplitude(rates, d, d)),
                        abs(t_me - dy.transmission_amplitude(rates, d, d)))
    lossless = cp.RateSet.from_mhz(g=7.0, kappa_l=1.0, kappa_r=1.5, gamma=0.0)
    grid = np.linspace(-20, 20, 401) * MHZ
    s = dy.spectrum_scan(lossless, grid)
    unit = float(np.max(np.abs(s.R + s.T - 1)))
    record(4, worst <= 1e-6 and max_exc <= 1e-3 and unit <= 1e-10,
           f"max |ME - closed form| {worst:.2e} (<= 1e-6); excitation {max_exc:.1e}; lossless |R+T-1| {unit:.1e}",
           time.perf_counter() - t0, 10)


def test_criterion_05_conditional_phase():
    t0 = time.perf_counter()
    empty = cp.RateSet.from_mhz(g=0.0, kappa_l=2.5, gamma=3.0)
    ph_empty = np.angle(dy.reflection_amplitude(empty, 0.0, 0.0))
    strong = cp.RateSet.from_mhz(g=np.sqrt(20 * 2 * 2.5 * 3.0), kappa_l=2.5, gamma=3.0)
    C = cp.cooperativity(strong.g, strong.kappa, strong.gamma)
    ph_atom = np.angle(dy.reflection_amplitude(strong, 0.0, 0.0))
    ok = abs(abs(ph_empty) - np.pi) <= 1e-12 and C >= 20 - 1e-9 and abs(ph_atom) <= 0.05
    record(5, ok, f"empty arg r = {ph_empty:.12f}; C = {C:.2f} arg r = {ph_atom:.2e} rad", time.perf_counter() - t0, 1)


def test_criterion_06_eit_triplet():
    t0 = time.perf_counter()
    g = 7 * MHZ
    worst = 0.0
    for om in np.linspace(0, 4, 9) * g:
        for d in (-2 * g, 0.0, 3 * g):
            p = md.LambdaParams(cp.RateSet(g=g, kappa_l=1.0, gamma=1.0, omega_l=om, delta_ac=d), n_max=1)
            _, block = md.single_excitation_block(p)
            want = np.sort(np.linalg.eigvalsh(block))
            got = np.sort(md.eit_spectrum(p))
            worst = max(worst, float(np.max(np.abs(got - want))) / g)
    e0, ep, em = md.eit_spectrum(md.LambdaParams(cp.RateSet(g=g, kappa_l=1.0), n_max=1))
    vr_ok = abs(ep - g) <= 1e-10 * g and abs(em + g) <= 1e-10 * g
    grid = np.linspace(-1, 1, 201) * MHZ
    centers = []
    for om in (2.0, 4.0, 8.0, 14.0):
        r = cp.RateSet.from_mhz(g=7.0, kappa_l=1.25, kappa_r=1.25, gamma=3.0, omega_l=om)
        T = np.abs(dy.eit_transmission(md.LambdaParams(r, n_max=1), grid)) ** 2
        centers.append(grid[np.argmax(T)])
    pinned = all(c == 0.0 for c in centers)
    record(6, worst <= 1e-10 and vr_ok and pinned,
           f"max |triplet - diag|/g {worst:.1e}; Omega=0 gives +-g: {vr_ok}; central peak at 0 for all Omega: {pinned}",
           time.perf_counter() - t0, 1)


def test_criterion_07_photon_statistics():
    t0 = time.perf_counter()
    pe = md.JCParams(cp.RateSet.from_mhz(g=0.0, kappa_l=2.0, gamma=2.0), n_max=6)
    g2c, _ = dy.driven_g2(pe, dy.DriveSpec("cavity", 0.05 * np.sqrt(pe.rates.kappa), 0.0), np.linspace(0, 500e-9, 11))
    coh = float(np.max(np.abs(g2c - 1)))
    r = cp.RateSet.from_mhz(g=20.0, kappa_l=2.0, gamma=2.0)
    p = md.JCParams(r, n_max=4)
    amp = 0.02 * np.sqrt(r.kappa)
    gb = dy.driven_g2(p, dy.DriveSpec("cavity", amp, -r.g), [0.0])[0][0]
    gp = dy.driven_g2(p, dy.DriveSpec("cavity", amp, -r.g / np.sqrt(2)), [0.0])[0][0]
    record(7, coh <= 1e-6 and gb < 0.5 and gp > 1,
           f"coherent |g2-1| {coh:.1e}; blockade g2(0) {gb:.3f} (< 0.5); two-photon g2(0) {gp:.2f} (> 1)",
           time.perf_counter() - t0, 30)


def test_criterion_08_hong_ou_mandel():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    zero = 0.0
    for _ in range(50):
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        dp = rng.uniform(-100, 100) * MHZ
        t = rng.uniform(0, 1e-6, 4)
        # detuned photons: the second carries an extra phase exp(-i dp t) at the common time
        bb = b * np.exp(-1j * dp * t)
        zero = max(zero, float(np.max(np.abs(ph.coincidence_probability(a, a, bb, bb)))))
    dp = 2 * MHZ
    sigma = 1.77532e-07
    src_a = ph.SourceSpec.gaussian(sigma, frequency=0.0, duration=2e-6)
    src_b = ph.SourceSpec.gaussian(sigma, frequency=dp, duration=2e-6)
    h = ph.hom_monte_carlo(src_a, src_b, 100_000, seed=2024, bin_width=20e-9, max_tau=1e-6)
    # bin average of (1 - cos dp tau)/2 weighted by the pair density of tau ~ N(0, 2 sigma^2)
    expect = []
    for lo, hi in zip(h.edges[:-1], h.edges[1:]):
        tau = np.linspace(lo, hi, 201)
        w = np.exp(-tau ** 2 / (4 * sigma ** 2))
        expect.append(np.sum(w * 0.5 * (1 - np.cos(dp * tau))) / np.sum(w))
    expect = np.array(expect)
    n = h.pairs_parallel
    m = n >= 20
    sig = np.sqrt(np.maximum(expect * (1 - expect), 1e-12) / np.maximum(n, 1))
    z = np.abs(h.coincidence_fraction - expect) / sig
    worst = float(np.max(z[m]))
    record(8, zero <= 1e-12 and worst <= 4,
           f"tau=0 coincidence {zero:.1e}; max deviation {worst:.2f} sigma over {int(m.sum())} bins (<= 4)",
           time.perf_counter() - t0, 30)


def test_criterion_09_bell_measurement():
    t0 = time.perf_counter()
    b = ph.bell_vectors_hv()
    psi = ph.bell_measurement(b["PsiMinus"])["PsiMinus"]
    fails = [ph.bell_measurement(b[k])["Fail"] for k in ("PhiPlus", "PhiMinus")]
    uniform = sum(np.outer(v, v.conj()) for v in b.values()) / 4
    res = ph.bell_measurement(uniform)
    succ = res["PsiPlus"] + res["PsiMinus"]
    ok = abs(psi - 1) <= 1e-12 and all(abs(f - 1) <= 1e-12 for f in fails) and abs(succ - 0.5) <= 1e-12
    record(9, ok, f"Psi- identified {psi:.12f}; Phi fail {fails}; uniform success {succ:.12f}",
           time.perf_counter() - t0, 1)


def test_criterion_10_teleportation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    fid_err, p_err = 0.0, 0.0
    for _ in range(100):
        v = random_ket(rng, 2)
        for prob, out in P.teleport_ideal_branches(v).values():
            fid_err = max(fid_err, abs(abs(np.vdot(v, out)) ** 2 - 1))
            p_err = max(p_err, abs(prob - 0.25))
    record(10, fid_err <= 1e-10 and p_err <= 1e-12, f"max |F-1| {fid_err:.1e}; max |p-1/4| {p_err:.1e}",
           time.perf_counter() - t0, 5)


def test_criterion_11_gate_algebra():
    t0 = time.perf_counter()
    U = P._two_qubit_on(P.CPHASE, 0, 1, 2)
    cz = np.array_equal(U, np.diag([1, -1, -1, -1]).astype(complex))
    table = P.cnot_truth_table(P.IDEAL)
    tt = np.allclose(table, [[1, 0], [0, 1], [0, 1], [1, 0]], atol=1e-15)
    ghz = P.ghz_fidelity(P.IDEAL)
    g = P.ghz_ideal()
    res = {b.label: b for b in P.eraser_photon_photon(np.outer(g, g.conj())).branches}
    fm = P._x_basis_bell("phi_minus_x")
    fp = P._x_basis_bell("phi_plus_x")
    er = (np.real(np.vdot(fm, res["atom_up"].state.data @ fm)), np.real(np.vdot(fp, res["atom_down"].state.data @ fp)))
    ok = cz and tt and abs(ghz - 1) <= 1e-12 and all(abs(x - 1) <= 1e-12 for x in er)
    record(11, ok, f"CPHASE exact {cz}; truth table exact {tt}; GHZ F {ghz:.12f}; eraser F {er[0]:.12f}/{er[1]:.12f}",
           time.perf_counter() - t0, 1)


def test_criterion_12_preset_calibration():
    t0 = time.perf_counter()
    checks = []

    def fid(proto, preset, target, tol=0.015):
        v = PR.evaluate(proto, preset)["fidelity"]
        checks.append((f"{proto} F {v:.3f}/{target}", abs(v - target) <= tol))

    def eff(label, got, want, rel=1e-12):
        checks.append((f"{label} eta {got:.5g}/{want:.5g}", abs(got / want - 1) <= rel))

    fid("memory", "paper2011", 0.93)
    fid("state_transfer", "paper2012", 0.84)
    eff("state_transfer", PR.evaluate("state_transfer", "paper2012")["efficiency"], 0.03 * 0.34 * 0.20)
    fid("remote_entangle", "paper2012", 0.85)
    eff("remote_entangle", PR.evaluate("remote_entangle", "paper2012")["efficiency"], 0.40 * 0.34 * 0.14)
    fid("teleport", "paper2013", 0.789)
    fid("teleport_window", "paper2013", 0.880)
    e_full = PR.evaluate("teleport", "paper2013")["efficiency"]
    e_win = PR.evaluate("teleport_window", "paper2013")["efficiency"]
    eff("teleport window ratio", e_full / e_win, 4.0, rel=0.05)
    det = PR.get_preset("paper2014", "detect").err_a
    for k, want in zip((1, 2, 3), (0.74, 0.87, 0.89)):
        got = P.concatenated_efficiency(det, k)
        checks.append((f"detect x{k} {got:.3f}/{want}", abs(got - want) <= 0.015))
    bad = [c for c, ok in checks if not ok]
    record(12, not bad, "; ".join(c for c, _ in checks) + (f"; failing: {bad}" if bad else ""),
           time.perf_counter() - t0, 60)


def test_criterion_13_channel_repeater():
    t0 = time.perf_counter()
    p20 = nw.channel_transmission(nw.Channel(20.0))
    L = nw.loss_length_from_db(0.2)
    p = 0.1
    est = nw.two_segment_repeater(p, 1.0, None, trials=100_000, seed=13)
    exact = 2 / p - 1 / (2 * p - p * p)
    z = abs(est.mean_attempts - exact) / est.stderr_attempts
    ok = abs(p20 - np.exp(-1)) <= 1e-12 and abs(L - 21.71) <= 0.01 and z <= 3
    record(13, ok, f"p(20 km) - 1/e = {p20 - np.exp(-1):.1e}; L_loss {L:.4f} km; MC {est.mean_attempts:.3f} vs "
               f"{exact:.3f} ({z:.2f} sigma)", time.perf_counter() - t0, 30)


def test_criterion_14_global_determinism(tmp_path):
    from cqednet.figures import figure_pack

    t0 = time.perf_counter()
    dirs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 8)):
        figure_pack(tmp_path / name, seed=0, workers=workers)
        dirs.append(tmp_path / name)

    def snapshot(d):
        return {str(f.relative_to(d)): f.read_bytes() for f in sorted(d.rglob("*")) if f.is_file()}

    a, b, c = map(snapshot, dirs)
    record(14, a == b == c and len(a) > 0, f"{len(a)} files identical across repeat and 1 vs 8 workers: {a == b == c}",
           time.perf_counter() - t0, 300)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
