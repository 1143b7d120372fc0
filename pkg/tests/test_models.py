import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cqednet import cqedparams as cp
from cqednet import models as md
from cqednet.qcore import DensityMatrix, basis_state, expectation

G = cp.mhz(7.0)


def jc(delta=0.0, g=G, n_max=5):
    return md.JCParams(cp.RateSet(g=g, kappa_l=cp.mhz(2.5), gamma=cp.mhz(3.0), delta_ac=delta), n_max=n_max)


def lam(omega=0.0, delta=0.0, g=G):
    return md.LambdaParams(cp.RateSet(g=g, kappa_l=cp.mhz(2.5), gamma=cp.mhz(3.0), delta_ac=delta, omega_l=omega), n_max=1)


def test_g_zero_bare_energies():
    p = jc(delta=cp.mhz(3.0), g=0.0)
    H = md.jc_hamiltonian(p).data
    assert np.allclose(H, np.diag(np.diag(H)))
    sp = p.space
    for n in range(p.n_max + 1):
        assert H[sp.basis_index(atom=0, cavity=n)][sp.basis_index(atom=0, cavity=n)] == 0
        assert H[sp.basis_index(atom=1, cavity=n)][sp.basis_index(atom=1, cavity=n)] == pytest.approx(cp.mhz(3.0))


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_resonant_block_splitting(N):
    _, block = md.excitation_block(jc(), N)
    ev = np.linalg.eigvalsh(block)
    assert ev[1] - ev[0] == pytest.approx(2 * G * np.sqrt(N), rel=1e-12)
    ep, em = md.dressed_spectrum(jc(), N)
    assert ep - em == pytest.approx(2 * G * np.sqrt(N), rel=1e-14)


def test_dressed_spectrum_rejects_large_n():
    with pytest.raises(ValueError):
        md.dressed_spectrum(jc(n_max=3), 4)


@pytest.mark.parametrize("n", [0, 1, 3])
def test_dispersive_shift(n):
    d = 100 * G
    ep, _ = md.dressed_spectrum(jc(delta=d), n + 1)
    shift = ep - d
    assert shift == pytest.approx((n + 1) * G ** 2 / d, rel=0.01)


def test_dressed_spectrum_matches_diagonalization_grid():
    for d in np.linspace(-10, 10, 41) * G:
        p = jc(delta=d)
        ev = np.linalg.eigvalsh(md.jc_hamiltonian(p).data)
        for N in range(1, 5):
            _, block = md.excitation_block(p, N)
            want = np.sort(np.linalg.eigvalsh(block))
            ep, em = md.dressed_spectrum(p, N)
            assert np.allclose([em, ep], want, rtol=1e-10, atol=1e-10 * G)
            assert np.min(np.abs(ev - ep)) <= 1e-10 * max(abs(ep), G)


def test_dressed_states_resonant_amplitudes():
    p = jc()
    sp = p.space
    for N in (1, 3):
        plus, minus = md.dressed_states(p, N)
        ie, ic = sp.basis_index(atom=1, cavity=N - 1), sp.basis_index(atom=0, cavity=N)
        s = 1 / np.sqrt(2)
        assert np.allclose([plus.amplitudes[ie], plus.amplitudes[ic]], [s, s], atol=1e-15)
        assert np.allclose([minus.amplitudes[ie], minus.amplitudes[ic]], [s, -s], atol=1e-15)


@pytest.mark.parametrize("delta", [-3.0, 0.0, 0.7, 5.0])
def test_dressed_states_are_eigenvectors(delta):
    p = jc(delta=delta * G)
    H = md.jc_hamiltonian(p).data
    for N in (1, 2, 4):
        plus, minus = md.dressed_states(p, N)
        ep, em = md.dressed_spectrum(p, N)
        assert abs(plus.inner(minus)) <= 1e-12
        assert np.allclose(H @ plus.amplitudes, ep * plus.amplitudes, atol=1e-9 * G)
        assert np.allclose(H @ minus.amplitudes, em * minus.amplitudes, atol=1e-9 * G)


def test_far_detuned_plus_state_is_atomic():
    p = jc(delta=1e4 * G)
    plus, _ = md.dressed_states(p, 2)
    assert abs(plus.amplitudes[p.space.basis_index(atom=1, cavity=1)]) ** 2 > 1 - 1e-7


def test_collapse_operator_rates():
    p = jc()
    L1, L2 = md.collapse_operators(p)
    sp = p.space
    c1 = basis_state(sp, atom=0, cavity=1).dm()
    e0 = basis_state(sp, atom=1, cavity=0).dm()
    vac = basis_state(sp, atom=0, cavity=0)
    assert expectation(L2.dag @ L2, c1).real == pytest.approx(2 * p.rates.kappa, rel=1e-14)
    assert expectation(L1.dag @ L1, e0).real == pytest.approx(2 * p.rates.gamma, rel=1e-14)
    for L in (L1, L2):
        assert np.allclose(L.data @ vac.amplitudes, 0)


def test_lambda_reduces_to_jc_without_control():
    pl = md.LambdaParams(jc(delta=cp.mhz(2.0)).rates, n_max=3)
    H = md.lambda_hamiltonian(pl).data
    # restrict to (c, e) x Fock: drop the u level
    keep = [i for i in range(pl.space.dim) if np.unravel_index(i, pl.space.dims)[0] != md.ATOM3["u"]]
    sub = H[np.ix_(keep, keep)]
    assert np.allclose(sub, md.jc_hamiltonian(jc(delta=cp.mhz(2.0), n_max=3)).data, atol=1e-6)


def test_lambda_control_matrix_element():
    p = lam(omega=cp.mhz(4.0))
    sp = p.space
    H = md.lambda_hamiltonian(p).data
    u0 = sp.basis_index(atom=md.ATOM3["u"], cavity=0)
    e0 = sp.basis_index(atom=md.ATOM3["e"], cavity=0)
    assert H[u0, e0] == pytest.approx(cp.mhz(4.0) / 2)


@pytest.mark.parametrize("omega,delta", [(0.0, 0.0), (3.0, 0.0), (8.0, -2.0), (20.0, 5.0)])
def test_eit_spectrum_matches_block(omega, delta):
    p = lam(omega=omega * G, delta=delta * G)
    _, block = md.single_excitation_block(p)
    ev = np.sort(np.linalg.eigvalsh(block))
    e0, ep, em = md.eit_spectrum(p)
    assert np.allclose(ev, np.sort([e0, ep, em]), rtol=1e-10, atol=1e-10 * G)


def test_eit_reduces_to_vacuum_rabi_and_pushes_outward():
    e0, ep, em = md.eit_spectrum(lam())
    assert (e0, ep, em) == (0.0, pytest.approx(G), pytest.approx(-G))
    prev = ep
    for om in (1, 2, 4, 8):
        e0, ep, em = md.eit_spectrum(lam(omega=om * G))
        assert e0 == 0.0 and ep > prev and em == pytest.approx(-ep)
        prev = ep


def test_dark_state_examples():
    d = md.dark_state(G, 0.0)
    sp = d.space
    u0 = sp.basis_index(atom=md.ATOM3["u"], cavity=0)
    c1 = sp.basis_index(atom=md.ATOM3["c"], cavity=1)
    assert abs(d.amplitudes[u0] - 1) < 1e-15
    d = md.dark_state(G, 2 * G)
    assert np.allclose([d.amplitudes[u0], d.amplitudes[c1]], [1 / np.sqrt(2), -1 / np.sqrt(2)], atol=1e-15)
    with pytest.raises(ValueError):
        md.dark_state(0.0, 0.0)


def test_truncation_warning():
    p = jc(n_max=2)
    top = basis_state(p.space, atom=0, cavity=2).dm()
    with pytest.warns(md.TruncationWarning):
        md.check_truncation(top)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        md.check_truncation(basis_state(p.space, atom=0, cavity=0).dm())


def test_blockade_ladder_step():
    # drive resonant with |1,-> at -g; the lower-branch second rung sits (sqrt2 - 1) g below the first
    p = jc()
    _, e1m = md.dressed_spectrum(p, 1)
    _, e2m = md.dressed_spectrum(p, 2)
    assert e1m == pytest.approx(-G, rel=1e-14)
    assert abs(e2m) - abs(e1m) == pytest.approx((np.sqrt(2) - 1) * G, rel=1e-10)
    # two drive photons miss |2,-> by (2 - sqrt2) g
    assert e2m - 2 * e1m == pytest.approx((2 - np.sqrt(2)) * G, rel=1e-10)


def test_far_detuned_flag():
    r = cp.RateSet(g=G, kappa_l=1.0, delta_u=11 * G)
    assert md.LambdaParams(r).u_far_detuned
    assert not md.LambdaParams(r.with_(delta_u=5 * G)).u_far_detuned


gs = st.floats(0.1, 10.0)


@given(gs, st.floats(-10, 10), st.integers(2, 6))
def test_excitation_number_conserved(g, d, n_max):
    p = md.JCParams(cp.RateSet(g=g, kappa_l=1.0, gamma=1.0, delta_ac=d * g), n_max=n_max)
    H = md.jc_hamiltonian(p).data
    see, n = md.number_ops(p)
    Nop = see.data + n.data
    comm = H @ Nop - Nop @ H
    assert np.max(np.abs(comm)) <= 1e-12 * max(1.0, np.max(np.abs(H)))


@given(gs, st.floats(0, 20), st.floats(-10, 10))
def test_dark_state_has_no_excited_component(g, om, d):
    p = md.LambdaParams(cp.RateSet(g=g, kappa_l=1.0, gamma=1.0, delta_ac=d * g, omega_l=om * g), n_max=1)
    ds = md.dark_state(g, om * g)
    assert abs(ds.norm - 1) < 1e-12
    out = md.lambda_hamiltonian(p).data @ ds.amplitudes
    assert np.allclose(out, 0, atol=1e-12 * g * max(1, om, abs(d)))
    theta = np.arctan2(om * g, 2 * g)
    sp = ds.space
    bright = np.zeros(sp.dim, complex)
    bright[sp.basis_index(atom=md.ATOM3["u"], cavity=0)] = np.sin(theta)
    bright[sp.basis_index(atom=md.ATOM3["c"], cavity=1)] = np.cos(theta)
    assert abs(np.vdot(bright, ds.amplitudes)) < 1e-12


@given(gs, st.floats(-10, 10), st.integers(1, 4))
def test_dressed_ordering(g, d, N):
    ep, em = md.dressed_spectrum(md.JCParams(cp.RateSet(g=g, kappa_l=1.0, delta_ac=d * g), n_max=4), N)
    assert ep >= em
