"""Lindblad dynamics, steady states, input-output spectra and correlations.

Density matrices are vectorized row-major, so vec(A rho B) = (A kron B^T) vec(rho).

Phase convention for r and t: the closed forms use fields oscillating as
exp(+i omega t).  A master-equation simulation in the drive frame produces
the complex conjugate of that amplitude; ``weak_drive_response`` conjugates
before returning so both routes agree.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm, svd

from . import cqedparams as cp
from .cqedparams import RateSet
from .models import (
    ATOM2,
    JCParams,
    LambdaParams,
    atom_op,
    cavity_ops,
    check_truncation,
    collapse_operators,
    jc_hamiltonian,
)
from .qcore import DensityMatrix, HilbertSpace, Operator, basis_state, expectation

RTOL = 1e-9
ATOL = 1e-12
WEAK_DRIVE_MAX_EXCITATION = 1e-3


class IntegrationError(RuntimeError):
    def __init__(self, msg: str, drift: float = float("nan")):
        super().__init__(f"{msg} (achieved trace drift {drift:.3g})")
        self.drift = drift


class SteadyStateError(RuntimeError):
    pass


@dataclass
class EvolutionResult:
    times: np.ndarray
    states: list[DensityMatrix] | None
    expect: dict[str, np.ndarray]
    trace_drift: float
    min_eigenvalue: float


@dataclass(frozen=True)
class DriveSpec:
    target: Literal["cavity", "atom"] = "cavity"
    amplitude: float = 0.0  # cavity: input amplitude sqrt(photons/s); atom: Rabi frequency
    detuning: float = 0.0  # omega_drive - omega_c
    input_side: Literal["left", "right"] = "left"


@dataclass(frozen=True)
class SpectrumPoint:
    delta_c: float
    R: float
    T: float
    phase_r: float
    phase_t: float


@dataclass
class Spectrum:
    delta_c: np.ndarray
    R: np.ndarray
    T: np.ndarray
    phase_r: np.ndarray
    phase_t: np.ndarray

    def points(self) -> list[SpectrumPoint]:
        return [SpectrumPoint(*row) for row in zip(self.delta_c, self.R, self.T, self.phase_r, self.phase_t)]


# ---------------------------------------------------------------- Liouvillian

def liouvillian(H: Operator, Ls: Sequence[Operator]) -> np.ndarray:
    n = H.space.dim
    eye = np.eye(n)
    Hm = H.data
    sup = -1j * (np.kron(Hm, eye) - np.kron(eye, Hm.T))
    for L in Ls:
        Lm = L.data
        LdL = Lm.conj().T @ Lm
        sup += np.kron(Lm, Lm.conj()) - 0.5 * np.kron(LdL, eye) - 0.5 * np.kron(eye, LdL.T)
    return sup


def evolve(
    rho0: DensityMatrix,
    H: Operator,
    Ls: Sequence[Operator],
    t_grid,
    observables: dict[str, Operator] | None = None,
    store_states: bool = True,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> EvolutionResult:
    """Integrate the Lindblad equation on t_grid (adaptive DOP853, no renormalization)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a strictly increasing 1-d array")
    if H.space != rho0.space or any(L.space != rho0.space for L in Ls):
        raise ValueError("operators and initial state live on different spaces")
    n = rho0.space.dim
    sup = liouvillian(H, Ls)
    y0 = rho0.data.reshape(-1).astype(complex)
    if t.size == 1:
        ys = y0[:, None]
    elif not np.any(sup):
        ys = np.repeat(y0[:, None], t.size, axis=1)
    else:
        sol = solve_ivp(lambda _t, y: sup @ y, (t[0], t[-1]), y0, method="DOP853",
                        t_eval=t, rtol=rtol, atol=atol)
        if not sol.success:
            last = sol.y[:, -1].reshape(n, n) if sol.y.size else rho0.data
            raise IntegrationError(sol.message, abs(np.trace(last).real - 1))
        ys = sol.y
    mats = ys.T.reshape(t.size, n, n)
    traces = np.real(np.einsum("kii->k", mats))
    drift = float(np.max(np.abs(traces - 1)))
    herm = 0.5 * (mats + np.conj(np.transpose(mats, (0, 2, 1))))
    min_eig = float(np.min(np.linalg.eigvalsh(herm)))
    expect = {}
    for name, op in (observables or {}).items():
        expect[name] = np.real_if_close(np.einsum("ij,kji->k", op.data, mats))
    states = [DensityMatrix(rho0.space, m, check=False) for m in mats] if store_states else None
    return EvolutionResult(t, states, expect, drift, min_eig)


def evolve_piecewise(rho0: DensityMatrix, segments: Sequence[tuple[Operator, float, int]],
                     Ls: Sequence[Operator], observables: dict[str, Operator]) -> EvolutionResult:
    """Evolve through constant-Hamiltonian segments (H, duration, points per segment)."""
    times, expect = [], {k: [] for k in observables}
    rho, t0, drift, lo = rho0, 0.0, 0.0, np.inf
    for H, dur, pts in segments:
        grid = t0 + np.linspace(0.0, dur, pts + 1)
        res = evolve(rho, H, Ls, grid, observables, store_states=True)
        times.append(grid[1:])
        for k in observables:
            expect[k].append(res.expect[k][1:])
        rho = res.states[-1]
        drift, lo = max(drift, res.trace_drift), min(lo, res.min_eigenvalue)
        t0 += dur
    return EvolutionResult(np.concatenate(times), None, {k: np.concatenate(v) for k, v in expect.items()}, drift, lo)


# ---------------------------------------------------------------- steady state

def steady_state(H: Operator, Ls: Sequence[Operator], sup: np.ndarray | None = None) -> DensityMatrix:
    """Null vector of the Liouvillian via SVD, normalized to unit trace."""
    n = H.space.dim
    L = liouvillian(H, Ls) if sup is None else sup
    _, s, vh = svd(L)
    if s[-2] <= 1e-8 * s[0]:
        raise SteadyStateError(f"Liouvillian null space is degenerate (s[-2]/s[0] = {s[-2] / s[0]:.2e})")
    rho = vh[-1].conj().reshape(n, n)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(H.space, rho)


def drive_operator(space: HilbertSpace, rates: RateSet, drive: DriveSpec, atom_levels=ATOM2) -> Operator:
    """Coherent drive term in the frame rotating with the drive."""
    if drive.target == "cavity":
        a, _ = cavity_ops(space)
        k_in = rates.kappa_l if drive.input_side == "left" else rates.kappa_r
        eps = 1j * np.sqrt(2 * k_in) * drive.amplitude
        return (eps * a.dag + np.conj(eps) * a).as_hermitian()
    s = atom_op(space, atom_levels["c"], atom_levels["e"])
    return ((drive.amplitude / 2) * (s + s.dag)).as_hermitian()


def driven_jc_hamiltonian(p: JCParams, drive: DriveSpec) -> Operator:
    """JC Hamiltonian in the drive frame: cavity at -Delta_c, atom at -Delta_a."""
    rc = p.rates
    sp = p.space
    _, n = cavity_ops(sp)
    see = atom_op(sp, 1, 1)
    H0 = jc_hamiltonian(JCParams(rc, p.n_max))  # rotating at omega_c
    return (H0 - drive.detuning * (n + see) + drive_operator(sp, rc, drive)).as_hermitian()


def excitation(rho: DensityMatrix, p: JCParams) -> float:
    _, n = cavity_ops(p.space)
    see = atom_op(p.space, 1, 1)
    return float(np.real(expectation(n, rho) + expectation(see, rho)))


# ---------------------------------------------------------- input-output

def _cavity_response(p: RateSet, delta_c, delta_a):
    """(i Delta_a + gamma) / [(i Delta_c + kappa)(i Delta_a + gamma) + g^2]."""
    delta_c, delta_a = np.asarray(delta_c, float), np.asarray(delta_a, float)
    atom = 1j * delta_a + p.gamma
    if p.g == 0:
        # uncoupled atom: the ratio reduces to the empty cavity even where atom == 0
        return 1 / (1j * delta_c + p.kappa) + 0 * atom
    return atom / ((1j * delta_c + p.kappa) * atom + p.g ** 2)


def reflection_amplitude(p: RateSet, delta_c, delta_a):
    return 1 - 2 * p.kappa_l * _cavity_response(p, delta_c, delta_a)


def transmission_amplitude(p: RateSet, delta_c, delta_a):
    return 2 * np.sqrt(p.kappa_l * p.kappa_r) * _cavity_response(p, delta_c, delta_a)


def spectrum_scan(p: RateSet, grid, xi: float = 1.0) -> Spectrum:
    """Reflection and transmission versus probe detuning from the cavity (Delta_a = Delta_c - Delta_ac)."""
    if not 0 <= xi <= 1:
        raise ValueError("mode matching must lie in [0, 1]")
    dc = np.asarray(grid, dtype=float)
    da = dc - p.delta_ac
    r = reflection_amplitude(p, dc, da)
    t = transmission_amplitude(p, dc, da)
    R = (1 - xi) + xi * np.abs(r) ** 2
    return Spectrum(dc, R, np.abs(t) ** 2, np.angle(r), np.angle(t))


def weak_drive_response(p: JCParams, delta_c: float, alpha: float | None = None,
                        max_excitation: float = WEAK_DRIVE_MAX_EXCITATION):
    """Master-equation r and t for a weak coherent drive from the left.

    Returns (r, t, excitation).  The drive amplitude defaults to a value that
    keeps the steady-state excitation near 1e-8.
    """
    rc = p.rates
    if alpha is None:
        alpha = 1e-4 * np.sqrt(rc.kappa)
    drive = DriveSpec("cavity", alpha, delta_c, "left")
    H = driven_jc_hamiltonian(p, drive)
    rho = steady_state(H, collapse_operators(p))
    exc = excitation(rho, p)
    if exc > max_excitation:
        raise ValueError(f"steady-state excitation {exc:.3g} exceeds the weak-drive bound {max_excitation:g}")
    a, _ = cavity_ops(p.space)
    amp = expectation(a, rho)
    r = np.conj((alpha - np.sqrt(2 * rc.kappa_l) * amp) / alpha)
    t = np.conj(np.sqrt(2 * rc.kappa_r) * amp / alpha)
    return complex(r), complex(t), exc


def eit_transmission(p: LambdaParams, delta_c):
    """Weak-probe transmission of the three-level system; control on u-e, probe detuning delta_c."""
    r = p.rates
    dc = np.asarray(delta_c, float)
    da = dc - r.delta_ac
    raman = np.atleast_1d(1j * (dc - p.two_photon_detuning) + p.dephasing_rate)
    chi = np.atleast_1d(1j * da + r.gamma).astype(complex)
    # control-dressed ground coherence; exact Raman resonance without dephasing blocks the atom
    blocked = np.zeros(chi.shape, bool)
    if r.omega_l != 0:
        blocked = np.broadcast_to(raman == 0, chi.shape)
        safe = np.where(raman == 0, 1.0, raman)
        chi = chi + (r.omega_l / 2) ** 2 / safe
    atom = np.where(blocked, 0.0, r.g ** 2 / np.where(blocked, 1.0, chi))
    out = 2 * np.sqrt(r.kappa_l * r.kappa_r) / ((1j * dc + r.kappa) + atom.reshape(dc.shape))
    return out


# ------------------------------------------------------------- time domain

def excited_vacuum(p: JCParams) -> DensityMatrix:
    return basis_state(p.space, atom=ATOM2["e"], cavity=0).dm()


def vacuum_rabi_trace(p: JCParams, delta_ac: float, t_grid) -> np.ndarray:
    """Cavity emission rate 2 kappa <a^dag a>(t) starting from |e,0>."""
    pp = JCParams(p.rates.with_(delta_ac=delta_ac), p.n_max)
    _, n = cavity_ops(pp.space)
    res = evolve(excited_vacuum(pp), jc_hamiltonian(pp), collapse_operators(pp), t_grid,
                 {"n": n}, store_states=False)
    return 2 * p.rates.kappa * np.real(res.expect["n"])


def purcell_decay_rate(p: JCParams, delta_ac: float = 0.0, n_points: int = 400,
                       max_residual: float = 0.02) -> float:
    """Population decay rate of |e,0> from a log-linear fit after the cavity transient."""
    r = p.rates.with_(delta_ac=delta_ac)
    if r.kappa < 10 * r.g:
        warnings.warn("kappa < 10 g: outside the Purcell regime, decay need not be exponential", stacklevel=2)
    pp = JCParams(r, max(p.n_max, 1))
    guess = 2 * (r.gamma + cp.purcell_rate(r.g, r.kappa, delta_ac))
    t_start = 10 / r.kappa
    t_end = t_start + 3 / guess
    t = np.linspace(0.0, t_end, n_points)
    see = atom_op(pp.space, ATOM2["e"], ATOM2["e"])
    res = evolve(excited_vacuum(pp), jc_hamiltonian(pp), collapse_operators(pp), t,
                 {"pe": see}, store_states=False)
    pe = np.real(res.expect["pe"])
    m = t >= t_start
    # fit on the envelope; coherent exchange with the cavity is adiabatically slaved
    y = np.log(pe[m])
    slope, icpt = np.polyfit(t[m], y, 1)
    resid = np.sqrt(np.mean((y - (slope * t[m] + icpt)) ** 2))
    if resid > max_residual:
        raise RuntimeError(f"population decay is not exponential (log residual {resid:.3g})")
    return float(-slope)


# ---------------------------------------------------------------- correlations

def g2(rho_ss: DensityMatrix, a: Operator, sup: np.ndarray, tau_grid) -> np.ndarray:
    """Normalized intensity correlation by quantum regression, symmetric in tau."""
    n = rho_ss.space.dim
    nbar = float(np.real(np.trace(a.data.conj().T @ a.data @ rho_ss.data)))
    if nbar <= 0:
        raise ValueError("g2 undefined for zero mean photon number")
    num_op = a.data.conj().T @ a.data
    cond = (a.data @ rho_ss.data @ a.data.conj().T).reshape(-1)
    taus = np.abs(np.asarray(tau_grid, dtype=float))
    out = np.empty(taus.size)
    for i, tau in enumerate(taus):
        v = cond if tau == 0 else expm(sup * tau) @ cond
        out[i] = np.real(np.trace(num_op @ v.reshape(n, n))) / nbar ** 2
    return out


def driven_g2(p: JCParams, drive: DriveSpec, tau_grid) -> tuple[np.ndarray, DensityMatrix]:
    """Steady-state g2(tau) of the intracavity field under a coherent cavity drive."""
    H = driven_jc_hamiltonian(p, drive)
    Ls = collapse_operators(p)
    sup = liouvillian(H, Ls)
    rho = steady_state(H, Ls, sup)
    check_truncation(rho, "driven_g2")
    a, _ = cavity_ops(p.space)
    return g2(rho, a, sup, tau_grid), rho
