"""Node-level network primitives with ideal maps and error-degraded maps.

Basis conventions (index 0 first):
    atom qubit      (up, down)      up = m_F=+1, down = m_F=-1
    photon qubit    (L, R)          labels relative to the record's direction
    gate photon     (up_p, down_p)  up_p = R, down_p = L (impinging)
    gate atom       (up_a, down_a)  up_a = coupled level c, down_a = u

Photons leave a node travelling "emitted" and enter one "impinging"; the
label flip between the two is applied by ``PhotonRecord.as_impinging`` so
that emission followed by storage is the identity.

Error channels:
    depolarizing "of fidelity f"   rho -> f rho + (1 - f) tr(rho) I/d
    mode mismatch per reflection   rho -> xi U rho U^dag + (1 - xi) rho
    scattering before emission     photon replaced by I/2, emission delayed
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from . import photonics as ph
from .estimate import SIX_STATES, process_average_fidelity
from .qcore import (
    PAULI,
    DensityMatrix,
    HilbertSpace,
    StateVector,
    depolarize,
    fidelity_pure,
    partial_trace,
)

SQ2 = np.sqrt(2.0)
UP, DOWN = 0, 1
I2 = np.eye(2, dtype=complex)
X, Y, Z = PAULI["X"], PAULI["Y"], PAULI["Z"]

ATOM = HilbertSpace((("atom", 2),))
PHOTON = HilbertSpace((("photon", 2),))


@dataclass(frozen=True)
class ErrorModel:
    prep_fidelity: float = 1.0
    mode_matching: float = 1.0
    scattering_prob: float = 0.0
    detector_efficiency: float = 1.0
    memory_dephasing_rate: float = 0.0  # 1/s
    readout_fidelity: float = 1.0
    emission_efficiency: float = 1.0
    storage_efficiency: float = 1.0
    reflection_prob: float = 1.0
    phase: float = 0.0  # residual phase on the down_a branch of reflection gates (rad)
    storage_time: float = 0.0  # s
    photon_decay_time: float = 100e-9  # s, intensity decay of the coherent wavepacket
    scatter_delay_time: float = 500e-9  # s, mean extra delay of scattered emission

    def __post_init__(self):
        for name in ("prep_fidelity", "mode_matching", "scattering_prob", "detector_efficiency",
                     "readout_fidelity", "emission_efficiency", "storage_efficiency", "reflection_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} must lie in [0, 1]")
        for name in ("memory_dephasing_rate", "storage_time", "photon_decay_time", "scatter_delay_time"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not np.isfinite(self.phase):
            raise ValueError("phase must be finite")

    def with_(self, **kw) -> "ErrorModel":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


IDEAL = ErrorModel()


@dataclass
class ProtocolOutcome:
    success: bool
    state: DensityMatrix | None
    efficiency_weight: float
    label: str = ""
    meta: dict = field(default_factory=dict)


@dataclass
class ProtocolResult:
    branches: list[ProtocolOutcome]

    def __post_init__(self):
        tot = sum(b.efficiency_weight for b in self.branches)
        if abs(tot - 1) > 1e-9:
            raise ValueError(f"branch weights sum to {tot}, not 1")

    @property
    def efficiency(self) -> float:
        return float(sum(b.efficiency_weight for b in self.branches if b.success))

    def successes(self) -> list[ProtocolOutcome]:
        return [b for b in self.branches if b.success and b.efficiency_weight > 0]

    def conditional_state(self) -> DensityMatrix:
        """Success-weighted mixture of the heralded states."""
        ok = self.successes()
        if not ok:
            raise ValueError("protocol never succeeds")
        w = np.array([b.efficiency_weight for b in ok])
        rho = sum(wi * b.state.data for wi, b in zip(w, ok)) / w.sum()
        return DensityMatrix(ok[0].state.space, rho)


# -------------------------------------------------------------- small helpers

def _dm(x) -> np.ndarray:
    if isinstance(x, DensityMatrix):
        return np.asarray(x.data)
    if isinstance(x, StateVector):
        v = x.amplitudes
        return np.outer(v, v.conj())
    if isinstance(x, ph.PolarizationQubit):
        v = x.amplitudes
        return np.outer(v, v.conj())
    a = np.asarray(x, dtype=complex)
    if a.ndim == 1:
        a = a / np.linalg.norm(a)
        return np.outer(a, a.conj())
    return a


def dep1(rho: np.ndarray, f: float) -> np.ndarray:
    """Single-qubit depolarizing of fidelity f."""
    return f * rho + (1 - f) * np.trace(rho) * I2 / 2


def dephase(rho: np.ndarray, rate: float, t: float) -> np.ndarray:
    if rate == 0 or t == 0:
        return rho
    c = np.exp(-rate * t)
    out = rho.copy()
    out[0, 1] *= c
    out[1, 0] *= c
    return out


def qubit(theta: float, phi: float) -> np.ndarray:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


six_state_average = process_average_fidelity


def _atom_dm(rho) -> DensityMatrix:
    return DensityMatrix(ATOM, rho)


def _photon_dm(rho) -> DensityMatrix:
    return DensityMatrix(PHOTON, rho)


# ------------------------------------------------------------------ rotations

def rotation_matrix(theta: float, phi: float, tilt: float = 0.0) -> np.ndarray:
    """exp(i theta n.sigma / 2) with n along (cos phi, sin phi, tilt), normalized."""
    n = np.array([np.cos(phi), np.sin(phi), tilt], dtype=float)
    n /= np.linalg.norm(n)
    ns = n[0] * X + n[1] * Y + n[2] * Z
    return np.cos(theta / 2) * I2 + 1j * np.sin(theta / 2) * ns


def bloch_rotation(q, theta: float, phi: float, tilt: float = 0.0):
    U = rotation_matrix(theta, phi, tilt)
    if isinstance(q, DensityMatrix):
        return DensityMatrix(q.space, U @ q.data @ U.conj().T)
    if isinstance(q, StateVector):
        return StateVector(q.space, U @ q.amplitudes)
    a = np.asarray(q, dtype=complex)
    return U @ a if a.ndim == 1 else U @ a @ U.conj().T


def rabi_trace(thetas, err: ErrorModel = IDEAL, phi: float = 0.0) -> np.ndarray:
    """P(down) after rotating a prepared |down> by each angle, with prep and readout errors."""
    rho0 = dep1(_dm(SIX_STATES["-z"]), err.prep_fidelity)
    out = []
    for th in np.atleast_1d(thetas):
        r = bloch_rotation(rho0, th, phi)
        r = dep1(r, err.readout_fidelity)
        out.append(np.real(r[DOWN, DOWN]))
    return np.array(out)


# ---------------------------------------------------------- emission / storage

def emit_state_transfer(atom, err: ErrorModel = IDEAL) -> ProtocolResult:
    """Map the atomic qubit onto an emitted photon: up -> L, down -> R; the atom ends in m_F=0."""
    rho = dep1(_dm(atom), err.prep_fidelity)
    eta, s = err.emission_efficiency, err.scattering_prob
    return ProtocolResult([
        ProtocolOutcome(True, _photon_dm(rho), eta * (1 - s), "coherent", {"direction": "emitted"}),
        ProtocolOutcome(True, _photon_dm(I2 / 2), eta * s, "scattered", {"direction": "emitted"}),
        ProtocolOutcome(False, None, 1 - eta, "no_photon"),
    ])


ENTANGLED_IDEAL = np.array([0, -1, 1, 0], complex) / SQ2  # (|down,L> - |up,R>)/sqrt2 over (atom, photon)
ATOM_PHOTON = HilbertSpace((("atom", 2), ("photon", 2)))


def emit_entangled_photon(err: ErrorModel = IDEAL) -> ProtocolResult:
    """Atom-photon entanglement from m_F=0; scattered emission leaves both parties mixed."""
    rho = np.outer(ENTANGLED_IDEAL, ENTANGLED_IDEAL.conj())
    rho = depolarize(rho, err.prep_fidelity, [0], (2, 2))
    eta, s = err.emission_efficiency, err.scattering_prob
    return ProtocolResult([
        ProtocolOutcome(True, DensityMatrix(ATOM_PHOTON, rho), eta * (1 - s), "coherent", {"direction": "emitted"}),
        ProtocolOutcome(True, DensityMatrix(ATOM_PHOTON, np.eye(4) / 4), eta * s, "scattered", {"direction": "emitted"}),
        ProtocolOutcome(False, None, 1 - eta, "no_photon"),
    ])


# impinging L -> down, R -> up
STORE_MAP = X


def store_map(rho_photon: np.ndarray, err: ErrorModel = IDEAL, direction: str = "impinging") -> np.ndarray:
    rho = _dm(rho_photon)
    if direction == "emitted":
        rho = ph.flip_direction_dm(rho)
    rho = STORE_MAP @ rho @ STORE_MAP.conj().T
    rho = dep1(rho, err.prep_fidelity)
    return dephase(rho, err.memory_dephasing_rate, err.storage_time)


def store_photon(photon, err: ErrorModel = IDEAL) -> ProtocolResult:
    """Absorb a photon into the Zeeman qubit of an atom initialized in m_F=0."""
    if isinstance(photon, ph.PhotonRecord):
        rho, direction, present = _dm(photon.polarization), photon.direction, photon.present
    else:
        rho, direction, present = _dm(photon), "impinging", 1.0
    w = present * err.storage_efficiency
    branches = [ProtocolOutcome(False, None, 1 - w, "not_stored")]
    if w > 0:
        branches.insert(0, ProtocolOutcome(True, _atom_dm(store_map(rho, err, direction)), w, "stored"))
    return ProtocolResult(branches)


def memory_channel(err: ErrorModel = IDEAL) -> Callable[[np.ndarray], np.ndarray]:
    """Impinging photon -> stored -> retrieved photon (compared in the impinging frame), readout included."""

    def channel(rho_in):
        atom = store_map(rho_in, err, "impinging")
        retrieval = err.with_(prep_fidelity=1.0)
        res = emit_state_transfer(atom, retrieval)
        out = _conditional(res)
        out = ph.flip_direction_dm(out)
        return dep1(out, err.readout_fidelity)

    return channel


def memory_efficiency(err: ErrorModel) -> float:
    return err.storage_efficiency * err.emission_efficiency


def _conditional(res: ProtocolResult) -> np.ndarray:
    return np.asarray(res.conditional_state().data)


def swap_by_reflection(atom, photon):
    """Reflection of a photon from a Purcell-regime node exchanges the qubits.

    (a_p L + b_p R)(a_a down + b_a up) -> (a_a L + b_a R)(a_p down + b_p up).
    State vectors give (atom, photon) vectors; density matrices give the joint
    (atom, photon) density matrix.
    """
    a, p = np.asarray(atom, complex), np.asarray(photon, complex)
    if a.ndim == 1 and p.ndim == 1:
        return X @ p, X @ a
    U = swap_unitary()
    rho = np.kron(_dm(a), _dm(p))
    return U @ rho @ U.conj().T


def swap_unitary() -> np.ndarray:
    """Joint (atom, photon) unitary: photon index = 1 - atom index and vice versa."""
    U = np.zeros((4, 4), complex)
    for ia in range(2):
        for ip in range(2):
            U[(1 - ip) * 2 + (1 - ia), ia * 2 + ip] = 1.0
    return U


# ------------------------------------------------------------ remote protocols

def remote_state_transfer(sender, channel_eta: float, err_a: ErrorModel = IDEAL,
                          err_b: ErrorModel = IDEAL) -> ProtocolResult:
    """Emit at A, transmit, store at B; readout error at B applied to the heralded state."""
    emitted = emit_state_transfer(sender, err_a)
    branches = []
    for b in emitted.branches:
        if not b.success:
            branches.append(ProtocolOutcome(False, None, b.efficiency_weight, "no_photon"))
            continue
        w = b.efficiency_weight * channel_eta * err_b.storage_efficiency
        atom = dep1(store_map(b.state.data, err_b, "emitted"), err_b.readout_fidelity)
        branches.append(ProtocolOutcome(True, _atom_dm(atom), w, b.label))
        branches.append(ProtocolOutcome(False, None, b.efficiency_weight - w, f"{b.label}_lost"))
    return ProtocolResult(branches)


def remote_state_transfer_fidelity(channel_eta: float, err_a: ErrorModel, err_b: ErrorModel) -> float:
    return six_state_average(lambda rho: _conditional(remote_state_transfer(rho, channel_eta, err_a, err_b)))


TWO_ATOMS = HilbertSpace((("atom_A", 2), ("atom_B", 2)))
PSI_MINUS = np.array([0, 1, -1, 0], complex) / SQ2


def _click_fractions(err: ErrorModel, t_cut: float | None) -> tuple[float, float]:
    """Fraction of coherent and scattered photons detected before t_cut."""
    if t_cut is None:
        return 1.0, 1.0
    tc, ts = err.photon_decay_time, err.scatter_delay_time
    p_coh = 1 - np.exp(-t_cut / tc)
    if abs(ts - tc) < 1e-15:
        p_sc = 1 - np.exp(-t_cut / tc) * (1 + t_cut / tc)
    else:
        # emission after an exponential delay: hypoexponential CDF
        p_sc = 1 - (ts * np.exp(-t_cut / ts) - tc * np.exp(-t_cut / tc)) / (ts - tc)
    return float(p_coh), float(p_sc)


def remote_entangle(channel_eta: float, err_a: ErrorModel = IDEAL, err_b: ErrorModel = IDEAL,
                    t_cut: float | None = None) -> ProtocolResult:
    """Entangle atom A with a photon, store the photon in atom B.

    t_cut keeps only photons detected before t_cut after the emission trigger,
    which rejects delayed emission after scattering.
    """
    emitted = emit_entangled_photon(err_a)
    f_coh, f_sc = _click_fractions(err_a, t_cut)
    X2 = np.kron(I2, STORE_MAP @ X)  # flip to impinging, then store
    branches = []
    for b in emitted.branches:
        if not b.success:
            branches.append(ProtocolOutcome(False, None, b.efficiency_weight, "no_photon"))
            continue
        frac = f_coh if b.label == "coherent" else f_sc
        w = b.efficiency_weight * channel_eta * err_b.storage_efficiency * frac
        rho = X2 @ b.state.data @ X2.conj().T
        rho = depolarize(rho, err_b.prep_fidelity, [1], (2, 2))
        rho = depolarize(rho, err_a.readout_fidelity, [0], (2, 2))
        rho = depolarize(rho, err_b.readout_fidelity, [1], (2, 2))
        branches.append(ProtocolOutcome(True, DensityMatrix(TWO_ATOMS, rho), w, b.label))
        branches.append(ProtocolOutcome(False, None, b.efficiency_weight - w, f"{b.label}_rejected"))
    return ProtocolResult(branches)


def entanglement_fidelity(res: ProtocolResult) -> float:
    return fidelity_pure(StateVector(TWO_ATOMS, PSI_MINUS), res.conditional_state())


def atom_photon_fidelity(err: ErrorModel, err_readout: ErrorModel | None = None) -> float:
    """Fidelity with the ideal atom-photon state after mapping the atom onto a second photon.

    The atomic qubit is read out by a second emission (scattering of err) and
    both photons by polarization tomography (readout_fidelity of err_readout).
    """
    err_readout = err if err_readout is None else err_readout
    res = emit_entangled_photon(err)
    rho = _conditional(res)
    # scattering during the mapping emission replaces the atom's photon by I/2
    rho = depolarize(rho, 1 - err.scattering_prob, [0], (2, 2))
    rho = depolarize(rho, err_readout.readout_fidelity, [0, 1], (2, 2))
    return fidelity_pure(StateVector(ATOM_PHOTON, ENTANGLED_IDEAL), DensityMatrix(ATOM_PHOTON, rho))


# ------------------------------------------------------------------ teleportation

BELL_LOGICAL = ph.bell_vectors_hv()  # logical basis, photons analysed with L->H, R->V
CORRECTIONS = {"PsiMinus": I2, "PsiPlus": Z, "PhiMinus": X, "PhiPlus": Z @ X}


def teleport_ideal_branches(sender) -> dict[str, tuple[float, np.ndarray]]:
    """Complete Bell measurement on (sender photon, resource photon); returns {outcome: (p, corrected B state)}."""
    phi = np.asarray(sender, complex)
    res_bc = -PSI_MINUS  # (|down,L> - |up,R>)/sqrt2 as (B, C)
    psi = np.kron(phi, res_bc).reshape(2, 2, 2)  # A, B, C
    out = {}
    for k, b in BELL_LOGICAL.items():
        v = np.einsum("ac,abc->b", b.reshape(2, 2).conj(), psi)
        p = float(np.real(np.vdot(v, v)))
        out[k] = (p, CORRECTIONS[k] @ v / np.sqrt(p))
    return out


@dataclass(frozen=True)
class TeleportSetup:
    heralds: tuple[str, ...] = ("PsiMinus", "PsiPlus")
    envelope_sigma: float | None = None  # s, Gaussian intensity std of both photons
    jitter: float = 0.0  # rad/s, relative frequency jitter
    window: float | None = None  # s, coincidence window |tau| < window

    def indistinguishability(self) -> float:
        if self.envelope_sigma is None:
            return 1.0
        return ph.gaussian_jitter_contrast(self.envelope_sigma, self.jitter, self.window)

    def window_fraction(self) -> float:
        if self.envelope_sigma is None or self.window is None:
            return 1.0
        return ph.gaussian_window_fraction(self.envelope_sigma, self.window)


def teleport(sender, err_a: ErrorModel = IDEAL, err_b: ErrorModel = IDEAL,
             setup: TeleportSetup = TeleportSetup(), channel_eta: tuple[float, float] = (1.0, 1.0)) -> ProtocolResult:
    """Photonic Bell measurement between A's emitted photon and B's entangled photon.

    Efficiency factors: emission at A and B, channel and detector efficiencies
    of each photon, the coincidence-window fraction, and the heralded share of
    the Bell measurement.
    """
    for h in setup.heralds:
        if h not in ("PsiMinus", "PsiPlus"):
            raise ValueError(f"linear optics cannot herald {h}")
    a_res = emit_state_transfer(sender, err_a)
    bc_res = emit_entangled_photon(err_b)
    vis = setup.indistinguishability()
    wf = setup.window_fraction()
    eta_det = np.sqrt(err_a.detector_efficiency * channel_eta[0] * err_b.detector_efficiency * channel_eta[1])
    povm = ph.bsm_povm(vis, eta_det)
    branches = []
    spent = 0.0
    for ba in a_res.successes():
        for bb in bc_res.successes():
            w0 = ba.efficiency_weight * bb.efficiency_weight * wf
            # joint (A, B, C) with B the atom of the entangled pair
            rho = np.kron(ba.state.data, bb.state.data).reshape([2] * 6)
            for k in setup.heralds:
                E = povm[k].reshape(2, 2, 2, 2)  # (a, c, a', c')
                rb = np.einsum("ACac,abcABC->bB", E, rho)
                # einsum above traces E against the (a,c) ket/bra pair
                p = float(np.real(np.trace(rb)))
                if p <= 0:
                    continue
                U = CORRECTIONS[k]
                rb = U @ (rb / p) @ U.conj().T
                rb = dep1(rb, err_b.readout_fidelity)
                label = f"{k}:{ba.label}/{bb.label}"
                branches.append(ProtocolOutcome(True, _atom_dm(rb), w0 * p, label))
                spent += w0 * p
    branches.append(ProtocolOutcome(False, None, 1 - spent, "fail"))
    return ProtocolResult(branches)


def teleport_fidelity(err_a: ErrorModel, err_b: ErrorModel, setup: TeleportSetup) -> float:
    return six_state_average(lambda rho: _conditional(teleport(rho, err_a, err_b, setup)))


# ------------------------------------------------------------ reflection gate

CPHASE = np.diag([1.0, -1.0, -1.0, -1.0]).astype(complex)  # (up_a, down_a) x (up_p, down_p)
HADAMARD = np.array([[1, 1], [1, -1]], complex) / SQ2  # z <-> x basis for the photon


def atom_photon_cphase(state: np.ndarray, photon_index: int = 1, n_qubits: int | None = None) -> np.ndarray:
    """Apply the reflection phase gate between qubit 0 (atom) and qubit `photon_index`."""
    st = np.asarray(state, complex)
    dim = st.shape[0]
    n = int(round(np.log2(dim))) if n_qubits is None else n_qubits
    U = _two_qubit_on(CPHASE, 0, photon_index, n)
    return U @ st if st.ndim == 1 else U @ st @ U.conj().T


def _two_qubit_on(U2: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """Embed a two-qubit gate acting on qubits (i, j) of an n-qubit register."""
    dim = 2 ** n
    out = np.zeros((dim, dim), complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - k)) & 1 for k in range(n)]
        sub_in = bits[i] * 2 + bits[j]
        for sub_out in range(4):
            amp = U2[sub_out, sub_in]
            if amp == 0:
                continue
            nb = list(bits)
            nb[i], nb[j] = sub_out >> 1, sub_out & 1
            row = sum(b << (n - 1 - k) for k, b in enumerate(nb))
            out[row, col] += amp
    return out


def reflect(rho: np.ndarray, photon_index: int, n: int, err: ErrorModel = IDEAL) -> np.ndarray:
    """One reflection with mode matching xi: matched part gets the gate, the rest is unaffected."""
    U = _two_qubit_on(CPHASE, 0, photon_index, n)
    return err.mode_matching * (U @ rho @ U.conj().T) + (1 - err.mode_matching) * rho


def cnot_truth_table(err: ErrorModel = IDEAL) -> np.ndarray:
    """P(photon out | atom in z, photon in x): rows (down_a, up_a) x (up_x, down_x) inputs."""
    Hp = np.kron(I2, HADAMARD)
    rows = []
    for a in (DOWN, UP):
        for p in (0, 1):
            v = np.zeros(4, complex)
            v[a * 2 + p] = 1.0
            rho = Hp @ np.outer(v, v.conj()) @ Hp.conj().T  # photon prepared in the x basis
            rho = depolarize(rho, err.prep_fidelity, [0], (2, 2))
            rho = reflect(rho, 1, 2, err)
            rho = Hp.conj().T @ rho @ Hp
            rho = depolarize(rho, err.readout_fidelity, [1], (2, 2))
            red = partial_trace(DensityMatrix(HilbertSpace((("a", 2), ("p", 2))), rho), ["p"]).data
            rows.append(np.real(np.diag(red)))
    return np.array(rows)


def truth_table_fidelities(table: np.ndarray) -> tuple[float, float]:
    """Mean probability of the correct output for control down_a (unchanged) and up_a (flipped)."""
    keep = 0.5 * (table[0, 0] + table[1, 1])
    flip = 0.5 * (table[2, 1] + table[3, 0])
    return float(keep), float(flip)


X_UP = np.array([1, 1], complex) / SQ2
X_DOWN = np.array([1, -1], complex) / SQ2


def _x_basis_bell(kind: str) -> np.ndarray:
    """Atom z-basis x photon x-basis Bell states, or photon-photon x-basis states."""
    s = 1 / SQ2
    if kind == "atom_photon_psi_plus":  # (up_a up_x + down_a down_x)/sqrt2
        return s * (np.kron([1, 0], X_UP) + np.kron([0, 1], X_DOWN))
    if kind == "phi_plus_x":
        return s * (np.kron(X_UP, X_UP) + np.kron(X_DOWN, X_DOWN))
    if kind == "phi_minus_x":
        return s * (np.kron(X_UP, X_UP) - np.kron(X_DOWN, X_DOWN))
    raise KeyError(kind)


def atom_photon_entangle(err: ErrorModel = IDEAL) -> np.ndarray:
    """Reflect a down_x photon from an atom in down_x."""
    v = np.kron(X_DOWN, X_DOWN)
    rho = np.outer(v, v.conj())
    rho = depolarize(rho, err.prep_fidelity, [0], (2, 2))
    rho = reflect(rho, 1, 2, err)
    return depolarize(rho, err.readout_fidelity, [0, 1], (2, 2))


def atom_photon_bell_fidelity(err: ErrorModel = IDEAL) -> float:
    psi = _x_basis_bell("atom_photon_psi_plus")
    return float(np.real(np.vdot(psi, atom_photon_entangle(err) @ psi)))


def ghz_ideal(phase: float = 0.0) -> np.ndarray:
    """(up_a up_x up_x - e^{-i phase} down_a down_x down_x)/sqrt2."""
    up = np.kron([1, 0], np.kron(X_UP, X_UP))
    dn = np.kron([0, 1], np.kron(X_DOWN, X_DOWN))
    return (up - np.exp(-1j * phase) * dn) / SQ2


def ghz_generate(err: ErrorModel = IDEAL, readout: bool = True) -> np.ndarray:
    """Reflect two down_x photons in sequence from an atom prepared in down_x.

    err.phase is the extra phase picked up by the down_a branch.
    """
    v = np.kron(X_DOWN, np.kron(X_DOWN, X_DOWN))
    rho = np.outer(v, v.conj())
    rho = depolarize(rho, err.prep_fidelity, [0], (2, 2, 2))
    rho = reflect(rho, 1, 3, err)
    rho = reflect(rho, 2, 3, err)
    P = np.kron(np.diag([1, np.exp(-1j * err.phase)]), np.eye(4))
    rho = P @ rho @ P.conj().T
    if readout:
        rho = depolarize(rho, err.readout_fidelity, [0, 1, 2], (2, 2, 2))
    return rho


def ghz_fidelity(err: ErrorModel = IDEAL) -> float:
    """Overlap with the GHZ state carrying the same phase as err.phase."""
    g = ghz_ideal(err.phase)
    return float(np.real(np.vdot(g, ghz_generate(err) @ g)))


def eraser_photon_photon(rho_ghz: np.ndarray, err: ErrorModel = IDEAL) -> ProtocolResult:
    """pi/2 rotation of the atom, then atom readout: up -> Phi-, down -> Phi+ (photon x basis)."""
    U = np.kron(rotation_matrix(np.pi / 2, np.pi / 2), np.eye(4))
    rho = U @ rho_ghz @ U.conj().T
    rho = depolarize(rho, err.readout_fidelity, [0], (2, 2, 2))
    sp = HilbertSpace((("photon_1", 2), ("photon_2", 2)))
    branches = []
    for a, label in ((UP, "atom_up"), (DOWN, "atom_down")):
        blk = rho.reshape(2, 4, 2, 4)[a, :, a, :]
        p = float(np.real(np.trace(blk)))
        branches.append(ProtocolOutcome(True, DensityMatrix(sp, blk / p), p, label))
    return ProtocolResult(branches)


def eraser_fidelity(err: ErrorModel = IDEAL) -> float:
    """Branch-averaged overlap with the photon pairs the ideal eraser gives at the same phase."""
    g = ghz_ideal(err.phase)
    ideal = {b.label: b.state.data for b in eraser_photon_photon(np.outer(g, g.conj())).branches}
    res = eraser_photon_photon(ghz_generate(err, readout=False), err)
    f = 0.0
    for b in res.branches:
        rho = depolarize(b.state.data, err.readout_fidelity, [0, 1], (2, 2))
        f += b.efficiency_weight * np.real(np.trace(ideal[b.label] @ rho))
    return float(f)


PSI_PLUS = np.array([0, 1, 1, 0], complex) / SQ2


def two_ion_entangled(err: ErrorModel = IDEAL) -> np.ndarray:
    """(|up,down> + |down,up>)/sqrt2 of two atoms after a heralded two-photon event.

    prep_fidelity depolarizes each atom independently; readout_fidelity acts at detection.
    """
    rho = np.outer(PSI_PLUS, PSI_PLUS.conj())
    rho = depolarize(rho, err.prep_fidelity, [0, 1], (2, 2))
    return depolarize(rho, err.readout_fidelity, [0, 1], (2, 2))


# --------------------------------------------------------- nondestructive detection

def parity_flip_probability(nbar: float) -> float:
    """Probability of an odd photon number in a coherent pulse."""
    return 0.5 * (1 - np.exp(-2 * nbar))


def nondestructive_detect(photon, err: ErrorModel = IDEAL) -> dict[str, float]:
    """Atom readout after a Ramsey sequence around one reflection.

    `photon` is True/False for a single photon or absent, or a float mean
    photon number of a coherent pulse.  Returns {"c": p, "u": 1 - p}: finding
    the atom in |c> signals a photon.
    """
    if isinstance(photon, (bool, np.bool_)):
        p_flip = float(photon)
    else:
        p_flip = parity_flip_probability(float(photon))
    # matched part of the reflected mode carries the conditional phase
    p_flip *= err.mode_matching
    f = err.prep_fidelity * err.readout_fidelity
    p_c = f * p_flip + (1 - f) / 2
    return {"c": float(p_c), "u": float(1 - p_c)}


def device_efficiency(err: ErrorModel) -> float:
    return nondestructive_detect(True, err)["c"]


def concatenated_efficiency(err: ErrorModel, k: int) -> float:
    """Detection probability over k devices in series.

    A photon missed by one device reaches the next only if it was reflected.
    """
    d = device_efficiency(err)
    q = (1 - d) * err.reflection_prob
    return float(d * sum(q ** j for j in range(k)))
