"""Tomography, channel fidelity, parity analysis and a Bayesian atom-number filter."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .qcore import PAULI, DensityMatrix, HilbertSpace, StateVector

PAULI_LABELS = ("X", "Y", "Z")
_ALL = {"I": np.eye(2, dtype=complex), **{k: PAULI[k] for k in PAULI_LABELS}}


def _eigvecs(label: str) -> np.ndarray:
    """Columns: +1 eigenvector, -1 eigenvector."""
    w, v = np.linalg.eigh(_ALL[label])
    return v[:, ::-1]


@dataclass(frozen=True)
class MeasurementRecord:
    """Counts for one Pauli setting; outcome '0' means eigenvalue +1 on that qubit."""

    setting: str
    counts: Mapping[str, float]

    def __post_init__(self):
        if not self.setting or any(c not in PAULI_LABELS for c in self.setting):
            raise ValueError(f"setting {self.setting!r} must be a string over X, Y, Z")
        n = len(self.setting)
        for k, v in self.counts.items():
            if len(k) != n or any(ch not in "01" for ch in k):
                raise ValueError(f"outcome {k!r} does not match setting {self.setting!r}")
            if v < 0 or not np.isfinite(v):
                raise ValueError("counts must be finite and nonnegative")
        if self.total <= 0:
            raise ValueError(f"setting {self.setting} has no counts")

    @property
    def total(self) -> float:
        return float(sum(self.counts.values()))

    def expectation(self, mask: Sequence[bool]) -> float:
        """<product of the masked Pauli factors>."""
        s = 0.0
        for k, v in self.counts.items():
            sign = (-1) ** sum(int(ch) for ch, m in zip(k, mask) if m)
            s += sign * v
        return s / self.total


def outcome_probabilities(rho: np.ndarray, setting: str) -> dict[str, float]:
    n = len(setting)
    U = np.array([[1.0]])
    for c in setting:
        U = np.kron(U, _eigvecs(c))
    p = np.real(np.einsum("ij,jk,ki->i", U.conj().T, rho, U))
    p = np.clip(p, 0, None)
    p /= p.sum()
    return {"".join(b): float(p[i]) for i, b in enumerate(itertools.product("01", repeat=n))}


def exact_records(rho: DensityMatrix | np.ndarray, n_qubits: int | None = None) -> list[MeasurementRecord]:
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho)
    n = int(round(np.log2(r.shape[0]))) if n_qubits is None else n_qubits
    return [MeasurementRecord("".join(s), outcome_probabilities(r, "".join(s)))
            for s in itertools.product(PAULI_LABELS, repeat=n)]


def sample_records(rho: DensityMatrix | np.ndarray, shots: int, rng: np.random.Generator,
                   readout_fidelity: float = 1.0) -> list[MeasurementRecord]:
    """Multinomial counts per setting; each bit misread with probability 1 - readout_fidelity."""
    out = []
    for rec in exact_records(rho):
        keys = list(rec.counts)
        p = np.array([rec.counts[k] for k in keys])
        if readout_fidelity < 1:
            n = len(rec.setting)
            flip = np.array([[readout_fidelity, 1 - readout_fidelity], [1 - readout_fidelity, readout_fidelity]])
            M = np.array([[1.0]])
            for _ in range(n):
                M = np.kron(M, flip)
            p = M @ p
        c = rng.multinomial(shots, p / p.sum())
        out.append(MeasurementRecord(rec.setting, dict(zip(keys, c.astype(float)))))
    return out


def project_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize."""
    h = 0.5 * (rho + rho.conj().T)
    w, v = np.linalg.eigh(h)
    w = np.clip(w, 0, None)
    if w.sum() <= 0:
        return np.eye(rho.shape[0]) / rho.shape[0]
    w /= w.sum()
    return (v * w) @ v.conj().T


def tomography(records: Sequence[MeasurementRecord]) -> DensityMatrix:
    """Linear inversion from Pauli expectations, then PSD projection."""
    if not records:
        raise ValueError("no records")
    n = len(records[0].setting)
    if n > 2 or any(len(r.setting) != n for r in records):
        raise ValueError("records must all cover the same 1 or 2 qubits")
    by_setting: dict[str, list[MeasurementRecord]] = {}
    for r in records:
        by_setting.setdefault(r.setting, []).append(r)
    need = {"".join(s) for s in itertools.product(PAULI_LABELS, repeat=n)}
    missing = need - set(by_setting)
    if missing:
        raise ValueError(f"incomplete settings, missing {sorted(missing)}")
    # merge repeated settings
    merged = {}
    for s, rs in by_setting.items():
        c: dict[str, float] = {}
        for r in rs:
            for k, v in r.counts.items():
                c[k] = c.get(k, 0.0) + v
        merged[s] = MeasurementRecord(s, c)
    dim = 2 ** n
    rho = np.zeros((dim, dim), complex)
    for ops in itertools.product("IXYZ", repeat=n):
        mask = [o != "I" for o in ops]
        if not any(mask):
            val = 1.0
        else:
            # every setting agreeing on the non-identity factors estimates this term
            vals = [rec.expectation(mask) for s, rec in merged.items()
                    if all(o == "I" or o == c for o, c in zip(ops, s))]
            val = float(np.mean(vals))
        P = np.array([[1.0]])
        for o in ops:
            P = np.kron(P, _ALL[o])
        rho += val * P
    rho /= dim
    space = HilbertSpace(tuple((f"q{i}", 2) for i in range(n)))
    return DensityMatrix(space, project_psd(rho))


SIX_STATES = {
    "+z": np.array([1, 0], complex),
    "-z": np.array([0, 1], complex),
    "+x": np.array([1, 1], complex) / np.sqrt(2),
    "-x": np.array([1, -1], complex) / np.sqrt(2),
    "+y": np.array([1, 1j], complex) / np.sqrt(2),
    "-y": np.array([1, -1j], complex) / np.sqrt(2),
}


def process_average_fidelity(channel: Callable) -> float:
    """Mean <psi|channel(psi)|psi> over the six Pauli eigenstates.

    channel takes and returns a 2x2 density matrix (ndarray or DensityMatrix);
    outputs are trace-normalized before comparison.
    """
    fs = []
    for v in SIX_STATES.values():
        out = channel(np.outer(v, v.conj()))
        out = out.data if isinstance(out, DensityMatrix) else np.asarray(out)
        fs.append(np.real(np.vdot(v, out @ v)) / np.real(np.trace(out)))
    return float(np.mean(fs))


# ---------------------------------------------------------------- parity

def _rot(theta: float, phi: float) -> np.ndarray:
    n = np.cos(phi) * PAULI["X"] + np.sin(phi) * PAULI["Y"]
    return np.cos(theta / 2) * np.eye(2) + 1j * np.sin(theta / 2) * n


@dataclass(frozen=True)
class ParityScan:
    phases: np.ndarray
    parity: np.ndarray
    mode: str

    def __post_init__(self):
        if np.any(np.abs(self.parity) > 1 + 1e-9):
            raise ValueError("parity outside [-1, 1]")

    def offset(self) -> float:
        """Mean over a uniform full-period grid."""
        return float(np.mean(self.parity))

    def amplitude(self, harmonic: int = 2) -> float:
        """Fourier amplitude at the given harmonic of phi; needs a uniform full-period grid."""
        c = np.mean(self.parity * np.exp(-1j * harmonic * self.phases))
        return float(2 * abs(c))


def parity(rho: np.ndarray) -> float:
    """p0 + p2 - p1 with p_k the probability of k atoms in the first basis state."""
    p = np.real(np.diag(rho))
    return float(p[0] + p[3] - p[1] - p[2])


def parity_scan(rho: DensityMatrix | np.ndarray, mode: str = "two_pulse", phases=None) -> ParityScan:
    """Common pi/2 rotation(s) on both qubits, then parity.

    one_pulse: a single pi/2 pulse with phase phi.
    two_pulse: pi/2 at phase 0, then pi/2 at phase phi.
    """
    r = rho.data if isinstance(rho, DensityMatrix) else np.asarray(rho, complex)
    if r.shape != (4, 4):
        raise ValueError("parity scan needs a two-qubit state")
    phases = np.linspace(0, 2 * np.pi, 64, endpoint=False) if phases is None else np.asarray(phases, float)
    out = []
    for ph in phases:
        if mode == "one_pulse":
            U1 = _rot(np.pi / 2, ph)
        elif mode == "two_pulse":
            U1 = _rot(np.pi / 2, ph) @ _rot(np.pi / 2, 0.0)
        else:
            raise ValueError("mode must be 'one_pulse' or 'two_pulse'")
        U = np.kron(U1, U1)
        out.append(parity(U @ r @ U.conj().T))
    return ParityScan(phases, np.array(out), mode)


def bell_fidelity_from_parity(populations: Sequence[float], one_pulse_scan: ParityScan) -> float:
    """Overlap with (|01> + |10>)/sqrt2 from z populations and a one-pulse parity scan.

    The scan offset equals <XX + YY>/2 = 2 Re rho_{01,10}.
    """
    if one_pulse_scan.mode != "one_pulse":
        raise ValueError("needs a one-pulse scan")
    p = np.asarray(populations, float)
    return float(0.5 * (p[1] + p[2]) + 0.5 * one_pulse_scan.offset())


# ------------------------------------------------------------- Bayesian filter

DEFAULT_LEVELS = (1.0, 0.7, 0.4)  # relative transmission for 0, 1, 2 atoms
DEFAULT_BIN = 10e-6  # s


@dataclass(frozen=True)
class FilterResult:
    posterior: np.ndarray  # (bins, states)
    map_state: np.ndarray

    def __post_init__(self):
        if not np.allclose(self.posterior.sum(axis=1), 1, atol=1e-12):
            raise ValueError("posterior rows must sum to 1")


def transition_matrix(rate: float, dt: float, n_states: int = 3) -> np.ndarray:
    """expm(Q dt) for a symmetric generator with off-diagonal rate."""
    if not (np.isfinite(rate) and np.isfinite(dt)) or rate < 0 or dt <= 0:
        raise ValueError("rate and bin width must be finite, rate >= 0, dt > 0")
    Q = np.full((n_states, n_states), rate)
    np.fill_diagonal(Q, -(n_states - 1) * rate)
    return expm(Q * dt)


def bayesian_two_atom_filter(counts: Sequence[int], base_rate: float, levels: Sequence[float] = DEFAULT_LEVELS,
                             bin_width: float = DEFAULT_BIN, transition_rate: float = 100.0,
                             prior: Sequence[float] | None = None) -> FilterResult:
    """Forward filter over atom number alpha given photon counts per bin.

    base_rate is the empty-cavity count rate (1/s); level alpha gives mean
    base_rate * levels[alpha] * bin_width counts per bin.
    """
    lv = np.asarray(levels, float)
    if not np.all(np.isfinite(lv)) or not np.isfinite(base_rate) or base_rate <= 0 or np.any(lv < 0):
        raise ValueError("rates must be finite and positive")
    c = np.asarray(counts)
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    mu = base_rate * lv * bin_width
    T = transition_matrix(transition_rate, bin_width, lv.size)
    post = np.empty((c.size, lv.size))
    belief = np.full(lv.size, 1 / lv.size) if prior is None else np.asarray(prior, float) / np.sum(prior)
    logmu = np.log(np.where(mu > 0, mu, 1.0))
    for i, k in enumerate(c):
        belief = belief @ T
        # Poisson log-likelihood up to a k-dependent constant
        ll = np.where(mu > 0, k * logmu - mu, np.where(k == 0, 0.0, -np.inf))
        ll -= ll.max()
        belief = belief * np.exp(ll)
        belief /= belief.sum()
        post[i] = belief
    return FilterResult(post, post.argmax(axis=1))


def simulate_telegraph(n_bins: int, base_rate: float, rng: np.random.Generator,
                       levels: Sequence[float] = DEFAULT_LEVELS, bin_width: float = DEFAULT_BIN,
                       transition_rate: float = 100.0, start: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(states, counts) from the same Markov model the filter assumes."""
    lv = np.asarray(levels, float)
    T = transition_matrix(transition_rate, bin_width, lv.size)
    s = np.empty(n_bins, int)
    s[0] = rng.integers(lv.size) if start is None else start
    u = rng.random(n_bins)
    cum = np.cumsum(T, axis=1)
    for i in range(1, n_bins):
        s[i] = min(int(np.searchsorted(cum[s[i - 1]], u[i])), lv.size - 1)
    counts = rng.poisson(base_rate * lv[s] * bin_width)
    return s, counts
