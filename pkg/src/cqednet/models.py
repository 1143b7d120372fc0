"""Hamiltonians, jump operators and closed-form eigenstructure.

Two-level atom levels are (c, e) = (0, 1); three-level atom levels are
(u, c, e) = (0, 1, 2).  The cavity factor is a Fock space truncated at n_max.
Default frame rotates at the cavity frequency, so only detunings appear and
energies are reported relative to N*omega_c.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .cqedparams import RateSet
from .qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    destroy,
    embed,
    partial_trace,
    projector,
)

ATOM2 = {"c": 0, "e": 1}
ATOM3 = {"u": 0, "c": 1, "e": 2}
TRUNCATION_WARN = 1e-6


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class JCParams:
    rates: RateSet
    n_max: int = 5
    frame: Literal["rotating", "lab"] = "rotating"
    omega_c: float = 0.0  # only used in the lab frame

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.frame not in ("rotating", "lab"):
            raise ValueError("frame must be 'rotating' or 'lab'")

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace((("atom", 2), ("cavity", self.n_max + 1)))


@dataclass(frozen=True)
class LambdaParams:
    rates: RateSet
    n_max: int = 3
    two_photon_detuning: float = 0.0
    dephasing_rate: float = 0.0

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace((("atom", 3), ("cavity", self.n_max + 1)))

    @property
    def u_far_detuned(self) -> bool:
        """True when |u> sits far enough from the cavity that its direct coupling is negligible."""
        return abs(self.rates.delta_u) > 10 * self.rates.g


@dataclass(frozen=True)
class DressedLevel:
    N: int
    branch: Literal["+", "-", "ground"]
    energy: float


# ------------------------------------------------------------------ operators

def cavity_ops(space: HilbertSpace):
    """(a, a^dag a) on the composite space."""
    n = space.dims[space.index_of("cavity")]
    a = embed(destroy(n), "cavity", space)
    return a, (a.dag @ a).as_hermitian()


def atom_op(space: HilbertSpace, i: int, j: int) -> Operator:
    d = space.dims[space.index_of("atom")]
    return embed(projector(d, i, j), "atom", space)


def number_ops(p: JCParams | LambdaParams):
    """(atomic excitation, photon number) operators."""
    sp = p.space
    levels = ATOM2 if isinstance(p, JCParams) else ATOM3
    e = levels["e"]
    _, n = cavity_ops(sp)
    return atom_op(sp, e, e).as_hermitian(), n


def jc_hamiltonian(p: JCParams) -> Operator:
    r = p.rates
    sp = p.space
    a, n = cavity_ops(sp)
    see = atom_op(sp, 1, 1)
    sigma = atom_op(sp, 0, 1)  # |c><e|
    coupling = r.g * (a.dag @ sigma + sigma.dag @ a)
    if p.frame == "rotating":
        H = r.delta_ac * see + coupling
    else:
        H = p.omega_c * n + (p.omega_c + r.delta_ac) * see + coupling
    return H.as_hermitian()


def lambda_hamiltonian(p: LambdaParams) -> Operator:
    r = p.rates
    sp = p.space
    u, c, e = ATOM3["u"], ATOM3["c"], ATOM3["e"]
    a, _ = cavity_ops(sp)
    s_ce = atom_op(sp, c, e)
    s_ue = atom_op(sp, u, e)
    H = (
        r.delta_ac * atom_op(sp, e, e)
        + p.two_photon_detuning * atom_op(sp, u, u)
        + r.g * (a.dag @ s_ce + s_ce.dag @ a)
        + (r.omega_l / 2) * (s_ue + s_ue.dag)
    )
    return H.as_hermitian()


def collapse_operators(p: JCParams | LambdaParams, dephasing_rate: float | None = None) -> list[Operator]:
    """[sqrt(2 gamma) sigma_ce, sqrt(2 kappa) a] plus optional ground-state dephasing."""
    r = p.rates
    sp = p.space
    a, _ = cavity_ops(sp)
    if isinstance(p, JCParams):
        s = atom_op(sp, ATOM2["c"], ATOM2["e"])
    else:
        s = atom_op(sp, ATOM3["c"], ATOM3["e"])
    Ls = [np.sqrt(2 * r.gamma) * s, np.sqrt(2 * r.kappa) * a]
    rate = dephasing_rate if dephasing_rate is not None else getattr(p, "dephasing_rate", 0.0)
    if rate:
        if isinstance(p, JCParams):
            raise ValueError("ground-state dephasing needs the three-level model")
        # coherence between u and c decays at `rate`
        Ls.append(np.sqrt(2 * rate) * atom_op(sp, ATOM3["u"], ATOM3["u"]))
    return Ls


# ------------------------------------------------------------ eigenstructure

def dressed_spectrum(p: JCParams, N: int) -> tuple[float, float]:
    """(E_{N,+}, E_{N,-}) of the N-excitation doublet."""
    if N < 1 or N > p.n_max:
        raise ValueError(f"N must lie in 1..{p.n_max}")
    r = p.rates
    root = np.sqrt(4 * r.g ** 2 * N + r.delta_ac ** 2)
    offset = N * p.omega_c if p.frame == "lab" else 0.0
    return offset + r.delta_ac / 2 + root / 2, offset + r.delta_ac / 2 - root / 2


def ladder(p: JCParams, n_top: int | None = None) -> list[DressedLevel]:
    n_top = p.n_max if n_top is None else n_top
    levels = [DressedLevel(0, "ground", 0.0)]
    for N in range(1, n_top + 1):
        ep, em = dressed_spectrum(p, N)
        levels += [DressedLevel(N, "+", ep), DressedLevel(N, "-", em)]
    return levels


def excitation_block(p: JCParams, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of (|e,N-1>, |c,N>) and the 2x2 block of the Hamiltonian."""
    sp = p.space
    idx = np.array([sp.basis_index(atom=1, cavity=N - 1), sp.basis_index(atom=0, cavity=N)])
    H = jc_hamiltonian(p).data
    return idx, H[np.ix_(idx, idx)]


def dressed_states(p: JCParams, N: int) -> tuple[StateVector, StateVector]:
    """(|N,+>, |N,->) as cos/sin mixtures of |e,N-1> and |c,N>."""
    if N < 1 or N > p.n_max:
        raise ValueError(f"N must lie in 1..{p.n_max}")
    r = p.rates
    theta = 0.5 * np.arctan2(2 * r.g * np.sqrt(N), r.delta_ac)
    sp = p.space
    ie = sp.basis_index(atom=1, cavity=N - 1)
    ic = sp.basis_index(atom=0, cavity=N)
    plus = np.zeros(sp.dim, complex)
    minus = np.zeros(sp.dim, complex)
    plus[ie], plus[ic] = np.cos(theta), np.sin(theta)
    minus[ie], minus[ic] = np.sin(theta), -np.cos(theta)
    return StateVector(sp, plus), StateVector(sp, minus)


def eit_spectrum(p: LambdaParams) -> tuple[float, float, float]:
    """(E0, E+, E-) of the single-excitation triplet at two-photon resonance, rotating frame."""
    r = p.rates
    root = np.sqrt(4 * r.g ** 2 + r.delta_ac ** 2 + r.omega_l ** 2)
    return 0.0, (r.delta_ac + root) / 2, (r.delta_ac - root) / 2


def single_excitation_block(p: LambdaParams) -> tuple[np.ndarray, np.ndarray]:
    """Indices of (|u,0>, |c,1>, |e,0>) and the 3x3 Hamiltonian block."""
    sp = p.space
    idx = np.array([
        sp.basis_index(atom=ATOM3["u"], cavity=0),
        sp.basis_index(atom=ATOM3["c"], cavity=1),
        sp.basis_index(atom=ATOM3["e"], cavity=0),
    ])
    H = lambda_hamiltonian(p).data
    return idx, H[np.ix_(idx, idx)]


def dark_state(g: float, omega_l: float, n_max: int = 1) -> StateVector:
    """cos(theta)|u,0> - sin(theta)|c,1> with tan(theta) = omega_l / 2g."""
    if g == 0 and omega_l == 0:
        raise ValueError("dark-state angle undefined for g = omega_l = 0")
    theta = np.arctan2(omega_l, 2 * g)
    sp = HilbertSpace((("atom", 3), ("cavity", n_max + 1)))
    v = np.zeros(sp.dim, complex)
    v[sp.basis_index(atom=ATOM3["u"], cavity=0)] = np.cos(theta)
    v[sp.basis_index(atom=ATOM3["c"], cavity=1)] = -np.sin(theta)
    return StateVector(sp, v)


# ---------------------------------------------------------------- truncation

def top_fock_population(rho: DensityMatrix) -> float:
    red = partial_trace(rho, ["cavity"])
    return float(np.real(red.data[-1, -1]))


def check_truncation(rho: DensityMatrix, label: str = "") -> float:
    """Warn when the highest retained Fock level carries more than 1e-6 population."""
    pop = top_fock_population(rho)
    if pop > TRUNCATION_WARN:
        warnings.warn(
            f"top Fock level population {pop:.2e} exceeds {TRUNCATION_WARN:g}{' in ' + label if label else ''}; "
            "increase n_max",
            TruncationWarning,
            stacklevel=2,
        )
    return pop
