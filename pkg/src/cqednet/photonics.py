"""Flying qubits: polarization algebra, beam splitters, two-photon interference, Bell measurement, loss.

Conventions
-----------
* Polarization basis order is (L, R); H = (L + R)/sqrt2, V = i(L - R)/sqrt2.
* Polarization labels are defined relative to the record's propagation
  direction.  Converting between the emitted (-z) and impinging (+z)
  direction swaps L and R.
* Beam splitter: a_C = (a_A + a_B)/sqrt2, a_D = (a_B - a_A)/sqrt2.
* The Bell measurement analyses photons in the {H, V} basis; Bell states
  passed to it are written in that basis.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product
from typing import Literal

import numpy as np
from scipy.special import erf

SQ2 = np.sqrt(2.0)
# columns: H, V expressed in (L, R)
HV_TO_LR = np.array([[1, 1j], [1, -1j]], dtype=complex) / SQ2
LR_TO_HV = HV_TO_LR.conj().T

DEFAULT_DT = 1e-9


# ------------------------------------------------------------------ qubits

@dataclass(frozen=True, eq=False)
class PolarizationQubit:
    amplitudes: np.ndarray  # (L, R)

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).reshape(2)
        if abs(np.linalg.norm(v) - 1) > 1e-10:
            raise ValueError("polarization qubit must be normalized")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def from_hv(cls, h: complex, v: complex) -> "PolarizationQubit":
        return cls(HV_TO_LR @ np.array([h, v], dtype=complex))

    def hv(self) -> np.ndarray:
        return LR_TO_HV @ self.amplitudes

    def flipped(self) -> "PolarizationQubit":
        """Same field seen from the opposite propagation direction."""
        return PolarizationQubit(self.amplitudes[::-1])

    def overlap(self, other: "PolarizationQubit") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


L = PolarizationQubit([1, 0])
R = PolarizationQubit([0, 1])
H = PolarizationQubit.from_hv(1, 0)
V = PolarizationQubit.from_hv(0, 1)


def flip_direction_dm(rho: np.ndarray) -> np.ndarray:
    """L<->R relabeling of a single-photon polarization density matrix."""
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    return X @ rho @ X


# ------------------------------------------------------------------ envelopes

def gaussian_envelope(sigma_t: float, dt: float = DEFAULT_DT, duration: float | None = None,
                      center: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude envelope whose intensity is Gaussian with standard deviation sigma_t."""
    duration = 12 * sigma_t if duration is None else duration
    center = duration / 2 if center is None else center
    t = np.arange(0.0, duration, dt)
    amp = np.exp(-((t - center) ** 2) / (4 * sigma_t ** 2)).astype(complex)
    return t, _normalize(amp, dt)


def exponential_envelope(decay_time: float, dt: float = DEFAULT_DT, duration: float | None = None,
                         delay: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Intensity exp(-(t - delay)/decay_time) for t >= delay."""
    duration = delay + 15 * decay_time if duration is None else duration
    t = np.arange(0.0, duration, dt)
    amp = np.where(t >= delay, np.exp(-(t - delay) / (2 * decay_time)), 0.0).astype(complex)
    return t, _normalize(amp, dt)


def _normalize(amp: np.ndarray, dt: float) -> np.ndarray:
    nrm = np.sqrt(np.sum(np.abs(amp) ** 2) * dt)
    if nrm == 0:
        raise ValueError("envelope has zero norm")
    return amp / nrm


def envelope_overlap(env_a: np.ndarray, env_b: np.ndarray, dt: float = DEFAULT_DT) -> float:
    """|<env_a|env_b>| for envelopes on a common grid."""
    return float(abs(np.vdot(env_a, env_b) * dt))


@dataclass(frozen=True, eq=False)
class PhotonRecord:
    polarization: PolarizationQubit
    frequency_detuning: float = 0.0
    envelope: np.ndarray | None = None
    dt: float = DEFAULT_DT
    present: float = 1.0  # presence probability; 1 - present is vacuum
    direction: Literal["emitted", "impinging"] = "emitted"

    def __post_init__(self):
        if not 0 <= self.present <= 1:
            raise ValueError("presence probability must lie in [0, 1]")
        if self.envelope is not None:
            env = np.array(self.envelope, dtype=complex)
            if self.present > 0 and abs(np.sum(np.abs(env) ** 2) * self.dt - 1) > 1e-9:
                raise ValueError("envelope must be L2-normalized")
            env.setflags(write=False)
            object.__setattr__(self, "envelope", env)

    def as_impinging(self) -> "PhotonRecord":
        if self.direction == "impinging":
            return self
        return replace(self, polarization=self.polarization.flipped(), direction="impinging")

    def as_emitted(self) -> "PhotonRecord":
        if self.direction == "emitted":
            return self
        return replace(self, polarization=self.polarization.flipped(), direction="emitted")


def loss_channel(photon: PhotonRecord, eta: float, rng: np.random.Generator | None = None) -> PhotonRecord:
    """Survival with probability eta; polarization untouched when the photon survives."""
    if not 0 <= eta <= 1:
        raise ValueError("survival probability must lie in [0, 1]")
    if rng is None:
        return replace(photon, present=photon.present * eta)
    alive = photon.present > 0 and rng.random() < eta * (1.0 if photon.present == 1 else photon.present)
    return replace(photon, present=1.0 if alive else 0.0)


def sample_survivals(eta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random(n) < eta


# -------------------------------------------------------------- beam splitter

@dataclass(frozen=True)
class FockState:
    """At most two photons over labeled modes; keys are occupation tuples."""

    modes: tuple
    amps: dict

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amps.values())))

    def probabilities(self) -> dict:
        return {k: abs(a) ** 2 for k, a in self.amps.items() if abs(a) > 0}

    def amplitude(self, **occ) -> complex:
        key = tuple(occ.get(_mode_key(m), 0) for m in self.modes)
        return self.amps.get(key, 0.0)


def _mode_key(mode) -> str:
    return "_".join(map(str, mode)) if isinstance(mode, tuple) else str(mode)


def fock(modes: tuple, **occ) -> FockState:
    key = tuple(occ.get(_mode_key(m), 0) for m in modes)
    if sum(key) > 2:
        raise ValueError("occupancy above truncation (2 photons)")
    return FockState(tuple(modes), {key: 1.0 + 0j})


def apply_linear_optics(state: FockState, out_modes: tuple, creation_map: dict) -> FockState:
    """Transform each input creation operator to a sum over output creation operators.

    creation_map[in_mode] = {out_mode: coefficient}.
    """
    from math import factorial

    out_index = {m: i for i, m in enumerate(out_modes)}
    result: dict = {}
    for occ, amp in state.amps.items():
        if sum(occ) > 2:
            raise ValueError("occupancy above truncation (2 photons)")
        if amp == 0:
            continue
        # |n> = prod (a_i^dag)^{n_i} / sqrt(n_i!) |0>
        ops = []
        pref = amp
        for m, n in zip(state.modes, occ):
            ops += [creation_map[m]] * n
            pref /= np.sqrt(factorial(n))
        terms = [({}, pref)]
        for op in ops:
            nxt = []
            for counts, c in terms:
                for om, coef in op.items():
                    cc = dict(counts)
                    cc[om] = cc.get(om, 0) + 1
                    nxt.append((cc, c * coef))
            terms = nxt
        for counts, c in terms:
            key = [0] * len(out_modes)
            norm = 1.0
            for om, k in counts.items():
                key[out_index[om]] = k
                norm *= np.sqrt(factorial(k))
            key = tuple(key)
            result[key] = result.get(key, 0) + c * norm
    return FockState(tuple(out_modes), {k: v for k, v in result.items() if abs(v) > 1e-15})


def beamsplitter(state: FockState) -> FockState:
    """50/50 beam splitter on input ports A, B -> outputs C, D; polarization rides along.

    Modes are tuples (port, pol) or bare port names.
    """
    out_modes, cmap = [], {}
    for m in state.modes:
        port, pol = (m if isinstance(m, tuple) else (m, None))
        if port not in ("A", "B"):
            raise ValueError(f"input modes must be on ports A/B, got {m!r}")
        c = ("C", pol) if pol is not None else "C"
        d = ("D", pol) if pol is not None else "D"
        for om in (c, d):
            if om not in out_modes:
                out_modes.append(om)
        # a_A^dag -> (a_C^dag - a_D^dag)/sqrt2, a_B^dag -> (a_C^dag + a_D^dag)/sqrt2
        sgn = -1.0 if port == "A" else 1.0
        cmap[m] = {c: 1 / SQ2, d: sgn / SQ2}
    return apply_linear_optics(state, tuple(out_modes), cmap)


def relabel_outputs_as_inputs(state: FockState) -> FockState:
    """Feed outputs back with D -> A and C -> B (the reflection-symmetric identification)."""
    ren = {"D": "A", "C": "B"}
    modes = tuple((ren[m[0]], m[1]) if isinstance(m, tuple) else ren[m] for m in state.modes)
    return FockState(modes, dict(state.amps))


# -------------------------------------------------- two-photon interference

def hom_contrast(delta_p, tau):
    """Probability that the second photon leaves through the same port as the first."""
    return 0.5 * (1 + np.cos(np.asarray(delta_p) * np.asarray(tau)))


def conditioned_state_after_first_click(delta_p: float, tau: float, port: Literal["C", "D"] = "C") -> np.ndarray:
    """Single-photon state over (|1_A,0_B>, |0_A,1_B>) after a click in `port`, evolved by tau."""
    sgn = 1.0 if port == "C" else -1.0
    return np.array([1.0, sgn * np.exp(1j * delta_p * tau)]) / SQ2


def same_port_probability(state: np.ndarray, port: Literal["C", "D"]) -> float:
    """Projection of a single photon over (A, B) onto an output port."""
    proj = np.array([1.0, 1.0]) / SQ2 if port == "C" else np.array([-1.0, 1.0]) / SQ2
    return float(abs(np.dot(proj, state)) ** 2)


def coincidence_probability(amp_a1, amp_a2, amp_b1, amp_b2, parallel: bool = True):
    """Probability that photons detected at times (t1, t2) leave through different ports.

    amp_x_k is photon x's complex amplitude (envelope times frequency phase)
    at detection time t_k.  Zero at t1 == t2 for any envelopes and detunings.
    """
    if not parallel:
        return 0.5 * np.ones(np.shape(amp_a1))
    direct = np.abs(amp_a1 * amp_b2) ** 2
    swapped = np.abs(amp_a2 * amp_b1) ** 2
    cross = np.real(amp_a1 * amp_b2 * np.conj(amp_a2 * amp_b1))
    den = direct + swapped
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(den > 0, 0.5 - cross / np.where(den > 0, den, 1.0), 0.0)
    return np.clip(q, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Single-photon source for interference experiments."""

    times: np.ndarray
    envelope: np.ndarray
    frequency: float = 0.0  # offset from the common carrier (rad/s)
    jitter: float = 0.0  # shot-to-shot std of the frequency offset (rad/s)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @classmethod
    def gaussian(cls, sigma_t: float, frequency: float = 0.0, jitter: float = 0.0,
                 dt: float = DEFAULT_DT, duration: float | None = None) -> "SourceSpec":
        t, env = gaussian_envelope(sigma_t, dt, duration)
        return cls(t, env, frequency, jitter)


@dataclass
class HomHistogram:
    edges: np.ndarray  # seconds
    parallel: np.ndarray
    orthogonal: np.ndarray
    pairs_parallel: np.ndarray  # detected pairs per bin in the parallel run, any port

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.orthogonal > 0, self.parallel / np.maximum(self.orthogonal, 1), np.nan)

    @property
    def coincidence_fraction(self) -> np.ndarray:
        """Parallel coincidences per detected pair: estimates 1 - C(tau)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.pairs_parallel > 0, self.parallel / np.maximum(self.pairs_parallel, 1), np.nan)

    def integrated_contrast(self, window: float | None = None) -> float:
        m = np.ones(self.centers.size, bool) if window is None else np.abs(self.centers) < window
        return 1.0 - self.parallel[m].sum() / self.orthogonal[m].sum()

    def __add__(self, other: "HomHistogram") -> "HomHistogram":
        return HomHistogram(self.edges, self.parallel + other.parallel, self.orthogonal + other.orthogonal,
                            self.pairs_parallel + other.pairs_parallel)


def _sample_times(src: SourceSpec, n: int, rng: np.random.Generator):
    p = np.abs(src.envelope) ** 2
    p = p / p.sum()
    idx = rng.choice(p.size, size=n, p=p)
    return src.times[idx] + rng.random(n) * src.dt


def _amplitude(src: SourceSpec, t: np.ndarray, omega: np.ndarray) -> np.ndarray:
    env = np.interp(t, src.times, src.envelope.real) + 1j * np.interp(t, src.times, src.envelope.imag)
    return env * np.exp(-1j * omega * t)


def _hom_shard(src_a: SourceSpec, src_b: SourceSpec, n: int, edges: np.ndarray, rng: np.random.Generator):
    out = []
    for parallel in (True, False):
        ta = _sample_times(src_a, n, rng)
        tb = _sample_times(src_b, n, rng)
        wa = src_a.frequency + src_a.jitter * rng.standard_normal(n)
        wb = src_b.frequency + src_b.jitter * rng.standard_normal(n)
        q = coincidence_probability(_amplitude(src_a, ta, wa), _amplitude(src_a, tb, wa),
                                    _amplitude(src_b, ta, wb), _amplitude(src_b, tb, wb), parallel)
        hit = rng.random(n) < q
        sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        tau = sign * (tb - ta)
        counts, _ = np.histogram(tau[hit], edges)
        pairs, _ = np.histogram(tau, edges)
        out.append((counts, pairs))
    (par, pairs_par), (orth, _) = out
    return HomHistogram(edges, par, orth, pairs_par)


def hom_monte_carlo(src_a: SourceSpec, src_b: SourceSpec, trials: int, seed: int,
                    bin_width: float = 10e-9, max_tau: float | None = None,
                    shard_size: int = 50_000, workers: int = 1) -> HomHistogram:
    """Parallel- and orthogonal-polarization coincidence histograms versus tau = t_D - t_C.

    Trials are split into fixed-size shards, each seeded from the shard index,
    so the result does not depend on the number of workers.
    """
    from .rng import map_shards, shard_sizes

    if trials <= 0:
        raise ValueError("trials must be positive")
    if not np.allclose(src_a.times, src_b.times):
        raise ValueError("envelopes must share a common grid")
    span = src_a.times[-1] - src_a.times[0] if max_tau is None else max_tau
    nb = int(np.ceil(span / bin_width))
    edges = bin_width * np.arange(-nb, nb + 1)
    sizes = shard_sizes(trials, shard_size)
    parts = map_shards(_hom_shard_task, [(src_a, src_b, n, edges) for n in sizes], seed, workers)
    total = parts[0]
    for h in parts[1:]:
        total = total + h
    return total


def _hom_shard_task(args, rng):
    return _hom_shard(*args, rng)


def gaussian_jitter_contrast(sigma_t: float, jitter: float, window: float | None = None) -> float:
    """Average interference contrast for identical Gaussian envelopes and Gaussian frequency jitter.

    tau ~ N(0, 2 sigma_t^2); contrast(tau) = exp(-jitter^2 tau^2 / 2); optional |tau| < window.
    """
    v = 2 * sigma_t ** 2
    full = 1 / np.sqrt(1 + v * jitter ** 2)
    if window is None:
        return float(full)
    num = erf(window * np.sqrt((1 / v + jitter ** 2) / 2))
    den = erf(window / np.sqrt(2 * v))
    return float(full * num / den)


def gaussian_window_fraction(sigma_t: float, window: float) -> float:
    """P(|tau| < window) for identical Gaussian envelopes."""
    return float(erf(window / (2 * sigma_t)))


def bisect(f, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of a monotone function by bisection; f(lo) and f(hi) must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ValueError("bisection bracket does not contain a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < tol * max(1.0, abs(mid)):
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fit_jitter(sigma_t: float, target_contrast: float) -> float:
    """Frequency jitter giving the requested integrated contrast."""
    return bisect(lambda s: gaussian_jitter_contrast(sigma_t, s) - target_contrast, 0.0, 100 / sigma_t)


# ----------------------------------------------------------- Bell measurement

BSM_RESULTS = ("PsiPlus", "PsiMinus", "Fail")


def bell_vectors_hv() -> dict[str, np.ndarray]:
    """Bell states over (H, V) x (H, V), first photon first."""
    s = 1 / SQ2
    return {
        "PhiPlus": np.array([s, 0, 0, s], complex),
        "PhiMinus": np.array([s, 0, 0, -s], complex),
        "PsiPlus": np.array([0, s, s, 0], complex),
        "PsiMinus": np.array([0, s, -s, 0], complex),
    }


def bsm_povm(indistinguishability: float = 1.0, detector_efficiency: float = 1.0) -> dict[str, np.ndarray]:
    """POVM elements of the linear-optics Bell measurement in the {H,V} analysis basis.

    Partial distinguishability mixes the two Psi heralds; detector inefficiency
    moves weight into Fail.
    """
    vis = float(indistinguishability)
    eta2 = float(detector_efficiency) ** 2
    b = bell_vectors_hv()
    P = {k: np.outer(v, v.conj()) for k, v in b.items()}
    psi = P["PsiPlus"] + P["PsiMinus"]
    e_minus = eta2 * (vis * P["PsiMinus"] + (1 - vis) * 0.5 * psi)
    e_plus = eta2 * (vis * P["PsiPlus"] + (1 - vis) * 0.5 * psi)
    return {"PsiPlus": e_plus, "PsiMinus": e_minus, "Fail": np.eye(4) - e_plus - e_minus}


def bell_measurement(rho_hv: np.ndarray, indistinguishability: float = 1.0,
                     detector_efficiency: float = 1.0, photon_number: int = 2) -> dict[str, float]:
    """Outcome distribution for a two-photon polarization state in the {H,V} basis.

    Any photon number other than two fails.
    """
    if photon_number != 2:
        return {"PsiPlus": 0.0, "PsiMinus": 0.0, "Fail": 1.0}
    rho = np.asarray(rho_hv, dtype=complex)
    if rho.shape == (4,):
        rho = np.outer(rho, rho.conj())
    povm = bsm_povm(indistinguishability, detector_efficiency)
    return {k: float(np.real(np.trace(E @ rho))) for k, E in povm.items()}


def port_pattern(result: str, rng: np.random.Generator) -> tuple[str, str]:
    """Detector pair for a herald: Psi- clicks in different ports, Psi+ in one port with orthogonal pols."""
    if result == "PsiMinus":
        return ("C_H", "D_V") if rng.random() < 0.5 else ("C_V", "D_H")
    if result == "PsiPlus":
        return ("C_H", "C_V") if rng.random() < 0.5 else ("D_H", "D_V")
    return ("", "")


def sample_bell_measurement(rho_hv: np.ndarray, n: int, rng: np.random.Generator, **kw) -> np.ndarray:
    probs = bell_measurement(rho_hv, **kw)
    p = np.array([probs[k] for k in BSM_RESULTS])
    p = np.clip(p, 0, None)
    return rng.choice(np.array(BSM_RESULTS), size=n, p=p / p.sum())


def two_photon_fock_bsm(pol_state_hv: np.ndarray) -> dict[str, float]:
    """Brute-force Bell measurement through the four-mode beam-splitter transform.

    Input amplitudes over (H,V)x(H,V) for photons in ports A and B.
    """
    modes = (("A", "H"), ("A", "V"), ("B", "H"), ("B", "V"))
    amps = {}
    for (i, pa), (j, pb) in product(enumerate("HV"), enumerate("HV")):
        c = pol_state_hv[2 * i + j]
        if c == 0:
            continue
        key = [0, 0, 0, 0]
        key[modes.index(("A", pa))] += 1
        key[modes.index(("B", pb))] += 1
        amps[tuple(key)] = amps.get(tuple(key), 0) + c
    out = beamsplitter(FockState(modes, amps))
    res = {"PsiPlus": 0.0, "PsiMinus": 0.0, "Fail": 0.0}
    for occ, a in out.amps.items():
        p = abs(a) ** 2
        clicks = {m: k for m, k in zip(out.modes, occ) if k}
        ports = {m[0] for m in clicks}
        pols = {m[1] for m in clicks}
        if len(clicks) == 2 and pols == {"H", "V"}:
            res["PsiMinus" if len(ports) == 2 else "PsiPlus"] += p
        else:
            res["Fail"] += p
    return res
