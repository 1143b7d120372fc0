"""Named ErrorModel presets and a registry of evaluable protocols.

Parameter values are fits produced by scripts/calibrate_presets.py; each
reproduces one measured fidelity or efficiency.  They are calibration
outputs, not first-principles predictions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import estimate
from . import protocols as P
from .rng import map_shards, shard_sizes

E = P.ErrorModel


@dataclass(frozen=True)
class ProtocolPreset:
    err_a: P.ErrorModel = P.IDEAL
    err_b: P.ErrorModel = P.IDEAL
    channel_eta: float = 1.0
    t_cut: float | None = None
    teleport: P.TeleportSetup = field(default_factory=P.TeleportSetup)
    detector_channel: tuple[float, float] = (1.0, 1.0)
    target_fidelity: float | None = None
    target_efficiency: float | None = None


_ENT_RO = 0.991295
_ENT_S = 0.185889
_GATE = dict(mode_matching=0.867347, readout_fidelity=0.98)
_TELE_SETUP = P.TeleportSetup(heralds=("PsiMinus",), envelope_sigma=1.77532e-07, jitter=5.02661e6)

PRESETS: dict[str, dict[str, ProtocolPreset]] = {
    "ideal": {},
    "paper2007": {
        "rabi": ProtocolPreset(E(prep_fidelity=0.99, readout_fidelity=0.99), target_fidelity=0.98),
        "emit": ProtocolPreset(E(prep_fidelity=0.868687, readout_fidelity=0.99), target_fidelity=0.93),
        "entangle_photon": ProtocolPreset(E(readout_fidelity=0.90185), target_fidelity=0.86),
    },
    "paper2011": {
        "memory": ProtocolPreset(E(prep_fidelity=0.868687, readout_fidelity=0.99), target_fidelity=0.93),
    },
    "paper2012": {
        "state_transfer": ProtocolPreset(
            E(prep_fidelity=0.842601, scattering_prob=_ENT_S, emission_efficiency=0.03),
            E(readout_fidelity=_ENT_RO, storage_efficiency=0.20),
            channel_eta=0.34, target_fidelity=0.84, target_efficiency=0.002),
        "remote_entangle": ProtocolPreset(
            E(readout_fidelity=_ENT_RO, scattering_prob=_ENT_S, emission_efficiency=0.40),
            E(readout_fidelity=_ENT_RO, storage_efficiency=0.14),
            channel_eta=0.34, target_fidelity=0.85, target_efficiency=0.02),
        "memory": ProtocolPreset(E(prep_fidelity=0.868687, readout_fidelity=0.99), target_fidelity=0.93),
    },
    "paper2013": {
        "teleport": ProtocolPreset(
            E(prep_fidelity=0.773384, emission_efficiency=0.39, detector_efficiency=0.31),
            E(emission_efficiency=0.25, detector_efficiency=0.12),
            teleport=_TELE_SETUP, target_fidelity=0.789, target_efficiency=0.001),
        "teleport_window": ProtocolPreset(
            E(prep_fidelity=0.773384, emission_efficiency=0.39, detector_efficiency=0.31),
            E(emission_efficiency=0.25, detector_efficiency=0.12),
            teleport=P.TeleportSetup(heralds=("PsiMinus",), envelope_sigma=1.77532e-07, jitter=5.02661e6,
                                     window=80e-9),
            target_fidelity=0.880, target_efficiency=0.001 / 4),
        "two_ion": ProtocolPreset(E(prep_fidelity=0.944458), target_fidelity=0.919),
    },
    "paper2014": {
        "cnot": ProtocolPreset(E(**_GATE), target_fidelity=0.86),
        "bell": ProtocolPreset(E(prep_fidelity=0.892557, **_GATE), target_fidelity=0.83),
        "ghz": ProtocolPreset(E(prep_fidelity=0.690135, phase=0.21 * np.pi, **_GATE), target_fidelity=0.67),
        "eraser": ProtocolPreset(E(prep_fidelity=0.918438, phase=0.21 * np.pi, **_GATE), target_fidelity=0.76),
        "detect": ProtocolPreset(E(mode_matching=0.742418, prep_fidelity=0.995, readout_fidelity=0.995,
                                   reflection_prob=0.66), target_efficiency=0.74),
    },
}


@dataclass(frozen=True)
class BranchRecord:
    label: str
    success: bool
    weight: float
    fidelity: float  # nan for failed branches


def _channel_records(run: Callable[[np.ndarray], P.ProtocolResult], target: Callable[[np.ndarray], np.ndarray]):
    """Six Pauli-eigenstate inputs, each with probability 1/6."""
    out = []
    for name, v in P.SIX_STATES.items():
        res = run(v)
        want = target(v)
        for b in res.branches:
            f = float(np.real(np.vdot(want, b.state.data @ want))) if b.success else float("nan")
            out.append(BranchRecord(f"{name}:{b.label}", b.success, b.efficiency_weight / 6, f))
    return out


def _ret(v):
    return v


def _rabi(p: ProtocolPreset):
    # visibility of the full Rabi fringe, recorded as a single deterministic branch
    tr = P.rabi_trace([0.0, np.pi], p.err_a)
    return [BranchRecord("fringe", True, 1.0, float(tr[0] - tr[1]))]


def _emit(p: ProtocolPreset):
    def run(v):
        res = P.emit_state_transfer(v, p.err_a)
        return P.ProtocolResult([
            P.ProtocolOutcome(b.success, None if b.state is None else P._photon_dm(P.dep1(b.state.data, p.err_a.readout_fidelity)),
                              b.efficiency_weight, b.label) for b in res.branches])
    return _channel_records(run, _ret)


def _memory(p: ProtocolPreset):
    ch = P.memory_channel(p.err_a)
    eta = P.memory_efficiency(p.err_a)

    def run(v):
        rho = ch(np.outer(v, v.conj()))
        return P.ProtocolResult([P.ProtocolOutcome(True, P._photon_dm(rho), eta, "retrieved"),
                                 P.ProtocolOutcome(False, None, 1 - eta, "fail")])
    return _channel_records(run, _ret)


def _state_transfer(p: ProtocolPreset):
    return _channel_records(lambda v: P.remote_state_transfer(v, p.channel_eta, p.err_a, p.err_b), _ret)


def _entangle_photon(p: ProtocolPreset):
    f = P.atom_photon_fidelity(p.err_a)
    eta = p.err_a.emission_efficiency
    return [BranchRecord("emitted", True, eta, f), BranchRecord("no_photon", False, 1 - eta, float("nan"))]


def _remote_entangle(p: ProtocolPreset):
    res = P.remote_entangle(p.channel_eta, p.err_a, p.err_b, p.t_cut)
    out = []
    for b in res.branches:
        f = P.fidelity_pure(P.StateVector(P.TWO_ATOMS, P.PSI_MINUS), b.state) if b.success else float("nan")
        out.append(BranchRecord(b.label, b.success, b.efficiency_weight, float(f)))
    return out


def _teleport(p: ProtocolPreset):
    return _channel_records(lambda v: P.teleport(v, p.err_a, p.err_b, p.teleport, p.detector_channel), _ret)


def _two_ion(p: ProtocolPreset):
    rho = P.two_ion_entangled(p.err_a)
    scan = estimate.parity_scan(rho, "one_pulse")
    return _fixed(estimate.bell_fidelity_from_parity(np.real(np.diag(rho)), scan), "parity")


def _fixed(f: float, label: str):
    return [BranchRecord(label, True, 1.0, float(f))]


PROTOCOLS: dict[str, Callable[[ProtocolPreset], list[BranchRecord]]] = {
    "rabi": _rabi,
    "emit": _emit,
    "entangle_photon": _entangle_photon,
    "memory": _memory,
    "state_transfer": _state_transfer,
    "remote_entangle": _remote_entangle,
    "teleport": _teleport,
    "teleport_window": _teleport,
    "cnot": lambda p: _fixed(P.truth_table_fidelities(P.cnot_truth_table(p.err_a))[1], "flip_row"),
    "bell": lambda p: _fixed(P.atom_photon_bell_fidelity(p.err_a), "bell"),
    "ghz": lambda p: _fixed(P.ghz_fidelity(p.err_a), "ghz"),
    "eraser": lambda p: _fixed(P.eraser_fidelity(p.err_a), "eraser"),
    "two_ion": _two_ion,
    "detect": lambda p: [BranchRecord("c", True, P.device_efficiency(p.err_a), float("nan")),
                         BranchRecord("u", False, 1 - P.device_efficiency(p.err_a), float("nan"))],
}


def get_preset(preset: str, protocol: str) -> ProtocolPreset:
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    if protocol not in PROTOCOLS:
        raise KeyError(f"unknown protocol {protocol!r}; choose from {sorted(PROTOCOLS)}")
    return PRESETS[preset].get(protocol, ProtocolPreset())


def evaluate(protocol: str, preset: str = "ideal") -> dict:
    """Exact efficiency and success-weighted fidelity."""
    recs = PROTOCOLS[protocol](get_preset(preset, protocol))
    w = np.array([r.weight for r in recs])
    if abs(w.sum() - 1) > 1e-9:
        raise RuntimeError(f"branch weights of {protocol} sum to {w.sum()}")
    ok = [r for r in recs if r.success]
    eff = float(sum(r.weight for r in ok))
    fids = [(r.weight, r.fidelity) for r in ok if np.isfinite(r.fidelity)]
    fid = float(sum(a * b for a, b in fids) / sum(a for a, _ in fids)) if fids else float("nan")
    return {"efficiency": eff, "fidelity": fid, "records": recs}


def _sample_shard(args, rng):
    weights, n = args
    return np.bincount(rng.choice(len(weights), size=n, p=weights), minlength=len(weights))


def run_protocol(protocol: str, preset: str = "ideal", trials: int = 10000, seed: int = 0,
                 workers: int = 1, shard_size: int = 100000) -> dict:
    """Monte Carlo over heralded branches; returns efficiency, mean fidelity and per-branch counts."""
    ev = evaluate(protocol, preset)
    recs = ev["records"]
    w = np.array([r.weight for r in recs])
    w = np.clip(w, 0, None)
    w = w / w.sum()
    counts = sum(map_shards(_sample_shard, [(w, n) for n in shard_sizes(trials, shard_size)], seed, workers))
    succ = np.array([r.success for r in recs])
    fid = np.array([r.fidelity for r in recs])
    n_ok = int(counts[succ].sum())
    has_f = succ & np.isfinite(fid)
    mean_f = float((counts[has_f] * fid[has_f]).sum() / counts[has_f].sum()) if counts[has_f].sum() else float("nan")
    stats = [{"label": r.label, "success": bool(r.success), "probability": float(r.weight),
              "count": int(c), "fidelity": (None if not np.isfinite(r.fidelity) else float(r.fidelity))}
             for r, c in zip(recs, counts)]
    return {
        "protocol": protocol,
        "preset": preset,
        "trials": int(trials),
        "efficiency": n_ok / trials,
        "mean_fidelity": mean_f,
        "exact_efficiency": ev["efficiency"],
        "exact_fidelity": ev["fidelity"],
        "branch_stats": stats,
    }
