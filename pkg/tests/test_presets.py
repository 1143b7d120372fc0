import numpy as np
import pytest

from cqednet import presets as PR
from cqednet import protocols as P

FIDELITY_TARGETS = [
    ("paper2007", "rabi", 0.98),
    ("paper2007", "emit", 0.93),
    ("paper2007", "entangle_photon", 0.86),
    ("paper2011", "memory", 0.93),
    ("paper2012", "state_transfer", 0.84),
    ("paper2012", "remote_entangle", 0.85),
    ("paper2013", "teleport", 0.789),
    ("paper2013", "teleport_window", 0.880),
    ("paper2013", "two_ion", 0.919),
    ("paper2014", "cnot", 0.86),
    ("paper2014", "bell", 0.83),
    ("paper2014", "ghz", 0.67),
    ("paper2014", "eraser", 0.76),
]


@pytest.mark.parametrize("preset,protocol,target", FIDELITY_TARGETS)
def test_fidelity_targets(preset, protocol, target):
    assert PR.evaluate(protocol, preset)["fidelity"] == pytest.approx(target, abs=0.015)


def test_efficiency_products_exact():
    assert PR.evaluate("state_transfer", "paper2012")["efficiency"] == pytest.approx(0.03 * 0.34 * 0.20, rel=1e-12)
    assert PR.evaluate("remote_entangle", "paper2012")["efficiency"] == pytest.approx(0.40 * 0.34 * 0.14, rel=1e-12)
    full = PR.evaluate("teleport", "paper2013")["efficiency"]
    narrow = PR.evaluate("teleport_window", "paper2013")["efficiency"]
    assert full / narrow == pytest.approx(4.0, rel=0.05)


def test_detection_efficiencies():
    p = PR.get_preset("paper2014", "detect").err_a
    effs = [P.concatenated_efficiency(p, k) for k in (1, 2, 3)]
    for got, want in zip(effs, (0.74, 0.87, 0.89)):
        assert got == pytest.approx(want, abs=0.01)


@pytest.mark.parametrize("protocol", sorted(PR.PROTOCOLS))
def test_ideal_preset_is_perfect(protocol):
    ev = PR.evaluate(protocol, "ideal")
    if np.isfinite(ev["fidelity"]):
        assert ev["fidelity"] == pytest.approx(1.0, abs=1e-10)


def test_run_protocol_deterministic_and_consistent():
    a = PR.run_protocol("remote_entangle", "paper2012", trials=200_000, seed=3, shard_size=50_000)
    b = PR.run_protocol("remote_entangle", "paper2012", trials=200_000, seed=3, shard_size=50_000, workers=2)
    assert a == b
    p = a["exact_efficiency"]
    assert abs(a["efficiency"] - p) < 4 * np.sqrt(p * (1 - p) / a["trials"])


def test_unknown_names():
    with pytest.raises(KeyError):
        PR.get_preset("nosuchpreset", "memory")
    with pytest.raises(KeyError):
        PR.get_preset("ideal", "nope")
