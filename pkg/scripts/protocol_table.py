"""Exact efficiency and fidelity of every preset/protocol pair next to its calibration target."""
from __future__ import annotations

from cqednet import presets as PR


def main():
    print(f"{'preset':<10} {'protocol':<16} {'efficiency':>11} {'fidelity':>9} {'target':>7}")
    for preset, table in PR.PRESETS.items():
        for protocol, p in table.items():
            ev = PR.evaluate(protocol, preset)
            target = p.target_fidelity if p.target_fidelity is not None else p.target_efficiency
            print(f"{preset:<10} {protocol:<16} {ev['efficiency']:>11.5g} {ev['fidelity']:>9.4f} {target:>7.4g}")


if __name__ == "__main__":
    main()
