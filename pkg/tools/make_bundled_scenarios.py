"""Regenerate the JSON scenarios shipped in ``src/ibvsquad/scenarios``."""

import json
from pathlib import Path

from ibvsquad import presets
from ibvsquad.simulator import _compact_lists, write_scenario

OUT = Path(__file__).resolve().parents[1] / "src" / "ibvsquad" / "scenarios"


def main():
    for name, build in presets.BUILDERS.items():
        write_scenario(build(), OUT / f"{name}.json")
    sweep = {"base": "nominal", "seed_policy": "fixed", "starts": [list(p) for p in presets.SWEEP_STARTS]}
    (OUT / "sweep.json").write_text(_compact_lists(json.dumps(sweep, indent=2)) + "\n")


if __name__ == "__main__":
    main()
