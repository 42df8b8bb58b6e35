#!/usr/bin/env python3

import json
import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parent))

from torheight.schemas import LocalHeightIn, RoofInstanceIn, SupportFunctionIn


SAMPLE_INSTANCES = {
    # Ψ = min(0, u) on P^1 with the metric ψ = min(1, u); local height -1
    "p1.json": (
        LocalHeightIn,
        {
            "support": {"polytope": {"vertices": [["0"], ["1"]]}},
            "metric": {
                "pieces": [
                    {"slope": ["0"], "constant": "1"},
                    {"slope": ["1"], "constant": "0"},
                ]
            },
        },
    ),
    # unit square; degree 2
    "p2.json": (
        SupportFunctionIn,
        {"polytope": {"vertices": [["0", "0"], ["1", "0"], ["0", "1"], ["1", "1"]]}},
    ),
    # one finite place and one circle place with a tent profile; height 5/4
    "elliptic.json": (
        RoofInstanceIn,
        {
            "dimension": 1,
            "exponents": [[0], [1]],
            "places": [
                {"kind": "finite", "id": "p", "weight": "1", "height": "1", "orders": [0, -1]},
                {
                    "kind": "circle",
                    "id": "tate",
                    "weight": "1",
                    "length": "1",
                    "lambdas": [[["0", "0"]], [["0", "0"], ["1/2", "1/2"]]],
                },
            ],
        },
    ),
    "tent.json": (
        RoofInstanceIn,
        {
            "dimension": 1,
            "exponents": [[0], [1], [2]],
            "places": [{"kind": "point", "id": "w", "weight": "1", "lambdas": ["0", "1", "0"]}],
        },
    ),
}


def write_sample_instances(directory: Path) -> list[Path]:
    """Validate each sample against its schema and write it as JSON into ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (schema, document) in SAMPLE_INSTANCES.items():
        schema.model_validate(document)
        path = directory / name
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("instances")
    for path in write_sample_instances(target):
        print(f"✓ Wrote {path}")
