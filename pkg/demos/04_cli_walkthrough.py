"""End-to-end walkthrough of the geofuse command line.

Writes a small synthetic corpus to demos/out/cli, then drives every
subcommand in order: build -> gen-sets -> train -> predict -> eval ->
sweep -> export. Each step is shown with the exact arguments, so the
script doubles as copy-paste documentation.

Run: python3 demos/04_cli_walkthrough.py
"""

import json
import shutil
from pathlib import Path

from synth import sites_world

from geofuse import cli

root = Path(__file__).with_name("out") / "cli"
if root.exists():
    shutil.rmtree(root)
root.mkdir(parents=True)

train, test, dataset = sites_world(n_train=3000, n_test=200, n_sites=60, level=4, seed=13)

(root / "train.jsonl").write_text(
    "".join(
        json.dumps({"id": r.id, "lat": r.location.lat, "lng": r.location.lng, "feat": r.feature.tolist()}) + "\n"
        for r in train
    ),
    encoding="utf-8",
)
(root / "queries.jsonl").write_text(
    "".join(json.dumps({"id": r.id, "feat": r.feature.tolist()}) + "\n" for r in test),
    encoding="utf-8",
)
(root / "truth.jsonl").write_text(
    "".join(json.dumps({"id": r.id, "lat": r.location.lat, "lng": r.location.lng}) + "\n" for r in test),
    encoding="utf-8",
)
# records double as held-out data for the sweep
(root / "heldout.jsonl").write_text(
    "".join(
        json.dumps({"id": r.id, "lat": r.location.lat, "lng": r.location.lng, "feat": r.feature.tolist()}) + "\n"
        for r in test
    ),
    encoding="utf-8",
)
(root / "params.json").write_text(
    json.dumps(
        {
            "graph_seed": 3,
            "sets": [
                {"name": "visual", "target_classes": 24, "alpha": [1, 0, 0], "beta": [1, 0], "seed": 31},
                {"name": "spatial", "target_classes": 20, "alpha": [1, 0, 0], "beta": [0, 1], "seed": 32, "feature_dim_count": 0},
                {"name": "mixed", "target_classes": 28, "alpha": [0.5, 0.49, 0.01], "beta": [0.4, 0.6], "seed": 33, "feature_dim_count": 6},
            ],
        },
        indent=2,
    ),
    encoding="utf-8",
)


def run(*argv):
    print(f"\n$ geofuse {' '.join(argv)}")
    code = cli.main(list(argv))
    assert code == 0, f"exit code {code}"


run("build", "--records", str(root / "train.jsonl"), "--level", "4", "--out", str(root / "dataset"), "--seed", "1")
run("gen-sets", "--dataset", str(root / "dataset"), "--params", str(root / "params.json"), "--out", str(root / "sets"), "--seed", "1")
set_files = [str(root / "sets" / f"{name}.json") for name in ("visual", "spatial", "mixed")]
run("train", "--dataset", str(root / "dataset"), "--sets", *set_files, "--out", str(root / "classifiers"))
run(
    "predict",
    "--dataset", str(root / "dataset"),
    "--sets", *set_files,
    "--queries", str(root / "queries.jsonl"),
    "--classifiers", str(root / "classifiers"),
    "--index-cache", str(root / "cache"),
    "--mode", "normalized",
    "--out", str(root / "predictions.jsonl"),
)
run("eval", "--predictions", str(root / "predictions.jsonl"), "--truth", str(root / "truth.jsonl"), "--out", str(root / "report"))
run(
    "sweep",
    "--dataset", str(root / "dataset"),
    "--params", str(root / "params.json"),
    "--counts", "4,16,48",
    "--test", str(root / "heldout.jsonl"),
    "--out", str(root / "sweep"),
)
run("export", "--sets", str(root / "sets" / "visual.json"), "--out", str(root / "visual.geojson"))
run(
    "export",
    "--predictions", str(root / "predictions.jsonl"),
    "--truth", str(root / "truth.jsonl"),
    "--out", str(root / "predictions.geojson"),
)

print(f"\nall artifacts under {root}")
for path in sorted(root.rglob("*")):
    if path.is_file():
        print(f"  {path.relative_to(root)}")
