"""Command-line surface: build datasets, generate geoclass sets, train,
predict, evaluate, sweep class counts, and export GeoJSON.

Every command is deterministic given its inputs and seeds; artifacts are
canonical JSON with embedded content hashes, and downstream commands verify
the hashes of what they consume. Option precedence is flags, then a
``--config`` JSON file, then built-in defaults. Exit codes: 0 success,
1 internal error, 2 invalid input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import geojson as geojson_mod
from .classify import (
    CentroidClassifier,
    ScoreVector,
    load_scores,
    predict_scores_batch,
    train_centroid_classifier,
)
from .dataset import build_base_graph, ingest, ingest_csv, load_dataset, save_dataset
from .evaluate import (
    DEFAULT_RADII_KM,
    accuracy_at,
    sweep_class_count,
    sweep_json_dict,
    write_reports_csv,
    write_sweep_csv,
)
from .fusion import FUSION_MODES, build_fine_index, fuse_scores, load_index, predict_location, save_index
from .geo import GeoPoint
from .partition import GenParams, GeoclassSet, draw_feature_dims, generate_geoclass_set
from .serialize import (
    canonical_json,
    file_sha256,
    load_json_artifact,
    write_json_artifact,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    config = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(config, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return config


class _Options:
    """Flags > config file > defaults."""

    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._config = _load_config(getattr(args, "config", None))

    def get(self, key: str, default=None):
        value = getattr(self._args, key.replace("-", "_"), None)
        if value is not None:
            return value
        if key in self._config:
            return self._config[key]
        return default


def _parse_radii(value) -> tuple[float, ...]:
    if value is None:
        return DEFAULT_RADII_KM
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(part) for part in str(value).split(",") if part.strip())


def _read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.strip()
        if not text:
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} line {lineno}: bad JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise ValueError(f"{path} line {lineno}: expected a JSON object")
        rows.append(obj)
    return rows


def _read_truth(path: str | Path) -> dict[str, GeoPoint]:
    truth = {}
    for row in _read_jsonl(path):
        for key in ("id", "lat", "lng"):
            if key not in row:
                raise ValueError(f"{path}: truth rows need id, lat and lng, got {sorted(row)}")
        truth[row["id"]] = GeoPoint(row["lat"], row["lng"])
    if not truth:
        raise ValueError(f"{path}: no truth rows")
    return truth


def _read_queries(path: str | Path) -> list[tuple[str, np.ndarray]]:
    queries = []
    seen = set()
    for row in _read_jsonl(path):
        if "id" not in row or "feat" not in row:
            raise ValueError(f"{path}: query rows need id and feat fields")
        if row["id"] in seen:
            raise ValueError(f"{path}: duplicate query id {row['id']!r}")
        seen.add(row["id"])
        queries.append((row["id"], np.asarray(row["feat"], dtype=np.float64)))
    if not queries:
        raise ValueError(f"{path}: no query rows")
    return queries


def _load_sets(paths: list[str]) -> list[GeoclassSet]:
    if not paths:
        raise ValueError("no geoclass set files given")
    sets = [GeoclassSet.load(path) for path in paths]
    levels = {gset.level for gset in sets}
    if len(levels) != 1:
        raise ValueError(f"geoclass sets are at different levels: {sorted(levels)}")
    return sets


# ---------------------------------------------------------------------------
# build


def cmd_build(args: argparse.Namespace) -> int:
    opts = _Options(args)
    level = int(opts.get("level", 6))
    strict = bool(opts.get("strict", False))
    seed = int(opts.get("seed", 0))
    records_path = Path(args.records)
    text = records_path.read_text(encoding="utf-8").splitlines()
    reader = ingest_csv if records_path.suffix.lower() == ".csv" else ingest
    dataset, report = reader(text, level=level, strict=strict)
    if dataset.record_count == 0:
        raise ValueError(f"{records_path}: no valid records ingested ({report.rejected} rejected)")
    save_dataset(dataset, args.out, seed=seed)
    print(f"dataset level={level} accepted={report.accepted} rejected={report.rejected} -> {args.out}")
    for lineno, reason in report.failures[:10]:
        print(f"  rejected line {lineno}: {reason}", file=sys.stderr)
    if report.rejected > 10:
        print(f"  ... and {report.rejected - 10} more rejections", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-sets


def _params_from_section(section: dict, feature_dim: int | None, fallback_seed: int, index: int) -> tuple[str, GenParams]:
    if not isinstance(section, dict):
        raise ValueError(f"params section {index} must be an object")
    name = section.get("name", f"set{index + 1}")
    seed = int(section.get("seed", fallback_seed + index))
    dims = None
    if "feature_dims" in section and section["feature_dims"] is not None:
        dims = tuple(int(d) for d in section["feature_dims"])
    elif "feature_dim_count" in section and section["feature_dim_count"] is not None:
        count = int(section["feature_dim_count"])
        if feature_dim is None:
            raise ValueError(f"params section {name!r}: feature_dim_count given but dataset has no features")
        dims = draw_feature_dims(count, feature_dim, seed)
    params = GenParams(
        target_classes=int(section["target_classes"]),
        alpha=tuple(section["alpha"]),
        beta=tuple(section["beta"]),
        feature_dims=dims,
        seed=seed,
    )
    return str(name), params


def cmd_gen_sets(args: argparse.Namespace) -> int:
    opts = _Options(args)
    seed = int(opts.get("seed", 0))
    dataset = load_dataset(args.dataset)
    spec = json.loads(Path(args.params).read_text(encoding="utf-8"))
    if not isinstance(spec, dict) or not isinstance(spec.get("sets"), list) or not spec["sets"]:
        raise ValueError(f"{args.params}: params file needs a nonempty 'sets' array")
    graph_seed = int(spec.get("graph_seed", seed))
    graph = build_base_graph(dataset, seed=graph_seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for index, section in enumerate(spec["sets"]):
        name, params = _params_from_section(section, dataset.feature_dim, seed, index)
        gset = generate_geoclass_set(graph, params, set_id=name)
        set_path = out_dir / f"{name}.json"
        digest = gset.save(set_path)
        sizes = [len(members) for members in gset.classes]
        summary_rows.append(
            {
                "set_id": name,
                "file": set_path.name,
                "classes": gset.class_count,
                "min_class_cells": min(sizes),
                "max_class_cells": max(sizes),
                "content_hash": digest,
            }
        )
        print(
            f"{name}: {gset.class_count} classes, cells/class {min(sizes)}..{max(sizes)} -> {set_path}"
        )
    write_json_artifact(
        out_dir / "summary.json",
        {
            "kind": "gen-sets-summary",
            "seed": seed,
            "graph_seed": graph_seed,
            "graph_nodes": graph.node_count,
            "level": dataset.level,
            "sets": summary_rows,
        },
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# train


def _classifier_payload(classifier: CentroidClassifier, set_hash: str) -> dict:
    return {
        "kind": "centroid-classifier",
        "set_id": classifier.set_id,
        "set_hash": set_hash,
        "temperature": classifier.temperature,
        "centroids": [[float(x) for x in row] for row in classifier.centroids],
        "empty_classes": sorted(classifier.empty_classes),
    }


def _load_classifier(path: Path, gset: GeoclassSet) -> CentroidClassifier:
    payload = load_json_artifact(path, expected_kind="centroid-classifier")
    if payload["set_id"] != gset.set_id or payload["set_hash"] != gset.content_hash():
        raise ValueError(f"{path}: classifier was trained on a different geoclass set")
    return CentroidClassifier(
        set_id=payload["set_id"],
        centroids=np.asarray(payload["centroids"], dtype=np.float64),
        empty_classes=frozenset(payload["empty_classes"]),
        temperature=payload["temperature"],
    )


def cmd_train(args: argparse.Namespace) -> int:
    opts = _Options(args)
    temperature = float(opts.get("temperature", 1.0))
    dataset = load_dataset(args.dataset)
    sets = _load_sets(args.sets)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for gset in sets:
        classifier = train_centroid_classifier(dataset, gset, temperature=temperature)
        path = out_dir / f"{gset.set_id}.json"
        write_json_artifact(path, _classifier_payload(classifier, gset.content_hash()))
        empties = len(classifier.empty_classes)
        print(f"{gset.set_id}: trained {gset.class_count} classes ({empties} empty) -> {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict


def _get_index(sets: list[GeoclassSet], cache_dir: str | None):
    if cache_dir is None:
        return build_fine_index(sets), False
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    key = hashlib.sha256("".join(gset.content_hash() for gset in sets).encode()).hexdigest()[:16]
    path = cache / f"index-{key}.json"
    if path.exists():
        return load_index(path, sets), True
    index = build_fine_index(sets)
    save_index(index, path)
    return index, False


def cmd_predict(args: argparse.Namespace) -> int:
    opts = _Options(args)
    mode = str(opts.get("mode", "normalized"))
    if mode not in FUSION_MODES:
        raise ValueError(f"mode must be one of {FUSION_MODES}, got {mode!r}")
    temperature = float(opts.get("temperature", 1.0))
    dataset = load_dataset(args.dataset)
    sets = _load_sets(args.sets)
    if sets[0].level != dataset.level:
        raise ValueError(f"geoclass sets are at level {sets[0].level}, dataset at level {dataset.level}")
    index, cached = _get_index(sets, opts.get("index_cache"))

    per_query: list[tuple[str, list[ScoreVector]]] = []
    if args.scores is not None:
        loaded = load_scores(args.scores, sets)
        order = [row["query_id"] for row in _read_jsonl(args.scores)]
        seen: set[str] = set()
        for qid in order:
            if qid not in seen:
                seen.add(qid)
                per_query.append((qid, loaded[qid]))
    else:
        if args.queries is None:
            raise ValueError("predict needs either --queries (features) or --scores")
        queries = _read_queries(args.queries)
        features = np.stack([feat for _, feat in queries])
        classifiers = []
        for gset in sets:
            if args.classifiers is not None:
                classifiers.append(_load_classifier(Path(args.classifiers) / f"{gset.set_id}.json", gset))
            else:
                classifiers.append(train_centroid_classifier(dataset, gset, temperature=temperature))
        matrices = [predict_scores_batch(clf, features) for clf in classifiers]
        for row, (qid, _) in enumerate(queries):
            vectors = [
                ScoreVector(set_id=sets[i].set_id, scores=matrices[i][row]) for i in range(len(sets))
            ]
            per_query.append((qid, vectors))

    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8") as handle:
        for qid, vectors in per_query:
            field = fuse_scores(vectors, index, mode=mode)
            point, diag = predict_location(field, dataset)
            handle.write(
                canonical_json(
                    {
                        "query_id": qid,
                        "lat": point.lat,
                        "lng": point.lng,
                        "argmax_cells": [c.token for c in diag.argmax_cells],
                        "score_max": diag.score_max,
                        "argmax_image_count": diag.argmax_image_count,
                        "used_image_count": diag.used_image_count,
                        "expanded": diag.expanded,
                    }
                )
                + "\n"
            )
    digest = file_sha256(out_path)
    Path(str(out_path) + ".sha256").write_text(digest + "\n", encoding="utf-8")
    write_json_artifact(
        Path(str(out_path) + ".meta.json"),
        {
            "kind": "predictions-meta",
            "mode": mode,
            "seed": int(opts.get("seed", 0)),
            "queries": len(per_query),
            "set_ids": [gset.set_id for gset in sets],
            "set_hashes": [gset.content_hash() for gset in sets],
            "index_partitions": index.partition_count,
            "index_cached": cached,
            "predictions_sha256": digest,
        },
    )
    print(f"predicted {len(per_query)} queries (mode={mode}, partitions={index.partition_count}) -> {out_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args: argparse.Namespace) -> int:
    opts = _Options(args)
    radii = _parse_radii(opts.get("radii"))
    sidecar = Path(str(args.predictions) + ".sha256")
    if sidecar.exists():
        expected = sidecar.read_text(encoding="utf-8").strip()
        actual = file_sha256(args.predictions)
        if actual != expected:
            raise ValueError(f"{args.predictions}: hash mismatch (sidecar {expected}, actual {actual})")
    rows = _read_jsonl(args.predictions)
    predictions = {}
    for row in rows:
        if not {"query_id", "lat", "lng"} <= row.keys():
            raise ValueError(f"{args.predictions}: prediction rows need query_id, lat, lng")
        predictions[row["query_id"]] = GeoPoint(row["lat"], row["lng"])
    truth = _read_truth(args.truth)
    report = accuracy_at(predictions, truth, radii)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_reports_csv([("eval", report)], out.with_suffix(".csv"))
    payload = report.to_json_dict()
    payload["seed"] = int(opts.get("seed", 0))
    write_json_artifact(out.with_suffix(".json"), payload)
    for radius in radii:
        print(f"acc@{radius:g}km = {report.accuracy[radius]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args: argparse.Namespace) -> int:
    opts = _Options(args)
    radii = _parse_radii(opts.get("radii"))
    temperature = float(opts.get("temperature", 1.0))
    seed = int(opts.get("seed", 0))
    counts = [int(part) for part in str(args.counts).split(",") if part.strip()]
    dataset = load_dataset(args.dataset)
    spec = json.loads(Path(args.params).read_text(encoding="utf-8"))
    sections = spec.get("sets") if isinstance(spec, dict) else None
    if not sections:
        raise ValueError(f"{args.params}: params file needs a nonempty 'sets' array")
    _, base_params = _params_from_section(sections[0], dataset.feature_dim, seed, 0)
    graph = build_base_graph(dataset, seed=int(spec.get("graph_seed", seed)))

    test_rows = _read_jsonl(args.test)
    from .dataset import GeoRecord  # local import to keep module deps one-way

    test_records = [
        GeoRecord(id=row["id"], location=GeoPoint(row["lat"], row["lng"]), feature=np.asarray(row["feat"]))
        for row in test_rows
    ]
    rows = sweep_class_count(
        dataset,
        graph,
        base_params,
        counts,
        test_records,
        radii=radii,
        temperature=temperature,
        workers=int(opts.get("workers", 1)),
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, out.with_suffix(".csv"))
    write_json_artifact(out.with_suffix(".json"), sweep_json_dict(rows))
    for row in rows:
        finest = row.report.radii_km[0]
        print(f"classes={row.class_count}: acc@{finest:g}km = {row.report.accuracy[finest]:.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# export


def cmd_export(args: argparse.Namespace) -> int:
    if (args.sets is None) == (args.predictions is None):
        raise ValueError("export needs exactly one of --sets or --predictions")
    if args.sets is not None:
        gset = GeoclassSet.load(args.sets)
        collection = geojson_mod.geoclass_set_collection(gset)
    else:
        rows = _read_jsonl(args.predictions)
        truth = _read_truth(args.truth) if args.truth is not None else None
        collection = geojson_mod.predictions_collection(rows, truth)
    Path(args.out).write_text(canonical_json(collection) + "\n", encoding="utf-8")
    print(f"wrote {len(collection['features'])} features -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geofuse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its keys")
        p.add_argument("--seed", type=int, help="base seed recorded in artifact manifests")

    p = sub.add_parser("build", help="ingest records into a dataset directory")
    common(p)
    p.add_argument("--records", required=True, help="JSON Lines records (or .csv)")
    p.add_argument("--level", type=int, help="grid level (default 6)")
    p.add_argument("--strict", action="store_true", default=None, help="fail on the first malformed record")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("gen-sets", help="generate geoclass sets from a params file")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--params", required=True, help="JSON params file with a 'sets' array")
    p.add_argument("--out", required=True, help="output directory for set files")
    p.set_defaults(func=cmd_gen_sets)

    p = sub.add_parser("train", help="train centroid classifiers for geoclass sets")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--sets", required=True, nargs="+")
    p.add_argument("--temperature", type=float)
    p.add_argument("--out", required=True, help="output directory for classifier files")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="fuse classifier scores and predict locations")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--sets", required=True, nargs="+")
    p.add_argument("--queries", help="JSON Lines queries with id and feat")
    p.add_argument("--scores", help="JSON Lines external scores (query_id, set_id, scores)")
    p.add_argument("--classifiers", help="directory of trained classifier files")
    p.add_argument("--mode", choices=FUSION_MODES)
    p.add_argument("--temperature", type=float)
    p.add_argument("--index-cache", dest="index_cache", help="directory for cached fine-partition indexes")
    p.add_argument("--out", required=True, help="output predictions JSONL")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy-at-radius report for predictions")
    common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--radii", help="comma-separated km radii")
    p.add_argument("--out", required=True, help="output path prefix (.csv and .json)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="single-set accuracy as the class count varies")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--params", required=True, help="params file; first section supplies base params")
    p.add_argument("--counts", required=True, help="comma-separated class counts")
    p.add_argument("--test", required=True, help="JSON Lines held-out records (id, lat, lng, feat)")
    p.add_argument("--radii", help="comma-separated km radii")
    p.add_argument("--temperature", type=float)
    p.add_argument("--workers", type=int, help="run sweep counts on a thread pool (default 1)")
    p.add_argument("--out", required=True, help="output path prefix (.csv and .json)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="GeoJSON for a geoclass set or predictions")
    common(p)
    p.add_argument("--sets", help="one geoclass set file")
    p.add_argument("--predictions", help="predictions JSONL")
    p.add_argument("--truth", help="truth JSONL for prediction link lines")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, NotADirectoryError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-ditch: report and signal internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
