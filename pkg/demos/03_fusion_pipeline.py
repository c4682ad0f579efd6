"""The full fusion pipeline in memory, and why it beats its parts.

Several coarse classifiers vote on their own class sets; their normalized
scores meet on the fine-grained intersection of all sets, and the top cells
yield the prediction. The demo compares every base classifier against the
fused NormalizedSum and SimpleSum variants at each radius.

Run: python3 demos/03_fusion_pipeline.py
"""

import numpy as np

from synth import sites_world

from geofuse import (
    GenParams,
    ScoreVector,
    accuracy_at,
    build_base_graph,
    build_fine_index,
    draw_feature_dims,
    fuse_scores,
    generate_geoclass_set,
    predict_location,
    predict_scores_batch,
    train_centroid_classifier,
)

RADII = (1.0, 5.0, 25.0, 200.0, 2500.0)

train, test, dataset = sites_world(seed=11)
graph = build_base_graph(dataset, seed=1)
print(f"{dataset.record_count} train records, {len(test)} queries, {graph.node_count} graph nodes")

rows = [
    ("visual", (1.0, 0.0, 0.0), (1.0, 0.0), 12),
    ("spatial", (1.0, 0.0, 0.0), (0.0, 1.0), 0),
    ("mix-a", (0.5, 0.49, 0.01), (0.4, 0.6), 6),
    ("mix-b", (0.9, 0.05, 0.05), (0.6, 0.4), 8),
]
sets, classifiers = [], []
for i, (name, alpha, beta, dim_count) in enumerate(rows):
    dims = draw_feature_dims(dim_count, dataset.feature_dim, seed=20 + i) if dim_count else ()
    params = GenParams(target_classes=36 + 4 * i, alpha=alpha, beta=beta, feature_dims=dims, seed=20 + i)
    gset = generate_geoclass_set(graph, params, set_id=name)
    sets.append(gset)
    classifiers.append(train_centroid_classifier(dataset, gset))

features = np.stack([r.feature for r in test])
matrices = [predict_scores_batch(clf, features) for clf in classifiers]
truth = {r.id: r.location for r in test}


def evaluate(selected, mode):
    chosen = [i for i, _ in selected]
    index = build_fine_index([sets[i] for i in chosen])
    predictions = {}
    for row, record in enumerate(test):
        vectors = [ScoreVector(set_id=sets[i].set_id, scores=matrices[i][row]) for i in chosen]
        field = fuse_scores(vectors, index, mode=mode)
        predictions[record.id], _ = predict_location(field, dataset)
    return accuracy_at(predictions, truth, RADII), index.partition_count


header = "model".ljust(22) + "".join(f"@{r:g}km".rjust(10) for r in RADII)
print("\n" + header)
print("-" * len(header))
for i, gset in enumerate(sets):
    report, _ = evaluate([(i, None)], "normalized")
    print(f"base {gset.set_id}".ljust(22) + "".join(f"{report.accuracy[r]:10.3f}" for r in RADII))

everyone = [(i, None) for i in range(len(sets))]
for mode in ("simple", "normalized"):
    report, partitions = evaluate(everyone, mode)
    label = f"fused {mode} ({partitions}p)"
    print(label.ljust(22) + "".join(f"{report.accuracy[r]:10.3f}" for r in RADII))

print("\nThe fused rows dominate every base row at the fine radii: each base")
print("classifier is stuck at the resolution of its own classes, while the")
print("intersection of all sets pins the winning region down to a few cells.")
