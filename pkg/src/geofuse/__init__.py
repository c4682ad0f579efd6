"""geofuse: combinatorial partitioning of the sphere and score fusion for
geolocation prediction.

The pipeline: bin geotagged feature records into a hierarchical lat/lng
grid, generate several coarse geoclass partitionings by greedy region
merging, score each partitioning with a classifier, fuse the normalized
scores onto the fine-grained intersection of all partitionings, and read
the predicted location off the top-scoring cells.
"""

from .cells import (
    CellBounds,
    CellId,
    all_cells,
    bounds,
    cell_at,
    cell_center,
    cell_count,
    children,
    neighbors,
    parent,
)
from .classify import (
    CentroidClassifier,
    ScoreVector,
    dump_scores,
    load_scores,
    predict_scores,
    predict_scores_batch,
    train_centroid_classifier,
)
from .dataset import (
    CellAggregate,
    Dataset,
    GeoRecord,
    IngestReport,
    build_base_graph,
    ingest,
    ingest_csv,
    load_dataset,
    save_dataset,
)
from .evaluate import (
    DEFAULT_RADII_KM,
    EvalReport,
    SweepRow,
    accuracy_at,
    sweep_class_count,
)
from .fusion import (
    ARGMAX_TOL,
    CellScoreField,
    FinePartitionIndex,
    PredictionDiagnostics,
    build_fine_index,
    fuse_scores,
    load_index,
    predict_location,
    save_index,
)
from .geo import (
    EARTH_RADIUS_KM,
    HALF_CIRCUMFERENCE_KM,
    GeoPoint,
    UnitVec3,
    from_cartesian,
    geodesic_km,
    to_cartesian,
    weighted_centroid,
)
from .partition import (
    GenParams,
    GeoclassSet,
    GreedyMerger,
    RegionGraph,
    RegionNode,
    draw_feature_dims,
    edge_weight,
    generate_geoclass_set,
    merge_trace,
    node_score,
)

__version__ = "0.1.0"
