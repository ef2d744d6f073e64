from .fid import FeatureTable, HistogramEmbedder, fid, read_features, write_features
from .geometry import alignment_score, iou, overlap_score
from .miou import collection_miou, layout_pair_miou
from .report import EvalReport, EvaluationError, evaluate

__all__ = [
    "EvalReport", "EvaluationError", "FeatureTable", "HistogramEmbedder", "alignment_score",
    "collection_miou", "evaluate", "fid", "iou", "layout_pair_miou", "overlap_score",
    "read_features", "write_features",
]
