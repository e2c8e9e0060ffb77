"""pdfsift: structural PDF-malware triage.

Tolerant PDF parsing, a fixed 48-feature dictionary, z-score scaling,
SVD-based principal component selection, and a from-scratch MLP classifier,
composable through a scikit-learn style fit/transform/predict API.
"""

__version__ = "0.1.0"

from . import errors
from .corpus import CorpusSpec, generate_corpus
from .features import (
    FEATURE_COUNT,
    FEATURE_NAMES,
    FEATURES,
    FeatureVector,
    extract_features,
    shannon_entropy,
)
from .metrics import ConfusionCounts, confusion, rates, threshold_sweep
from .mlp import (
    EpochRecord,
    Gradients,
    MlpClassifier,
    TrainConfig,
    TrainingHistory,
    binary_cross_entropy,
)
from .pca import PrincipalComponents
from .pdfparse import (
    PdfDocument,
    PdfName,
    PdfObject,
    PdfRef,
    StreamData,
    count_pages,
    decode_stream,
    parse_document,
)
from .pipeline import (
    BUNDLE_MAGIC,
    ModelBundle,
    ScoreResult,
    bundle_to_text,
    load_bundle,
    parse_bundle_text,
    save_bundle,
    score_file,
    score_matrix,
    train_pipeline,
)
from .preprocess import (
    FeatureMatrix,
    FeatureScaler,
    read_feature_csv,
    split_train_validation,
    write_feature_csv,
)

__all__ = [
    "BUNDLE_MAGIC",
    "ConfusionCounts",
    "CorpusSpec",
    "EpochRecord",
    "FEATURES",
    "FEATURE_COUNT",
    "FEATURE_NAMES",
    "FeatureMatrix",
    "FeatureScaler",
    "FeatureVector",
    "Gradients",
    "MlpClassifier",
    "ModelBundle",
    "PdfDocument",
    "PdfName",
    "PdfObject",
    "PdfRef",
    "PrincipalComponents",
    "ScoreResult",
    "StreamData",
    "TrainConfig",
    "TrainingHistory",
    "binary_cross_entropy",
    "bundle_to_text",
    "confusion",
    "count_pages",
    "decode_stream",
    "errors",
    "extract_features",
    "generate_corpus",
    "load_bundle",
    "parse_bundle_text",
    "parse_document",
    "rates",
    "read_feature_csv",
    "save_bundle",
    "score_file",
    "score_matrix",
    "shannon_entropy",
    "split_train_validation",
    "threshold_sweep",
    "train_pipeline",
    "write_feature_csv",
]
